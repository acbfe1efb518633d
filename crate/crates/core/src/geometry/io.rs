//! OFF mesh text and JSON permutation lists.

use std::io::{BufRead, Write};

use super::{GroupAction, SurfaceKind, SurfaceMesh};
use crate::error::{Error, Result};

/// Writes the mesh as OFF text. The surface kind is stored in a leading
/// comment so that model surfaces keep their closed-form metric on reload.
pub fn write_off<W: Write>(mesh: &SurfaceMesh, mut out: W) -> Result<()> {
    writeln!(out, "OFF")?;
    match mesh.kind() {
        SurfaceKind::UnitSphere => writeln!(out, "# surface unit-sphere")?,
        SurfaceKind::FlatTorus { width, height, nx, ny } => {
            writeln!(out, "# surface flat-torus {width:?} {height:?} {nx} {ny}")?
        }
        SurfaceKind::Imported => {}
    }
    writeln!(out, "{} {} 0", mesh.n_vertices(), mesh.triangles().len())?;
    for v in mesh.vertices() {
        writeln!(out, "{:?} {:?} {:?}", v[0], v[1], v[2])?;
    }
    for t in mesh.triangles() {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    Ok(())
}

pub fn off_string(mesh: &SurfaceMesh) -> String {
    let mut buf = Vec::new();
    write_off(mesh, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("OFF output is ASCII")
}

pub fn read_off<R: BufRead>(input: R) -> Result<SurfaceMesh> {
    let mut kind = SurfaceKind::Imported;
    let mut tokens: Vec<String> = Vec::new();
    for line in input.lines() {
        let line = line?;
        let trimmed = line.trim();
        if let Some(comment) = trimmed.strip_prefix('#') {
            let words: Vec<&str> = comment.split_whitespace().collect();
            match words.as_slice() {
                ["surface", "unit-sphere"] => kind = SurfaceKind::UnitSphere,
                ["surface", "flat-torus", w, h, nx, ny] => {
                    let bad = |_| Error::Parse(format!("bad torus header `{trimmed}`"));
                    kind = SurfaceKind::FlatTorus {
                        width: w.parse().map_err(bad)?,
                        height: h.parse().map_err(bad)?,
                        nx: nx
                            .parse()
                            .map_err(|_| Error::Parse(format!("bad torus header `{trimmed}`")))?,
                        ny: ny
                            .parse()
                            .map_err(|_| Error::Parse(format!("bad torus header `{trimmed}`")))?,
                    };
                }
                _ => {}
            }
            continue;
        }
        let content = trimmed.split('#').next().unwrap_or("");
        tokens.extend(content.split_whitespace().map(str::to_owned));
    }
    let mut it = tokens.into_iter();
    match it.next().as_deref() {
        Some("OFF") => {}
        other => return Err(Error::Parse(format!("expected OFF header, found {other:?}"))),
    }
    let mut next_usize = |what: &str| -> Result<usize> {
        it.next()
            .ok_or_else(|| Error::Parse(format!("unexpected end of file reading {what}")))?
            .parse()
            .map_err(|_| Error::Parse(format!("invalid integer for {what}")))
    };
    let nv = next_usize("vertex count")?;
    let nf = next_usize("face count")?;
    let _ne = next_usize("edge count")?;
    let mut vertices = Vec::with_capacity(nv);
    for i in 0..nv {
        let mut p = [0.0; 3];
        for c in &mut p {
            *c = it
                .next()
                .ok_or_else(|| Error::Parse(format!("missing coordinate of vertex {i}")))?
                .parse()
                .map_err(|_| Error::Parse(format!("invalid coordinate of vertex {i}")))?;
        }
        vertices.push(p);
    }
    let mut triangles = Vec::with_capacity(nf);
    for f in 0..nf {
        let mut read = || -> Result<usize> {
            it.next()
                .ok_or_else(|| Error::Parse(format!("missing index in face {f}")))?
                .parse()
                .map_err(|_| Error::Parse(format!("invalid index in face {f}")))
        };
        let k = read()?;
        if k != 3 {
            return Err(Error::Parse(format!(
                "face {f} has {k} vertices; only triangles are supported"
            )));
        }
        triangles.push([read()?, read()?, read()?]);
    }
    SurfaceMesh::new(vertices, triangles, kind)
}

pub fn write_group_json<W: Write>(action: &GroupAction, out: W) -> Result<()> {
    serde_json::to_writer(out, action.permutations())?;
    Ok(())
}

/// Reads a JSON list of permutation arrays and validates it against `mesh`.
pub fn read_group_json<R: std::io::Read>(mesh: &SurfaceMesh, input: R) -> Result<GroupAction> {
    let perms: Vec<Vec<usize>> = serde_json::from_reader(input)?;
    if perms.is_empty() {
        return Ok(GroupAction::trivial(mesh.n_vertices()));
    }
    GroupAction::from_permutations(mesh, perms)
}
