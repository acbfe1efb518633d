use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::group::permutation_from_map;
use super::{normalize, GroupAction, SurfaceKind, SurfaceMesh};
use crate::error::{Error, Result};

/// Symmetry groups available on the unit sphere.
///
/// Cyclic and dihedral groups rotate about the z-axis; the dihedral flip is
/// the half-turn `(x, y, z) ↦ (x, −y, −z)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum GroupKind {
    Trivial,
    Antipodal,
    Cyclic(u32),
    Dihedral(u32),
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupKind::Trivial => write!(f, "trivial"),
            GroupKind::Antipodal => write!(f, "antipodal"),
            GroupKind::Cyclic(m) => write!(f, "cyclic({m})"),
            GroupKind::Dihedral(m) => write!(f, "dihedral({m})"),
        }
    }
}

impl FromStr for GroupKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let order = |prefix: &str| -> Option<Result<u32>> {
            let rest = s.strip_prefix(prefix)?;
            let digits = rest.trim_start_matches([':', '(']).trim_end_matches(')');
            Some(
                digits
                    .parse::<u32>()
                    .ok()
                    .filter(|&m| m >= 1)
                    .ok_or_else(|| Error::Parse(format!("bad group order in `{s}`"))),
            )
        };
        match s.as_str() {
            "trivial" => Ok(GroupKind::Trivial),
            "antipodal" => Ok(GroupKind::Antipodal),
            _ => {
                if let Some(m) = order("cyclic") {
                    Ok(GroupKind::Cyclic(m?))
                } else if let Some(m) = order("dihedral") {
                    Ok(GroupKind::Dihedral(m?))
                } else {
                    Err(Error::Parse(format!(
                        "unknown group `{s}` (expected trivial, antipodal, cyclic(m), dihedral(m))"
                    )))
                }
            }
        }
    }
}

impl TryFrom<String> for GroupKind {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<GroupKind> for String {
    fn from(g: GroupKind) -> String {
        g.to_string()
    }
}

/// Subdivided unit sphere carrying the requested symmetry group.
///
/// Trivial and antipodal groups use the icosahedron as base; cyclic and
/// dihedral groups use the bipyramid over a regular polygon in the equator,
/// which is the octahedron for orders 1, 2 and 4.
pub fn build_sphere_mesh(subdivision_level: u32, group: GroupKind) -> Result<(SurfaceMesh, GroupAction)> {
    if subdivision_level > 9 {
        return Err(Error::InvalidParameter(format!(
            "subdivision level {subdivision_level} is too large"
        )));
    }
    let (mut vertices, mut triangles) = match group {
        GroupKind::Trivial | GroupKind::Antipodal => icosahedron(),
        GroupKind::Cyclic(m) | GroupKind::Dihedral(m) => bipyramid(if m <= 2 { 4 } else { m as usize }),
    };
    for _ in 0..subdivision_level {
        (vertices, triangles) = subdivide(&vertices, &triangles);
    }
    let mut mesh = SurfaceMesh::new(vertices, triangles, SurfaceKind::UnitSphere)?;
    let action = sphere_group_action(&mesh, group)?;
    mesh.symmetrize(&action)?;
    Ok((mesh, action))
}

/// The action of `group` on a unit-sphere mesh whose vertex set is invariant
/// under it, e.g. one read back from OFF.
pub fn sphere_group_action(mesh: &SurfaceMesh, group: GroupKind) -> Result<GroupAction> {
    let tol = 1e-9;
    let generators = match group {
        GroupKind::Trivial => Vec::new(),
        GroupKind::Antipodal => vec![(
            "antipodal".to_string(),
            permutation_from_map(mesh, "antipodal", |x| [-x[0], -x[1], -x[2]], tol)?,
        )],
        GroupKind::Cyclic(m) | GroupKind::Dihedral(m) => {
            let mut gens = Vec::new();
            if m > 1 {
                let (c, s) = rotation(m);
                let name = format!("rotation(2π/{m})");
                let p = permutation_from_map(mesh, &name, |x| [c * x[0] - s * x[1], s * x[0] + c * x[1], x[2]], tol)?;
                gens.push((name, p));
            }
            if matches!(group, GroupKind::Dihedral(_)) {
                let name = "flip".to_string();
                let p = permutation_from_map(mesh, &name, |x| [x[0], -x[1], -x[2]], tol)?;
                gens.push((name, p));
            }
            gens
        }
    };
    GroupAction::from_generators(mesh, generators)
}

fn snap(v: f64) -> f64 {
    if (v - v.round()).abs() < 1e-14 {
        v.round()
    } else {
        v
    }
}

fn rotation(m: u32) -> (f64, f64) {
    let angle = 2.0 * std::f64::consts::PI / m as f64;
    (snap(angle.cos()), snap(angle.sin()))
}

fn icosahedron() -> (Vec<[f64; 3]>, Vec<[usize; 3]>) {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
    let vertices = raw.iter().map(|&v| normalize(v)).collect();
    let triangles = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    (vertices, triangles)
}

fn bipyramid(m: usize) -> (Vec<[f64; 3]>, Vec<[usize; 3]>) {
    let mut vertices = vec![[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]];
    for k in 0..m {
        let angle = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
        vertices.push([snap(angle.cos()), snap(angle.sin()), 0.0]);
    }
    let mut triangles = Vec::with_capacity(2 * m);
    for k in 0..m {
        let a = 2 + k;
        let b = 2 + (k + 1) % m;
        triangles.push([0, a, b]);
        triangles.push([1, b, a]);
    }
    (vertices, triangles)
}

fn subdivide(vertices: &[[f64; 3]], triangles: &[[usize; 3]]) -> (Vec<[f64; 3]>, Vec<[usize; 3]>) {
    let mut out_vertices = vertices.to_vec();
    let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
    let mut midpoint = |a: usize, b: usize, verts: &mut Vec<[f64; 3]>| -> usize {
        let key = (a.min(b), a.max(b));
        *cache.entry(key).or_insert_with(|| {
            let (p, q) = (verts[key.0], verts[key.1]);
            verts.push(normalize([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
            verts.len() - 1
        })
    };
    let mut out_triangles = Vec::with_capacity(triangles.len() * 4);
    for &[a, b, c] in triangles {
        let ab = midpoint(a, b, &mut out_vertices);
        let bc = midpoint(b, c, &mut out_vertices);
        let ca = midpoint(c, a, &mut out_vertices);
        out_triangles.push([a, ab, ca]);
        out_triangles.push([b, bc, ab]);
        out_triangles.push([c, ca, bc]);
        out_triangles.push([ab, bc, ca]);
    }
    (out_vertices, out_triangles)
}
