use super::{GroupAction, SurfaceKind, SurfaceMesh};
use crate::error::{Error, Result};

/// Flat torus `[0,width)×[0,height)` on an `nx × ny` grid, each cell split
/// along its rising diagonal, with the group generated by the given integer
/// grid translations.
pub fn build_flat_torus_mesh(
    nx: usize,
    ny: usize,
    width: f64,
    height: f64,
    translations: &[(usize, usize)],
) -> Result<(SurfaceMesh, GroupAction)> {
    if nx < 4 || ny < 4 {
        return Err(Error::InvalidParameter(format!(
            "torus grid {nx}×{ny} must be at least 4×4"
        )));
    }
    if !(width > 0.0 && height > 0.0) {
        return Err(Error::InvalidParameter("torus periods must be positive".into()));
    }
    let index = |i: usize, j: usize| (j % ny) * nx + (i % nx);
    let mut vertices = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            vertices.push([i as f64 * width / nx as f64, j as f64 * height / ny as f64, 0.0]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            triangles.push([index(i, j), index(i + 1, j), index(i + 1, j + 1)]);
            triangles.push([index(i, j), index(i + 1, j + 1), index(i, j + 1)]);
        }
    }
    let mesh = SurfaceMesh::new(vertices, triangles, SurfaceKind::FlatTorus { width, height, nx, ny })?;

    let mut generators = Vec::new();
    for &(sx, sy) in translations {
        let name = format!("translate({sx},{sy})");
        let divides = |s: usize, n: usize| s % n == 0 || n % (s % n) == 0;
        if !divides(sx, nx) || !divides(sy, ny) {
            return Err(Error::IncompatibleGroup {
                generator: name,
                reason: format!("shift does not divide the {nx}×{ny} grid evenly"),
            });
        }
        let perm = (0..nx * ny).map(|v| index(v % nx + sx, v / nx + sy)).collect();
        generators.push((name, perm));
    }
    let action = GroupAction::from_generators(&mesh, generators)?;
    Ok((mesh, action))
}
