use serde::Serialize;

use super::{norm, sphere_angle, SurfaceKind, SurfaceMesh};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicField {
    pub source: usize,
    pub distances: Vec<f64>,
}

/// Closed-form geodesic distances from `source` to every vertex.
pub fn geodesic_distance(mesh: &SurfaceMesh, source: usize) -> Result<GeodesicField> {
    if source >= mesh.n_vertices() {
        return Err(Error::InvalidParameter(format!(
            "source vertex {source} out of range (mesh has {})",
            mesh.n_vertices()
        )));
    }
    let distances = match mesh.kind() {
        SurfaceKind::UnitSphere => {
            let p = mesh.vertices()[source];
            mesh.vertices().iter().map(|&q| sphere_angle(p, q)).collect()
        }
        SurfaceKind::FlatTorus { .. } => (0..mesh.n_vertices())
            .map(|v| norm(mesh.edge_vector(source, v)))
            .collect(),
        SurfaceKind::Imported => {
            return Err(Error::Unsupported(
                "geodesic distance needs a closed-form metric; imported meshes support FEM only".into(),
            ))
        }
    };
    Ok(GeodesicField { source, distances })
}
