//! Triangulated closed model surfaces and their finite isometry groups.

mod geodesic;
mod group;
pub mod io;
mod sphere;
mod torus;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub use geodesic::{geodesic_distance, GeodesicField};
pub use group::{orbit_stats, GroupAction, OrbitStats};
pub use sphere::{build_sphere_mesh, sphere_group_action, GroupKind};
pub use torus::build_flat_torus_mesh;

use crate::error::{Error, Result};
use crate::linalg::sorted_sum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SurfaceKind {
    UnitSphere,
    /// Flat torus `[0,width)×[0,height)` sampled on an `nx × ny` grid;
    /// vertex `j·nx + i` sits at `(i·width/nx, j·height/ny)`.
    FlatTorus {
        width: f64,
        height: f64,
        nx: usize,
        ny: usize,
    },
    Imported,
}

/// Triangle data derived from vertex positions: area and the cotangent of
/// the interior angle at each corner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleGeometry {
    pub area: f64,
    pub cot: [f64; 3],
}

#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    vertices: Vec<[f64; 3]>,
    triangles: Vec<[usize; 3]>,
    geometry: Vec<TriangleGeometry>,
    vertex_areas: Vec<f64>,
    total_area: f64,
    kind: SurfaceKind,
}

impl SurfaceMesh {
    /// Builds a mesh and checks that it is a closed 2-manifold triangulation.
    pub fn new(vertices: Vec<[f64; 3]>, triangles: Vec<[usize; 3]>, kind: SurfaceKind) -> Result<Self> {
        if let SurfaceKind::FlatTorus { nx, ny, .. } = kind {
            if nx * ny != vertices.len() {
                return Err(Error::Mesh(format!(
                    "torus grid {nx}×{ny} does not match {} vertices",
                    vertices.len()
                )));
            }
        }
        check_closed(vertices.len(), &triangles)?;
        let mut mesh = Self {
            vertices,
            triangles,
            geometry: Vec::new(),
            vertex_areas: Vec::new(),
            total_area: 0.0,
            kind,
        };
        mesh.geometry = (0..mesh.triangles.len())
            .map(|t| mesh.compute_triangle_geometry(mesh.triangles[t]))
            .collect();
        mesh.refresh_areas();
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn triangle_geometry(&self) -> &[TriangleGeometry] {
        &self.geometry
    }

    pub fn vertex_areas(&self) -> &[f64] {
        &self.vertex_areas
    }

    pub fn total_area(&self) -> f64 {
        self.total_area
    }

    pub fn kind(&self) -> SurfaceKind {
        self.kind
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Vector from vertex `a` to vertex `b`; on the torus this is the
    /// shortest lattice-wrapped displacement, computed from grid indices.
    pub fn edge_vector(&self, a: usize, b: usize) -> [f64; 3] {
        match self.kind {
            SurfaceKind::FlatTorus { width, height, nx, ny } => {
                let di = wrap_index(b % nx, a % nx, nx);
                let dj = wrap_index(b / nx, a / nx, ny);
                [di as f64 * (width / nx as f64), dj as f64 * (height / ny as f64), 0.0]
            }
            _ => sub(self.vertices[b], self.vertices[a]),
        }
    }

    pub fn mean_edge_length(&self) -> f64 {
        let mut lengths = Vec::with_capacity(self.triangles.len() * 3);
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                if a < b {
                    lengths.push(norm(self.edge_vector(a, b)));
                }
            }
        }
        let n = lengths.len() as f64;
        sorted_sum(&mut lengths) / n
    }

    /// Undirected edges `(a, b)` with `a < b`, in ascending order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<(usize, usize)> = self
            .triangles
            .iter()
            .flat_map(|t| (0..3).map(move |k| (t[k].min(t[(k + 1) % 3]), t[k].max(t[(k + 1) % 3]))))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    /// Vertex adjacency lists, sorted.
    pub fn neighbours(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n_vertices()];
        for (a, b) in self.edges() {
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    fn compute_triangle_geometry(&self, t: [usize; 3]) -> TriangleGeometry {
        let mut cot = [0.0; 3];
        let mut area = 0.0;
        for k in 0..3 {
            let u = self.edge_vector(t[k], t[(k + 1) % 3]);
            let w = self.edge_vector(t[k], t[(k + 2) % 3]);
            let cross = norm(cross(u, w));
            cot[k] = dot(u, w) / cross;
            if k == 0 {
                area = 0.5 * cross;
            }
        }
        TriangleGeometry { area, cot }
    }

    /// Replaces each triangle's geometry by that of a fixed representative of
    /// its orbit, so that every group element maps the discrete geometry onto
    /// itself bit for bit.
    pub fn symmetrize(&mut self, action: &GroupAction) -> Result<()> {
        let index: HashMap<[usize; 3], usize> = self
            .triangles
            .iter()
            .enumerate()
            .map(|(i, t)| (sorted3(*t), i))
            .collect();
        let mut assigned = vec![false; self.triangles.len()];
        let mut geometry = self.geometry.clone();
        for rep in 0..self.triangles.len() {
            if assigned[rep] {
                continue;
            }
            let t = self.triangles[rep];
            let base = self.geometry[rep];
            let mut images = Vec::new();
            for perm in action.permutations() {
                let mapped = [perm[t[0]], perm[t[1]], perm[t[2]]];
                let target = *index.get(&sorted3(mapped)).ok_or_else(|| Error::IncompatibleGroup {
                    generator: "closure".into(),
                    reason: format!("triangle {rep} is not mapped onto a triangle"),
                })?;
                images.push((target, mapped));
            }
            // Corners exchanged by the stabilizer must carry identical values.
            let mut cot = base.cot;
            for k in 0..3 {
                let mut same: Vec<f64> = images
                    .iter()
                    .filter(|(target, _)| *target == rep)
                    .map(|(_, mapped)| {
                        let pos = t
                            .iter()
                            .position(|&v| v == mapped[k])
                            .expect("stabilizer permutes corners");
                        base.cot[pos]
                    })
                    .collect();
                let n = same.len() as f64;
                cot[k] = sorted_sum(&mut same) / n;
            }
            for (target, mapped) in images {
                if assigned[target] {
                    continue;
                }
                let tt = self.triangles[target];
                let mut c = [0.0; 3];
                for k in 0..3 {
                    let pos = tt
                        .iter()
                        .position(|&v| v == mapped[k])
                        .expect("image triangle shares vertices");
                    c[pos] = cot[k];
                }
                geometry[target] = TriangleGeometry {
                    area: base.area,
                    cot: c,
                };
                assigned[target] = true;
            }
        }
        self.geometry = geometry;
        self.refresh_areas();
        Ok(())
    }

    fn refresh_areas(&mut self) {
        let mut per_vertex: Vec<Vec<f64>> = vec![Vec::new(); self.vertices.len()];
        for (t, g) in self.triangles.iter().zip(&self.geometry) {
            for &v in t {
                per_vertex[v].push(g.area / 3.0);
            }
        }
        self.vertex_areas = per_vertex.iter_mut().map(|c| sorted_sum(c)).collect();
        let mut areas: Vec<f64> = self.geometry.iter().map(|g| g.area).collect();
        self.total_area = sorted_sum(&mut areas);
    }

    /// Geodesic normal coordinates of `v` in the tangent plane at `source`.
    pub fn log_map(&self, source: usize, v: usize) -> Result<[f64; 2]> {
        match self.kind {
            SurfaceKind::FlatTorus { .. } => {
                let d = self.edge_vector(source, v);
                Ok([d[0], d[1]])
            }
            SurfaceKind::UnitSphere => {
                let p = self.vertices[source];
                let q = self.vertices[v];
                let (e1, e2) = tangent_frame(p);
                let c = dot(p, q);
                let tangential = sub(q, scale(c, p));
                let s = norm(tangential);
                let rho = s.atan2(c);
                if s == 0.0 {
                    return Ok([0.0, 0.0]);
                }
                Ok([rho * dot(tangential, e1) / s, rho * dot(tangential, e2) / s])
            }
            SurfaceKind::Imported => Err(Error::Unsupported(
                "normal coordinates need a closed-form metric; imported meshes support FEM only".into(),
            )),
        }
    }

    /// Point on the surface with normal coordinates `y` around `source`.
    pub fn exp_map(&self, source: usize, y: [f64; 2]) -> Result<[f64; 3]> {
        match self.kind {
            SurfaceKind::FlatTorus { .. } => {
                let p = self.vertices[source];
                Ok([p[0] + y[0], p[1] + y[1], 0.0])
            }
            SurfaceKind::UnitSphere => {
                let p = self.vertices[source];
                let (e1, e2) = tangent_frame(p);
                let rho = (y[0] * y[0] + y[1] * y[1]).sqrt();
                if rho == 0.0 {
                    return Ok(p);
                }
                let dir = add(scale(y[0] / rho, e1), scale(y[1] / rho, e2));
                Ok(add(scale(rho.cos(), p), scale(rho.sin(), dir)))
            }
            SurfaceKind::Imported => Err(Error::Unsupported("exp map on imported mesh".into())),
        }
    }

    /// Geodesic distance between vertex `a` and an arbitrary surface point.
    pub fn distance_to_point(&self, a: usize, point: [f64; 3]) -> Result<f64> {
        match self.kind {
            SurfaceKind::UnitSphere => Ok(sphere_angle(self.vertices[a], point)),
            SurfaceKind::FlatTorus { width, height, .. } => {
                let p = self.vertices[a];
                let dx = wrap_real(point[0] - p[0], width);
                let dy = wrap_real(point[1] - p[1], height);
                Ok((dx * dx + dy * dy).sqrt())
            }
            SurfaceKind::Imported => Err(Error::Unsupported("geodesic distance on imported mesh".into())),
        }
    }

    /// Injectivity radius of the model surface.
    pub fn injectivity_radius(&self) -> Option<f64> {
        match self.kind {
            SurfaceKind::UnitSphere => Some(std::f64::consts::PI),
            SurfaceKind::FlatTorus { width, height, .. } => Some(0.5 * width.min(height)),
            SurfaceKind::Imported => None,
        }
    }

    /// Barycentric location of a surface point: triangle index and weights.
    pub fn locate(&self, point: [f64; 3], near: usize) -> Result<(usize, [f64; 3])> {
        let mut best: Option<(f64, usize, [f64; 3])> = None;
        let candidates: Vec<usize> = if self.triangles.len() < 64 {
            (0..self.triangles.len()).collect()
        } else {
            self.triangles_near(near, point)?
        };
        for t in candidates {
            let tri = self.triangles[t];
            let w = self.barycentric(tri, point);
            let worst = w.iter().copied().fold(f64::INFINITY, f64::min);
            if best.map_or(true, |(b, _, _)| worst > b) {
                best = Some((worst, t, w));
            }
        }
        let (_, t, w) = best.ok_or_else(|| Error::Geometry("empty mesh".into()))?;
        Ok((t, w))
    }

    fn triangles_near(&self, near: usize, point: [f64; 3]) -> Result<Vec<usize>> {
        let radius = self.distance_to_point(near, point)? + 3.0 * self.mean_edge_length();
        let mut out = Vec::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            if self
                .distance_to_point(tri[0], self.vertices[near])
                .unwrap_or(f64::INFINITY)
                <= radius
            {
                out.push(t);
            }
        }
        Ok(out)
    }

    fn barycentric(&self, tri: [usize; 3], point: [f64; 3]) -> [f64; 3] {
        let (e1, e2, q) = match self.kind {
            SurfaceKind::FlatTorus { width, height, .. } => {
                let p0 = self.vertices[tri[0]];
                let q = [
                    wrap_real(point[0] - p0[0], width),
                    wrap_real(point[1] - p0[1], height),
                    0.0,
                ];
                (self.edge_vector(tri[0], tri[1]), self.edge_vector(tri[0], tri[2]), q)
            }
            _ => {
                let p0 = self.vertices[tri[0]];
                let e1 = sub(self.vertices[tri[1]], p0);
                let e2 = sub(self.vertices[tri[2]], p0);
                // Central projection of the sphere point onto the chord plane.
                let n = cross(e1, e2);
                let scale_to_plane = dot(n, p0) / dot(n, point);
                (e1, e2, sub(scale(scale_to_plane, point), p0))
            }
        };
        let d11 = dot(e1, e1);
        let d12 = dot(e1, e2);
        let d22 = dot(e2, e2);
        let q1 = dot(q, e1);
        let q2 = dot(q, e2);
        let det = d11 * d22 - d12 * d12;
        let b1 = (d22 * q1 - d12 * q2) / det;
        let b2 = (d11 * q2 - d12 * q1) / det;
        [1.0 - b1 - b2, b1, b2]
    }
}

fn check_closed(n_vertices: usize, triangles: &[[usize; 3]]) -> Result<()> {
    if triangles.is_empty() {
        return Err(Error::Mesh("mesh has no triangles".into()));
    }
    let mut count: HashMap<(usize, usize), usize> = HashMap::new();
    for (i, t) in triangles.iter().enumerate() {
        if t.iter().any(|&v| v >= n_vertices) {
            return Err(Error::Mesh(format!("triangle {i} references a missing vertex")));
        }
        if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
            return Err(Error::Mesh(format!("triangle {i} repeats a vertex")));
        }
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            *count.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    if let Some(((a, b), c)) = count.iter().find(|(_, &c)| c != 2) {
        return Err(Error::Mesh(format!(
            "edge ({a}, {b}) is shared by {c} triangles; surface is not closed"
        )));
    }
    let mut used = vec![false; n_vertices];
    triangles.iter().flatten().for_each(|&v| used[v] = true);
    if let Some(v) = used.iter().position(|u| !u) {
        return Err(Error::Mesh(format!("vertex {v} is not used by any triangle")));
    }
    Ok(())
}

fn wrap_index(to: usize, from: usize, n: usize) -> i64 {
    let mut d = to as i64 - from as i64;
    let n = n as i64;
    if d > n / 2 {
        d -= n;
    } else if d < -(n / 2) {
        d += n;
    }
    d
}

pub(crate) fn wrap_real(d: f64, period: f64) -> f64 {
    d - period * (d / period).round()
}

pub(crate) fn sorted3(mut t: [usize; 3]) -> [usize; 3] {
    t.sort_unstable();
    t
}

pub(crate) fn sphere_angle(a: [f64; 3], b: [f64; 3]) -> f64 {
    norm(cross(a, b)).atan2(dot(a, b))
}

fn tangent_frame(p: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    let helper = if p[2].abs() < 0.9 {
        [0.0, 0.0, 1.0]
    } else {
        [1.0, 0.0, 0.0]
    };
    let e1 = normalize(cross(helper, p));
    let e2 = cross(p, e1);
    (e1, e2)
}

#[inline]
pub(crate) fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}
#[inline]
pub(crate) fn add(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}
#[inline]
pub(crate) fn scale(s: f64, a: [f64; 3]) -> [f64; 3] {
    [s * a[0], s * a[1], s * a[2]]
}
#[inline]
pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
#[inline]
pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}
#[inline]
pub(crate) fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}
#[inline]
pub(crate) fn normalize(a: [f64; 3]) -> [f64; 3] {
    scale(1.0 / norm(a), a)
}
