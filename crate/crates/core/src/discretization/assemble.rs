use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::SurfaceMesh;
use crate::linalg::{sorted_sum, CsrMatrix};

/// Stiffness, consistent mass and lumped mass of the P1 space.
#[derive(Debug, Clone)]
pub struct FemOperators {
    pub stiffness: CsrMatrix,
    pub mass: CsrMatrix,
    pub lumped_mass: Vec<f64>,
    pub total_area: f64,
}

/// Cotangent stiffness and consistent mass matrices.
///
/// Off-diagonal entries receive exactly two contributions and diagonal
/// entries are order-independent sums, so the result is bitwise
/// deterministic and commutes exactly with any permutation that preserves
/// the triangle geometry.
pub fn assemble(mesh: &SurfaceMesh) -> Result<FemOperators> {
    let n = mesh.n_vertices();
    let h = mesh.mean_edge_length();
    let mut k_off = Vec::with_capacity(mesh.triangles().len() * 6);
    let mut m_off = Vec::with_capacity(mesh.triangles().len() * 6);
    let mut k_rows: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut m_diag: Vec<Vec<f64>> = vec![Vec::new(); n];
    for (index, (t, g)) in mesh.triangles().iter().zip(mesh.triangle_geometry()).enumerate() {
        if !(g.area > 1e-14 * h * h) || g.cot.iter().any(|c| !c.is_finite()) {
            return Err(Error::DegenerateTriangle { index, area: g.area });
        }
        for k in 0..3 {
            let (i, j) = (t[(k + 1) % 3], t[(k + 2) % 3]);
            let w = -0.5 * g.cot[k];
            k_off.push((i, j, w));
            k_off.push((j, i, w));
            k_rows[i].push(w);
            k_rows[j].push(w);
            m_off.push((i, j, g.area / 12.0));
            m_off.push((j, i, g.area / 12.0));
            m_diag[t[k]].push(g.area / 6.0);
        }
    }
    let stiffness_off = CsrMatrix::from_triplets(n, n, k_off);
    // Diagonal from the already-summed off-diagonal entries keeps row sums at zero.
    let mut k_triplets = Vec::with_capacity(stiffness_off.nnz() + n);
    for i in 0..n {
        let mut row: Vec<f64> = stiffness_off.row(i).map(|(_, v)| v).collect();
        k_triplets.extend(stiffness_off.row(i).map(|(j, v)| (i, j, v)));
        k_triplets.push((i, i, -sorted_sum(&mut row)));
    }
    let stiffness = CsrMatrix::from_triplets(n, n, k_triplets);
    let mut m_triplets = m_off;
    for (i, d) in m_diag.iter_mut().enumerate() {
        m_triplets.push((i, i, sorted_sum(d)));
    }
    let mass = CsrMatrix::from_triplets(n, n, m_triplets);
    Ok(FemOperators {
        stiffness,
        mass,
        lumped_mass: mesh.vertex_areas().to_vec(),
        total_area: mesh.total_area(),
    })
}

impl FemOperators {
    pub fn n(&self) -> usize {
        self.lumped_mass.len()
    }

    /// `K − αM`.
    pub fn shifted(&self, alpha: f64) -> CsrMatrix {
        self.stiffness.linear_combination(1.0, &self.mass, -alpha)
    }

    /// `1ᵀ M u`, i.e. the discrete integral of `u`.
    pub fn integral(&self, u: &[f64]) -> f64 {
        let mut terms: Vec<f64> = self.lumped_mass.iter().zip(u).map(|(a, x)| a * x).collect();
        sorted_sum(&mut terms)
    }

    pub fn mass_mean(&self, u: &[f64]) -> f64 {
        self.integral(u) / self.total_area
    }

    pub fn energy(&self, u: &[f64]) -> f64 {
        self.stiffness.quad_form(u)
    }

    pub fn l2_squared(&self, u: &[f64]) -> f64 {
        self.mass.quad_form(u)
    }

    /// Writes `stiffness.mtx` and `mass.mtx` in MatrixMarket coordinate format.
    pub fn export(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, m) in [("stiffness.mtx", &self.stiffness), ("mass.mtx", &self.mass)] {
            let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join(name))?);
            m.write_matrix_market(&mut f)?;
            f.flush()?;
        }
        Ok(())
    }
}

/// `∫|∇u|²` of the piecewise-linear interpolant, accumulated per triangle.
pub fn dirichlet_energy(mesh: &SurfaceMesh, u: &[f64]) -> f64 {
    let mut terms: Vec<f64> = mesh
        .triangles()
        .iter()
        .zip(mesh.triangle_geometry())
        .flat_map(|(t, g)| {
            (0..3).map(move |k| {
                let d = u[t[(k + 1) % 3]] - u[t[(k + 2) % 3]];
                0.5 * g.cot[k] * d * d
            })
        })
        .collect();
    sorted_sum(&mut terms)
}

/// Per-triangle `∫_T |∇u|²`, each summed in sorted order so that congruent
/// triangles give bitwise equal values.
pub fn triangle_energies(mesh: &SurfaceMesh, u: &[f64]) -> Vec<f64> {
    mesh.triangles()
        .iter()
        .zip(mesh.triangle_geometry())
        .map(|(t, g)| {
            let mut terms: [f64; 3] = std::array::from_fn(|k| {
                let d = u[t[(k + 1) % 3]] - u[t[(k + 2) % 3]];
                0.5 * g.cot[k] * d * d
            });
            sorted_sum(&mut terms)
        })
        .collect()
}
