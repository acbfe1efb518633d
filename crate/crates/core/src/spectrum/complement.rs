use super::InvariantSpectrum;
use crate::discretization::{InvariantProjector, Subspace};
use crate::error::{Error, Result};
use crate::linalg::dot;

/// Mass-orthogonal complement of `e₁,…,e_{m_{j−1}}` in the invariant
/// mean-zero space.
#[derive(Debug, Clone)]
pub struct ComplementSpace {
    pub level: usize,
    /// `λ_j^G`, the smallest eigenvalue on the complement.
    pub lambda: f64,
    base: InvariantProjector,
    basis: Vec<Vec<f64>>,
    mass_basis: Vec<Vec<f64>>,
}

impl ComplementSpace {
    pub fn deflated_count(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    pub fn base(&self) -> &InvariantProjector {
        &self.base
    }
}

/// Projector onto `E_{j−1}^⊥`. For `j = 1` nothing is deflated and the
/// result is the invariant mean-zero space itself.
pub fn complement_projector(spec: &InvariantSpectrum, j: usize) -> Result<ComplementSpace> {
    if j == 0 {
        return Err(Error::InvalidParameter("spectral level j starts at 1".into()));
    }
    let groups = &spec.multiplicities;
    if j > groups.len() {
        return Err(Error::InvalidParameter(format!(
            "level {j} needs at least {j} distinct eigenvalues; only {} were computed",
            groups.len()
        )));
    }
    let m: usize = groups[..j - 1].iter().sum();
    Ok(ComplementSpace {
        level: j,
        lambda: spec.eigenvalues[m],
        base: spec.space.clone(),
        basis: spec.eigenvectors[..m].iter().map(|e| e.to_vec()).collect(),
        mass_basis: spec.mass_eigenvectors[..m].to_vec(),
    })
}

impl Subspace for ComplementSpace {
    fn dim_ambient(&self) -> usize {
        self.base.dim_ambient()
    }

    fn project(&self, u: &[f64]) -> Vec<f64> {
        let mut v = self.base.project(u);
        for (e, me) in self.basis.iter().zip(&self.mass_basis) {
            let c = dot(me, &v);
            for (a, b) in v.iter_mut().zip(e) {
                *a -= c * b;
            }
        }
        v
    }

    fn project_dual(&self, r: &[f64]) -> Vec<f64> {
        let mut s = r.to_vec();
        for (e, me) in self.basis.iter().zip(&self.mass_basis) {
            let c = dot(e, &s);
            for (a, b) in s.iter_mut().zip(me) {
                *a -= c * b;
            }
        }
        self.base.project_dual(&s)
    }
}
