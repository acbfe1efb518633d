use std::sync::Arc;

use super::{FemOperators, Subspace};
use crate::error::{Error, Result};
use crate::linalg::{pcg, CsrMatrix, EnvelopeCholesky};

/// Solves `(K − αM) x = b` on a subspace, preconditioned by a sparse
/// Cholesky factor of the positive-definite `K + σM`.
#[derive(Debug, Clone)]
pub struct ShiftedSolver {
    alpha: f64,
    sigma: f64,
    operator: CsrMatrix,
    factor: Arc<EnvelopeCholesky>,
}

impl ShiftedSolver {
    pub fn new(ops: &FemOperators, alpha: f64) -> Result<Self> {
        let sigma = 1.0 / ops.total_area;
        let s = ops.shifted(-sigma);
        let factor = Arc::new(EnvelopeCholesky::factor(&s)?);
        Ok(Self {
            alpha,
            sigma,
            operator: ops.shifted(alpha),
            factor,
        })
    }

    /// Same preconditioner, different shift.
    pub fn with_alpha(&self, ops: &FemOperators, alpha: f64) -> Self {
        Self {
            alpha,
            sigma: self.sigma,
            operator: ops.shifted(alpha),
            factor: Arc::clone(&self.factor),
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Shift `σ` of the factored matrix `K + σM`.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn operator(&self) -> &CsrMatrix {
        &self.operator
    }

    /// `P (K + σM)⁻¹ Pᵀ r`.
    pub fn apply_preconditioner<S: Subspace + ?Sized>(&self, space: &S, r: &[f64]) -> Vec<f64> {
        space.project(&self.factor.solve(&space.project_dual(r)))
    }

    /// Galerkin solution `x ∈ V` of `vᵀ(K − αM)x = vᵀb` for all `v ∈ V`,
    /// to relative residual `tol`.
    pub fn solve<S: Subspace + ?Sized>(&self, space: &S, b: &[f64], tol: f64) -> Result<Vec<f64>> {
        let rhs = space.project_dual(b);
        let n = rhs.len();
        let out = pcg(
            |x| space.project_dual(&self.operator.mul_vec(x)),
            |r| space.project(&self.factor.solve(r)),
            &rhs,
            vec![0.0; n],
            tol,
            500,
        );
        if !out.converged {
            return Err(Error::NoConvergence {
                what: format!(
                    "projected CG for K − {}M (the shift may not be below the first eigenvalue of the subspace)",
                    self.alpha
                ),
                iterations: out.iterations,
                residual: out.relative_residual,
            });
        }
        Ok(out.x)
    }
}
