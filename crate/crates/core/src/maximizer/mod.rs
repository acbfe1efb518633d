//! Subcritical maximization of `∫e^{(4πℓ−ε)u²}` on the unit sphere of
//! `‖·‖_{1,α}` in `E_{j−1}^⊥`, with multiplier checks, blow-up diagnostics
//! and the sharpness probe.

mod diagnostics;
mod sharpness;
mod solve;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::discretization::{FemOperators, NormParams, ShiftedSolver};
use crate::error::{Error, Result};
use crate::geometry::{GroupAction, SurfaceMesh};
use crate::spectrum::{complement_projector, ComplementSpace, InvariantSpectrum};

pub use diagnostics::LocalEnergies;
pub use diagnostics::{blowup_diagnostics, BlowupDiagnostics, BlowupOptions};
pub use sharpness::{eigen_scaling_probe, sharpness_probe, EigenScalingRow, MeshContext, SharpnessRow, SharpnessTable};
pub use solve::{
    multiplier_report, seed_vector, solve_multistart, solve_subcritical, MaximizerState, MultiStart, MultiplierReport,
    RunSummary, Seed, SolveOptions,
};

/// Level `j`, shift `α < λ_j^G` and subcritical gap `ε ∈ (0, 4πℓ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub level: usize,
    pub alpha: f64,
    pub epsilon: f64,
}

/// A validated problem bound to one mesh.
pub struct Problem<'a> {
    pub mesh: &'a SurfaceMesh,
    pub ops: &'a FemOperators,
    pub action: &'a GroupAction,
    pub spec: ProblemSpec,
    pub ell: usize,
    /// `λ_j^G`.
    pub lambda: f64,
    space: ComplementSpace,
    solver: ShiftedSolver,
}

impl<'a> Problem<'a> {
    pub fn new(
        mesh: &'a SurfaceMesh,
        ops: &'a FemOperators,
        action: &'a GroupAction,
        spectrum: &InvariantSpectrum,
        spec: ProblemSpec,
    ) -> Result<Self> {
        let space = complement_projector(spectrum, spec.level)?;
        let ell = action.min_orbit();
        let crit = 4.0 * PI * ell as f64;
        if !(spec.epsilon > 0.0 && spec.epsilon < crit) {
            return Err(Error::InvalidParameter(format!(
                "subcritical gap ε = {} must lie in (0, 4πℓ = {crit})",
                spec.epsilon
            )));
        }
        if !(spec.alpha < space.lambda) {
            return Err(Error::AlphaNotAdmissible {
                alpha: spec.alpha,
                lambda: space.lambda,
            });
        }
        let solver = ShiftedSolver::new(ops, spec.alpha)?;
        Ok(Self {
            mesh,
            ops,
            action,
            spec,
            ell,
            lambda: space.lambda,
            space,
            solver,
        })
    }

    /// `β = 4πℓ − ε`.
    pub fn beta(&self) -> f64 {
        4.0 * PI * self.ell as f64 - self.spec.epsilon
    }

    pub fn space(&self) -> &ComplementSpace {
        &self.space
    }

    pub fn solver(&self) -> &ShiftedSolver {
        &self.solver
    }

    pub fn norm_params(&self) -> NormParams {
        NormParams {
            alpha: self.spec.alpha,
            beta: self.beta(),
            eigen_gap_check: self.lambda,
        }
    }

    /// `(K − αM)u`.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.solver.operator().mul_vec(u)
    }
}
