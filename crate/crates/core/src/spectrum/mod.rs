//! Invariant Laplace–Beltrami spectra and the complements `E_{j−1}^⊥`.

mod complement;
mod eigen;

pub use complement::{complement_projector, ComplementSpace};
pub use eigen::{invariant_spectrum, invariant_spectrum_with, subspace_eigenpairs, EigenOptions, InvariantSpectrum};

use crate::discretization::FemOperators;
use crate::error::{Error, Result};

/// `uᵀKu / uᵀMu`.
pub fn rayleigh_quotient(u: &[f64], ops: &FemOperators) -> Result<f64> {
    let m = ops.l2_squared(u);
    if !(m > 0.0) {
        return Err(Error::InvalidParameter("Rayleigh quotient of the zero vector".into()));
    }
    Ok(ops.energy(u) / m)
}

/// Groups ascending values whose relative gap is at most `rel_tol`.
pub fn group_multiplicities(values: &[f64], rel_tol: f64) -> Vec<usize> {
    let mut groups = Vec::new();
    let mut i = 0;
    while i < values.len() {
        let mut j = i + 1;
        while j < values.len() && (values[j] - values[j - 1]).abs() <= rel_tol * values[j - 1].abs() {
            j += 1;
        }
        groups.push(j - i);
        i = j;
    }
    groups
}
