use serde::{Deserialize, Serialize};

use super::FemOperators;
use crate::error::{Error, Result};
use crate::linalg::log_sum_exp_sorted;

/// Shift `α` of the norm and weight `β` of the exponential functional,
/// validated against the eigenvalue of the working space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub alpha: f64,
    pub beta: f64,
    pub eigen_gap_check: f64,
}

impl NormParams {
    pub fn new(alpha: f64, beta: f64, lambda: f64) -> Result<Self> {
        if !(alpha < lambda) {
            return Err(Error::AlphaNotAdmissible { alpha, lambda });
        }
        if !(beta > 0.0) {
            return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
        }
        Ok(Self {
            alpha,
            beta,
            eigen_gap_check: lambda,
        })
    }
}

/// Value of an exponential-scale quantity together with its natural log;
/// `value` may be infinite when `log_value` is not.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpValue {
    pub value: f64,
    pub log_value: f64,
}

impl ExpValue {
    pub fn from_log(log_value: f64) -> Self {
        Self {
            value: log_value.exp(),
            log_value,
        }
    }
}

/// `uᵀKu − α·uᵀMu`, which may be negative when `α` is not admissible.
pub fn norm_one_alpha_squared(u: &[f64], ops: &FemOperators, alpha: f64) -> f64 {
    ops.energy(u) - alpha * ops.l2_squared(u)
}

/// `‖u‖_{1,α} = √(uᵀKu − α·uᵀMu)`.
pub fn norm_one_alpha(u: &[f64], ops: &FemOperators, p: &NormParams) -> Result<f64> {
    let energy = ops.energy(u);
    let l2 = ops.l2_squared(u);
    let q = energy - p.alpha * l2;
    if q < -1e-13 * (energy.abs() + (p.alpha * l2).abs()) || q.is_nan() {
        return Err(Error::NegativeNorm { value: q });
    }
    Ok(q.max(0.0).sqrt())
}

/// Lumped `Σ_x a_x e^{β u_x²}`, evaluated in log space.
pub fn exp_functional(u: &[f64], beta: f64, ops: &FemOperators) -> ExpValue {
    let mut exponents: Vec<f64> = ops
        .lumped_mass
        .iter()
        .zip(u)
        .map(|(a, x)| a.ln() + beta * x * x)
        .collect();
    ExpValue::from_log(log_sum_exp_sorted(&mut exponents))
}
