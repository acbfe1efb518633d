use std::ops::Deref;

use serde::Serialize;

use super::FemOperators;
use crate::geometry::GroupAction;
use crate::linalg::sorted_sum;

/// A vertex function that is exactly group-invariant and has zero mass mean.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct InvariantVector(Vec<f64>);

impl InvariantVector {
    /// Wraps values already known to lie in the working subspace.
    pub(crate) fn from_projected(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(self.0.iter().map(|x| s * x).collect())
    }
}

impl Deref for InvariantVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// A subspace of vertex functions given by a mass-self-adjoint projector `P`.
pub trait Subspace: Sync {
    fn dim_ambient(&self) -> usize;
    /// `P u`.
    fn project(&self, u: &[f64]) -> Vec<f64>;
    /// `Pᵀ r`, for residuals and loads that act on the subspace by duality.
    fn project_dual(&self, r: &[f64]) -> Vec<f64>;
}

/// Orbit averaging followed by removal of the mass mean.
#[derive(Debug, Clone)]
pub struct InvariantProjector {
    orbits: Vec<Vec<usize>>,
    areas: Vec<f64>,
    total_area: f64,
}

impl InvariantProjector {
    pub fn new(action: &GroupAction, ops: &FemOperators) -> Self {
        Self {
            orbits: action.orbits(),
            areas: ops.lumped_mass.clone(),
            total_area: ops.total_area,
        }
    }

    pub fn orbits(&self) -> &[Vec<usize>] {
        &self.orbits
    }

    /// Orbit mean, computed once per orbit as `u₀ + Σ(uᵢ − u₀)/n` so that an
    /// already invariant vector is returned unchanged.
    pub fn average(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.areas.len(), "vector length does not match the mesh");
        let mut out = vec![0.0; u.len()];
        for orbit in &self.orbits {
            let u0 = u[orbit[0]];
            let value = if orbit.len() == 1 {
                u0
            } else {
                let mut diffs: Vec<f64> = orbit.iter().map(|&v| u[v] - u0).collect();
                u0 + sorted_sum(&mut diffs) / orbit.len() as f64
            };
            for &v in orbit {
                out[v] = value;
            }
        }
        out
    }

    fn mean(&self, u: &[f64]) -> f64 {
        let mut terms: Vec<f64> = self.areas.iter().zip(u).map(|(a, x)| a * x).collect();
        sorted_sum(&mut terms) / self.total_area
    }
}

impl Subspace for InvariantProjector {
    fn dim_ambient(&self) -> usize {
        self.areas.len()
    }

    fn project(&self, u: &[f64]) -> Vec<f64> {
        let mut v = self.average(u);
        let m = self.mean(&v);
        if m != 0.0 {
            v.iter_mut().for_each(|x| *x -= m);
        }
        v
    }

    fn project_dual(&self, r: &[f64]) -> Vec<f64> {
        let mut terms = r.to_vec();
        let s = sorted_sum(&mut terms) / self.total_area;
        let shifted: Vec<f64> = r.iter().zip(&self.areas).map(|(x, a)| x - a * s).collect();
        self.average(&shifted)
    }
}

/// Group average of `u` minus its mass-weighted mean.
pub fn project_invariant_meanzero(u: &[f64], action: &GroupAction, ops: &FemOperators) -> InvariantVector {
    InvariantVector(InvariantProjector::new(action, ops).project(u))
}
