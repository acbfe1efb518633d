use serde::{Deserialize, Serialize};

use crate::constructions::{moser_evaluate, moser_exp_functional, moser_normalized, MoserSequence, RadialModel};
use crate::discretization::{exp_functional, norm_one_alpha_squared, FemOperators, NormParams, Subspace};
use crate::error::Result;
use crate::geometry::{GroupAction, SurfaceMesh};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpnessRow {
    pub beta: f64,
    pub k: f64,
    /// Semi-analytic `log ∫e^{β u²}` at the normalized Moser function.
    pub log_value: f64,
    /// The same on the mesh, when a mesh was supplied.
    pub mesh_log_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SharpnessTable {
    pub ell: usize,
    pub radius: f64,
    pub alpha: f64,
    pub rows: Vec<SharpnessRow>,
    /// Least-squares slope of log-value against `log k`, one per `β`.
    pub slopes: Vec<(f64, f64)>,
}

/// Mesh context for the mesh evaluation path of the sharpness probe.
pub struct MeshContext<'a, S: Subspace> {
    pub mesh: &'a SurfaceMesh,
    pub ops: &'a FemOperators,
    pub action: &'a GroupAction,
    pub space: &'a S,
    pub center: usize,
}

/// `β × k` table of the exponential functional at normalized Moser functions.
#[allow(clippy::too_many_arguments)]
pub fn sharpness_probe<S: Subspace>(
    model: RadialModel,
    total_area: f64,
    ell: usize,
    alpha: f64,
    radius: f64,
    beta_grid: &[f64],
    k_grid: &[f64],
    mesh: Option<&MeshContext<'_, S>>,
) -> Result<SharpnessTable> {
    let mut rows = Vec::new();
    let mut mesh_vectors = Vec::new();
    if let Some(ctx) = mesh {
        let p = NormParams {
            alpha,
            beta: 1.0,
            eigen_gap_check: f64::INFINITY,
        };
        for &k in k_grid {
            let seq = MoserSequence::new(ctx.mesh, ctx.action, ctx.center, radius, k)?;
            let ev = moser_evaluate(&seq, ctx.mesh)?;
            mesh_vectors.push(moser_normalized(&ev.values, ctx.ops, ctx.space, &p)?);
        }
    }
    let mut slopes = Vec::new();
    for &beta in beta_grid {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (i, &k) in k_grid.iter().enumerate() {
            let v = moser_exp_functional(ell, radius, k, model, total_area, alpha, beta)?;
            let mesh_log_value = mesh.map(|ctx| exp_functional(&mesh_vectors[i], beta, ctx.ops).log_value);
            xs.push(k.ln());
            ys.push(v.log_value);
            rows.push(SharpnessRow {
                beta,
                k,
                log_value: v.log_value,
                mesh_log_value,
            });
        }
        slopes.push((beta, least_squares_slope(&xs, &ys)));
    }
    Ok(SharpnessTable {
        ell,
        radius,
        alpha,
        rows,
        slopes,
    })
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    if x.len() < 2 {
        return 0.0;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenScalingRow {
    pub t: f64,
    /// `‖t e‖²_{1,α}`.
    pub norm_sq: f64,
    pub log_value: f64,
    /// `(log ∫e^{β(te)²} − log Vol)/t²`.
    pub growth: f64,
}

/// The functional along `t·e/‖e‖₂` for an eigenvector `e` with eigenvalue `α`:
/// every multiple stays feasible while the functional diverges.
pub fn eigen_scaling_probe(ops: &FemOperators, e: &[f64], alpha: f64, beta: f64, ts: &[f64]) -> Vec<EigenScalingRow> {
    let n = ops.l2_squared(e).sqrt();
    let unit: Vec<f64> = e.iter().map(|x| x / n).collect();
    ts.iter()
        .map(|&t| {
            let v: Vec<f64> = unit.iter().map(|x| t * x).collect();
            let log_value = exp_functional(&v, beta, ops).log_value;
            EigenScalingRow {
                t,
                norm_sq: norm_one_alpha_squared(&v, ops, alpha),
                log_value,
                growth: (log_value - ops.total_area.ln()) / (t * t),
            }
        })
        .collect()
}
