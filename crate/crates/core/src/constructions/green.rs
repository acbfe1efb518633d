use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::discretization::{FemOperators, InvariantProjector, NormParams, ShiftedSolver, Subspace};
use crate::error::{Error, Result};
use crate::geometry::{geodesic_distance, GroupAction, SurfaceMesh};
use crate::linalg::{norm2, sorted_sum};

/// Discrete Green function for equal charges `1/ℓ` on one orbit.
#[derive(Debug, Clone, Serialize)]
pub struct GreenDecomposition {
    pub values: Vec<f64>,
    pub source_orbit: Vec<usize>,
    pub alpha: f64,
    /// Relative residual of the Galerkin system.
    pub residual: f64,
    pub warnings: Vec<String>,
}

impl GreenDecomposition {
    pub fn ell(&self) -> usize {
        self.source_orbit.len()
    }

    pub fn source(&self) -> usize {
        self.source_orbit[0]
    }
}

/// Least-squares fit of `G + (1/2πℓ) log ρ` over an annulus around the source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AFitOptions {
    /// Annulus bounds in units of the mean edge length.
    pub inner: f64,
    pub outer: f64,
    /// Total degree of the polynomial part in normal coordinates.
    pub degree: usize,
    /// Include `ρ² log ρ`, the leading non-smooth term when `α ≠ 0`.
    pub log_term: bool,
}

impl Default for AFitOptions {
    fn default() -> Self {
        Self {
            inner: 5.0,
            outer: 20.0,
            degree: 4,
            log_term: true,
        }
    }
}

impl AFitOptions {
    /// The annulus scaled by `factor`, other settings kept.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            inner: self.inner * factor,
            outer: self.outer * factor,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AFit {
    pub a: f64,
    /// Fitted coefficients of the basis after the constant.
    pub coefficients: Vec<f64>,
    pub residual_rms: f64,
    pub points: usize,
    pub inner_radius: f64,
    pub outer_radius: f64,
    /// `(ρ, ψ̃)` with `ψ̃ = G + (1/2πℓ) log ρ − A` at every fitted vertex.
    pub remainder: Vec<(f64, f64)>,
    pub degree: usize,
    pub log_term: bool,
}

impl AFit {
    /// Angular average of the fitted `ψ̃` as a function of `ρ`.
    pub fn radial_remainder(&self) -> RadialRemainder {
        let mut powers = Vec::new();
        let mut idx = 0;
        for total in 1..=self.degree {
            let mut avg = 0.0;
            for i in 0..=total {
                avg += self.coefficients[idx] * angular_mean(total - i, i);
                idx += 1;
            }
            if avg != 0.0 {
                powers.push((total as i32, avg));
            }
        }
        let log_coefficient = if self.log_term { self.coefficients[idx] } else { 0.0 };
        RadialRemainder {
            scale: self.outer_radius,
            powers,
            log_coefficient,
        }
    }
}

/// Mean of `cos^a θ sin^b θ` over the circle.
fn angular_mean(a: usize, b: usize) -> f64 {
    if a % 2 == 1 || b % 2 == 1 {
        return 0.0;
    }
    let double_factorial = |n: usize| (1..=n).rev().step_by(2).map(|k| k as f64).product::<f64>();
    let odd = |n: usize| if n == 0 { 1.0 } else { double_factorial(n - 1) };
    odd(a) * odd(b) / double_factorial(a + b)
}

/// Radial model `ψ̃(ρ) = Σ c_p (ρ/s)^p + c_log (ρ/s)² log(ρ/s)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RadialRemainder {
    pub scale: f64,
    pub powers: Vec<(i32, f64)>,
    pub log_coefficient: f64,
}

impl RadialRemainder {
    pub fn value(&self, rho: f64) -> f64 {
        if rho <= 0.0 {
            return 0.0;
        }
        let x = rho / self.scale;
        let poly: f64 = self.powers.iter().map(|&(p, c)| c * x.powi(p)).sum();
        poly + self.log_coefficient * x * x * x.ln()
    }

    /// `dψ̃/dρ`.
    pub fn derivative(&self, rho: f64) -> f64 {
        if rho <= 0.0 {
            return 0.0;
        }
        let x = rho / self.scale;
        let poly: f64 = self.powers.iter().map(|&(p, c)| c * p as f64 * x.powi(p - 1)).sum();
        (poly + self.log_coefficient * x * (2.0 * x.ln() + 1.0)) / self.scale
    }
}

/// Solves `(K − αM) G = b` on the invariant mean-zero space, where `b` puts
/// `1/ℓ` on each orbit vertex and removes the uniform density `1/Vol`.
pub fn green_solve(
    ops: &FemOperators,
    action: &GroupAction,
    source_orbit: &[usize],
    p: &NormParams,
) -> Result<GreenDecomposition> {
    let space = InvariantProjector::new(action, ops);
    let solver = ShiftedSolver::new(ops, p.alpha)?;
    let mut dec = green_solve_on(ops, &space, &solver, source_orbit)?;
    if source_orbit.len() > action.min_orbit() {
        dec.warnings.push(format!(
            "source orbit has {} points but the minimal orbit size is {}",
            source_orbit.len(),
            action.min_orbit()
        ));
    }
    Ok(dec)
}

/// Galerkin Green solve on an arbitrary working subspace.
pub fn green_solve_on<S: Subspace>(
    ops: &FemOperators,
    space: &S,
    solver: &ShiftedSolver,
    source_orbit: &[usize],
) -> Result<GreenDecomposition> {
    if source_orbit.is_empty() {
        return Err(Error::InvalidParameter("empty source orbit".into()));
    }
    let ell = source_orbit.len() as f64;
    let mut b: Vec<f64> = ops.lumped_mass.iter().map(|a| -a / ops.total_area).collect();
    for &v in source_orbit {
        b[v] += 1.0 / ell;
    }
    let values = solver.solve(space, &b, 1e-12)?;
    let ax = solver.operator().mul_vec(&values);
    let r: Vec<f64> = ax.iter().zip(&b).map(|(x, y)| x - y).collect();
    let residual = norm2(&space.project_dual(&r)) / norm2(&space.project_dual(&b));
    Ok(GreenDecomposition {
        values,
        source_orbit: source_orbit.to_vec(),
        alpha: solver.alpha(),
        residual,
        warnings: Vec::new(),
    })
}

/// Regular constant `A_{x₀}` from a least-squares fit on the annulus
/// `inner·h ≤ ρ ≤ outer·h`.
pub fn extract_a(dec: &GreenDecomposition, mesh: &SurfaceMesh, opts: &AFitOptions) -> Result<AFit> {
    let h = mesh.mean_edge_length();
    let (r_in, r_out) = (opts.inner * h, opts.outer * h);
    if !(r_in > 0.0 && r_out > r_in) {
        return Err(Error::InvalidParameter(format!("bad fit annulus [{r_in}, {r_out}]")));
    }
    let x0 = dec.source();
    let rho = geodesic_distance(mesh, x0)?.distances;
    for &other in &dec.source_orbit[1..] {
        if rho[other] <= r_out {
            return Err(Error::Geometry(format!(
                "fit annulus of radius {r_out:.4} reaches orbit point {other} at distance {:.4}",
                rho[other]
            )));
        }
    }
    let k = 1.0 / (2.0 * PI * dec.ell() as f64);
    let mut rows = Vec::new();
    let mut targets = Vec::new();
    let mut radii = Vec::new();
    for v in 0..mesh.n_vertices() {
        if rho[v] < r_in || rho[v] > r_out {
            continue;
        }
        let y = mesh.log_map(x0, v)?;
        rows.push(basis(y, r_out, opts));
        targets.push(dec.values[v] + k * rho[v].ln());
        radii.push(rho[v]);
    }
    let cols = rows.first().map_or(0, Vec::len);
    if rows.len() < 2 * cols {
        return Err(Error::Geometry(format!(
            "fit annulus holds {} vertices; at least {} needed",
            rows.len(),
            2 * cols
        )));
    }
    let a_mat = DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]);
    let rhs = DVector::from_vec(targets.clone());
    let svd = a_mat.clone().svd(true, true);
    let coef = svd
        .solve(&rhs, 1e-13)
        .map_err(|e| Error::Geometry(format!("annulus least squares failed: {e}")))?;
    let fitted = &a_mat * &coef;
    let mut sq: Vec<f64> = (0..rows.len()).map(|i| (fitted[i] - rhs[i]).powi(2)).collect();
    let residual_rms = (sorted_sum(&mut sq) / rows.len() as f64).sqrt();
    let a = coef[0];
    let remainder = radii.iter().zip(&targets).map(|(&r, &t)| (r, t - a)).collect();
    Ok(AFit {
        a,
        coefficients: coef.iter().skip(1).copied().collect(),
        residual_rms,
        points: rows.len(),
        inner_radius: r_in,
        outer_radius: r_out,
        remainder,
        degree: opts.degree,
        log_term: opts.log_term,
    })
}

fn basis(y: [f64; 2], scale: f64, opts: &AFitOptions) -> Vec<f64> {
    let (s, t) = (y[0] / scale, y[1] / scale);
    let mut row = Vec::new();
    for total in 0..=opts.degree {
        for i in 0..=total {
            row.push(s.powi((total - i) as i32) * t.powi(i as i32));
        }
    }
    if opts.log_term {
        let r2 = s * s + t * t;
        row.push(r2 * r2.sqrt().ln());
    }
    row
}

/// Extrapolates two estimates from meshes with spacing ratio 2 assuming
/// error of order `h^order`.
pub fn richardson(coarse: f64, fine: f64, order: f64) -> f64 {
    let f = 2f64.powf(order);
    (f * fine - coarse) / (f - 1.0)
}

/// `Vol + πℓ e^{1+4πℓA}` with its logarithm.
pub fn upper_bound_value(a: f64, total_area: f64, ell: usize) -> crate::discretization::ExpValue {
    let l = ell as f64;
    let log_tail = (PI * l).ln() + 1.0 + 4.0 * PI * l * a;
    let log_value = if log_tail > total_area.ln() {
        log_tail + (total_area.ln() - log_tail).exp().ln_1p()
    } else {
        total_area.ln() + (log_tail - total_area.ln()).exp().ln_1p()
    };
    crate::discretization::ExpValue::from_log(log_value)
}

/// `‖G‖₂²`: lumped quadrature away from the sources plus the log-singular
/// model `A − (1/2πℓ) log ρ` integrated over disks of the excluded area.
pub fn green_l2_squared(dec: &GreenDecomposition, mesh: &SurfaceMesh, a: f64, rings: usize) -> f64 {
    let neighbours = mesh.neighbours();
    let mut excluded = vec![false; mesh.n_vertices()];
    let mut frontier: Vec<usize> = dec.source_orbit.clone();
    for &v in &frontier {
        excluded[v] = true;
    }
    for _ in 0..rings {
        let mut next = Vec::new();
        for &v in &frontier {
            for &w in &neighbours[v] {
                if !excluded[w] {
                    excluded[w] = true;
                    next.push(w);
                }
            }
        }
        frontier = next;
    }
    let areas = mesh.vertex_areas();
    let mut outside: Vec<f64> = (0..mesh.n_vertices())
        .filter(|&v| !excluded[v])
        .map(|v| areas[v] * dec.values[v] * dec.values[v])
        .collect();
    let mut excluded_area: Vec<f64> = (0..mesh.n_vertices())
        .filter(|&v| excluded[v])
        .map(|v| areas[v])
        .collect();
    let ell = dec.ell() as f64;
    let disk_area = sorted_sum(&mut excluded_area) / ell;
    let radius = (disk_area / PI).sqrt();
    sorted_sum(&mut outside) + ell * log_model_disk_moment(a, ell, radius, 2)
}

/// `∫_{B_ρ} (A − (1/2πℓ) log r)^n dx` over a flat disk, `n ∈ {0, 1, 2}`.
pub fn log_model_disk_moment(a: f64, ell: f64, rho: f64, n: u32) -> f64 {
    if rho <= 0.0 {
        return 0.0;
    }
    let k = 1.0 / (2.0 * PI * ell);
    let lr = rho.ln();
    let r2 = rho * rho;
    // ∫₀^ρ r dr = ρ²/2, ∫ r log r = ρ²(2 log ρ − 1)/4, ∫ r log² r = ρ²(2 log² ρ − 2 log ρ + 1)/4.
    let m0 = r2 / 2.0;
    let m1 = r2 * (2.0 * lr - 1.0) / 4.0;
    let m2 = r2 * (2.0 * lr * lr - 2.0 * lr + 1.0) / 4.0;
    2.0 * PI
        * match n {
            0 => m0,
            1 => a * m0 - k * m1,
            2 => a * a * m0 - 2.0 * a * k * m1 + k * k * m2,
            _ => panic!("moment order {n} not supported"),
        }
}
