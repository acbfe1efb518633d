use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Problem;
use crate::constructions::{moser_evaluate, moser_radius_bound, MoserSequence};
use crate::discretization::{exp_functional, ExpValue, Subspace};
use crate::error::{Error, Result};
use crate::linalg::{dot, sorted_sum};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub max_iters: usize,
    /// Target for the Euler–Lagrange residual `‖u − A⁻¹Pᵀ(L u e^{βu²})/λ‖_A`.
    pub tol: f64,
    /// Relative tolerance of the inner Galerkin solves.
    pub inner_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            tol: 1e-9,
            inner_tol: 1e-13,
        }
    }
}

/// Starting point of an ascent run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Seed {
    /// Moser function at the lowest-index vertex of a minimal orbit.
    Moser {
        k: f64,
        radius: Option<f64>,
    },
    /// First eigenvector of the working space, a smooth non-concentrated start.
    Symmetric,
    Random {
        seed: u64,
    },
    Vector {
        values: Vec<f64>,
    },
}

impl Seed {
    /// Moser seeds over a range of concentrations plus a smooth and a random start.
    pub fn default_set(random_seed: u64) -> Vec<Seed> {
        let mut seeds: Vec<Seed> = [10.0, 1e2, 1e3, 1e4]
            .iter()
            .flat_map(|&k| {
                [None, Some(0.1)]
                    .into_iter()
                    .map(move |radius| Seed::Moser { k, radius })
            })
            .collect();
        seeds.push(Seed::Symmetric);
        seeds.push(Seed::Random { seed: random_seed });
        seeds
    }

    pub fn label(&self) -> String {
        match self {
            Seed::Moser { k, radius } => match radius {
                Some(r) => format!("moser(k={k},r={r})"),
                None => format!("moser(k={k})"),
            },
            Seed::Symmetric => "symmetric".into(),
            Seed::Random { seed } => format!("random({seed})"),
            Seed::Vector { .. } => "file".into(),
        }
    }
}

/// Converged (or best) iterate with its Euler–Lagrange multipliers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximizerState {
    pub u: Vec<f64>,
    pub level: usize,
    pub alpha: f64,
    pub epsilon: f64,
    pub beta: f64,
    /// `λ_ε = ∫u²e^{βu²}`.
    pub lambda_eps: f64,
    /// `μ_ε = (1/Vol)∫u e^{βu²}`.
    pub mu_eps: f64,
    /// `γ_k = (1/λ_ε)∫e_k u e^{βu²}`.
    pub gammas: Vec<f64>,
    pub c_eps: f64,
    pub x_eps: usize,
    pub value: ExpValue,
    pub el_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub seed: String,
}

/// Vertex weights `a_x u_x e^{β u_x² − shift}` and the shift.
fn weighted_gradient(u: &[f64], areas: &[f64], beta: f64) -> (Vec<f64>, f64) {
    let shift = u.iter().map(|x| beta * x * x).fold(0.0, f64::max);
    let g = u
        .iter()
        .zip(areas)
        .map(|(x, a)| a * x * (beta * x * x - shift).exp())
        .collect();
    (g, shift)
}

fn a_norm(problem: &Problem, u: &[f64]) -> f64 {
    dot(u, &problem.apply(u)).max(0.0).sqrt()
}

fn normalized(problem: &Problem, u: &[f64]) -> Result<Vec<f64>> {
    let n = a_norm(problem, u);
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::InvalidParameter("seed vanishes on the working subspace".into()));
    }
    Ok(u.iter().map(|x| x / n).collect())
}

/// Seed values before projection.
pub fn seed_vector(problem: &Problem, seed: &Seed) -> Result<Vec<f64>> {
    let n = problem.mesh.n_vertices();
    match seed {
        Seed::Moser { k, radius } => {
            let ell = problem.ell;
            let center = (0..n)
                .find(|&v| problem.action.orbit_size()[v] == ell)
                .expect("a minimal orbit exists");
            let bound = moser_radius_bound(problem.mesh, &problem.action.orbit(center))?;
            let r = radius.unwrap_or(0.5 * bound.min(1.0));
            let seq = MoserSequence::new(problem.mesh, problem.action, center, r, *k)?;
            Ok(moser_evaluate(&seq, problem.mesh)?.values)
        }
        Seed::Symmetric => {
            let space = problem.space();
            let m = space.deflated_count();
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
            // Shift-invert power steps toward the lowest mode of the working space.
            let mut u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let base = crate::discretization::ShiftedSolver::new(problem.ops, 0.0)?;
            for _ in 0..30 + m {
                let mu = problem.ops.mass.mul_vec(&space.project(&u));
                u = base.solve(space, &mu, 1e-12)?;
                let s = u.iter().fold(0.0f64, |a, x| a.max(x.abs()));
                u.iter_mut().for_each(|x| *x /= s);
            }
            Ok(u)
        }
        Seed::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            Ok((0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
        }
        Seed::Vector { values } => {
            if values.len() != n {
                return Err(Error::InvalidParameter(format!(
                    "seed vector has {} entries, mesh has {n} vertices",
                    values.len()
                )));
            }
            Ok(values.clone())
        }
    }
}

/// Monotone ascent by the normalized gradient map
/// `u ← w/‖w‖_A`, `w = A_V⁻¹ Pᵀ L(u e^{βu²})`, which never decreases the
/// convex functional on the unit sphere of `‖·‖_A`. Over-relaxed steps
/// `u + s(w/p − u)` with `s > 1` are tried first and kept only when they
/// increase the functional.
pub fn solve_subcritical(problem: &Problem, seed: &[f64], label: &str, opts: &SolveOptions) -> Result<MaximizerState> {
    let space = problem.space();
    let beta = problem.beta();
    let areas = &problem.ops.lumped_mass;
    let mut u = normalized(problem, &space.project(seed))?;
    let mut value = exp_functional(&u, beta, problem.ops);
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    let mut relax = 1.0f64;
    while iterations < opts.max_iters {
        let (g, _) = weighted_gradient(&u, areas, beta);
        let w = problem.solver().solve(space, &g, opts.inner_tol)?;
        let aw = problem.apply(&w);
        let p = dot(&u, &aw);
        if !(p > 0.0) {
            return Err(Error::NoConvergence {
                what: "ascent direction lost positivity".into(),
                iterations,
                residual,
            });
        }
        let d: Vec<f64> = u.iter().zip(&w).map(|(x, y)| y / p - x).collect();
        residual = a_norm(problem, &d);
        if residual <= opts.tol {
            converged = true;
            break;
        }
        iterations += 1;
        let mut accepted = false;
        if relax > 1.0 {
            let trial: Vec<f64> = u.iter().zip(&d).map(|(x, y)| x + relax * y).collect();
            let trial = normalized(problem, &trial)?;
            let trial_value = exp_functional(&trial, beta, problem.ops);
            if trial_value.log_value > value.log_value {
                u = trial;
                value = trial_value;
                relax = (relax * 1.5).min(64.0);
                accepted = true;
            } else {
                relax = 1.0;
            }
        } else {
            relax = 2.0;
        }
        if !accepted {
            let next = normalized(problem, &w)?;
            let next_value = exp_functional(&next, beta, problem.ops);
            // The plain step is monotone in exact arithmetic; only a genuine
            // decrease signals a broken iteration.
            if next_value.log_value < value.log_value - 1e-12 * value.log_value.abs().max(1.0) {
                break;
            }
            u = next;
            value = next_value;
        }
    }
    Ok(finish(problem, u, value, residual, iterations, converged, label))
}

fn finish(
    problem: &Problem,
    u: Vec<f64>,
    value: ExpValue,
    el_residual: f64,
    iterations: usize,
    converged: bool,
    label: &str,
) -> MaximizerState {
    let beta = problem.beta();
    let (lambda_eps, mu_eps, gammas) = multipliers(problem, &u);
    let mut x_eps = 0;
    let mut c_eps = 0.0;
    for (v, x) in u.iter().enumerate() {
        if x.abs() > c_eps {
            c_eps = x.abs();
            x_eps = v;
        }
    }
    MaximizerState {
        u,
        level: problem.spec.level,
        alpha: problem.spec.alpha,
        epsilon: problem.spec.epsilon,
        beta,
        lambda_eps,
        mu_eps,
        gammas,
        c_eps,
        x_eps,
        value,
        el_residual,
        iterations,
        converged,
        seed: label.into(),
    }
}

fn multipliers(problem: &Problem, u: &[f64]) -> (f64, f64, Vec<f64>) {
    let beta = problem.beta();
    let areas = &problem.ops.lumped_mass;
    let g: Vec<f64> = u.iter().zip(areas).map(|(x, a)| a * x * (beta * x * x).exp()).collect();
    let mut lam: Vec<f64> = g.iter().zip(u).map(|(gi, x)| gi * x).collect();
    let lambda = sorted_sum(&mut lam);
    let mut gs = g.clone();
    let mu = sorted_sum(&mut gs) / problem.ops.total_area;
    let gammas = problem
        .space()
        .basis()
        .iter()
        .map(|e| {
            let mut t: Vec<f64> = e.iter().zip(&g).map(|(a, b)| a * b).collect();
            sorted_sum(&mut t) / lambda
        })
        .collect();
    (lambda, mu, gammas)
}

/// One multi-start run; `error` is set when the seed could not be built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: String,
    pub log_value: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub el_residual: Option<f64>,
    pub error: Option<String>,
}

/// Outcome of several seeds; `best` has the largest log-value, earliest seed
/// first on ties.
#[derive(Debug, Clone, Serialize)]
pub struct MultiStart {
    pub best: MaximizerState,
    pub runs: Vec<RunSummary>,
}

/// Runs every seed concurrently. Seeds that cannot be built on this mesh are
/// recorded and skipped; failures of the ascent itself are errors.
pub fn solve_multistart(problem: &Problem, seeds: &[Seed], opts: &SolveOptions) -> Result<MultiStart> {
    if seeds.is_empty() {
        return Err(Error::InvalidParameter("no seeds given".into()));
    }
    let results: Vec<Result<std::result::Result<MaximizerState, String>>> = seeds
        .par_iter()
        .map(|s| match seed_vector(problem, s) {
            Ok(v) => solve_subcritical(problem, &v, &s.label(), opts).map(Ok),
            Err(e) => Ok(Err(e.to_string())),
        })
        .collect();
    let mut runs = Vec::new();
    let mut states = Vec::new();
    for (seed, r) in seeds.iter().zip(results) {
        match r? {
            Ok(st) => {
                runs.push(RunSummary {
                    seed: st.seed.clone(),
                    log_value: Some(st.value.log_value),
                    iterations: st.iterations,
                    converged: st.converged,
                    el_residual: Some(st.el_residual),
                    error: None,
                });
                states.push(st);
            }
            Err(msg) => runs.push(RunSummary {
                seed: seed.label(),
                log_value: None,
                iterations: 0,
                converged: false,
                el_residual: None,
                error: Some(msg),
            }),
        }
    }
    if states.is_empty() {
        return Err(Error::InvalidParameter("no seed could be built on this mesh".into()));
    }
    let mut best = 0;
    for (i, s) in states.iter().enumerate() {
        if s.value.log_value > states[best].value.log_value {
            best = i;
        }
    }
    Ok(MultiStart {
        best: states.swap_remove(best),
        runs,
    })
}

/// Multipliers recomputed by quadrature and the identities obtained by
/// testing the Euler–Lagrange equation with `u`, `1` and each `e_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiplierReport {
    pub lambda_eps: f64,
    pub mu_eps: f64,
    pub gammas: Vec<f64>,
    /// `|μ_ε|/λ_ε`.
    pub mu_over_lambda: f64,
    /// `|uᵀ(K − αM)u − 1|`.
    pub norm_identity: f64,
    /// `|uᵀr|` for the full residual `r`.
    pub test_u: f64,
    /// `|1ᵀr|` relative to `(1/λ_ε)∫|u|e^{βu²}`.
    pub test_one: f64,
    /// `|e_kᵀr|` relative to `(1/λ_ε)∫|e_k u|e^{βu²}`.
    pub test_e: Vec<f64>,
    pub el_residual: f64,
}

/// `r = (K − αM)u − (1/λ)L(ue^{βu²}) + (μ/λ)M1 + Σγ_k M e_k`.
pub fn multiplier_report(state: &MaximizerState, problem: &Problem) -> Result<MultiplierReport> {
    let u = &state.u;
    if u.len() != problem.mesh.n_vertices() {
        return Err(Error::InvalidParameter("state does not belong to this mesh".into()));
    }
    let beta = problem.beta();
    let ops = problem.ops;
    let (lambda, mu, gammas) = multipliers(problem, u);
    let g: Vec<f64> = u
        .iter()
        .zip(&ops.lumped_mass)
        .map(|(x, a)| a * x * (beta * x * x).exp())
        .collect();
    let mut r = problem.apply(u);
    for i in 0..r.len() {
        r[i] += -g[i] / lambda + mu / lambda * ops.lumped_mass[i];
    }
    let space = problem.space();
    for (e, gk) in space.basis().iter().zip(&gammas) {
        let me = ops.mass.mul_vec(e);
        for (ri, m) in r.iter_mut().zip(&me) {
            *ri += gk * m;
        }
    }
    let norm_sq = dot(u, &problem.apply(u));
    let mut sum_r = r.clone();
    let mut abs_g: Vec<f64> = g.iter().map(|x| x.abs()).collect();
    let test_one = sorted_sum(&mut sum_r).abs() / (sorted_sum(&mut abs_g) / lambda).max(f64::MIN_POSITIVE);
    let test_e = space
        .basis()
        .iter()
        .map(|e| {
            let mut scale: Vec<f64> = e.iter().zip(&g).map(|(a, b)| (a * b).abs()).collect();
            dot(e, &r).abs() / (sorted_sum(&mut scale) / lambda).max(f64::MIN_POSITIVE)
        })
        .collect();
    // Dual norm of the residual on the working space.
    let s = space.project_dual(&r);
    let z = problem.solver().solve(space, &s, 1e-13)?;
    Ok(MultiplierReport {
        lambda_eps: lambda,
        mu_eps: mu,
        gammas,
        mu_over_lambda: mu.abs() / lambda,
        norm_identity: (norm_sq - 1.0).abs(),
        test_u: dot(u, &r).abs(),
        test_one,
        test_e,
        el_residual: dot(&z, &problem.apply(&z)).max(0.0).sqrt(),
    })
}
