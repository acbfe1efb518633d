use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::group_multiplicities;
use crate::discretization::{FemOperators, InvariantProjector, InvariantVector, ShiftedSolver, Subspace};
use crate::error::{Error, Result};
use crate::geometry::GroupAction;
use crate::linalg::{dot, norm2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenOptions {
    /// Target for `‖Pᵀ(K e − λ M e)‖ / ‖Pᵀ M e‖`.
    pub tol: f64,
    pub max_iter: usize,
    /// Extra block vectors beyond the requested count.
    pub guard: usize,
    pub seed: u64,
    /// Relative gap below which eigenvalues are reported as one multiplet.
    pub multiplicity_tol: f64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 2000,
            guard: 8,
            seed: 0x5eed,
            multiplicity_tol: 1e-6,
        }
    }
}

/// Smallest eigenpairs of `K u = λ M u` on the invariant mean-zero space.
#[derive(Debug, Clone)]
pub struct InvariantSpectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<InvariantVector>,
    /// Sizes of consecutive groups of equal eigenvalues.
    pub multiplicities: Vec<usize>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub(crate) space: InvariantProjector,
    pub(crate) mass_eigenvectors: Vec<Vec<f64>>,
}

impl InvariantSpectrum {
    /// Distinct eigenvalues `λ₁^G < λ₂^G < …` (one per multiplet).
    pub fn distinct(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut i = 0;
        for &m in &self.multiplicities {
            out.push(self.eigenvalues[i]);
            i += m;
        }
        out
    }

    /// `λ_j^G`, the j-th distinct eigenvalue (1-based).
    pub fn lambda(&self, j: usize) -> Option<f64> {
        if j == 0 {
            return None;
        }
        let groups = &self.multiplicities;
        if j > groups.len() {
            return None;
        }
        let start: usize = groups[..j - 1].iter().sum();
        Some(self.eigenvalues[start])
    }

    pub fn space(&self) -> &InvariantProjector {
        &self.space
    }
}

pub fn invariant_spectrum(ops: &FemOperators, action: &GroupAction, count: usize) -> Result<InvariantSpectrum> {
    invariant_spectrum_with(ops, action, count, &EigenOptions::default())
}

pub fn invariant_spectrum_with(
    ops: &FemOperators,
    action: &GroupAction,
    count: usize,
    opts: &EigenOptions,
) -> Result<InvariantSpectrum> {
    let space = InvariantProjector::new(action, ops);
    let solver = ShiftedSolver::new(ops, 0.0)?;
    let dim = space.orbits().len().saturating_sub(1);
    let (eigenvalues, vectors, residuals, iterations) = subspace_eigenpairs(ops, &space, &solver, count, dim, opts)?;
    let multiplicities = group_multiplicities(&eigenvalues, opts.multiplicity_tol);
    let mass_eigenvectors = vectors.iter().map(|v| ops.mass.mul_vec(v)).collect();
    Ok(InvariantSpectrum {
        eigenvalues,
        eigenvectors: vectors.into_iter().map(InvariantVector::from_projected).collect(),
        multiplicities,
        residuals,
        iterations,
        space,
        mass_eigenvectors,
    })
}

/// Block shift-invert subspace iteration with Rayleigh–Ritz on a subspace of
/// dimension at most `dim`; returns eigenvalues, mass-orthonormal vectors,
/// residuals and the iteration count.
#[allow(clippy::type_complexity)]
pub fn subspace_eigenpairs<S: Subspace>(
    ops: &FemOperators,
    space: &S,
    solver: &ShiftedSolver,
    count: usize,
    dim: usize,
    opts: &EigenOptions,
) -> Result<(Vec<f64>, Vec<Vec<f64>>, Vec<f64>, usize)> {
    if count == 0 {
        return Err(Error::InvalidParameter("eigenvalue count must be at least 1".into()));
    }
    if count > dim {
        return Err(Error::InvalidParameter(format!(
            "requested {count} eigenvalues but the subspace has dimension {dim}"
        )));
    }
    let n = ops.n();
    let p = (count + opts.guard.max(count / 2)).min(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let random_vector = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        space.project(&(0..n).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>())
    };
    let mut x: Vec<Vec<f64>> = (0..p).map(|_| random_vector(&mut rng)).collect();
    m_orthonormalize(ops, &mut x, &mut || random_vector(&mut rng))?;

    let mut theta = vec![0.0; p];
    let mut residuals = vec![f64::INFINITY; count];
    for it in 1..=opts.max_iter {
        let mut y: Vec<Vec<f64>> = x
            .par_iter()
            .map(|xi| solver.apply_preconditioner(space, &ops.mass.mul_vec(xi)))
            .collect();
        m_orthonormalize(ops, &mut y, &mut || random_vector(&mut rng))?;
        let (values, vectors) = rayleigh_ritz(ops, &y)?;
        theta = values;
        x = vectors;

        residuals = x[..count]
            .par_iter()
            .zip(&theta[..count])
            .map(|(xi, &t)| {
                let kx = ops.stiffness.mul_vec(xi);
                let mx = ops.mass.mul_vec(xi);
                let r: Vec<f64> = kx.iter().zip(&mx).map(|(a, b)| a - t * b).collect();
                norm2(&space.project_dual(&r)) / norm2(&space.project_dual(&mx))
            })
            .collect();
        let worst = residuals.iter().copied().fold(0.0, f64::max);
        if worst <= opts.tol {
            let vectors = x
                .into_iter()
                .take(count)
                .map(|v| canonical_sign(normalize_mass(ops, space.project(&v))))
                .collect();
            return Ok((theta[..count].to_vec(), vectors, residuals, it));
        }
    }
    let worst = residuals.iter().copied().fold(0.0, f64::max);
    Err(Error::NoConvergence {
        what: "invariant eigensolver".into(),
        iterations: opts.max_iter,
        residual: worst,
    })
}

fn normalize_mass(ops: &FemOperators, v: Vec<f64>) -> Vec<f64> {
    let norm = ops.l2_squared(&v).sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

/// Largest-magnitude entry made positive, lowest index on ties.
fn canonical_sign(v: Vec<f64>) -> Vec<f64> {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() * (1.0 + 1e-9) {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.into_iter().map(|x| -x).collect()
    } else {
        v
    }
}

/// Modified Gram–Schmidt in the mass inner product, applied twice;
/// collapsed columns are replaced by fresh vectors.
fn m_orthonormalize<F: FnMut() -> Vec<f64>>(ops: &FemOperators, vs: &mut [Vec<f64>], fresh: &mut F) -> Result<()> {
    for i in 0..vs.len() {
        let mut attempts = 0;
        loop {
            let original = ops.l2_squared(&vs[i]).sqrt();
            for _ in 0..2 {
                for j in 0..i {
                    let mv = ops.mass.mul_vec(&vs[j]);
                    let c = dot(&mv, &vs[i]);
                    let (head, tail) = vs.split_at_mut(i);
                    for (a, b) in tail[0].iter_mut().zip(&head[j]) {
                        *a -= c * b;
                    }
                }
            }
            let norm = ops.l2_squared(&vs[i]).sqrt();
            if norm > 1e-8 * original && norm > 0.0 {
                vs[i].iter_mut().for_each(|x| *x /= norm);
                break;
            }
            attempts += 1;
            if attempts > 10 {
                return Err(Error::NoConvergence {
                    what: "mass orthonormalization (subspace exhausted)".into(),
                    iterations: attempts,
                    residual: norm,
                });
            }
            vs[i] = fresh();
        }
    }
    Ok(())
}

fn rayleigh_ritz(ops: &FemOperators, y: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let p = y.len();
    let ky: Vec<Vec<f64>> = y.par_iter().map(|v| ops.stiffness.mul_vec(v)).collect();
    let my: Vec<Vec<f64>> = y.par_iter().map(|v| ops.mass.mul_vec(v)).collect();
    let mut h = DMatrix::zeros(p, p);
    let mut g = DMatrix::zeros(p, p);
    for i in 0..p {
        for j in 0..=i {
            let hij = 0.5 * (dot(&y[i], &ky[j]) + dot(&y[j], &ky[i]));
            let gij = 0.5 * (dot(&y[i], &my[j]) + dot(&y[j], &my[i]));
            h[(i, j)] = hij;
            h[(j, i)] = hij;
            g[(i, j)] = gij;
            g[(j, i)] = gij;
        }
    }
    let chol = g.cholesky().ok_or(Error::NotPositiveDefinite { row: 0, pivot: 0.0 })?;
    let l_inv = chol
        .l()
        .try_inverse()
        .ok_or(Error::NotPositiveDefinite { row: 0, pivot: 0.0 })?;
    let c = &l_inv * h * l_inv.transpose();
    let c = 0.5 * (&c + c.transpose());
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let coeffs = l_inv.transpose() * &eig.eigenvectors;
    let n = y[0].len();
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = order
        .iter()
        .map(|&k| {
            let mut v = vec![0.0; n];
            for (i, yi) in y.iter().enumerate() {
                let w = coeffs[(i, k)];
                for (a, b) in v.iter_mut().zip(yi) {
                    *a += w * b;
                }
            }
            v
        })
        .collect();
    Ok((values, vectors))
}
