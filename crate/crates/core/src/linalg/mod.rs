//! Numerical building blocks shared by the discretization, spectral and
//! variational modules.

mod cholesky;
mod pcg;
pub mod quadrature;
mod sparse;
mod sum;

pub use cholesky::EnvelopeCholesky;
pub use pcg::{pcg, PcgOutcome};
pub use sparse::CsrMatrix;
pub use sum::{log_sum_exp_sorted, neumaier_sum, sorted_sum};

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn scale(alpha: f64, x: &mut [f64]) {
    for xi in x.iter_mut() {
        *xi *= alpha;
    }
}
