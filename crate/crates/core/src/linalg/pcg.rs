use super::{axpy, dot, norm2};

#[derive(Debug, Clone)]
pub struct PcgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final `‖b − A x‖₂ / ‖b‖₂`.
    pub relative_residual: f64,
    pub converged: bool,
}

/// Preconditioned conjugate gradients for a symmetric positive (semi)definite
/// operator.
///
/// Restricting to a subspace is done by the caller: if `x0` lies in the
/// subspace, `apply_a` returns the projected product and `precond` maps
/// into the subspace, every iterate stays there.
pub fn pcg<A, P>(apply_a: A, precond: P, b: &[f64], x0: Vec<f64>, tol: f64, max_iter: usize) -> PcgOutcome
where
    A: Fn(&[f64]) -> Vec<f64>,
    P: Fn(&[f64]) -> Vec<f64>,
{
    let b_norm = norm2(b);
    let mut x = x0;
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return PcgOutcome {
            x,
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
    }
    let ax = apply_a(&x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut rel = norm2(&r) / b_norm;
    if rel <= tol {
        return PcgOutcome {
            x,
            iterations: 0,
            relative_residual: rel,
            converged: true,
        };
    }
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        let ap = apply_a(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return PcgOutcome {
                x,
                iterations: it,
                relative_residual: rel,
                converged: false,
            };
        }
        let step = rz / pap;
        axpy(step, &p, &mut x);
        axpy(-step, &ap, &mut r);
        rel = norm2(&r) / b_norm;
        if rel <= tol {
            return PcgOutcome {
                x,
                iterations: it,
                relative_residual: rel,
                converged: true,
            };
        }
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    PcgOutcome {
        x,
        iterations: max_iter,
        relative_residual: rel,
        converged: false,
    }
}
