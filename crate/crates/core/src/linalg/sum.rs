/// Compensated (Kahan–Babuška–Neumaier) summation.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Order-independent sum: values are sorted before compensated accumulation,
/// so any permutation of the input gives the same bits.
pub fn sorted_sum(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    neumaier_sum(values.iter().copied())
}

/// `log Σ exp(x_i)` for the given exponents, order-independent.
///
/// Returns `-inf` for an empty input.
pub fn log_sum_exp_sorted(exponents: &mut [f64]) -> f64 {
    if exponents.is_empty() {
        return f64::NEG_INFINITY;
    }
    let max = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let mut shifted: Vec<f64> = exponents.iter().map(|x| (x - max).exp()).collect();
    max + sorted_sum(&mut shifted).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn neumaier_recovers_cancelled_terms() {
        let s = neumaier_sum([1.0, 1e100, 1.0, -1e100]);
        assert_eq!(s, 2.0);
    }

    #[test]
    fn log_sum_exp_large_exponents() {
        let mut x = vec![1.0e4, 1.0e4];
        let v = log_sum_exp_sorted(&mut x);
        assert!((v - (1.0e4 + 2f64.ln())).abs() < 1e-10);
        assert_eq!(log_sum_exp_sorted(&mut []), f64::NEG_INFINITY);
    }

    proptest! {
        #[test]
        fn sorted_sum_is_permutation_invariant(mut v in prop::collection::vec(-1e6f64..1e6, 1..64), seed in 0u64..1000) {
            let a = sorted_sum(&mut v.clone());
            let n = v.len();
            let shift = (seed as usize) % n;
            v.rotate_left(shift);
            v.reverse();
            prop_assert_eq!(a.to_bits(), sorted_sum(&mut v).to_bits());
        }

        #[test]
        fn log_sum_exp_matches_direct(v in prop::collection::vec(-30f64..30.0, 1..32)) {
            let direct = v.iter().map(|x| x.exp()).sum::<f64>().ln();
            let stable = log_sum_exp_sorted(&mut v.clone());
            prop_assert!((direct - stable).abs() < 1e-12 * direct.abs().max(1.0));
        }
    }
}
