//! Order-fixed reductions.
//!
//! Every sum in the crate goes through [`pairwise_sum`], whose split points
//! depend only on the input length. Results are therefore identical no
//! matter how many rayon workers are active.

const LEAF: usize = 128;
const PAR_CUTOFF: usize = 1 << 14;

pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= LEAF {
        return values.iter().fold(0.0, |acc, v| acc + v);
    }
    let mid = values.len() / 2;
    let (lo, hi) = values.split_at(mid);
    if values.len() >= PAR_CUTOFF {
        let (a, b) = rayon::join(|| pairwise_sum(lo), || pairwise_sum(hi));
        a + b
    } else {
        pairwise_sum(lo) + pairwise_sum(hi)
    }
}

/// Pairwise sum of `f(i)` for `i in 0..n`, materializing the terms first.
pub fn pairwise_sum_by<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    use rayon::prelude::*;
    let terms: Vec<f64> = if n >= PAR_CUTOFF {
        (0..n).into_par_iter().map(&f).collect()
    } else {
        (0..n).map(f).collect()
    };
    pairwise_sum(&terms)
}

/// Maximum of a slice; NaN entries propagate.
pub fn max_abs_fold(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0_f64, |acc, v| if v.is_nan() || acc.is_nan() { f64::NAN } else { acc.max(v) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_naive_sum_on_integers() {
        let v: Vec<f64> = (0..10_000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 49_995_000.0);
    }

    #[test]
    fn independent_of_thread_count() {
        let v: Vec<f64> = (0..100_000).map(|i| ((i * 7919) % 1013) as f64 * 1e-3 + 0.1).collect();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| pairwise_sum(&v));
        let b = four.install(|| pairwise_sum(&v));
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn empty_is_zero() {
        assert_eq!(pairwise_sum(&[]), 0.0);
    }
}
