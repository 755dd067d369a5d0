//! Order-fixed reductions.
//!
//! Sums are evaluated as a balanced binary tree over a fixed index order, so the
//! result is bit-identical whether or not the halves run on different threads.

const LEAF: usize = 64;
#[cfg(feature = "parallel")]
const PAR_MIN: usize = 1 << 14;

/// Pairwise sum of `values`.
pub fn tree_sum(values: &[f64]) -> f64 {
    tree_sum_by(values.len(), &|i| values[i])
}

/// Pairwise sum of `term(0) + ... + term(n - 1)`.
pub fn tree_sum_by<F>(n: usize, term: &F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    sum_range(0, n, term)
}

fn sum_range<F>(lo: usize, hi: usize, term: &F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let len = hi - lo;
    if len <= LEAF {
        let mut acc = 0.0;
        for i in lo..hi {
            acc += term(i);
        }
        return acc;
    }
    let mid = lo + len / 2;
    #[cfg(feature = "parallel")]
    if len >= PAR_MIN {
        let (a, b) = rayon::join(|| sum_range(lo, mid, term), || sum_range(mid, hi, term));
        return a + b;
    }
    sum_range(lo, mid, term) + sum_range(mid, hi, term)
}

/// Maximum of `term(i)` over `0..n`; `0.0` for an empty range.
pub fn max_by<F>(n: usize, term: &F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    #[cfg(feature = "parallel")]
    if n >= PAR_MIN {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(term).reduce(|| 0.0, f64::max);
    }
    (0..n).map(term).fold(0.0, f64::max)
}

/// Order-preserving map over `0..n`.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// `(sum x_i^q)^(1/q)`, or the maximum when `q` is infinite.
pub fn lq_aggregate(values: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        values.iter().copied().fold(0.0, f64::max)
    } else {
        tree_sum_by(values.len(), &|i| values[i].powf(q)).powf(1.0 / q)
    }
}

/// `(sum |x_i|^p)^(1/p)`, or the largest `|x_i|` when `p` is infinite.
pub fn lq_aggregate_abs(values: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        values.iter().fold(0.0, |a, v| a.max(v.abs()))
    } else {
        tree_sum_by(values.len(), &|i| values[i].abs().powf(p)).powf(1.0 / p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_sum_matches_naive_on_integers() {
        let v: Vec<f64> = (0..100_000).map(|i| i as f64).collect();
        assert_eq!(tree_sum(&v), 99_999.0 * 100_000.0 / 2.0);
    }

    #[test]
    fn lq_aggregate_inf_is_max() {
        assert_eq!(lq_aggregate(&[1.0, 3.0, 2.0], f64::INFINITY), 3.0);
        assert!((lq_aggregate(&[3.0, 4.0], 2.0) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn empty_ranges() {
        assert_eq!(tree_sum(&[]), 0.0);
        assert_eq!(max_by(0, &|_| 1.0), 0.0);
    }
}
