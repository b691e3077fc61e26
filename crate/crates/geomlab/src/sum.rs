//! Reproducible floating-point reductions.
//!
//! Sums are computed by a fixed binary tree over the input order, so the
//! result depends only on the values and their order, never on how work was
//! split across threads.

use rayon::prelude::*;

const LEAF: usize = 32;

/// Pairwise (tree) summation.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// `Σ_i Σ_j f(i, j)` over `0..n × 0..n` with rows reduced in parallel and a
/// fixed reduction tree.
pub fn double_sum<F>(n: usize, f: F) -> f64
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let row: Vec<f64> = (0..n).map(|j| f(i, j)).collect();
            pairwise_sum(&row)
        })
        .collect();
    pairwise_sum(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_naive_on_integers() {
        let v: Vec<f64> = (0..1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&v), 499_500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
        assert_eq!(double_sum(3, |i, j| (i * 3 + j) as f64), 36.0);
    }
}
