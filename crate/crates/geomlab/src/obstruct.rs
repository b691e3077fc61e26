//! Non-embedding certificates: Poincaré ratios, the volumetric
//! average-distance bound, and the dimension criterion driven by an upper
//! bound on the Poincaré constant of a spectral expander.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::PointTuple;
use crate::graphs::{second_eigenvalue, Graph, SpectralSummary};
use crate::norms::NormedSpace;
use crate::sum::{double_sum, pairwise_sum};

/// Default constant in the upper bound `C·ln(d+1)/gap`.
pub const DEFAULT_C_NAOR: f64 = 16.0;

fn check_tuple(space: &NormedSpace, x: &PointTuple) -> Result<()> {
    if x.dim != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: x.dim,
        });
    }
    x.validate()
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("exponent p must be ≥ 1, got {p}")));
    }
    Ok(())
}

fn power(d: f64, p: f64) -> f64 {
    if p == 1.0 {
        d
    } else {
        d.powf(p)
    }
}

/// `(1/n²)·Σ_{i,j} ‖x_i − x_j‖^p` over ordered pairs, diagonal included.
pub fn mean_pairwise_distance(space: &NormedSpace, x: &PointTuple, p: f64) -> Result<f64> {
    check_tuple(space, x)?;
    check_p(p)?;
    let n = x.len();
    if n == 0 {
        return Ok(0.0);
    }
    let total = double_sum(n, |i, j| power(space.dist(&x.points[i], &x.points[j]), p));
    Ok(total / (n as f64 * n as f64))
}

/// `(1/(Δn))·Σ_{ordered adjacent (i,j)} ‖x_i − x_j‖^p` for a `Δ`-regular
/// graph.
fn mean_edge_distance(g: &Graph, space: &NormedSpace, x: &PointTuple, p: f64, delta: usize) -> f64 {
    let rows: Vec<f64> = (0..g.n())
        .map(|i| {
            let row: Vec<f64> = g
                .neighbors(i)
                .iter()
                .map(|&j| power(space.dist(&x.points[i], &x.points[j]), p))
                .collect();
            pairwise_sum(&row)
        })
        .collect();
    pairwise_sum(&rows) / (delta as f64 * g.n() as f64)
}

/// Ratio of the mean `p`-th power distance over all ordered pairs to the
/// mean over ordered adjacent pairs. Any tuple gives a lower bound on the
/// Poincaré constant `γ(G, ‖·‖^p)`.
pub fn poincare_ratio(g: &Graph, space: &NormedSpace, x: &PointTuple, p: f64) -> Result<f64> {
    check_tuple(space, x)?;
    check_p(p)?;
    if x.len() != g.n() {
        return Err(Error::SizeMismatch {
            what: "point tuple",
            expected: g.n(),
            got: x.len(),
        });
    }
    let delta = g
        .regular_degree()
        .ok_or_else(|| Error::InvalidArgument("Poincaré ratio needs a regular graph".into()))?;
    if delta == 0 {
        return Err(Error::InvalidArgument("Poincaré ratio needs at least one edge".into()));
    }
    let den = mean_edge_distance(g, space, x, p, delta);
    if den == 0.0 {
        return Err(Error::InvalidArgument(
            "all adjacent points coincide: zero denominator".into(),
        ));
    }
    Ok(mean_pairwise_distance(space, x, p)? / den)
}

/// The volumetric threshold `(1/4)(n/(2(Δ+1)))^{1/d}` and whether its
/// precondition `n ≥ 2^{d+1}(Δ+1)` holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumetricBound {
    pub value: f64,
    /// When false the value certifies nothing.
    pub precondition: bool,
}

/// Lower bound on the mean pairwise distance of a `(1/2, Δ)`-sparse
/// `n`-tuple in any `d`-dimensional normed space.
pub fn avg_distance_lower_bound(n: usize, delta: usize, d: usize) -> VolumetricBound {
    VolumetricBound {
        value: 0.25 * volume_ratio(n, delta, d),
        precondition: volume_precondition(n, delta, d),
    }
}

/// `(n/(2(Δ+1)))^{1/d}`.
fn volume_ratio(n: usize, delta: usize, d: usize) -> f64 {
    (n as f64 / (2.0 * (delta as f64 + 1.0))).powf(1.0 / d as f64)
}

/// `n ≥ 2^{d+1}(Δ+1)`, evaluated without overflow.
pub fn volume_precondition(n: usize, delta: usize, d: usize) -> bool {
    if d + 1 >= 128 {
        return false;
    }
    (n as u128) >= (1u128 << (d + 1)).saturating_mul(delta as u128 + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    CertifiedNonembeddable,
    Inconclusive,
}

/// Outcome of the dimension criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub verdict: Verdict,
    /// `½(n/(2(Δ+1)))^{1/d}`.
    pub threshold: f64,
    pub gamma_upper: f64,
    pub reason: String,
}

/// A `Δ`-regular graph on `n ≥ 2^{d+1}(Δ+1)` vertices whose Poincaré
/// constant in a `d`-dimensional space is at most
/// `½(n/(2(Δ+1)))^{1/d}` admits no geometric embedding there.
pub fn nonembedding_certificate(g: &Graph, space_dim: usize, delta: usize, gamma_upper: f64) -> Certificate {
    let n = g.n();
    let threshold = if space_dim == 0 { f64::NAN } else { 0.5 * volume_ratio(n, delta, space_dim) };
    let (verdict, reason) = if space_dim == 0 {
        (Verdict::Inconclusive, "dimension must be positive".to_string())
    } else if !volume_precondition(n, delta, space_dim) {
        (
            Verdict::Inconclusive,
            format!("precondition n ≥ 2^(d+1)(Δ+1) fails for n = {n}, d = {space_dim}, Δ = {delta}"),
        )
    } else if gamma_upper <= threshold {
        (
            Verdict::CertifiedNonembeddable,
            format!("γ upper bound {gamma_upper} ≤ {threshold}"),
        )
    } else {
        (
            Verdict::Inconclusive,
            format!("γ upper bound {gamma_upper} exceeds {threshold}"),
        )
    };
    Certificate {
        verdict,
        threshold,
        gamma_upper,
        reason,
    }
}

/// `C·ln(d+1)/gap`.
pub fn naor_gamma_upper(d: usize, gap: f64, c_naor: f64) -> Result<f64> {
    if !(gap > 0.0) {
        return Err(Error::InvalidArgument(format!("spectral gap must be positive, got {gap}")));
    }
    if d == 0 || !(c_naor > 0.0) {
        return Err(Error::InvalidArgument("need d ≥ 1 and C > 0".into()));
    }
    Ok(c_naor * ((d + 1) as f64).ln() / gap)
}

/// Largest `d` for which both `n ≥ 2^{d+1}(Δ+1)` and
/// `C·ln(d+1)/gap ≤ ½(n/(2(Δ+1)))^{1/d}` hold; 0 if none.
pub fn dimension_threshold(n: usize, delta: usize, gap: f64, c_naor: f64) -> Result<usize> {
    naor_gamma_upper(1, gap, c_naor)?;
    let mut best = 0;
    let mut d = 1;
    while volume_precondition(n, delta, d) {
        if naor_gamma_upper(d, gap, c_naor)? <= 0.5 * volume_ratio(n, delta, d) {
            best = d;
        }
        d += 1;
    }
    Ok(best)
}

/// Inputs, constants and intermediate quantities of a non-embedding check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstructionReport {
    pub schema: String,
    pub n: usize,
    pub delta: usize,
    pub d: usize,
    pub space_label: String,
    pub p: f64,
    pub lambda2: f64,
    pub gap: f64,
    pub c_naor: f64,
    /// Poincaré ratio of the supplied witness tuple, if any.
    pub gamma_lower: Option<f64>,
    pub gamma_upper: f64,
    /// `(1/4)(n/(2(Δ+1)))^{1/d}`.
    pub vol_threshold: f64,
    pub vol_precondition: bool,
    /// Mean pairwise distance of the witness tuple, if any.
    pub mean_pairwise: Option<f64>,
    pub certificate: Certificate,
    /// Set when the witness lower bound exceeds the configured upper bound,
    /// which means `c_naor` is too small for this graph.
    pub inconsistent: bool,
    pub verdict: Verdict,
}

/// Assemble an [`ObstructionReport`] for `g` in `space`. The optional
/// witness tuple supplies a lower bound on the Poincaré constant; when it
/// exceeds the upper bound the verdict is forced to inconclusive.
pub fn obstruction_report(
    g: &Graph,
    space: &NormedSpace,
    witness: Option<&PointTuple>,
    p: f64,
    c_naor: f64,
) -> Result<ObstructionReport> {
    obstruction_report_with(g, space, witness, p, c_naor, &second_eigenvalue(g)?)
}

/// As [`obstruction_report`], with a precomputed spectrum of `g`.
pub fn obstruction_report_with(
    g: &Graph,
    space: &NormedSpace,
    witness: Option<&PointTuple>,
    p: f64,
    c_naor: f64,
    spectrum: &SpectralSummary,
) -> Result<ObstructionReport> {
    let delta = spectrum.degree;
    let d = space.dim();
    let gamma_upper = naor_gamma_upper(d, spectrum.gap, c_naor)?;
    let (gamma_lower, mean_pairwise) = match witness {
        Some(x) => (
            Some(poincare_ratio(g, space, x, p)?),
            Some(mean_pairwise_distance(space, x, 1.0)?),
        ),
        None => (None, None),
    };
    let certificate = nonembedding_certificate(g, d, delta, gamma_upper);
    let inconsistent = gamma_lower.is_some_and(|l| l > gamma_upper);
    let verdict = if inconsistent {
        Verdict::Inconclusive
    } else {
        certificate.verdict
    };
    let vol = avg_distance_lower_bound(g.n(), delta, d);
    Ok(ObstructionReport {
        schema: crate::REPORT_SCHEMA.to_string(),
        n: g.n(),
        delta,
        d,
        space_label: space.label(),
        p,
        lambda2: spectrum.lambda2,
        gap: spectrum.gap,
        c_naor,
        gamma_lower,
        gamma_upper,
        vol_threshold: vol.value,
        vol_precondition: vol.precondition,
        mean_pairwise,
        certificate,
        inconsistent,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tuple(points: &[&[f64]]) -> PointTuple {
        PointTuple::new(points[0].len(), points.iter().map(|p| p.to_vec()).collect()).unwrap()
    }

    #[test]
    fn ratio_examples() {
        let l1 = NormedSpace::l1(1);
        let x = tuple(&[&[0.0], &[3.0]]);
        let g = Graph::complete(2);
        assert_eq!(poincare_ratio(&g, &l1, &x, 1.0).unwrap(), 0.5);
        let same = tuple(&[&[1.0], &[1.0]]);
        assert!(poincare_ratio(&g, &l1, &same, 1.0).is_err());
        let l2 = NormedSpace::l2(2);
        let k4 = Graph::complete(4);
        let x = tuple(&[&[0.0, 0.0], &[1.0, 0.3], &[2.0, -1.0], &[0.5, 0.5]]);
        assert!((poincare_ratio(&k4, &l2, &x, 1.0).unwrap() - 0.75).abs() < 1e-15);
        assert!((poincare_ratio(&k4, &l2, &x, 2.0).unwrap() - 0.75).abs() < 1e-15);
        assert!(poincare_ratio(&Graph::path(4), &l2, &x, 1.0).is_err());
    }

    #[test]
    fn mean_distance_examples() {
        let l2 = NormedSpace::l2(1);
        assert_eq!(mean_pairwise_distance(&l2, &tuple(&[&[0.0], &[2.0]]), 1.0).unwrap(), 1.0);
        assert_eq!(mean_pairwise_distance(&l2, &tuple(&[&[1.0], &[1.0], &[1.0]]), 1.0).unwrap(), 0.0);
        let sq = tuple(&[&[0.0, 0.0], &[1.0, 0.0], &[1.0, 1.0], &[0.0, 1.0]]);
        let v = mean_pairwise_distance(&NormedSpace::l2(2), &sq, 1.0).unwrap();
        assert!((v - (2.0 + 2f64.sqrt()) / 4.0).abs() < 1e-15);
    }

    #[test]
    fn volumetric_examples() {
        assert_eq!(avg_distance_lower_bound(1024, 3, 1), VolumetricBound { value: 32.0, precondition: true });
        let b = avg_distance_lower_bound(1024, 3, 7);
        assert!(b.precondition && (b.value - 0.5).abs() < 1e-15);
        assert!(!avg_distance_lower_bound(1023, 3, 7).precondition);
        assert!(!avg_distance_lower_bound(10, 3, 200).precondition);
    }

    #[test]
    fn certificate_examples() {
        let g = Graph::empty(1024);
        assert_eq!(nonembedding_certificate(&g, 7, 3, 0.0).verdict, Verdict::CertifiedNonembeddable);
        let c = nonembedding_certificate(&g, 7, 3, 1.0);
        assert_eq!(c.verdict, Verdict::CertifiedNonembeddable);
        assert!((c.threshold - 1.0).abs() < 1e-15);
        assert_eq!(nonembedding_certificate(&g, 7, 3, 1.0001).verdict, Verdict::Inconclusive);
        assert_eq!(nonembedding_certificate(&g, 7, 3, 10.0).verdict, Verdict::Inconclusive);
        assert_eq!(nonembedding_certificate(&Graph::empty(1000), 7, 3, 0.0).verdict, Verdict::Inconclusive);
    }

    #[test]
    fn naor_examples() {
        assert!((naor_gamma_upper(1, 0.5, 2.0).unwrap() - 4.0 * 2f64.ln()).abs() < 1e-15);
        let a = naor_gamma_upper(5, 0.4, 3.0).unwrap();
        let b = naor_gamma_upper(5, 0.8, 3.0).unwrap();
        assert!((a - 2.0 * b).abs() < 1e-12);
        assert!((naor_gamma_upper(7, 2.0 / 3.0, 1.0).unwrap() - 3.1191).abs() < 1e-4);
        assert!(naor_gamma_upper(3, 0.0, 1.0).is_err());
    }

    #[test]
    fn dimension_threshold_examples() {
        assert_eq!(dimension_threshold(10, 3, 0.5, 1.0).unwrap(), 0);
        assert_eq!(dimension_threshold(1_000_000, 3, 2.0 / 3.0, 1.0).unwrap(), 6);
        let mut prev = 0;
        for k in 4..24 {
            let t = dimension_threshold(1usize << k, 3, 0.5, 1.0).unwrap();
            assert!(t >= prev);
            prev = t;
        }
        assert!(dimension_threshold(1 << 20, 3, 0.5, 4.0).unwrap() <= dimension_threshold(1 << 20, 3, 0.5, 1.0).unwrap());
    }
}
