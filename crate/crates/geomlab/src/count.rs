//! Exact and asymptotic counting.
//!
//! Labeled Δ-regular graphs are counted two independent ways: a dynamic
//! program over residual-degree class sizes (`count_regular_exact`) and a
//! backtracking enumerator that visits every graph (`enumerate_regular`).
//! Probabilities stay exact rationals; large magnitudes are reported on a
//! natural-log scale.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Largest residual-degree state space the dynamic program will explore.
pub const DP_STATE_LIMIT: f64 = 2e6;

/// Largest estimated number of graphs the enumerator will visit.
pub const ENUMERATION_LIMIT: f64 = 2e8;

/// Prefactor applied to the configuration-model count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrefactorMode {
    /// No prefactor: the raw pairing count divided by the labelings.
    None,
    /// `e^{1 − Δ²/4}`.
    Paper,
    /// `e^{(1 − Δ²)/4}`, the Bender–Canfield constant.
    Standard,
}

impl PrefactorMode {
    pub fn log_prefactor(self, delta: usize) -> f64 {
        let d2 = (delta * delta) as f64;
        match self {
            PrefactorMode::None => 0.0,
            PrefactorMode::Paper => 1.0 - d2 / 4.0,
            PrefactorMode::Standard => (1.0 - d2) / 4.0,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(PrefactorMode::None),
            "paper" => Ok(PrefactorMode::Paper),
            "standard" => Ok(PrefactorMode::Standard),
            _ => Err(Error::Parse(format!("unknown prefactor mode {s:?} (none|paper|standard)"))),
        }
    }
}

/// A count or probability with an exact value when one was computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountResult {
    /// Decimal integer or `p/q` rational.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub exact: Option<String>,
    pub approx: f64,
    pub log_value: f64,
    pub mode: String,
}

impl CountResult {
    pub fn from_integer(v: &BigUint) -> Self {
        let log_value = ln_biguint(v);
        Self { exact: Some(v.to_string()), approx: log_value.exp(), log_value, mode: "exact".into() }
    }

    pub fn from_rational(v: &BigRational) -> Self {
        let log_value = ln_rational(v);
        let exact = if v.denom().is_one() { v.numer().to_string() } else { v.to_string() };
        Self { exact: Some(exact), approx: log_value.exp(), log_value, mode: "exact".into() }
    }

    pub fn from_log(log_value: f64, mode: PrefactorMode) -> Self {
        let mode = serde_json::to_value(mode).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
        Self { exact: None, approx: log_value.exp(), log_value, mode }
    }
}

/// Natural logarithm of a big integer (−∞ for zero).
pub fn ln_biguint(v: &BigUint) -> f64 {
    if v.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = v.bits();
    if bits <= 1000 {
        return v.to_f64().map(f64::ln).unwrap_or(f64::NAN);
    }
    let shift = bits - 64;
    let top = (v >> shift).to_u64().unwrap_or(u64::MAX) as f64;
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Natural logarithm of a non-negative rational (−∞ for zero).
pub fn ln_rational(v: &BigRational) -> f64 {
    let num = v.numer().to_biguint().unwrap_or_default();
    let den = v.denom().to_biguint().unwrap_or_default();
    ln_biguint(&num) - ln_biguint(&den)
}

/// Binomial coefficient `C(a, b)`, zero when `b > a`.
pub fn binomial(a: u64, b: u64) -> BigUint {
    if b > a {
        return BigUint::zero();
    }
    let b = b.min(a - b);
    let mut acc = BigUint::one();
    for i in 0..b {
        acc *= a - i;
        acc /= i + 1;
    }
    acc
}

fn check_degree_sum(n: usize, delta: usize) -> Result<()> {
    if (n * delta) % 2 == 1 {
        return Err(Error::InvalidArgument(format!("Δ·n = {} is odd", n * delta)));
    }
    Ok(())
}

/// Number of labeled Δ-regular simple graphs on `n` vertices.
///
/// The state is the number of unfinished vertices at each residual degree
/// `1..=Δ`. Finishing one vertex of the highest residual degree `a` picks `a`
/// partners split across the classes; every split contributes a product of
/// binomials.
pub fn count_regular_exact(n: usize, delta: usize) -> Result<BigUint> {
    check_degree_sum(n, delta)?;
    if delta == 0 {
        return Ok(BigUint::one());
    }
    if delta >= n {
        return Ok(BigUint::zero());
    }
    let states = (0..delta).fold(1.0, |acc, k| acc * (n + delta - k) as f64 / (k + 1) as f64);
    if states > DP_STATE_LIMIT {
        return Err(Error::BudgetExceeded(format!(
            "regular-graph count for n = {n}, Δ = {delta} needs about {states:.2e} states (limit {DP_STATE_LIMIT:.0e})"
        )));
    }
    let mut classes = vec![0usize; delta + 1];
    classes[delta] = n;
    let mut memo = HashMap::new();
    Ok(count_classes(&classes, &mut memo))
}

fn count_classes(classes: &[usize], memo: &mut HashMap<Vec<usize>, BigUint>) -> BigUint {
    let Some(a) = (1..classes.len()).rev().find(|&k| classes[k] > 0) else {
        return BigUint::one();
    };
    if let Some(v) = memo.get(classes) {
        return v.clone();
    }
    let mut rest = classes.to_vec();
    rest[a] -= 1;
    let mut total = BigUint::zero();
    let mut take = vec![0usize; classes.len()];
    splits(&rest, a, 1, &mut take, &mut |take| {
        let mut ways = BigUint::one();
        let mut next = rest.clone();
        for b in 1..rest.len() {
            if take[b] > 0 {
                ways *= binomial(rest[b] as u64, take[b] as u64);
                next[b] -= take[b];
                next[b - 1] += take[b];
            }
        }
        next[0] = 0;
        total += ways * count_classes(&next, memo);
    });
    memo.insert(classes.to_vec(), total.clone());
    total
}

/// Calls `f` for every `take` with `take[b] ≤ rest[b]` summing to `left` over `b ≥ from`.
fn splits(rest: &[usize], left: usize, from: usize, take: &mut [usize], f: &mut dyn FnMut(&[usize])) {
    if from == rest.len() {
        if left == 0 {
            f(take);
        }
        return;
    }
    let room: usize = rest[from + 1..].iter().sum();
    let lo = left.saturating_sub(room);
    for k in lo..=left.min(rest[from]) {
        take[from] = k;
        splits(rest, left - k, from + 1, take, f);
    }
    take[from] = 0;
}

/// Log of the configuration-model estimate
/// `prefactor · (Δn)! / ((Δn/2)! · 2^{Δn/2} · (Δ!)^n)`.
pub fn count_regular_formula(n: usize, delta: usize, mode: PrefactorMode) -> Result<f64> {
    check_degree_sum(n, delta)?;
    let half = (n * delta / 2) as f64;
    let lf = |k: f64| ln_gamma(k + 1.0);
    Ok(mode.log_prefactor(delta) + lf(2.0 * half)
        - lf(half)
        - half * std::f64::consts::LN_2
        - n as f64 * lf(delta as f64))
}

pub type EdgeVisitor<'a> = dyn FnMut(&[(usize, usize)]) + 'a;

/// Visits every labeled Δ-regular graph on `n` vertices as a sorted edge list.
///
/// The lowest vertex with residual degree left chooses all its remaining
/// partners among higher vertices at once, so each graph is produced exactly
/// once.
pub fn enumerate_regular(n: usize, delta: usize, visit: &mut EdgeVisitor<'_>) -> Result<()> {
    guard_enumeration(n, delta)?;
    let mut res = vec![delta; n];
    let mut edges = Vec::with_capacity(n * delta / 2);
    backtrack(&mut res, 0, &mut edges, visit);
    Ok(())
}

/// Counts labeled Δ-regular graphs by enumeration, in parallel over the
/// partner sets of vertex 0.
pub fn count_regular_backtrack(n: usize, delta: usize) -> Result<u64> {
    guard_enumeration(n, delta)?;
    if delta == 0 {
        return Ok(1);
    }
    if delta >= n {
        return Ok(0);
    }
    let firsts: Vec<Vec<usize>> = combinations(&(1..n).collect::<Vec<_>>(), delta);
    Ok(firsts
        .par_iter()
        .map(|first| {
            let mut res = vec![delta; n];
            res[0] = 0;
            let mut edges = Vec::with_capacity(n * delta / 2);
            for &v in first {
                res[v] -= 1;
                edges.push((0, v));
            }
            let mut count = 0u64;
            backtrack(&mut res, 1, &mut edges, &mut |_| count += 1);
            count
        })
        .sum())
}

fn guard_enumeration(n: usize, delta: usize) -> Result<()> {
    let estimate = count_regular_formula(n, delta, PrefactorMode::None)?.exp();
    if estimate > ENUMERATION_LIMIT {
        return Err(Error::BudgetExceeded(format!(
            "enumerating Δ = {delta} graphs on n = {n} vertices visits about {estimate:.2e} graphs (limit {ENUMERATION_LIMIT:.0e})"
        )));
    }
    Ok(())
}

fn backtrack(res: &mut [usize], from: usize, edges: &mut Vec<(usize, usize)>, visit: &mut EdgeVisitor<'_>) {
    let Some(u) = (from..res.len()).find(|&u| res[u] > 0) else {
        visit(edges);
        return;
    };
    let need = res[u];
    let open: Vec<usize> = (u + 1..res.len()).filter(|&v| res[v] > 0).collect();
    if open.len() < need {
        return;
    }
    res[u] = 0;
    let mut pick = (0..need).collect::<Vec<_>>();
    loop {
        for &k in &pick {
            res[open[k]] -= 1;
            edges.push((u, open[k]));
        }
        backtrack(res, u + 1, edges, visit);
        for &k in &pick {
            res[open[k]] += 1;
            edges.pop();
        }
        if !next_combination(&mut pick, open.len()) {
            break;
        }
    }
    res[u] = need;
}

fn next_combination(pick: &mut [usize], n: usize) -> bool {
    let k = pick.len();
    let Some(i) = (0..k).rev().find(|&i| pick[i] < n - k + i) else {
        return false;
    };
    pick[i] += 1;
    for j in i + 1..k {
        pick[j] = pick[j - 1] + 1;
    }
    true
}

fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k > items.len() {
        return Vec::new();
    }
    let mut pick: Vec<usize> = (0..k).collect();
    let mut out = Vec::new();
    loop {
        out.push(pick.iter().map(|&i| items[i]).collect());
        if !next_combination(&mut pick, items.len()) {
            return out;
        }
    }
}

/// Probability that a uniform `m`-edge graph on `n` vertices avoids `l_size`
/// fixed pairs: `C(T − |L|, m) / C(T, m)` with `T = n(n−1)/2`.
pub fn prob_disjoint_exact(n: usize, m: usize, l_size: usize) -> Result<BigRational> {
    let total = n * n.saturating_sub(1) / 2;
    prob_disjoint_pairs(total, m, l_size)
}

/// Hypergeometric zero-success probability over a population of `total` pairs.
pub fn prob_disjoint_pairs(total: usize, m: usize, l_size: usize) -> Result<BigRational> {
    if l_size > total {
        return Err(Error::InvalidArgument(format!("|L| = {l_size} exceeds the {total} available pairs")));
    }
    if m > total {
        return Err(Error::InvalidArgument(format!("m = {m} exceeds the {total} available pairs")));
    }
    let num = binomial((total - l_size) as u64, m as u64);
    let den = binomial(total as u64, m as u64);
    Ok(BigRational::new(num.into(), den.into()))
}

/// The explicit disjointness bound and its leading exponent, both as logs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentBound {
    /// `(nΔ/2) · ln(e · n^{1+ε} / (n(n−1)/2))`.
    pub explicit: f64,
    /// `−((1−ε)/2) · nΔ · ln n`.
    pub leading: f64,
    /// `(explicit − leading) / (nΔ)`, the constant hidden in `O(nΔ)`.
    pub slack_per_unit: f64,
}

pub fn prob_disjoint_exponent_bound(n: usize, delta: usize, eps: f64) -> Result<ExponentBound> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("n = {n} leaves no pairs")));
    }
    let nf = n as f64;
    let nd = nf * delta as f64;
    let total = nf * (nf - 1.0) / 2.0;
    let explicit = nd / 2.0 * (1.0 + (1.0 + eps) * nf.ln() - total.ln());
    let leading = -((1.0 - eps) / 2.0) * nd * nf.ln();
    let slack_per_unit = if nd > 0.0 { (explicit - leading) / nd } else { 0.0 };
    Ok(ExponentBound { explicit, leading, slack_per_unit })
}

/// `|𝒢_{n,Δ}| / C(n(n−1)/2, nΔ/2)`: the chance that a uniform graph with
/// `nΔ/2` edges is Δ-regular.
pub fn contiguity_prob_exact(n: usize, delta: usize) -> Result<BigRational> {
    let count = count_regular_exact(n, delta)?;
    let total = (n * n.saturating_sub(1) / 2) as u64;
    let den = binomial(total, (n * delta / 2) as u64);
    if den.is_zero() {
        return Err(Error::InvalidArgument(format!("no graph on {n} vertices has {} edges", n * delta / 2)));
    }
    Ok(BigRational::new(count.into(), den.into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn ratio(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn small_counts() {
        let exact = |n, d| count_regular_exact(n, d).unwrap().to_string();
        assert_eq!(exact(4, 3), "1");
        assert_eq!(exact(6, 3), "70");
        assert_eq!(exact(4, 2), "3");
        assert_eq!(exact(8, 3), "19355");
        assert_eq!(exact(10, 3), "11180820");
        assert_eq!(exact(12, 3), "11555272575");
        assert_eq!(exact(5, 4), "1");
        assert_eq!(exact(4, 4), "0");
        assert_eq!(exact(7, 0), "1");
        assert!(count_regular_exact(5, 3).is_err());
        assert!(matches!(count_regular_exact(100_000, 3), Err(Error::BudgetExceeded(_))));
    }

    #[test]
    fn dp_matches_enumeration() {
        for (n, d) in [(4, 2), (5, 2), (6, 2), (7, 2), (4, 3), (6, 3), (8, 3), (6, 4), (7, 4), (8, 5)] {
            let bt = count_regular_backtrack(n, d).unwrap();
            assert_eq!(count_regular_exact(n, d).unwrap(), BigUint::from(bt), "n={n} Δ={d}");
            let mut visited = 0u64;
            enumerate_regular(n, d, &mut |_| visited += 1).unwrap();
            assert_eq!(visited, bt);
        }
        assert!(matches!(count_regular_backtrack(12, 3), Err(Error::BudgetExceeded(_))));
    }

    #[test]
    fn enumerated_graphs_are_regular_and_distinct() {
        let mut seen = std::collections::HashSet::new();
        enumerate_regular(6, 3, &mut |edges| {
            let mut deg = [0; 6];
            for &(u, v) in edges {
                assert!(u < v);
                deg[u] += 1;
                deg[v] += 1;
            }
            assert_eq!(deg, [3; 6]);
            assert!(seen.insert(edges.to_vec()));
        })
        .unwrap();
        assert_eq!(seen.len(), 70);
    }

    #[test]
    fn formula_values() {
        let raw = count_regular_formula(6, 3, PrefactorMode::None).unwrap();
        assert!((raw - 6.6048).abs() < 5e-4, "{raw}");
        // 18!/(9!·2^9·6^6) exactly
        let exact = binomial(18, 9) * BigUint::from(362_880u32) / BigUint::from(512u32) / BigUint::from(46_656u32);
        assert!((raw - ln_biguint(&exact)).abs() < 0.01);
        let std6 = count_regular_formula(6, 3, PrefactorMode::Standard).unwrap().exp();
        assert!((std6 - 738.6 * (-2f64).exp()).abs() < 0.1);
        let paper6 = count_regular_formula(6, 3, PrefactorMode::Paper).unwrap().exp();
        assert!((paper6 / 70.0 - 3.0).abs() < 0.2);
        assert!(count_regular_formula(5, 3, PrefactorMode::Standard).is_err());
    }

    #[test]
    fn disjointness_examples() {
        assert_eq!(prob_disjoint_pairs(6, 3, 2).unwrap(), ratio(1, 5));
        assert_eq!(prob_disjoint_exact(4, 3, 2).unwrap(), ratio(1, 5));
        assert_eq!(prob_disjoint_exact(10, 15, 0).unwrap(), ratio(1, 1));
        assert_eq!(prob_disjoint_exact(10, 15, 31).unwrap(), ratio(0, 1));
        assert!(prob_disjoint_exact(4, 3, 7).is_err());
        assert!(prob_disjoint_exact(4, 7, 0).is_err());
    }

    #[test]
    fn exponent_bound_shape() {
        let b = prob_disjoint_exponent_bound(1000, 3, 0.1).unwrap();
        assert!(b.explicit < 0.0 && b.leading < 0.0);
        // the slack tends to (1 + ln 2)/2 from above
        assert!((b.slack_per_unit - (1.0 + 2f64.ln() + (1000f64 / 999.0).ln()) / 2.0).abs() < 1e-9);
        let looser = prob_disjoint_exponent_bound(1000, 3, 0.2).unwrap();
        assert!(looser.explicit > b.explicit);
    }

    #[test]
    fn contiguity_examples() {
        assert_eq!(contiguity_prob_exact(4, 3).unwrap(), ratio(1, 1));
        assert_eq!(contiguity_prob_exact(6, 3).unwrap(), ratio(2, 143));
        let p = contiguity_prob_exact(10, 3).unwrap();
        assert!(p > ratio(0, 1) && p <= ratio(1, 1));
    }

    #[test]
    fn count_result_logs() {
        let v = count_regular_exact(12, 3).unwrap();
        let r = CountResult::from_integer(&v);
        assert!((r.log_value - 11_555_272_575f64.ln()).abs() <= 1e-9 * r.log_value.abs());
        let big = binomial(4000, 2000);
        let l = ln_biguint(&big);
        let approx = ln_gamma(4001.0) - 2.0 * ln_gamma(2001.0);
        assert!((l - approx).abs() <= 1e-9 * l);
        let q = CountResult::from_rational(&ratio(2, 143));
        assert_eq!(q.exact.as_deref(), Some("2/143"));
        let json = serde_json::to_string(&CountResult::from_log(1.5, PrefactorMode::Standard)).unwrap();
        assert_eq!(json, r#"{"approx":4.4816890703380645,"log_value":1.5,"mode":"standard"}"#);
    }
}
