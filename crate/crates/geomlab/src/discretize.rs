//! Scales of separation, seeds, multiscale nets, the discretization map
//! `x ↦ x̂` and the long-distance set `L`.
//!
//! Dyadic radii are `r_ℓ = 2^ℓ`. For a tuple `x`, the scale `ℓ_i` is the
//! least level in `[ell_min, ell_max]` whose ball around `x_i` holds at
//! least `n^{2ε}` tuple points (counting `x_i` itself). Seeds `S_ℓ` are
//! `⌊n^{1−ε}⌋` tuple points per level such that every index at level `ℓ` has
//! a seed within `r_ℓ`. Each `x_i` is first snapped to the projection `ŝ_i`
//! of its level's seeds onto the base net `N_0`, then to the nearest point
//! `x̂_i` of the local `c0·r`-net of `B(ŝ_i, r_{ℓ_i})`.
//!
//! All local nets are affine images `ŝ + r·T` of one `c0`-net `T` of the unit
//! ball, so projecting onto a local net is a nearest-point query in `T`.

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, Mutex};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{in_domain, DomainReason, PointTuple};
use crate::norms::{greedy_net, Net, NetIndex, NormedSpace};

/// Constants of the discretization scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub eps: f64,
    pub c0: f64,
    /// Domain radius constant `D`: tuples live in `B(0, D·ln n)`.
    pub diam_const: f64,
    pub c_bm: f64,
    pub c_main: f64,
    /// Constant in the spectral upper bound on the Poincaré constant.
    pub c_naor: f64,
    /// Degree `Δ` of the graphs under study (sparsity parameter).
    pub delta: usize,
    pub ell_min: i32,
    /// Defaults to `⌈log₂(2·D·ln n)⌉` when unset.
    pub ell_max: Option<i32>,
    pub tolerance: f64,
    pub max_retries: usize,
    pub seed_strategy: SeedStrategy,
}

/// How a seed level is produced when uniform draws keep failing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedStrategy {
    /// Uniform draws with replacement, redrawn up to `max_retries` times;
    /// failure is an error.
    Uniform,
    /// As `Uniform`, but once the retries are spent the last draw is
    /// completed: uncovered indices are greedily promoted to seeds, each
    /// replacing one of the random draws, so the level keeps exactly
    /// `⌊n^{1−ε}⌋` seeds. Fails only if the greedy cover itself is too large.
    UniformThenComplete,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            eps: 0.1,
            c0: 0.01,
            diam_const: 8.0,
            c_bm: 10.0,
            c_main: 0.001,
            c_naor: crate::obstruct::DEFAULT_C_NAOR,
            delta: 3,
            ell_min: 0,
            ell_max: None,
            tolerance: crate::norms::DEFAULT_TOLERANCE,
            max_retries: 64,
            seed_strategy: SeedStrategy::UniformThenComplete,
        }
    }
}

/// `x` rounded to the nearest integer when within `1e-9` relative of it, so
/// that exact powers such as `16^{1/2}` are not perturbed by `powf`.
fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x
    }
}

impl Params {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(what.to_string()));
        if !(self.eps > 0.0 && self.eps < 0.5) {
            return bad("eps must lie in (0, 1/2)");
        }
        if !(self.c0 > 0.0 && self.c0 < 1.0) {
            return bad("c0 must lie in (0, 1)");
        }
        if !(self.diam_const > 0.0) || !(self.c_naor > 0.0) {
            return bad("D and C_naor must be positive");
        }
        if self.ell_max.is_some_and(|m| m < self.ell_min) {
            return bad("ell_max must be at least ell_min");
        }
        Ok(())
    }

    /// `⌈log₂(2·D·ln n)⌉` unless overridden.
    pub fn ell_max_for(&self, n: usize) -> i32 {
        self.ell_max.unwrap_or_else(|| {
            let v = 2.0 * self.diam_const * (n as f64).ln();
            if v <= 1.0 {
                self.ell_min
            } else {
                (snap(v.log2()).ceil() as i32).max(self.ell_min)
            }
        })
    }

    /// The levels `ell_min ..= ell_max`.
    pub fn levels(&self, n: usize) -> std::ops::RangeInclusive<i32> {
        self.ell_min..=self.ell_max_for(n)
    }

    /// `n^{2ε}`.
    pub fn density_threshold(&self, n: usize) -> f64 {
        snap((n as f64).powf(2.0 * self.eps))
    }

    /// `⌊n^{1−ε}⌋`.
    pub fn seeds_per_level(&self, n: usize) -> usize {
        snap((n as f64).powf(1.0 - self.eps)).floor() as usize
    }

    /// Radius of the domain ball, `D·ln n`.
    pub fn domain_radius(&self, n: usize) -> f64 {
        crate::geom::domain_radius(n, self.diam_const)
    }

    /// Whether `320^d ≤ n^ε/(Δ+1)`, the condition under which every scale
    /// satisfies `r_{ℓ_i} ≥ 36` on the domain.
    pub fn regime_holds(&self, n: usize, d: usize) -> bool {
        d as f64 * 320f64.ln() <= self.eps * (n as f64).ln() - ((self.delta + 1) as f64).ln()
    }

    /// `min(ε/(2 ln 320), ε·ln(3/c0)/10, C_BM/2)`.
    pub fn c_main_bound(&self) -> f64 {
        (self.eps / (2.0 * 320f64.ln()))
            .min(self.eps * (3.0 / self.c0).ln() / 10.0)
            .min(self.c_bm / 2.0)
    }

    /// Whether the configured `c_main` is at most [`Params::c_main_bound`].
    pub fn c_main_consistent(&self) -> bool {
        self.c_main <= self.c_main_bound()
    }
}

/// `r_ℓ = 2^ℓ`.
pub fn radius(level: i32) -> f64 {
    2f64.powi(level)
}

/// Scales of separation of a tuple.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleProfile {
    pub ells: Vec<i32>,
    /// Indices for which no level in range reached the density threshold.
    pub saturated: Vec<bool>,
    pub ell_min: i32,
    pub ell_max: i32,
}

impl ScaleProfile {
    pub fn r(&self, i: usize) -> f64 {
        radius(self.ells[i])
    }
}

/// Smallest level `ℓ ≥ lo` with `d ≤ 2^ℓ`, or `None` past `hi`.
fn level_of(d: f64, lo: i32, hi: i32) -> Option<i32> {
    let l = ceil_log2(d).max(lo);
    (l <= hi).then_some(l)
}

/// Smallest integer `l` with `d ≤ 2^l`, read off the float representation.
fn ceil_log2(d: f64) -> i32 {
    if d <= f64::MIN_POSITIVE {
        return i32::MIN;
    }
    if !d.is_finite() {
        return i32::MAX;
    }
    let bits = d.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32 - 1023;
    if bits & ((1 << 52) - 1) == 0 {
        exp
    } else {
        exp + 1
    }
}

/// `ℓ_i = min{ℓ ∈ [ell_min, ell_max] : |{j : ‖x_i − x_j‖ ≤ 2^ℓ}| ≥ n^{2ε}}`,
/// saturating at `ell_max`.
pub fn scale_profile(space: &NormedSpace, x: &PointTuple, params: &Params) -> ScaleProfile {
    let n = x.len();
    let (lo, hi) = (params.ell_min, params.ell_max_for(n));
    let thr = params.density_threshold(n);
    let levels = (hi - lo + 1) as usize;
    let rows: Vec<(i32, bool)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut hist = vec![0usize; levels];
            for j in 0..n {
                if let Some(l) = level_of(space.dist(&x.points[i], &x.points[j]), lo, hi) {
                    hist[(l - lo) as usize] += 1;
                }
            }
            let mut count = 0;
            for (k, h) in hist.iter().enumerate() {
                count += h;
                if count as f64 >= thr {
                    return (lo + k as i32, false);
                }
            }
            (hi, true)
        })
        .collect();
    ScaleProfile {
        ells: rows.iter().map(|r| r.0).collect(),
        saturated: rows.iter().map(|r| r.1).collect(),
        ell_min: lo,
        ell_max: hi,
    }
}

/// Seeds of one level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedLevel {
    pub level: i32,
    /// Tuple indices of the seeds (a multiset, in draw order).
    pub indices: Vec<usize>,
    /// Draws used, including the accepted one.
    pub attempts: usize,
    /// Number of tuple indices at this level whose coverage was verified.
    pub verified: usize,
    /// Number of seeds placed by greedy completion rather than drawn.
    pub completed: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedFamily {
    pub per_level: usize,
    pub levels: Vec<SeedLevel>,
}

impl SeedFamily {
    pub fn level(&self, l: i32) -> &SeedLevel {
        let first = self.levels[0].level;
        &self.levels[(l - first) as usize]
    }
}

/// Whether every index at level `l` has a seed within `r_l`; returns the
/// first uncovered index otherwise.
pub fn seeds_cover(space: &NormedSpace, x: &PointTuple, members: &[usize], seeds: &[usize], l: i32) -> Option<usize> {
    let r = radius(l);
    members
        .par_iter()
        .find_first(|&&i| !seeds.iter().any(|&s| space.dist(&x.points[s], &x.points[i]) <= r))
        .copied()
}

/// Draw `⌊n^{1−ε}⌋` seeds per level uniformly with replacement, redrawing a
/// level until its covering property is verified; see [`SeedStrategy`] for
/// what happens when the retries run out.
pub fn select_seeds<R: Rng + ?Sized>(
    space: &NormedSpace,
    x: &PointTuple,
    profile: &ScaleProfile,
    params: &Params,
    rng: &mut R,
    max_retries: usize,
) -> Result<SeedFamily> {
    let n = x.len();
    let m = params.seeds_per_level(n);
    if n == 0 || m == 0 {
        return Err(Error::InvalidArgument("seed selection needs n ≥ 1".into()));
    }
    let mut levels = Vec::new();
    for l in profile.ell_min..=profile.ell_max {
        let members: Vec<usize> = (0..n).filter(|&i| profile.ells[i] == l).collect();
        let mut attempts = 0;
        let (indices, completed) = loop {
            attempts += 1;
            let draw: Vec<usize> = (0..m).map(|_| rng.random_range(0..n)).collect();
            match seeds_cover(space, x, &members, &draw, l) {
                None => break (draw, 0),
                Some(i) if attempts >= max_retries.max(1) => match params.seed_strategy {
                    SeedStrategy::Uniform => {
                        return Err(Error::RetriesExhausted {
                            what: format!("seeds at level {l} left index {i} uncovered"),
                            attempts,
                        })
                    }
                    SeedStrategy::UniformThenComplete => {
                        break complete_seeds(space, x, &members, draw, l).map_err(|i| Error::RetriesExhausted {
                            what: format!(
                                "seeds at level {l}: greedy completion needs more than {m} seeds (index {i} uncovered)"
                            ),
                            attempts,
                        })?
                    }
                },
                Some(_) => {}
            }
        };
        levels.push(SeedLevel {
            level: l,
            indices,
            attempts,
            verified: members.len(),
            completed,
        });
    }
    Ok(SeedFamily { per_level: m, levels })
}

/// Promote uncovered members to seeds, each displacing the last remaining
/// random draw, until every member is covered. Returns the seeds and the
/// number of promoted members, or the first member left uncovered when the
/// promoted set alone would exceed the level size.
fn complete_seeds(
    space: &NormedSpace,
    x: &PointTuple,
    members: &[usize],
    draw: Vec<usize>,
    l: i32,
) -> std::result::Result<(Vec<usize>, usize), usize> {
    let m = draw.len();
    let r = radius(l);
    let mut promoted: Vec<usize> = Vec::new();
    loop {
        let kept = m - promoted.len();
        let seeds: Vec<usize> = promoted.iter().chain(&draw[..kept]).copied().collect();
        let uncovered: Vec<usize> = members
            .par_iter()
            .filter(|&&i| !seeds.iter().any(|&s| space.dist(&x.points[s], &x.points[i]) <= r))
            .copied()
            .collect();
        if uncovered.is_empty() {
            return Ok((seeds, promoted.len()));
        }
        for &u in &uncovered {
            if !promoted.iter().any(|&s| space.dist(&x.points[s], &x.points[u]) <= r) {
                if promoted.len() == m {
                    return Err(u);
                }
                promoted.push(u);
            }
        }
    }
}

/// Base net of the domain ball plus lazily materialised local nets.
pub struct MultiscaleNet {
    space: NormedSpace,
    n: usize,
    c0: f64,
    levels: std::ops::RangeInclusive<i32>,
    base: Net,
    base_index: NetIndex,
    template: Net,
    template_index: NetIndex,
    cache: Mutex<HashMap<(usize, i32), Arc<Net>>>,
}

impl std::fmt::Debug for MultiscaleNet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MultiscaleNet")
            .field("space", &self.space)
            .field("n", &self.n)
            .field("levels", &self.levels)
            .field("base", &self.base.len())
            .field("template", &self.template.len())
            .finish()
    }
}

/// Net sizes and the volumetric bounds they are compared against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetSizes {
    pub base: usize,
    /// `(3·D·ln n)^d`.
    pub base_bound: f64,
    pub local: usize,
    /// `(3/c0)^d`.
    pub local_bound: f64,
    pub levels: usize,
}

/// Build `N_0` (a 1-net of `B(0, D·ln n)`) and the unit-ball template of all
/// local nets.
pub fn build_multiscale_net<R: Rng + ?Sized>(
    space: &NormedSpace,
    n: usize,
    params: &Params,
    rng: &mut R,
) -> Result<MultiscaleNet> {
    params.validate()?;
    let origin = vec![0.0; space.dim()];
    let base = greedy_net(space, &origin, params.domain_radius(n), 1.0, rng)?;
    let template = greedy_net(space, &origin, 1.0, params.c0, rng)?;
    Ok(MultiscaleNet {
        space: space.clone(),
        n,
        c0: params.c0,
        levels: params.levels(n),
        base_index: NetIndex::new(space, &base.points)?,
        template_index: NetIndex::new(space, &template.points)?,
        base,
        template,
        cache: Mutex::new(HashMap::new()),
    })
}

impl MultiscaleNet {
    pub fn space(&self) -> &NormedSpace {
        &self.space
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn levels(&self) -> std::ops::RangeInclusive<i32> {
        self.levels.clone()
    }

    pub fn base(&self) -> &Net {
        &self.base
    }

    /// The `c0`-net of the unit ball whose images are the local nets.
    pub fn template(&self) -> &Net {
        &self.template
    }

    /// Nearest base-net point.
    pub fn project_base(&self, p: &[f64]) -> usize {
        self.base_index.nearest(&self.space, p).0
    }

    /// Nearest point of the local net at `(base point b, level l)`, as an
    /// index into the template, with its coordinates.
    pub fn project_local(&self, b: usize, l: i32, p: &[f64]) -> (usize, Vec<f64>) {
        let center = &self.base.points[b];
        let r = radius(l);
        let q: Vec<f64> = p.iter().zip(center).map(|(a, c)| (a - c) / r).collect();
        let (k, _) = self.template_index.nearest(&self.space, &q);
        (k, self.local_point(b, l, k))
    }

    /// Point `k` of the local net at `(b, l)`: `N_0[b] + r_l·T[k]`.
    pub fn local_point(&self, b: usize, l: i32, k: usize) -> Vec<f64> {
        let r = radius(l);
        self.base.points[b]
            .iter()
            .zip(&self.template.points[k])
            .map(|(c, t)| c + r * t)
            .collect()
    }

    /// The local net `N(N_0[b], r_l; c0·r_l)`, materialised on first access.
    pub fn local_net(&self, b: usize, l: i32) -> Result<Arc<Net>> {
        if b >= self.base.len() || !self.levels.contains(&l) {
            return Err(Error::InvalidArgument(format!("no local net at ({b}, {l})")));
        }
        let mut cache = self.cache.lock().expect("local net cache poisoned");
        Ok(cache
            .entry((b, l))
            .or_insert_with(|| Arc::new(self.template.affine_image(&self.base.points[b], radius(l))))
            .clone())
    }

    /// Number of local nets materialised so far.
    pub fn materialized(&self) -> usize {
        self.cache.lock().expect("local net cache poisoned").len()
    }

    pub fn sizes(&self) -> NetSizes {
        let d = self.space.dim() as i32;
        NetSizes {
            base: self.base.len(),
            base_bound: (3.0 * self.base.radius).powi(d),
            local: self.template.len(),
            local_bound: (3.0 / self.c0).powi(d),
            levels: self.levels.clone().count(),
        }
    }
}

/// The ordered long-distance set `L = {(i, j) : ‖x̂_i − x̂_j‖ > r_{ℓ_i}/3}`,
/// stored through its complement (ordered pairs `i ≠ j` at distance at
/// most `r_{ℓ_i}/3`), which is small for spread-out tuples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LongDistances {
    pub n: usize,
    /// Ordered pairs `(i, j)`, `i ≠ j`, not in `L`, sorted.
    pub complement: Vec<(usize, usize)>,
}

impl LongDistances {
    pub fn contains(&self, i: usize, j: usize) -> bool {
        i != j && self.complement.binary_search(&(i, j)).is_err()
    }

    /// `|L|` as a set of ordered pairs.
    pub fn len(&self) -> usize {
        self.n * self.n.saturating_sub(1) - self.complement.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Ordered pairs of `L`, in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n)
            .flat_map(move |i| (0..self.n).map(move |j| (i, j)))
            .filter(move |&(i, j)| self.contains(i, j))
    }

    /// Unordered pairs `{i, j}` with `(i, j) ∈ L` or `(j, i) ∈ L`.
    pub fn unordered(&self) -> BTreeSet<(usize, usize)> {
        (0..self.n)
            .flat_map(|i| (i + 1..self.n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.contains(i, j) || self.contains(j, i))
            .collect()
    }

    /// Number of unordered pairs in the collapse of `L`.
    pub fn unordered_len(&self) -> usize {
        let both_short = self
            .complement
            .iter()
            .filter(|&&(i, j)| i < j && self.complement.binary_search(&(j, i)).is_ok())
            .count();
        self.n * self.n.saturating_sub(1) / 2 - both_short
    }
}

/// `L` computed from the discretized points and their levels alone.
pub fn long_distances_from(space: &NormedSpace, xhat: &[Vec<f64>], ells: &[i32]) -> LongDistances {
    let n = xhat.len();
    let complement: Vec<(usize, usize)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let third = radius(ells[i]) / 3.0;
            (0..n).filter_map(move |j| (j != i && space.dist(&xhat[i], &xhat[j]) <= third).then_some((i, j)))
        })
        .collect();
    LongDistances { n, complement }
}

/// Where `x̂_i` sits in the multiscale net.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetAddress {
    /// Index of `ŝ_i` in `N_0`.
    pub anchor: usize,
    pub level: i32,
    /// Index in the unit-ball template.
    pub local: usize,
}

/// Maxima of the distance bounds that hold for every discretization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemarkSummary {
    /// `max_i (‖x_i − ŝ_i‖ − r_{ℓ_i})`, at most 1.
    pub anchor_excess: f64,
    /// `max_i (‖x_i − x̂_i‖ − c0·r_{ℓ_i})`, at most 1.
    pub xhat_excess: f64,
}

/// Everything produced by [`discretize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationRecord {
    pub schema: String,
    pub space_label: String,
    pub n: usize,
    pub params: Params,
    pub profile: ScaleProfile,
    pub seeds: SeedFamily,
    /// `Ŝ_ℓ`: base-net indices of the projected seeds, per level.
    pub projected_seeds: Vec<Vec<usize>>,
    pub addresses: Vec<NetAddress>,
    /// `ŝ_i`.
    pub anchors: Vec<Vec<f64>>,
    /// `x̂`.
    pub xhat: PointTuple,
    #[serde(rename = "L")]
    pub long: LongDistances,
    pub remark: RemarkSummary,
    pub net_sizes: NetSizes,
}

impl DiscretizationRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("records serialize")
    }
}

/// Discretize `x` with a freshly built multiscale net.
pub fn discretize<R: Rng + ?Sized>(
    space: &NormedSpace,
    x: &PointTuple,
    params: &Params,
    rng: &mut R,
) -> Result<DiscretizationRecord> {
    let net = build_multiscale_net(space, x.len(), params, rng)?;
    discretize_with(&net, x, params, rng)
}

/// Discretize a domain tuple against a prebuilt multiscale net.
pub fn discretize_with<R: Rng + ?Sized>(
    net: &MultiscaleNet,
    x: &PointTuple,
    params: &Params,
    rng: &mut R,
) -> Result<DiscretizationRecord> {
    params.validate()?;
    let space = net.space();
    let n = x.len();
    if n != net.n() {
        return Err(Error::SizeMismatch {
            what: "tuple for this multiscale net",
            expected: net.n(),
            got: n,
        });
    }
    let domain = in_domain(space, x, params.delta, params.diam_const)?;
    if !domain.inside {
        let why = match domain.reason {
            DomainReason::Diameter { index, norm, limit } => {
                format!("‖x_{index}‖ = {norm} exceeds D·ln n = {limit}")
            }
            DomainReason::Sparsity { index, crowd } => format!(
                "x_{index} has {} other points within 1/2 (Δ = {})",
                crowd.len(),
                params.delta
            ),
            DomainReason::Ok => unreachable!(),
        };
        return Err(Error::OutsideDomain(why));
    }
    let profile = scale_profile(space, x, params);
    let seeds = select_seeds(space, x, &profile, params, rng, params.max_retries)?;
    let projected: Vec<Vec<usize>> = seeds
        .levels
        .iter()
        .map(|lv| lv.indices.iter().map(|&s| net.project_base(&x.points[s])).collect())
        .collect();

    let placed: Vec<(NetAddress, Vec<f64>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let l = profile.ells[i];
            let candidates = &projected[(l - profile.ell_min) as usize];
            let mut best = (f64::INFINITY, 0);
            for &b in candidates {
                let d = space.dist(&x.points[i], &net.base().points[b]);
                if d < best.0 {
                    best = (d, b);
                }
            }
            let anchor = best.1;
            let (local, point) = net.project_local(anchor, l, &x.points[i]);
            (
                NetAddress { anchor, level: l, local },
                net.base().points[anchor].clone(),
                point,
            )
        })
        .collect();
    let addresses: Vec<NetAddress> = placed.iter().map(|p| p.0).collect();
    let anchors: Vec<Vec<f64>> = placed.iter().map(|p| p.1.clone()).collect();
    let xhat: Vec<Vec<f64>> = placed.into_iter().map(|p| p.2).collect();

    let mut remark = RemarkSummary {
        anchor_excess: f64::NEG_INFINITY,
        xhat_excess: f64::NEG_INFINITY,
    };
    for i in 0..n {
        let r = profile.r(i);
        remark.anchor_excess = remark.anchor_excess.max(space.dist(&x.points[i], &anchors[i]) - r);
        remark.xhat_excess = remark.xhat_excess.max(space.dist(&x.points[i], &xhat[i]) - params.c0 * r);
    }
    let long = long_distances_from(space, &xhat, &profile.ells);
    Ok(DiscretizationRecord {
        schema: crate::REPORT_SCHEMA.to_string(),
        space_label: space.label(),
        n,
        params: *params,
        profile,
        seeds,
        projected_seeds: projected,
        addresses,
        anchors,
        xhat: PointTuple {
            dim: space.dim(),
            points: xhat,
        },
        long,
        remark,
        net_sizes: net.sizes(),
    })
}

/// `L` of a record, recomputed from its `x̂` and levels.
pub fn long_distances(space: &NormedSpace, rec: &DiscretizationRecord) -> LongDistances {
    long_distances_from(space, &rec.xhat.points, &rec.profile.ells)
}

/// A failed pointwise check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub check: String,
    pub i: usize,
    pub j: Option<usize>,
    pub value: f64,
    pub bound: f64,
}

/// Checks that only make sense when `320^d ≤ n^ε/(Δ+1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalClaims {
    /// Pairs with `‖x_i − x_j‖ ≤ 2` checked against `‖x̂_i − x̂_j‖ ≤ r_{ℓ_i}/6`.
    pub close_pairs: usize,
    pub claim2_violations: usize,
    /// `max_i |{j : ‖x̂_i − x̂_j‖ ≤ r_{ℓ_i}/3}|`, to compare with `n^{2ε}`.
    pub max_claim3_count: usize,
    pub claim3_violations: usize,
    /// Close pairs that nevertheless lie in `L`.
    pub exclusion_violations: usize,
}

/// Instance-level audit of a discretization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationAudit {
    pub n: usize,
    pub remark_violations: usize,
    /// Ordered pairs with `‖x_i − x_j‖ ≤ 2`.
    pub chain_pairs: usize,
    pub chain_violations: usize,
    pub regime: bool,
    /// `min_i r_{ℓ_i}`.
    pub min_radius: f64,
    pub conditional: Option<ConditionalClaims>,
    /// Whether `L` recomputed from `(x̂, ℓ)` equals the stored set.
    pub factorization: bool,
    pub profile_matches: bool,
    pub base_within_bound: bool,
    pub local_within_bound: bool,
    /// First violations, capped.
    pub violations: Vec<Violation>,
}

impl DiscretizationAudit {
    pub fn passed(&self) -> bool {
        self.remark_violations == 0
            && self.chain_violations == 0
            && self.factorization
            && self.profile_matches
            && self
                .conditional
                .as_ref()
                .is_none_or(|c| c.claim2_violations == 0 && c.claim3_violations == 0 && c.exclusion_violations == 0)
    }
}

/// Verify a record against its tuple: distance bounds, the unconditional
/// chain for close pairs, the conditional claims when in the regime, and
/// that `L` depends only on `(x̂, ℓ)`.
///
/// With `force_conditional` the conditional claims are evaluated even when
/// the regime predicate is false.
pub fn check_discretization(
    space: &NormedSpace,
    x: &PointTuple,
    rec: &DiscretizationRecord,
    params: &Params,
    force_conditional: bool,
) -> DiscretizationAudit {
    let n = x.len();
    let c0 = params.c0;
    let mut violations = Vec::new();
    let mut push = |v: Violation| {
        if violations.len() < crate::embed::VIOLATION_LIST_CAP {
            violations.push(v);
        }
    };
    let r = |i: usize| radius(rec.profile.ells[i]);

    let mut remark_violations = 0;
    for i in 0..n {
        let ds = space.dist(&x.points[i], &rec.anchors[i]);
        if ds > r(i) + 1.0 {
            remark_violations += 1;
            push(Violation { check: "anchor".into(), i, j: None, value: ds, bound: r(i) + 1.0 });
        }
        let dx = space.dist(&x.points[i], &rec.xhat.points[i]);
        if dx > c0 * r(i) + 1.0 {
            remark_violations += 1;
            push(Violation { check: "xhat".into(), i, j: None, value: dx, bound: c0 * r(i) + 1.0 });
        }
    }

    let close: Vec<(usize, usize)> = crate::geom::pairs_within(space, &x.points, 2.0)
        .into_iter()
        .flat_map(|(i, j, _)| [(i, j), (j, i)])
        .collect();
    let mut chain_violations = 0;
    for &(i, j) in &close {
        let rj_bound = 2.0 * (r(i) + 2.0);
        if r(j) > rj_bound {
            chain_violations += 1;
            push(Violation { check: "scale-chain".into(), i, j: Some(j), value: r(j), bound: rj_bound });
        }
        let dh = space.dist(&rec.xhat.points[i], &rec.xhat.points[j]);
        let bound = 4.0 + 3.0 * c0 * r(i) + 4.0 * c0;
        if dh > bound {
            chain_violations += 1;
            push(Violation { check: "xhat-chain".into(), i, j: Some(j), value: dh, bound });
        }
    }

    let regime = params.regime_holds(n, space.dim());
    let conditional = (regime || force_conditional).then(|| {
        let mut c = ConditionalClaims {
            close_pairs: close.len(),
            claim2_violations: 0,
            max_claim3_count: 0,
            claim3_violations: 0,
            exclusion_violations: 0,
        };
        for &(i, j) in &close {
            let dh = space.dist(&rec.xhat.points[i], &rec.xhat.points[j]);
            if dh > r(i) / 6.0 {
                c.claim2_violations += 1;
                push(Violation { check: "claim2".into(), i, j: Some(j), value: dh, bound: r(i) / 6.0 });
            }
            if rec.long.contains(i, j) {
                c.exclusion_violations += 1;
                push(Violation { check: "exclusion".into(), i, j: Some(j), value: dh, bound: r(i) / 3.0 });
            }
        }
        let thr = params.density_threshold(n);
        let counts: Vec<usize> = (0..n)
            .into_par_iter()
            .map(|i| {
                (0..n)
                    .filter(|&j| space.dist(&rec.xhat.points[i], &rec.xhat.points[j]) <= r(i) / 3.0)
                    .count()
            })
            .collect();
        for (i, &k) in counts.iter().enumerate() {
            c.max_claim3_count = c.max_claim3_count.max(k);
            if k as f64 > thr {
                c.claim3_violations += 1;
                push(Violation { check: "claim3".into(), i, j: None, value: k as f64, bound: thr });
            }
        }
        c
    });

    let factorization = long_distances_from(space, &rec.xhat.points, &rec.profile.ells) == rec.long;
    let profile_matches = scale_profile(space, x, params) == rec.profile;
    DiscretizationAudit {
        n,
        remark_violations,
        chain_pairs: close.len(),
        chain_violations,
        regime,
        min_radius: (0..n).map(r).fold(f64::INFINITY, f64::min),
        conditional,
        factorization,
        profile_matches,
        base_within_bound: rec.net_sizes.base as f64 <= rec.net_sizes.base_bound,
        local_within_bound: rec.net_sizes.local as f64 <= rec.net_sizes.local_bound,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::random_domain_tuple;
    use crate::rng::StreamFactory;

    fn rng(i: u64) -> crate::rng::Stream {
        StreamFactory::new(21).stream("discretize-test", i)
    }

    fn line(n: usize) -> PointTuple {
        PointTuple::new(1, (0..n).map(|i| vec![i as f64]).collect()).unwrap()
    }

    #[test]
    fn default_constants() {
        let p = Params::default();
        assert_eq!((p.eps, p.c0, p.diam_const, p.c_bm, p.c_main), (0.1, 0.01, 8.0, 10.0, 0.001));
        assert!(p.c_main_consistent());
        assert!((p.c_main_bound() - 0.1 / (2.0 * 320f64.ln())).abs() < 1e-15);
        assert_eq!(p.ell_max_for(7), 5); // 2·8·ln 7 ≈ 31.1
        let n = (7.2f64.exp2() / 16.0).exp().ceil() as usize;
        assert_eq!(Params::default().ell_max_for(n), 8);
        assert!(!p.regime_holds(4096, 2));
        let wide = Params { eps: 0.45, ..p };
        assert!(!wide.regime_holds(10_000, 1));
    }

    #[test]
    fn ceil_log2_is_exact() {
        for l in -5..12 {
            let r = radius(l);
            assert_eq!(ceil_log2(r), l);
            assert_eq!(ceil_log2(r * (1.0 + f64::EPSILON)), l + 1);
            assert_eq!(ceil_log2(r * (1.0 - f64::EPSILON / 2.0)), l);
        }
        assert_eq!(level_of(0.0, 0, 3), Some(0));
        assert_eq!(level_of(8.0, 0, 3), Some(3));
        assert_eq!(level_of(8.000001, 0, 3), None);
    }

    #[test]
    fn line_profile() {
        let p = Params { eps: 0.25, ..Params::default() };
        let prof = scale_profile(&NormedSpace::l2(1), &line(16), &p);
        let mut expected = vec![1; 16];
        expected[0] = 2;
        expected[15] = 2;
        assert_eq!(prof.ells, expected);
        assert!(prof.saturated.iter().all(|s| !s));
    }

    #[test]
    fn clamped_profiles() {
        let p = Params { eps: 0.25, ..Params::default() };
        let stack = PointTuple::new(2, vec![vec![0.5, 0.5]; 16]).unwrap();
        let prof = scale_profile(&NormedSpace::l2(2), &stack, &p);
        assert!(prof.ells.iter().all(|&l| l == 0));
        let spread = PointTuple::new(1, (0..16).map(|i| vec![1e4 * i as f64]).collect()).unwrap();
        let prof = scale_profile(&NormedSpace::l2(1), &spread, &p);
        assert!(prof.saturated.iter().all(|&s| s));
        assert!(prof.ells.iter().all(|&l| l == prof.ell_max));
    }

    #[test]
    fn seeds_for_line() {
        let p = Params { eps: 0.25, ..Params::default() };
        let x = line(16);
        let space = NormedSpace::l2(1);
        let prof = scale_profile(&space, &x, &p);
        let fam = select_seeds(&space, &x, &prof, &p, &mut rng(0), 64).unwrap();
        assert_eq!(fam.per_level, 8);
        for lv in &fam.levels {
            assert_eq!(lv.indices.len(), 8);
            let members: Vec<usize> = (0..16).filter(|&i| prof.ells[i] == lv.level).collect();
            assert_eq!(seeds_cover(&space, &x, &members, &lv.indices, lv.level), None);
        }
        assert_eq!(fam.level(0).attempts, 1);
        let far = PointTuple::new(1, (0..16).map(|i| vec![1e4 * i as f64]).collect()).unwrap();
        for strategy in [SeedStrategy::Uniform, SeedStrategy::UniformThenComplete] {
            let p = Params { ell_max: Some(2), seed_strategy: strategy, ..p };
            let prof = scale_profile(&space, &far, &p);
            assert!(matches!(
                select_seeds(&space, &far, &prof, &p, &mut rng(1), 3),
                Err(Error::RetriesExhausted { attempts: 3, .. })
            ));
        }
        // 8 isolated pairs: every index needs a seed from its own pair
        let pairs = PointTuple::new(1, (0..16).map(|i| vec![1e4 * (i / 2) as f64 + (i % 2) as f64]).collect()).unwrap();
        let p = Params { ell_max: Some(2), eps: 0.25, ..Params::default() };
        let p = Params { eps: 0.125, ..p }; // n^{2ε} = 2, ⌊n^{1−ε}⌋ = 11
        let prof = scale_profile(&space, &pairs, &p);
        assert!(prof.ells.iter().all(|&l| l == 0));
        let fam = select_seeds(&space, &pairs, &prof, &p, &mut rng(2), 1).unwrap();
        let lv = fam.level(0);
        assert_eq!(lv.indices.len(), 11);
        assert!(lv.completed <= 8);
        let members: Vec<usize> = (0..16).collect();
        assert_eq!(seeds_cover(&space, &pairs, &members, &lv.indices, 0), None);
    }

    #[test]
    fn base_net_of_interval() {
        let p = Params::default();
        let n = 2f64.exp().round() as usize; // ln 7 ≈ 1.95
        let net = build_multiscale_net(&NormedSpace::linf(1), n, &p, &mut rng(2)).unwrap();
        assert!(net.base().len() <= (2.0 * p.domain_radius(n)).ceil() as usize + 1);
        assert_eq!(net.template().mesh, 0.01);
        let local = net.local_net(0, 0).unwrap();
        assert_eq!((local.radius, local.mesh), (1.0, 0.01));
        assert_eq!(net.materialized(), 1);
        assert!(net.local_net(0, 99).is_err());
    }

    #[test]
    fn discretization_invariants_and_determinism() {
        let space = NormedSpace::l2(2);
        let p = Params { c0: 0.05, ..Params::default() };
        let x = random_domain_tuple(&space, 512, 3, 8.0, &mut rng(3)).unwrap();
        let net = build_multiscale_net(&space, 512, &p, &mut rng(4)).unwrap();
        let rec = discretize_with(&net, &x, &p, &mut rng(5)).unwrap();
        assert!(rec.remark.anchor_excess <= 1.0 && rec.remark.xhat_excess <= 1.0);
        let audit = check_discretization(&space, &x, &rec, &p, false);
        assert!(audit.passed(), "{:?}", audit.violations);
        assert!(!audit.regime && audit.conditional.is_none());
        let again = discretize_with(&net, &x, &p, &mut rng(5)).unwrap();
        assert_eq!(rec.to_json(), again.to_json());
        // an address round-trips to its point
        let a = rec.addresses[7];
        assert_eq!(net.local_point(a.anchor, a.level, a.local), rec.xhat.points[7]);
        let local = net.local_net(a.anchor, a.level).unwrap();
        let (_, p7) = crate::norms::project_to_set(&space, &x.points[7], &local.points).unwrap();
        assert!(space.dist(&p7, &x.points[7]) <= space.dist(&rec.xhat.points[7], &x.points[7]) + 1e-12);
    }

    #[test]
    fn tampering_is_detected() {
        let space = NormedSpace::linf(2);
        let p = Params { c0: 0.05, ..Params::default() };
        let x = random_domain_tuple(&space, 256, 3, 8.0, &mut rng(6)).unwrap();
        let mut rec = discretize(&space, &x, &p, &mut rng(7)).unwrap();
        let r0 = radius(rec.profile.ells[0]);
        rec.xhat.points[0] = x.points[0].iter().map(|v| v + p.c0 * r0 + 1.5).collect();
        rec.long = long_distances(&space, &rec);
        let audit = check_discretization(&space, &x, &rec, &p, false);
        assert!(audit.factorization);
        assert!(audit.remark_violations >= 1);
        assert!(!audit.passed());
    }

    #[test]
    fn rejects_tuples_outside_domain() {
        let space = NormedSpace::l2(1);
        let stack = PointTuple::new(1, vec![vec![0.0]; 8]).unwrap();
        assert!(matches!(
            discretize(&space, &stack, &Params::default(), &mut rng(8)),
            Err(Error::OutsideDomain(_))
        ));
    }

    #[test]
    fn long_distance_boundaries() {
        let space = NormedSpace::l2(1);
        let same = vec![vec![0.0]; 4];
        assert!(long_distances_from(&space, &same, &[0; 4]).is_empty());
        // r_2 = 4: clusters at distance 2 > 4/3 are long
        let two = vec![vec![0.0], vec![0.0], vec![2.0], vec![2.0]];
        let l = long_distances_from(&space, &two, &[2; 4]);
        assert_eq!(l.len(), 8);
        assert!(l.contains(0, 2) && !l.contains(0, 1));
        assert_eq!(l.unordered_len(), 4);
        // exactly r/3 is not long
        let exact = vec![vec![0.0], vec![0.75]];
        let l = long_distances_from(&space, &exact, &[0, 0]);
        assert!(l.contains(0, 1));
        let at = vec![vec![0.0], vec![4.0 / 3.0]];
        let l = long_distances_from(&space, &at, &[2, 2]);
        assert!(!l.contains(0, 1));
        assert_eq!(l.iter().count(), l.len());
    }
}
