//! Finite-dimensional normed spaces, balls, nearest-point projection and
//! greedy covering nets.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cells::CellGrid;
use crate::error::{Error, Result};
use crate::rng::StreamFactory;

/// Absolute tolerance used for real comparisons that are not distance
/// thresholds.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

type NormFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Lp(f64),
    Linf,
    Custom { name: String, eval: NormFn },
}

/// `R^d` equipped with a norm.
#[derive(Clone)]
pub struct NormedSpace {
    dim: usize,
    kind: Kind,
    coord_bound: f64,
}

impl fmt::Debug for NormedSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NormedSpace")
            .field("label", &self.label())
            .field("dim", &self.dim)
            .finish()
    }
}

impl NormedSpace {
    /// `ℓ_p^d` for `1 ≤ p < ∞`; `p = ∞` gives `ℓ_∞^d`.
    pub fn lp(dim: usize, p: f64) -> Result<Self> {
        check_dim(dim)?;
        if p.is_infinite() && p > 0.0 {
            return Ok(Self::linf(dim));
        }
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::InvalidArgument(format!("lp exponent must be in [1, inf), got {p}")));
        }
        Ok(Self {
            dim,
            kind: Kind::Lp(p),
            coord_bound: 1.0,
        })
    }

    pub fn l1(dim: usize) -> Self {
        Self::lp(dim, 1.0).expect("dimension must be positive")
    }

    pub fn l2(dim: usize) -> Self {
        Self::lp(dim, 2.0).expect("dimension must be positive")
    }

    pub fn linf(dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        Self {
            dim,
            kind: Kind::Linf,
            coord_bound: 1.0,
        }
    }

    /// Parse a label of the form `lp:<p>` or `linf`.
    ///
    /// `custom:<name>` labels cannot be parsed: custom norms need an
    /// evaluator and are registered through [`NormedSpace::custom`].
    pub fn from_label(label: &str, dim: usize) -> Result<Self> {
        let label = label.trim();
        if label == "linf" {
            check_dim(dim)?;
            return Ok(Self::linf(dim));
        }
        if let Some(p) = label.strip_prefix("lp:") {
            let p: f64 = p
                .parse()
                .map_err(|_| Error::Parse(format!("bad lp exponent in label {label:?}")))?;
            return Self::lp(dim, p);
        }
        if label.starts_with("custom:") {
            return Err(Error::InvalidArgument(format!(
                "{label:?}: custom norms must be registered programmatically"
            )));
        }
        Err(Error::Parse(format!("unknown norm label {label:?}")))
    }

    /// Register a user-supplied norm after checking the norm axioms on
    /// random samples. The coordinate bound (a constant `b` with
    /// `|v_k| ≤ b·‖v‖`) is estimated from samples with a safety factor; use
    /// [`NormedSpace::custom_with_bound`] when it is known exactly.
    pub fn custom<F>(dim: usize, name: &str, eval: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        let mut space = Self::custom_unchecked(dim, name, Arc::new(eval))?;
        space.validate(DEFAULT_TOLERANCE)?;
        let mut rng = StreamFactory::new(0x6e6f_726d).stream(name, 1);
        let mut bound: f64 = 0.0;
        for _ in 0..4096 {
            let v = gaussian_vector(dim, &mut rng);
            let nv = space.norm(&v);
            if nv > 0.0 {
                let m = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
                bound = bound.max(m / nv);
            }
        }
        for k in 0..dim {
            let mut e = vec![0.0; dim];
            e[k] = 1.0;
            bound = bound.max(1.0 / space.norm(&e));
        }
        space.coord_bound = 1.5 * bound;
        Ok(space)
    }

    /// Like [`NormedSpace::custom`] with a caller-supplied coordinate bound.
    pub fn custom_with_bound<F>(dim: usize, name: &str, eval: F, coord_bound: f64) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if !(coord_bound > 0.0 && coord_bound.is_finite()) {
            return Err(Error::InvalidArgument("coordinate bound must be positive".into()));
        }
        let mut space = Self::custom_unchecked(dim, name, Arc::new(eval))?;
        space.coord_bound = coord_bound;
        space.validate(DEFAULT_TOLERANCE)?;
        Ok(space)
    }

    fn custom_unchecked(dim: usize, name: &str, eval: NormFn) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            kind: Kind::Custom {
                name: name.to_string(),
                eval,
            },
            coord_bound: 1.0,
        })
    }

    /// Check positivity, absolute homogeneity and the triangle inequality on
    /// a fixed family of random samples.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let label = self.label();
        let fail = |reason: String| Err(Error::InvalidNorm {
            label: label.clone(),
            reason,
        });
        let zero = vec![0.0; self.dim];
        let n0 = self.norm(&zero);
        if !(n0.abs() <= tol) {
            return fail(format!("norm(0) = {n0}"));
        }
        for k in 0..self.dim {
            let mut e = vec![0.0; self.dim];
            e[k] = 1.0;
            let ne = self.norm(&e);
            if !(ne > 0.0 && ne.is_finite()) {
                return fail(format!("norm of basis vector {k} is {ne}"));
            }
        }
        let mut rng = StreamFactory::new(0x7661_6c69).stream(&label, 0);
        for _ in 0..512 {
            let scale = 10f64.powf(rng.random_range(-3.0..3.0));
            let u: Vec<f64> = gaussian_vector(self.dim, &mut rng).iter().map(|x| x * scale).collect();
            let v: Vec<f64> = gaussian_vector(self.dim, &mut rng).iter().map(|x| x * scale).collect();
            let t: f64 = rng.random_range(-5.0..5.0);
            let nu = self.norm(&u);
            let nv = self.norm(&v);
            if !nu.is_finite() || nu <= 0.0 {
                return fail(format!("norm of a nonzero vector is {nu}"));
            }
            let tu: Vec<f64> = u.iter().map(|x| t * x).collect();
            let ntu = self.norm(&tu);
            if (ntu - t.abs() * nu).abs() > tol * (1.0 + t.abs() * nu) {
                return fail(format!("homogeneity: norm({t}·u) = {ntu} vs {}", t.abs() * nu));
            }
            let s: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
            let ns = self.norm(&s);
            if ns > nu + nv + tol * (1.0 + nu + nv) {
                return fail(format!("triangle inequality: {ns} > {nu} + {nv}"));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `lp:<p>`, `linf` or `custom:<name>`.
    pub fn label(&self) -> String {
        match &self.kind {
            Kind::Lp(p) => format!("lp:{p:?}"),
            Kind::Linf => "linf".to_string(),
            Kind::Custom { name, .. } => format!("custom:{name}"),
        }
    }

    /// A constant `b` with `|v_k| ≤ b·‖v‖` for every coordinate `k`.
    pub fn coord_bound(&self) -> f64 {
        self.coord_bound
    }

    /// Norm of `v` (length is not checked).
    pub fn norm(&self, v: &[f64]) -> f64 {
        match &self.kind {
            Kind::Lp(p) => lp_norm(v.iter().copied(), *p),
            Kind::Linf => v.iter().fold(0.0f64, |a, x| a.max(x.abs())),
            Kind::Custom { eval, .. } => eval(v),
        }
    }

    /// `‖u − v‖` without length checks.
    pub fn dist(&self, u: &[f64], v: &[f64]) -> f64 {
        debug_assert_eq!(u.len(), v.len());
        let diffs = u.iter().zip(v).map(|(a, b)| a - b);
        match &self.kind {
            Kind::Lp(p) => lp_norm(diffs, *p),
            Kind::Linf => diffs.fold(0.0f64, |a, x| a.max(x.abs())),
            Kind::Custom { eval, .. } => eval(&diffs.collect::<Vec<_>>()),
        }
    }

    /// `‖u − v‖`, checking that both vectors live in this space.
    pub fn distance(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        self.check_vec(u)?;
        self.check_vec(v)?;
        Ok(self.dist(u, v))
    }

    pub fn check_vec(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        Ok(())
    }

    /// A subgradient of the norm at `v` (zero at the origin).
    pub fn gradient(&self, v: &[f64]) -> Vec<f64> {
        let nv = self.norm(v);
        if nv == 0.0 {
            return vec![0.0; v.len()];
        }
        match &self.kind {
            Kind::Lp(p) if *p == 1.0 => v.iter().map(|x| sign(*x)).collect(),
            Kind::Lp(p) if *p == 2.0 => v.iter().map(|x| x / nv).collect(),
            Kind::Lp(p) => v
                .iter()
                .map(|x| sign(*x) * (x.abs() / nv).powf(p - 1.0))
                .collect(),
            Kind::Linf => {
                let mut best = 0;
                for (k, x) in v.iter().enumerate() {
                    if x.abs() > v[best].abs() {
                        best = k;
                    }
                }
                let mut g = vec![0.0; v.len()];
                g[best] = sign(v[best]);
                g
            }
            Kind::Custom { .. } => {
                let h = 1e-6 * nv.max(1e-12);
                let mut w = v.to_vec();
                (0..v.len())
                    .map(|k| {
                        w[k] = v[k] + h;
                        let up = self.norm(&w);
                        w[k] = v[k] - h;
                        let down = self.norm(&w);
                        w[k] = v[k];
                        (up - down) / (2.0 * h)
                    })
                    .collect()
            }
        }
    }

    /// A uniform point of the closed ball `B(center, radius)` by rejection
    /// from the bounding cube.
    pub fn sample_ball<R: Rng + ?Sized>(&self, center: &[f64], radius: f64, rng: &mut R) -> Result<Vec<f64>> {
        self.check_vec(center)?;
        let half = self.coord_bound * radius;
        for _ in 0..10_000_000u64 {
            let p: Vec<f64> = center
                .iter()
                .map(|c| c + rng.random_range(-half..=half))
                .collect();
            if self.dist(&p, center) <= radius {
                return Ok(p);
            }
        }
        Err(Error::BudgetExceeded(format!(
            "rejection sampling in {} ball did not accept a point",
            self.label()
        )))
    }

    /// A random direction normalised to unit norm in this space.
    pub fn unit_direction<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        loop {
            let g = gaussian_vector(self.dim, rng);
            let n = self.norm(&g);
            if n > 0.0 {
                return g.iter().map(|x| x / n).collect();
            }
        }
    }

    /// Largest norm of a cube vertex `(±½, …, ±½)`: every point of a unit
    /// cube cell is within this distance of the cell centre.
    fn half_diagonal(&self) -> f64 {
        if self.dim <= 16 {
            let mut best: f64 = 0.0;
            let mut v = vec![0.5; self.dim];
            for mask in 0u32..(1u32 << (self.dim - 1)) {
                for (k, x) in v.iter_mut().enumerate().skip(1) {
                    *x = if mask >> (k - 1) & 1 == 1 { -0.5 } else { 0.5 };
                }
                best = best.max(self.norm(&v));
            }
            best
        } else {
            (0..self.dim)
                .map(|k| {
                    let mut e = vec![0.0; self.dim];
                    e[k] = 0.5;
                    self.norm(&e)
                })
                .sum()
        }
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    Ok(())
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn lp_norm<I: Iterator<Item = f64>>(it: I, p: f64) -> f64 {
    if p == 1.0 {
        it.map(f64::abs).sum()
    } else if p == 2.0 {
        it.map(|x| x * x).sum::<f64>().sqrt()
    } else {
        let v: Vec<f64> = it.map(f64::abs).collect();
        let m = v.iter().fold(0.0f64, |a, &x| a.max(x));
        if m == 0.0 {
            return 0.0;
        }
        m * v.iter().map(|x| (x / m).powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

fn gaussian_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Distance between two vectors of `space`.
pub fn distance(space: &NormedSpace, u: &[f64], v: &[f64]) -> Result<f64> {
    space.distance(u, v)
}

/// Nearest candidate to `p`; ties go to the lowest index.
pub fn project_to_set(space: &NormedSpace, p: &[f64], candidates: &[Vec<f64>]) -> Result<(usize, Vec<f64>)> {
    space.check_vec(p)?;
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("projection onto an empty set".into()));
    }
    let mut best = (f64::INFINITY, 0usize);
    for (i, c) in candidates.iter().enumerate() {
        space.check_vec(c)?;
        let d = space.dist(p, c);
        if d < best.0 {
            best = (d, i);
        }
    }
    Ok((best.1, candidates[best.1].clone()))
}

/// Lower bound on the Banach–Mazur distance obtained from the identity map:
/// `max(‖v‖_B/‖v‖_A) · max(‖v‖_A/‖v‖_B)` over sampled directions.
pub fn identity_distortion<R: Rng + ?Sized>(
    a: &NormedSpace,
    b: &NormedSpace,
    sample_dirs: usize,
    rng: &mut R,
) -> Result<f64> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            got: b.dim,
        });
    }
    if sample_dirs == 0 {
        return Err(Error::InvalidArgument("need at least one sample direction".into()));
    }
    let mut up: f64 = 0.0;
    let mut down: f64 = 0.0;
    let mut consider = |v: &[f64]| {
        let na = a.norm(v);
        let nb = b.norm(v);
        if na > 0.0 && nb > 0.0 {
            up = up.max(nb / na);
            down = down.max(na / nb);
        }
    };
    // coordinate axes and the diagonal are cheap and often extremal
    let mut v = vec![0.0; a.dim];
    for k in 0..a.dim {
        v.fill(0.0);
        v[k] = 1.0;
        consider(&v);
    }
    consider(&vec![1.0; a.dim]);
    for _ in 0..sample_dirs {
        consider(&gaussian_vector(a.dim, rng));
    }
    Ok((up * down).max(1.0))
}

/// How a [`Net`] was constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetStrategy {
    /// Mesh at least the radius: the centre alone covers the ball.
    Trivial,
    /// Farthest-point insertion over the whole candidate cloud.
    FarthestPoint,
    /// Single-pass greedy packing over the candidate cloud (used when the
    /// farthest-point cost would exceed the budget).
    Sequential,
}

/// Construction metadata of a net.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetBuild {
    pub strategy: NetStrategy,
    pub cloud_size: usize,
    /// Every point of the ball lies within this distance of the cloud.
    pub cloud_mesh: f64,
    /// Points were inserted while some cloud point was farther than this;
    /// net points are pairwise farther apart than this value.
    pub insertion_threshold: f64,
}

/// Work limits for net construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetBudget {
    pub farthest_point_work: f64,
    pub farthest_point_cloud: f64,
    pub sequential_cloud: f64,
    /// Sequential packing stops refining the cloud at this fraction of the net mesh.
    pub target_cloud_mesh_fraction: f64,
    /// Largest admissible cloud mesh, as a fraction of the net mesh.
    pub max_cloud_mesh_fraction: f64,
}

impl Default for NetBudget {
    fn default() -> Self {
        Self {
            farthest_point_work: 2e8,
            farthest_point_cloud: 2e6,
            sequential_cloud: 2e7,
            target_cloud_mesh_fraction: 0.05,
            max_cloud_mesh_fraction: 0.1,
        }
    }
}

/// A finite `r`-net of the closed ball `B(center, R)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Net {
    pub center: Vec<f64>,
    #[serde(rename = "R")]
    pub radius: f64,
    #[serde(rename = "r")]
    pub mesh: f64,
    pub points: Vec<Vec<f64>>,
    #[serde(skip)]
    pub build: Option<NetBuild>,
}

/// Result of a Monte Carlo covering check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoveringCheck {
    pub samples: usize,
    pub uncovered: usize,
    pub max_gap: f64,
}

impl Net {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Image of the net under `v ↦ center + scale·(v − self.center)`.
    pub fn affine_image(&self, center: &[f64], scale: f64) -> Net {
        let points = self
            .points
            .iter()
            .map(|p| {
                p.iter()
                    .zip(&self.center)
                    .zip(center)
                    .map(|((x, c0), c1)| c1 + scale * (x - c0))
                    .collect()
            })
            .collect();
        Net {
            center: center.to_vec(),
            radius: self.radius * scale,
            mesh: self.mesh * scale,
            points,
            build: self.build.map(|b| NetBuild {
                cloud_mesh: b.cloud_mesh * scale,
                insertion_threshold: b.insertion_threshold * scale,
                ..b
            }),
        }
    }

    /// Smallest pairwise distance between net points (∞ for fewer than two).
    pub fn min_separation(&self, space: &NormedSpace) -> f64 {
        (0..self.points.len())
            .into_par_iter()
            .map(|i| {
                (i + 1..self.points.len())
                    .map(|j| space.dist(&self.points[i], &self.points[j]))
                    .fold(f64::INFINITY, f64::min)
            })
            .reduce(|| f64::INFINITY, f64::min)
    }

    /// Check on `samples` uniform points of the ball that each lies within
    /// the mesh (plus `tol`) of some net point.
    pub fn verify_covering<R: Rng + ?Sized>(
        &self,
        space: &NormedSpace,
        samples: usize,
        tol: f64,
        rng: &mut R,
    ) -> Result<CoveringCheck> {
        let index = NetIndex::new(space, &self.points)?;
        let pts: Vec<Vec<f64>> = (0..samples)
            .map(|_| space.sample_ball(&self.center, self.radius, rng))
            .collect::<Result<_>>()?;
        let gaps: Vec<f64> = pts.par_iter().map(|p| index.nearest(space, p).1).collect();
        Ok(CoveringCheck {
            samples,
            uncovered: gaps.iter().filter(|&&g| g > self.mesh + tol).count(),
            max_gap: gaps.iter().copied().fold(0.0, f64::max),
        })
    }
}

/// Greedy `r`-net of `B(center, R)` with default budgets.
///
/// The candidate cloud is a randomly offset cubic lattice whose points
/// outside the ball are pulled radially onto its boundary, so every point of
/// the ball is within a computable `cloud_mesh` ρ of the cloud. Net points
/// are inserted greedily from the centre outward while some cloud point is
/// farther than `r − ρ`; the result covers the whole ball at mesh `r` and is
/// `(r − ρ)`-separated.
pub fn greedy_net<R: Rng + ?Sized>(
    space: &NormedSpace,
    center: &[f64],
    radius: f64,
    mesh: f64,
    rng: &mut R,
) -> Result<Net> {
    greedy_net_with_budget(space, center, radius, mesh, &NetBudget::default(), rng)
}

pub fn greedy_net_with_budget<R: Rng + ?Sized>(
    space: &NormedSpace,
    center: &[f64],
    radius: f64,
    mesh: f64,
    budget: &NetBudget,
    rng: &mut R,
) -> Result<Net> {
    space.check_vec(center)?;
    if !(radius > 0.0 && radius.is_finite()) || !(mesh > 0.0 && mesh.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "net radius and mesh must be positive (R = {radius}, r = {mesh})"
        )));
    }
    let trivial = |build| Net {
        center: center.to_vec(),
        radius,
        mesh,
        points: vec![center.to_vec()],
        build: Some(build),
    };
    if mesh >= radius {
        return Ok(trivial(NetBuild {
            strategy: NetStrategy::Trivial,
            cloud_size: 0,
            cloud_mesh: 0.0,
            insertion_threshold: mesh,
        }));
    }

    let d = space.dim() as f64;
    let b = space.coord_bound();
    let hd1 = space.half_diagonal();
    let span = 2.0 * b * radius;
    let k_est = (1.0 + 2.0 * radius / mesh).powf(d);
    let step_for = |cloud: f64| {
        let per_axis = cloud.powf(1.0 / d).floor();
        if per_axis <= 4.0 {
            f64::INFINITY
        } else {
            span / (per_axis - 3.0)
        }
    };
    let finest = 1e-6 * mesh / (2.0 * hd1);
    let max_mesh = budget.max_cloud_mesh_fraction * mesh;

    let fp_cloud = budget.farthest_point_cloud.min(budget.farthest_point_work / k_est);
    let fp_step = step_for(fp_cloud).max(finest);
    let (strategy, step) = if 2.0 * hd1 * fp_step <= max_mesh {
        (NetStrategy::FarthestPoint, fp_step)
    } else {
        let target = budget.target_cloud_mesh_fraction * mesh / (2.0 * hd1);
        let s = step_for(budget.sequential_cloud).max(finest).max(target.min(max_mesh / (2.0 * hd1)));
        if 2.0 * hd1 * s > max_mesh {
            return Err(Error::BudgetExceeded(format!(
                "net of B(R = {radius}) at mesh {mesh} in {} needs a finer cloud than the budget allows",
                space.label()
            )));
        }
        (NetStrategy::Sequential, s)
    };
    let cloud_mesh = 2.0 * hd1 * step;
    let threshold = mesh - cloud_mesh;
    let lattice = Lattice::new(space, center, radius, step, hd1 * step, rng);

    let points = match strategy {
        NetStrategy::FarthestPoint => farthest_point(space, center, &lattice, threshold),
        _ => sequential_packing(space, center, radius, &lattice, threshold)?,
    };
    Ok(Net {
        center: center.to_vec(),
        radius,
        mesh,
        points,
        build: Some(NetBuild {
            strategy,
            cloud_size: lattice.len(),
            cloud_mesh,
            insertion_threshold: threshold,
        }),
    })
}

/// Offset cubic lattice covering the bounding cube of a ball.
struct Lattice<'a> {
    space: &'a NormedSpace,
    center: Vec<f64>,
    radius: f64,
    reach: f64,
    lo: Vec<f64>,
    step: f64,
    per_axis: usize,
}

impl<'a> Lattice<'a> {
    fn new<R: Rng + ?Sized>(
        space: &'a NormedSpace,
        center: &[f64],
        radius: f64,
        step: f64,
        half_diag: f64,
        rng: &mut R,
    ) -> Self {
        let half = space.coord_bound() * radius;
        let lo = center
            .iter()
            .map(|c| c - half - step + rng.random_range(0.0..step))
            .collect();
        let per_axis = ((2.0 * half + 2.0 * step) / step).ceil() as usize + 1;
        Self {
            space,
            center: center.to_vec(),
            radius,
            reach: radius + half_diag,
            lo,
            step,
            per_axis,
        }
    }

    fn len(&self) -> usize {
        self.per_axis.saturating_pow(self.center.len() as u32)
    }

    /// Visit candidate points: lattice points inside the ball, and lattice
    /// points just outside it pulled radially onto the sphere.
    fn for_each<F: FnMut(&[f64])>(&self, mut f: F) {
        let dim = self.center.len();
        let mut idx = vec![0usize; dim];
        let mut g = vec![0.0; dim];
        let mut p = vec![0.0; dim];
        loop {
            for k in 0..dim {
                g[k] = self.lo[k] + self.step * idx[k] as f64;
            }
            let t = self.space.dist(&g, &self.center);
            if t <= self.radius {
                f(&g);
            } else if t <= self.reach {
                let s = self.radius / t;
                for k in 0..dim {
                    p[k] = self.center[k] + (g[k] - self.center[k]) * s;
                }
                f(&p);
            }
            let mut k = dim;
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < self.per_axis {
                    break;
                }
                idx[k] = 0;
            }
        }
    }
}

fn farthest_point(space: &NormedSpace, center: &[f64], lattice: &Lattice<'_>, threshold: f64) -> Vec<Vec<f64>> {
    let dim = center.len();
    let mut cloud: Vec<f64> = Vec::new();
    lattice.for_each(|p| cloud.extend_from_slice(p));
    let mut nearest: Vec<f64> = cloud
        .par_chunks(dim)
        .map(|p| space.dist(p, center))
        .collect();
    let mut points = vec![center.to_vec()];
    loop {
        let (far, idx) = nearest
            .par_iter()
            .enumerate()
            .map(|(i, &d)| (d, i))
            .reduce(
                || (f64::NEG_INFINITY, usize::MAX),
                |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
            );
        if idx == usize::MAX || far <= threshold {
            break;
        }
        let new = cloud[idx * dim..(idx + 1) * dim].to_vec();
        nearest
            .par_iter_mut()
            .zip(cloud.par_chunks(dim))
            .for_each(|(d, p)| *d = d.min(space.dist(p, &new)));
        points.push(new);
    }
    points
}

fn sequential_packing(
    space: &NormedSpace,
    center: &[f64],
    radius: f64,
    lattice: &Lattice<'_>,
    threshold: f64,
) -> Result<Vec<Vec<f64>>> {
    let b = space.coord_bound();
    let lo: Vec<f64> = center.iter().map(|c| c - b * radius).collect();
    let hi: Vec<f64> = center.iter().map(|c| c + b * radius).collect();
    let mut grid = CellGrid::new(&lo, &hi, b * threshold)?;
    let mut points: Vec<Vec<f64>> = vec![center.to_vec()];
    grid.insert(0, center);
    lattice.for_each(|p| {
        let cell = grid.cell_of(p);
        let mut covered = false;
        grid.visit_box(&cell, 1, 0, |id| {
            if !covered && space.dist(p, &points[id as usize]) <= threshold {
                covered = true;
            }
        });
        if !covered {
            grid.insert(points.len() as u32, p);
            points.push(p.to_vec());
        }
    });
    Ok(points)
}

/// Nearest-point index over a fixed point set under an arbitrary norm.
/// Ties are resolved towards the lowest index, matching [`project_to_set`].
#[derive(Debug, Clone)]
pub struct NetIndex {
    dim: usize,
    coords: Vec<f64>,
    grid: Option<CellGrid>,
    bound: f64,
}

const BRUTE_FORCE_BELOW: usize = 48;

impl NetIndex {
    pub fn new(space: &NormedSpace, points: &[Vec<f64>]) -> Result<Self> {
        let dim = space.dim();
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            space.check_vec(p)?;
            coords.extend_from_slice(p);
        }
        let grid = if points.len() < BRUTE_FORCE_BELOW {
            None
        } else {
            let mut lo = vec![f64::INFINITY; dim];
            let mut hi = vec![f64::NEG_INFINITY; dim];
            for p in points {
                for k in 0..dim {
                    lo[k] = lo[k].min(p[k]);
                    hi[k] = hi[k].max(p[k]);
                }
            }
            let volume: f64 = lo.iter().zip(&hi).map(|(l, h)| (h - l).max(1e-12)).product();
            let cell = (2.0 * volume / points.len() as f64).powf(1.0 / dim as f64);
            let max_extent = lo.iter().zip(&hi).map(|(l, h)| h - l).fold(0.0, f64::max);
            let cell = if cell.is_finite() && cell > 0.0 {
                cell.max(max_extent / 2000.0)
            } else {
                1.0
            };
            let mut grid = CellGrid::new(&lo, &hi, cell.max(1e-9))?;
            for (i, p) in points.iter().enumerate() {
                grid.insert(i as u32, p);
            }
            Some(grid)
        };
        Ok(Self {
            dim,
            coords,
            grid,
            bound: space.coord_bound(),
        })
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Index of and distance to the nearest point. Panics on an empty index.
    pub fn nearest(&self, space: &NormedSpace, q: &[f64]) -> (usize, f64) {
        assert!(!self.is_empty(), "nearest point in an empty set");
        let mut best = (f64::INFINITY, usize::MAX);
        let consider = |best: &mut (f64, usize), i: usize| {
            let d = space.dist(q, self.point(i));
            if d < best.0 || (d == best.0 && i < best.1) {
                *best = (d, i);
            }
        };
        match &self.grid {
            None => (0..self.len()).for_each(|i| consider(&mut best, i)),
            Some(grid) => {
                let c = grid.cell_of(q);
                let (first, last) = grid.ring_span(&c);
                let mut k = first;
                loop {
                    grid.visit_box(&c, k, k, |id| consider(&mut best, id as usize));
                    // anything in a farther ring differs by > k cells in some coordinate
                    let bound = k as f64 * grid.cell_size() / self.bound;
                    if best.0 < bound || k >= last {
                        break;
                    }
                    k += 1;
                }
            }
        }
        (best.1, best.0)
    }
}
