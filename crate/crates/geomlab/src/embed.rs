//! Embedding constructions: the `ℓ∞` landmark map and a randomized
//! hinge-loss search for geometric embeddings.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{find_coincident, PointTuple};
use crate::graphs::{bfs_distances, Graph};
use crate::norms::NormedSpace;
use crate::rng::StreamFactory;

/// Violation lists in reports are truncated to this many entries.
pub const VIOLATION_LIST_CAP: usize = 100;

/// Landmark embedding of a connected graph: coordinate `k` of vertex `i` is
/// the hop distance from `i` to landmark `k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LandmarkEmbedding {
    pub landmarks: Vec<usize>,
    /// `coords[i][k] = dist_G(i, landmarks[k])`.
    pub coords: Vec<Vec<u32>>,
}

impl LandmarkEmbedding {
    /// Exact integer `ℓ∞` distance between the images of `i` and `j`.
    pub fn linf(&self, i: usize, j: usize) -> u32 {
        self.coords[i]
            .iter()
            .zip(&self.coords[j])
            .map(|(a, b)| a.abs_diff(*b))
            .max()
            .unwrap_or(0)
    }

    /// Largest `ℓ∞` distance over the edges of `g` (0 for an edgeless graph).
    pub fn max_edge_linf(&self, g: &Graph) -> u32 {
        g.edges().into_iter().map(|(u, v)| self.linf(u, v)).max().unwrap_or(0)
    }

    /// Fraction of unordered pairs at `ℓ∞` distance at least `at_least`.
    pub fn far_pair_fraction(&self, at_least: u32) -> f64 {
        let n = self.coords.len();
        if n < 2 {
            return 0.0;
        }
        let far: usize = (0..n)
            .into_par_iter()
            .map(|i| (i + 1..n).filter(|&j| self.linf(i, j) >= at_least).count())
            .sum();
        far as f64 / (n * (n - 1) / 2) as f64
    }

    pub fn to_tuple(&self) -> PointTuple {
        PointTuple {
            dim: self.landmarks.len(),
            points: self
                .coords
                .iter()
                .map(|c| c.iter().map(|&v| f64::from(v)).collect())
                .collect(),
        }
    }
}

/// Map each vertex to its hop distances from `d` landmarks drawn uniformly
/// and independently (with replacement). Every edge lands at `ℓ∞` distance
/// at most 1.
pub fn landmark_embedding<R: Rng + ?Sized>(g: &Graph, d: usize, rng: &mut R) -> Result<LandmarkEmbedding> {
    if d == 0 {
        return Err(Error::InvalidArgument("need at least one landmark".into()));
    }
    if g.n() == 0 {
        return Err(Error::InvalidArgument("empty graph".into()));
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let landmarks: Vec<usize> = (0..d).map(|_| rng.random_range(0..g.n())).collect();
    Ok(landmark_embedding_from(g, &landmarks))
}

/// Landmark embedding for a fixed landmark list of a connected graph.
pub fn landmark_embedding_from(g: &Graph, landmarks: &[usize]) -> LandmarkEmbedding {
    let columns: Vec<Vec<u32>> = landmarks
        .par_iter()
        .map(|&l| {
            bfs_distances(g, l)
                .into_iter()
                .map(|d| d.expect("landmark embedding needs a connected graph") as u32)
                .collect()
        })
        .collect();
    let coords = (0..g.n())
        .map(|i| columns.iter().map(|c| c[i]).collect())
        .collect();
    LandmarkEmbedding {
        landmarks: landmarks.to_vec(),
        coords,
    }
}

/// A candidate geometric embedding and its authoritative validity verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingAttempt {
    pub tuple: PointTuple,
    pub space_label: String,
    pub success: bool,
    pub edge_violations: usize,
    pub nonedge_violations: usize,
    pub coincident_pairs: usize,
    /// Edges `(i, j, dist)` with `dist > 1`, first entries only.
    pub edge_violation_list: Vec<(usize, usize, f64)>,
    /// Non-edges `(i, j, dist)` with `dist ≤ 1`, first entries only.
    pub nonedge_violation_list: Vec<(usize, usize, f64)>,
    pub objective_trace: Vec<f64>,
    /// Seed of the restart streams, when produced by a search.
    pub seed: Option<u64>,
    /// Index of the reported restart, when produced by a search.
    pub restart: Option<usize>,
}

impl EmbeddingAttempt {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("attempts serialize")
    }
}

type PairList = Vec<(usize, usize, f64)>;

/// Recompute every pair of `x` against `g` from scratch: edges must be at
/// distance `≤ 1`, non-edges at distance `> 1`, points distinct.
pub fn embedding_report(space: &NormedSpace, x: &PointTuple, g: &Graph) -> Result<EmbeddingAttempt> {
    if x.len() != g.n() {
        return Err(Error::SizeMismatch {
            what: "point tuple",
            expected: g.n(),
            got: x.len(),
        });
    }
    if x.dim != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: x.dim,
        });
    }
    x.validate()?;
    let n = x.len();
    let rows: Vec<(PairList, PairList, usize)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (mut bad_e, mut bad_n, mut same) = (Vec::new(), Vec::new(), 0);
            for j in i + 1..n {
                let d = space.dist(&x.points[i], &x.points[j]);
                if d == 0.0 {
                    same += 1;
                }
                match (g.has_edge(i, j), d <= 1.0) {
                    (true, false) => bad_e.push((i, j, d)),
                    (false, true) => bad_n.push((i, j, d)),
                    _ => {}
                }
            }
            (bad_e, bad_n, same)
        })
        .collect();
    let mut edge_list = Vec::new();
    let mut nonedge_list = Vec::new();
    let (mut ne, mut nn, mut nc) = (0, 0, 0);
    for (e, o, c) in rows {
        ne += e.len();
        nn += o.len();
        nc += c;
        edge_list.extend(e.into_iter().take(VIOLATION_LIST_CAP.saturating_sub(edge_list.len())));
        nonedge_list.extend(o.into_iter().take(VIOLATION_LIST_CAP.saturating_sub(nonedge_list.len())));
    }
    Ok(EmbeddingAttempt {
        tuple: x.clone(),
        space_label: space.label(),
        success: ne == 0 && nn == 0 && nc == 0,
        edge_violations: ne,
        nonedge_violations: nn,
        coincident_pairs: nc,
        edge_violation_list: edge_list,
        nonedge_violation_list: nonedge_list,
        objective_trace: Vec::new(),
        seed: None,
        restart: None,
    })
}

/// Parameters of [`stress_embed`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StressSchedule {
    pub restarts: usize,
    /// Non-edges are pushed beyond `1 + nonedge_margin`.
    pub nonedge_margin: f64,
    /// Edges are pulled within `1 − edge_margin`.
    pub edge_margin: f64,
    pub initial_step: f64,
    /// Initial points are uniform in `[−s, s]^d` with
    /// `s = init_spread · n^{1/d}`.
    pub init_spread: f64,
}

impl Default for StressSchedule {
    fn default() -> Self {
        Self {
            restarts: 8,
            nonedge_margin: 0.05,
            edge_margin: 0.05,
            initial_step: 0.05,
            init_spread: 0.5,
        }
    }
}

/// Search for a geometric embedding of `g` into `space` by gradient descent
/// on the hinge objective
/// `Σ_edges max(0, dist − (1 − m_e))² + Σ_non-edges max(0, (1 + m_n) − dist)²`,
/// over independent random restarts run in parallel. The returned attempt is
/// the first successful restart, or the one with the lowest final objective;
/// success is judged by [`embedding_report`].
pub fn stress_embed<R: Rng + ?Sized>(
    g: &Graph,
    space: &NormedSpace,
    iters: usize,
    rng: &mut R,
    schedule: &StressSchedule,
) -> Result<EmbeddingAttempt> {
    if schedule.restarts == 0 {
        return Err(Error::InvalidArgument("need at least one restart".into()));
    }
    let seed: u64 = rng.random();
    let streams = StreamFactory::new(seed);
    let runs: Vec<(PointTuple, Vec<f64>, bool)> = (0..schedule.restarts)
        .into_par_iter()
        .map(|k| {
            let mut rng = streams.stream("stress-restart", k as u64);
            descend(g, space, iters, &mut rng, schedule)
        })
        .collect::<Result<_>>()?;
    let chosen = runs.iter().position(|r| r.2).unwrap_or_else(|| {
        let last = |r: &(PointTuple, Vec<f64>, bool)| r.1.last().copied().unwrap_or(f64::INFINITY);
        (0..runs.len())
            .min_by(|&a, &b| last(&runs[a]).total_cmp(&last(&runs[b])).then(a.cmp(&b)))
            .unwrap()
    });
    let (tuple, trace, _) = runs.into_iter().nth(chosen).unwrap();
    let mut report = embedding_report(space, &tuple, g)?;
    report.objective_trace = trace;
    report.seed = Some(seed);
    report.restart = Some(chosen);
    Ok(report)
}

fn objective(g: &Graph, space: &NormedSpace, pts: &[Vec<f64>], s: &StressSchedule, grad: Option<&mut [Vec<f64>]>) -> f64 {
    let n = pts.len();
    let hi = 1.0 - s.edge_margin;
    let lo = 1.0 + s.nonedge_margin;
    let mut total = 0.0;
    let mut grad = grad;
    if let Some(gr) = grad.as_deref_mut() {
        gr.iter_mut().for_each(|v| v.fill(0.0));
    }
    let mut diff = vec![0.0; space.dim()];
    for i in 0..n {
        for j in i + 1..n {
            for k in 0..diff.len() {
                diff[k] = pts[i][k] - pts[j][k];
            }
            let d = space.norm(&diff);
            let excess = if g.has_edge(i, j) {
                (d - hi).max(0.0)
            } else {
                -(lo - d).max(0.0)
            };
            if excess == 0.0 {
                continue;
            }
            total += excess * excess;
            if let Some(gr) = grad.as_deref_mut() {
                let dir = if d > 0.0 {
                    space.gradient(&diff)
                } else {
                    // coincident points: push apart along the first axis
                    let mut e = vec![0.0; diff.len()];
                    e[0] = if i < j { 1.0 } else { -1.0 };
                    e
                };
                for k in 0..diff.len() {
                    gr[i][k] += 2.0 * excess * dir[k];
                    gr[j][k] -= 2.0 * excess * dir[k];
                }
            }
        }
    }
    total
}

fn descend<R: Rng + ?Sized>(
    g: &Graph,
    space: &NormedSpace,
    iters: usize,
    rng: &mut R,
    s: &StressSchedule,
) -> Result<(PointTuple, Vec<f64>, bool)> {
    let n = g.n();
    let dim = space.dim();
    let spread = s.init_spread * (n as f64).powf(1.0 / dim as f64);
    let mut pts: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-spread..=spread)).collect())
        .collect();
    let mut grad = vec![vec![0.0; dim]; n];
    let mut f = objective(g, space, &pts, s, Some(&mut grad));
    let mut trace = vec![f];
    let mut step = s.initial_step;
    let mut stall = 0;
    for it in 0..iters {
        if f == 0.0 || (it % 16 == 0 && is_witness(g, space, &pts)) {
            break;
        }
        let trial: Vec<Vec<f64>> = pts
            .iter()
            .zip(&grad)
            .map(|(p, gr)| p.iter().zip(gr).map(|(a, b)| a - step * b).collect())
            .collect();
        let mut trial_grad = vec![vec![0.0; dim]; n];
        let ft = objective(g, space, &trial, s, Some(&mut trial_grad));
        if ft < f {
            pts = trial;
            grad = trial_grad;
            f = ft;
            step *= 1.2;
            stall = 0;
        } else {
            step *= 0.5;
            stall += 1;
        }
        if stall >= 30 {
            // escape a non-smooth stall with a small random kick
            for p in pts.iter_mut() {
                for x in p.iter_mut() {
                    *x += rng.random_range(-0.05..0.05);
                }
            }
            f = objective(g, space, &pts, s, Some(&mut grad));
            step = s.initial_step;
            stall = 0;
        }
        trace.push(f);
    }
    let witness = is_witness(g, space, &pts);
    Ok((PointTuple { dim, points: pts }, trace, witness))
}

fn is_witness(g: &Graph, space: &NormedSpace, pts: &[Vec<f64>]) -> bool {
    let n = pts.len();
    find_coincident(pts).is_none()
        && (0..n).all(|i| (i + 1..n).all(|j| g.has_edge(i, j) == (space.dist(&pts[i], &pts[j]) <= 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::gen_regular;

    fn rng(i: u64) -> crate::rng::Stream {
        StreamFactory::new(9).stream("embed-test", i)
    }

    fn hexagon() -> PointTuple {
        let points = (0..6)
            .map(|k| {
                let t = std::f64::consts::PI / 3.0 * k as f64;
                vec![0.99 * t.cos(), 0.99 * t.sin()]
            })
            .collect();
        PointTuple { dim: 2, points }
    }

    #[test]
    fn landmark_examples() {
        let e = landmark_embedding_from(&Graph::path(3), &[0]);
        assert_eq!(e.coords, vec![vec![0], vec![1], vec![2]]);
        assert_eq!((e.linf(0, 1), e.linf(1, 2), e.linf(0, 2)), (1, 1, 2));
        let k4 = Graph::complete(4);
        let e = landmark_embedding(&k4, 5, &mut rng(0)).unwrap();
        assert!((0..4).all(|i| (0..4).all(|j| e.linf(i, j) <= 1)));
        let two = Graph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        assert!(matches!(landmark_embedding(&two, 2, &mut rng(0)), Err(Error::Disconnected)));
    }

    #[test]
    fn landmark_distances_are_contracted() {
        let g = gen_regular(300, 3, &mut rng(1), 1000).unwrap();
        let e = landmark_embedding(&g, 6, &mut rng(2)).unwrap();
        assert!(e.max_edge_linf(&g) <= 1);
        for i in (0..300).step_by(17) {
            let dist = bfs_distances(&g, i);
            for (j, dj) in dist.iter().enumerate() {
                assert!(e.linf(i, j) as usize <= dj.unwrap());
            }
        }
    }

    #[test]
    fn report_examples() {
        let l2 = NormedSpace::l2(2);
        let c6 = Graph::cycle(6);
        let r = embedding_report(&l2, &hexagon(), &c6).unwrap();
        assert!(r.success);
        let mut bent = hexagon();
        bent.points[0] = vec![1.49, 0.0];
        let r = embedding_report(&l2, &bent, &c6).unwrap();
        assert!(!r.success && r.edge_violations >= 1);
        let spread = PointTuple {
            dim: 2,
            points: vec![vec![0.0, 0.0], vec![1.1, 0.0], vec![0.0, 1.1]],
        };
        assert!(embedding_report(&l2, &spread, &Graph::empty(3)).unwrap().success);
        let close = PointTuple {
            dim: 2,
            points: vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.1]],
        };
        assert_eq!(embedding_report(&l2, &close, &Graph::empty(3)).unwrap().nonedge_violations, 1);
        assert!(embedding_report(&l2, &spread, &c6).is_err());
    }

    #[test]
    fn stress_finds_hexagon_and_rejects_c4_on_a_line() {
        let l2 = NormedSpace::l2(2);
        let c6 = Graph::cycle(6);
        let a = stress_embed(&c6, &l2, 2000, &mut rng(3), &StressSchedule::default()).unwrap();
        assert!(a.success);
        assert!(embedding_report(&l2, &a.tuple, &c6).unwrap().success);
        let c4 = Graph::cycle(4);
        let b = stress_embed(&c4, &NormedSpace::l2(1), 500, &mut rng(4), &StressSchedule::default()).unwrap();
        assert!(!b.success);
        let z = stress_embed(&Graph::petersen(), &l2, 0, &mut rng(5), &StressSchedule::default()).unwrap();
        assert_eq!(z.objective_trace.len(), 1);
        assert!(!z.success);
    }
}
