//! Geometric graphs of point tuples, sparsity and domain predicates, and
//! labeled isomorphism checks.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cells::SparseGrid;
use crate::error::{Error, Result};
use crate::graphs::Graph;
use crate::norms::NormedSpace;

/// Width of the window reported by [`near_threshold_pairs`] by default.
pub const NEAR_THRESHOLD_WINDOW: f64 = 1e-6;

/// Dimensions above which neighbourhood queries fall back to all pairs.
const GRID_MAX_DIM: usize = 8;

/// An ordered `n`-tuple of points of `R^dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointTuple {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
}

impl PointTuple {
    pub fn new(dim: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        let t = Self { dim, points };
        t.validate()?;
        Ok(t)
    }

    /// Check that every point has length `dim` and finite coordinates.
    pub fn validate(&self) -> Result<()> {
        for p in &self.points {
            if p.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got: p.len(),
                });
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument("non-finite coordinate".into()));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let t: Self = serde_json::from_str(text)?;
        t.validate()?;
        Ok(t)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("point tuples serialize")
    }

    /// The translate with `x_0 = 0`.
    pub fn translate_normalized(&self) -> Self {
        let Some(first) = self.points.first() else {
            return self.clone();
        };
        let points = self
            .points
            .iter()
            .map(|p| p.iter().zip(first).map(|(a, b)| a - b).collect())
            .collect();
        Self {
            dim: self.dim,
            points,
        }
    }

    /// Reorder as `y_k = x_{perm[k]}`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            dim: self.dim,
            points: perm.iter().map(|&i| self.points[i].clone()).collect(),
        }
    }

    fn check_space(&self, space: &NormedSpace) -> Result<()> {
        if space.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                got: self.dim,
            });
        }
        self.validate()
    }
}

/// All pairs `i < j` with `‖x_i − x_j‖ ≤ radius`, sorted, with distances.
pub fn pairs_within(space: &NormedSpace, points: &[Vec<f64>], radius: f64) -> Vec<(usize, usize, f64)> {
    let n = points.len();
    let mut pairs: Vec<(usize, usize, f64)> = if space.dim() <= GRID_MAX_DIM && radius > 0.0 {
        let mut grid = SparseGrid::new(space.coord_bound() * radius);
        for (i, p) in points.iter().enumerate() {
            grid.insert(i as u32, p);
        }
        (0..n)
            .into_par_iter()
            .flat_map_iter(|i| {
                let mut row = Vec::new();
                grid.visit_near(&points[i], |j| {
                    let j = j as usize;
                    if j > i {
                        let d = space.dist(&points[i], &points[j]);
                        if d <= radius {
                            row.push((i, j, d));
                        }
                    }
                });
                row
            })
            .collect()
    } else {
        (0..n)
            .into_par_iter()
            .flat_map_iter(|i| {
                (i + 1..n).filter_map(move |j| {
                    let d = space.dist(&points[i], &points[j]);
                    (d <= radius).then_some((i, j, d))
                })
            })
            .collect()
    };
    pairs.sort_by_key(|a| (a.0, a.1));
    pairs
}

/// First pair of coincident points, if any.
pub fn find_coincident(points: &[Vec<f64>]) -> Option<(usize, usize)> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[a]
            .iter()
            .zip(&points[b])
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
        .windows(2)
        .filter(|w| points[w[0]] == points[w[1]])
        .map(|w| (w[0].min(w[1]), w[0].max(w[1])))
        .min()
}

/// The geometric graph: `{i, j}` is an edge iff `‖x_i − x_j‖ ≤ threshold`.
pub fn geom(space: &NormedSpace, x: &PointTuple, threshold: f64) -> Result<Graph> {
    x.check_space(space)?;
    if let Some((i, j)) = find_coincident(&x.points) {
        return Err(Error::CoincidentPoints(i, j));
    }
    let edges: Vec<(usize, usize)> = pairs_within(space, &x.points, threshold)
        .into_iter()
        .map(|(i, j, _)| (i, j))
        .collect();
    Graph::from_edges(x.len(), &edges)
}

/// Outcome of a sparsity check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsityCheck {
    pub sparse: bool,
    /// A point with more than `Δ` others within the radius, and those others.
    pub witness: Option<(usize, Vec<usize>)>,
}

/// `(radius, Δ)`-sparsity: every point has at most `Δ` others within
/// `radius`.
pub fn is_sparse(space: &NormedSpace, x: &PointTuple, radius: f64, delta: usize) -> Result<SparsityCheck> {
    x.check_space(space)?;
    let mut crowd: Vec<Vec<usize>> = vec![Vec::new(); x.len()];
    for (i, j, _) in pairs_within(space, &x.points, radius) {
        crowd[i].push(j);
        crowd[j].push(i);
    }
    let witness = crowd
        .into_iter()
        .enumerate()
        .find(|(_, c)| c.len() > delta)
        .map(|(i, mut c)| {
            c.sort_unstable();
            (i, c)
        });
    Ok(SparsityCheck {
        sparse: witness.is_none(),
        witness,
    })
}

/// Why a tuple is or is not in the domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum DomainReason {
    Ok,
    Diameter { index: usize, norm: f64, limit: f64 },
    Sparsity { index: usize, crowd: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainCheck {
    pub inside: bool,
    #[serde(flatten)]
    pub reason: DomainReason,
}

/// Radius `D·ln n` of the ball containing domain tuples.
pub fn domain_radius(n: usize, diam_const: f64) -> f64 {
    diam_const * (n as f64).ln()
}

/// Membership in the domain: `‖x_i‖ ≤ D·ln n` for all `i` and
/// `(1/2, Δ)`-sparsity.
pub fn in_domain(space: &NormedSpace, x: &PointTuple, delta: usize, diam_const: f64) -> Result<DomainCheck> {
    x.check_space(space)?;
    let limit = domain_radius(x.len(), diam_const);
    if let Some((index, norm)) = x
        .points
        .iter()
        .map(|p| space.norm(p))
        .enumerate()
        .find(|&(_, v)| v > limit)
    {
        return Ok(DomainCheck {
            inside: false,
            reason: DomainReason::Diameter { index, norm, limit },
        });
    }
    let sparse = is_sparse(space, x, 0.5, delta)?;
    Ok(match sparse.witness {
        Some((index, crowd)) => DomainCheck {
            inside: false,
            reason: DomainReason::Sparsity { index, crowd },
        },
        None => DomainCheck {
            inside: true,
            reason: DomainReason::Ok,
        },
    })
}

/// A pair whose adjacency in the graph disagrees with its distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoViolation {
    pub i: usize,
    pub j: usize,
    pub is_edge: bool,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoCheck {
    pub isomorphic: bool,
    /// Lexicographically first violating pair.
    pub violation: Option<IsoViolation>,
}

/// Whether `i ↦ x_i` is an isomorphism from `g` onto the geometric graph.
pub fn is_geom_iso(space: &NormedSpace, x: &PointTuple, g: &Graph) -> Result<IsoCheck> {
    x.check_space(space)?;
    if x.len() != g.n() {
        return Err(Error::SizeMismatch {
            what: "point tuple",
            expected: g.n(),
            got: x.len(),
        });
    }
    let close = pairs_within(space, &x.points, 1.0);
    let edges = g.edges();
    // merge the two sorted lists and stop at the first disagreement
    let (mut a, mut b) = (0, 0);
    let violation = loop {
        match (close.get(a), edges.get(b)) {
            (None, None) => break None,
            (Some(&(i, j, d)), e) if e.is_none_or(|&(u, v)| (i, j) < (u, v)) => {
                break Some(IsoViolation { i, j, is_edge: false, distance: d })
            }
            (c, Some(&(u, v))) if c.is_none_or(|&(i, j, _)| (u, v) < (i, j)) => {
                break Some(IsoViolation {
                    i: u,
                    j: v,
                    is_edge: true,
                    distance: space.dist(&x.points[u], &x.points[v]),
                })
            }
            _ => {
                a += 1;
                b += 1;
            }
        }
    };
    Ok(IsoCheck {
        isomorphic: violation.is_none(),
        violation,
    })
}

/// Pairs whose distance is within `window` of `threshold`, for diagnosing
/// rounding-sensitive edges.
pub fn near_threshold_pairs(
    space: &NormedSpace,
    x: &PointTuple,
    threshold: f64,
    window: f64,
) -> Result<Vec<(usize, usize, f64)>> {
    x.check_space(space)?;
    Ok(pairs_within(space, &x.points, threshold + window)
        .into_iter()
        .filter(|&(_, _, d)| (d - threshold).abs() <= window)
        .collect())
}

/// Stream all `n(n−1)/2` pair distances as CSV rows `i,j,distance`.
pub fn write_pair_distances_csv<W: Write>(space: &NormedSpace, x: &PointTuple, mut out: W) -> Result<()> {
    x.check_space(space)?;
    writeln!(out, "i,j,distance")?;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            writeln!(out, "{i},{j},{:?}", space.dist(&x.points[i], &x.points[j]))?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Random `(1/2, Δ)`-sparse `n`-tuple in `B(0, radius)`: uniform proposals
/// are kept when they preserve sparsity and distinctness.
pub fn random_sparse_tuple<R: Rng + ?Sized>(
    space: &NormedSpace,
    n: usize,
    delta: usize,
    radius: f64,
    rng: &mut R,
) -> Result<PointTuple> {
    let origin = vec![0.0; space.dim()];
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut crowd: Vec<usize> = Vec::with_capacity(n);
    let mut grid = SparseGrid::new(space.coord_bound() * 0.5);
    let budget = 200 * n.max(10);
    let mut attempts = 0;
    let mut near = Vec::new();
    while points.len() < n {
        attempts += 1;
        if attempts > budget {
            return Err(Error::BudgetExceeded(format!(
                "placed {} of {n} sparse points in a ball of radius {radius} after {budget} proposals",
                points.len()
            )));
        }
        let p = space.sample_ball(&origin, radius, rng)?;
        near.clear();
        let mut ok = true;
        let mut check = |j: u32| {
            let d = space.dist(&p, &points[j as usize]);
            if d == 0.0 {
                ok = false;
            } else if d <= 0.5 {
                near.push(j as usize);
            }
        };
        if space.dim() <= GRID_MAX_DIM {
            grid.visit_near(&p, &mut check);
        } else {
            (0..points.len() as u32).for_each(&mut check);
        }
        if !ok || near.len() > delta || near.iter().any(|&j| crowd[j] >= delta) {
            continue;
        }
        for &j in &near {
            crowd[j] += 1;
        }
        crowd.push(near.len());
        grid.insert(points.len() as u32, &p);
        points.push(p);
    }
    PointTuple::new(space.dim(), points)
}

/// Random tuple in the domain: sparse points in `B(0, D·ln n)`.
pub fn random_domain_tuple<R: Rng + ?Sized>(
    space: &NormedSpace,
    n: usize,
    delta: usize,
    diam_const: f64,
    rng: &mut R,
) -> Result<PointTuple> {
    random_sparse_tuple(space, n, delta, domain_radius(n, diam_const), rng)
}

/// Random domain tuple packed into the smallest ball (growing geometrically
/// from radius 1/2) in which rejection sampling succeeds; these tuples sit
/// close to the sparsity limit and make volumetric bounds nearly tight.
pub fn random_compact_tuple<R: Rng + ?Sized>(
    space: &NormedSpace,
    n: usize,
    delta: usize,
    diam_const: f64,
    rng: &mut R,
) -> Result<PointTuple> {
    let limit = domain_radius(n, diam_const);
    let mut radius: f64 = 0.5;
    loop {
        match random_sparse_tuple(space, n, delta, radius.min(limit), rng) {
            Ok(t) => return Ok(t),
            Err(Error::BudgetExceeded(msg)) if radius >= limit => return Err(Error::BudgetExceeded(msg)),
            Err(Error::BudgetExceeded(_)) => radius *= 1.25,
            Err(e) => return Err(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamFactory;

    fn tuple(points: &[&[f64]]) -> PointTuple {
        PointTuple::new(points[0].len(), points.iter().map(|p| p.to_vec()).collect()).unwrap()
    }

    fn square() -> PointTuple {
        tuple(&[&[0.0, 0.0], &[1.0, 0.0], &[1.0, 1.0], &[0.0, 1.0]])
    }

    #[test]
    fn geometric_graph_examples() {
        let l2 = NormedSpace::l2(1);
        let g = geom(&l2, &tuple(&[&[0.0], &[1.0], &[2.0]]), 1.0).unwrap();
        assert_eq!(g, Graph::path(3));
        let far = geom(&l2, &tuple(&[&[0.0], &[1.5], &[3.1]]), 1.0).unwrap();
        assert_eq!(far.m(), 0);
        let g = geom(&NormedSpace::l2(2), &square(), 1.0).unwrap();
        assert_eq!(g, Graph::cycle(4));
        assert!(matches!(
            geom(&l2, &tuple(&[&[0.0], &[1.0], &[0.0]]), 1.0),
            Err(Error::CoincidentPoints(0, 2))
        ));
    }

    #[test]
    fn sparsity_examples() {
        let l2 = NormedSpace::l2(1);
        let spread = tuple(&[&[0.0], &[0.6], &[1.2]]);
        assert!(is_sparse(&l2, &spread, 0.5, 0).unwrap().sparse);
        let stack = tuple(&[&[0.0], &[0.0], &[0.0], &[0.0], &[0.0]]);
        let c = is_sparse(&l2, &stack, 0.5, 3).unwrap();
        assert!(!c.sparse);
        assert_eq!(c.witness.unwrap().1.len(), 4);
        let linf = NormedSpace::linf(2);
        let grid: Vec<Vec<f64>> = (0..7)
            .flat_map(|a| (0..7).map(move |b| vec![a as f64 * 0.5, b as f64 * 0.5]))
            .collect();
        let grid = PointTuple::new(2, grid).unwrap();
        assert!(is_sparse(&linf, &grid, 0.5, 8).unwrap().sparse);
        assert!(!is_sparse(&linf, &grid, 0.5, 7).unwrap().sparse);
    }

    #[test]
    fn domain_examples() {
        let l2 = NormedSpace::l2(1);
        let n = 4;
        let limit = domain_radius(n, 8.0);
        let far = tuple(&[&[0.0], &[1.0], &[2.0], &[limit + 1.0]]);
        let c = in_domain(&l2, &far, 3, 8.0).unwrap();
        assert!(!c.inside && matches!(c.reason, DomainReason::Diameter { index: 3, .. }));
        let stack = tuple(&[&[0.0], &[0.0], &[0.0], &[0.0], &[0.0]]);
        let c = in_domain(&l2, &stack, 3, 8.0).unwrap();
        assert!(matches!(c.reason, DomainReason::Sparsity { index: 0, .. }));
        let mut rng = StreamFactory::new(3).stream("geom-test", 0);
        let x = random_domain_tuple(&NormedSpace::l2(2), 300, 3, 8.0, &mut rng).unwrap();
        assert!(in_domain(&NormedSpace::l2(2), &x, 3, 8.0).unwrap().inside);
        let c = random_compact_tuple(&NormedSpace::linf(2), 300, 3, 8.0, &mut rng).unwrap();
        assert!(in_domain(&NormedSpace::linf(2), &c, 3, 8.0).unwrap().inside);
        assert!(c.points.iter().map(|p| NormedSpace::linf(2).norm(p)).fold(0.0, f64::max) < 10.0);
    }

    #[test]
    fn isomorphism_examples() {
        let l2 = NormedSpace::l2(1);
        let line = tuple(&[&[0.0], &[1.0], &[2.0]]);
        assert!(is_geom_iso(&l2, &line, &Graph::path(3)).unwrap().isomorphic);
        let chord = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let v = is_geom_iso(&l2, &line, &chord).unwrap().violation.unwrap();
        assert_eq!((v.i, v.j, v.is_edge, v.distance), (0, 2, true, 2.0));
        let l22 = NormedSpace::l2(2);
        assert!(is_geom_iso(&l22, &square(), &Graph::cycle(4)).unwrap().isomorphic);
        let v = is_geom_iso(&l22, &square(), &Graph::complete(4)).unwrap().violation.unwrap();
        assert_eq!((v.i, v.j), (0, 2));
        assert!(is_geom_iso(&l22, &square(), &Graph::path(3)).is_err());
    }

    #[test]
    fn diagnostics() {
        let l2 = NormedSpace::l2(1);
        let x = tuple(&[&[0.0], &[1.0 + 1e-9], &[3.0]]);
        assert_eq!(near_threshold_pairs(&l2, &x, 1.0, NEAR_THRESHOLD_WINDOW).unwrap().len(), 1);
        let mut buf = Vec::new();
        write_pair_distances_csv(&l2, &x, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.contains("0,2,3.0"));
        assert_eq!(PointTuple::from_json(&x.to_json()).unwrap(), x);
        assert_eq!(x.translate_normalized().points[2], vec![3.0]);
    }
}
