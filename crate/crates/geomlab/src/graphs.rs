//! Simple undirected graphs: random regular and `G(n, m)` generation, BFS
//! metrics and the second adjacency eigenvalue.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::StreamFactory;

/// A simple labeled graph on `0..n` with sorted neighbour lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
    m: usize,
}

impl Graph {
    /// The edgeless graph on `n` vertices.
    pub fn empty(n: usize) -> Self {
        Self {
            adj: vec![Vec::new(); n],
            m: 0,
        }
    }

    /// Build from an edge list, rejecting loops, duplicates and
    /// out-of-range endpoints.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidArgument(format!("edge ({u}, {v}) out of range for n = {n}")));
            }
            if u == v {
                return Err(Error::InvalidArgument(format!("self-loop at vertex {u}")));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for (u, list) in adj.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::InvalidArgument(format!("repeated edge ({u}, {})", w[0])));
            }
        }
        Ok(Self { adj, m: edges.len() })
    }

    pub fn complete(n: usize) -> Self {
        let edges: Vec<_> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        Self::from_edges(n, &edges).expect("complete graph is simple")
    }

    /// The cycle `C_n` (`n ≥ 3`).
    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3, "a cycle needs at least three vertices");
        let edges: Vec<_> = (0..n).map(|u| (u, (u + 1) % n)).collect();
        Self::from_edges(n, &edges).expect("cycle is simple")
    }

    /// The path `P_n` on `n` vertices.
    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|u| (u - 1, u)).collect();
        Self::from_edges(n, &edges).expect("path is simple")
    }

    /// The Petersen graph: outer 5-cycle `0..5`, inner pentagram `5..10`.
    pub fn petersen() -> Self {
        let mut edges = Vec::new();
        for i in 0..5 {
            edges.push((i, (i + 1) % 5));
            edges.push((i, i + 5));
            edges.push((5 + i, 5 + (i + 2) % 5));
        }
        Self::from_edges(10, &edges).expect("Petersen graph is simple")
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adj[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n() && self.adj[u].binary_search(&v).is_ok()
    }

    /// Edges `(u, v)` with `u < v` in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, l)| l.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
            .collect()
    }

    /// The common degree, if every vertex has the same degree.
    pub fn regular_degree(&self) -> Option<usize> {
        let d = self.adj.first().map_or(0, Vec::len);
        self.adj.iter().all(|l| l.len() == d).then_some(d)
    }

    /// Check `Δ`-regularity, reporting the first offending vertex.
    pub fn check_regular(&self, delta: usize) -> Result<()> {
        match self.adj.iter().position(|l| l.len() != delta) {
            Some(u) => Err(Error::NotRegular(delta, u, self.adj[u].len())),
            None => Ok(()),
        }
    }

    pub fn is_connected(&self) -> bool {
        self.n() == 0 || bfs_distances(self, 0).iter().all(Option::is_some)
    }

    /// Text edge list: header `n m`, then one sorted `u v` line per edge.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("{} {}\n", self.n(), self.m());
        for (u, v) in self.edges() {
            writeln!(s, "{u} {v}").unwrap();
        }
        s
    }

    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Parse("empty edge list".into()))?;
        let (n, m) = parse_pair(header)?;
        let edges = lines.map(parse_pair).collect::<Result<Vec<_>>>()?;
        if edges.len() != m {
            return Err(Error::SizeMismatch {
                what: "edge list",
                expected: m,
                got: edges.len(),
            });
        }
        Self::from_edges(n, &edges)
    }

    pub fn write_edge_list(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_edge_list())?;
        Ok(())
    }

    pub fn read_edge_list(path: &Path) -> Result<Self> {
        Self::from_edge_list(&std::fs::read_to_string(path)?)
    }
}

fn parse_pair(line: &str) -> Result<(usize, usize)> {
    let mut it = line.split_whitespace().map(str::parse::<usize>);
    match (it.next(), it.next(), it.next()) {
        (Some(Ok(a)), Some(Ok(b)), None) => Ok((a, b)),
        _ => Err(Error::Parse(format!("expected two integers, got {line:?}"))),
    }
}

/// A uniformly random simple `Δ`-regular graph on `n` vertices from the
/// pairing model, resampling the whole pairing until it is simple.
pub fn gen_regular<R: Rng + ?Sized>(n: usize, delta: usize, rng: &mut R, max_retries: usize) -> Result<Graph> {
    if (n * delta) % 2 == 1 {
        return Err(Error::InvalidArgument(format!("Δ·n = {} is odd", n * delta)));
    }
    if delta >= n.max(1) && delta > 0 {
        return Err(Error::InvalidArgument(format!("need Δ < n (Δ = {delta}, n = {n})")));
    }
    if delta == 0 {
        return Ok(Graph::empty(n));
    }
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, delta)).collect();
    let mut adj: Vec<Vec<usize>> = vec![Vec::with_capacity(delta); n];
    for _ in 0..max_retries {
        stubs.shuffle(rng);
        adj.iter_mut().for_each(Vec::clear);
        let mut simple = true;
        for pair in stubs.chunks_exact(2) {
            let (u, v) = (pair[0], pair[1]);
            if u == v || adj[u].contains(&v) {
                simple = false;
                break;
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        if simple {
            adj.iter_mut().for_each(|l| l.sort_unstable());
            return Ok(Graph {
                adj,
                m: n * delta / 2,
            });
        }
    }
    Err(Error::RetriesExhausted {
        what: format!("pairing model for n = {n}, Δ = {delta} never produced a simple graph"),
        attempts: max_retries,
    })
}

/// A uniformly random simple graph with exactly `m` edges.
pub fn gen_gnm<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<Graph> {
    let pairs = n * n.saturating_sub(1) / 2;
    if m > pairs {
        return Err(Error::InvalidArgument(format!("m = {m} exceeds n(n−1)/2 = {pairs}")));
    }
    let mut edges: Vec<(usize, usize)> = rand::seq::index::sample(rng, pairs, m)
        .into_iter()
        .map(|k| pair_of_index(n, k))
        .collect();
    edges.sort_unstable();
    Graph::from_edges(n, &edges)
}

/// Inverse of the lexicographic ranking of pairs `u < v` of `0..n`.
fn pair_of_index(n: usize, k: usize) -> (usize, usize) {
    let row_start = |u: usize| u * (2 * n - u - 1) / 2;
    let b = (2 * n - 1) as f64;
    let mut u = ((b - (b * b - 8.0 * k as f64).max(0.0).sqrt()) / 2.0).floor() as usize;
    u = u.min(n - 2);
    while u > 0 && row_start(u) > k {
        u -= 1;
    }
    while row_start(u + 1) <= k {
        u += 1;
    }
    (u, u + 1 + (k - row_start(u)))
}

/// Hop distances from `source`; `None` marks unreachable vertices.
pub fn bfs_distances(g: &Graph, source: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; g.n()];
    let mut queue = std::collections::VecDeque::new();
    dist[source] = Some(0);
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        let du = dist[u].unwrap();
        for &v in g.neighbors(u) {
            if dist[v].is_none() {
                dist[v] = Some(du + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Largest finite BFS distance from `source`, or `None` if some vertex is
/// unreachable.
pub fn eccentricity(g: &Graph, source: usize) -> Option<usize> {
    bfs_distances(g, source)
        .into_iter()
        .try_fold(0, |acc, d| d.map(|d| acc.max(d)))
}

/// Graph diameter; `None` when the graph is disconnected.
pub fn diameter(g: &Graph) -> Option<usize> {
    if g.n() == 0 {
        return Some(0);
    }
    (0..g.n())
        .into_par_iter()
        .map(|s| eccentricity(g, s))
        .reduce(|| Some(0), |a, b| Some(a?.max(b?)))
}

/// How the second eigenvalue was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenMethod {
    Dense,
    Lanczos,
}

/// Second-largest adjacency eigenvalue of a `Δ`-regular graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub lambda2: f64,
    /// `1 − λ2/Δ`.
    pub gap: f64,
    pub degree: usize,
    pub method: EigenMethod,
    /// `‖A y − λ2 y‖` for the computed unit eigenvector `y`.
    pub residual: f64,
}

/// Largest `n` handled by the dense solver under [`second_eigenvalue`].
pub const DENSE_EIGEN_LIMIT: usize = 512;

/// `λ2` by dense symmetric eigensolve for `n ≤ 512`, Lanczos above.
pub fn second_eigenvalue(g: &Graph) -> Result<SpectralSummary> {
    let method = if g.n() <= DENSE_EIGEN_LIMIT {
        EigenMethod::Dense
    } else {
        EigenMethod::Lanczos
    };
    second_eigenvalue_with(g, method)
}

pub fn second_eigenvalue_with(g: &Graph, method: EigenMethod) -> Result<SpectralSummary> {
    let delta = g
        .regular_degree()
        .ok_or_else(|| {
            let d0 = g.degree(0);
            let u = (0..g.n()).find(|&u| g.degree(u) != d0).unwrap();
            Error::NotRegular(d0, u, g.degree(u))
        })?;
    if g.n() < 2 {
        return Err(Error::InvalidArgument("second eigenvalue needs n ≥ 2".into()));
    }
    if delta == 0 {
        return Err(Error::InvalidArgument("spectral gap undefined for Δ = 0".into()));
    }
    let (lambda2, residual) = match method {
        EigenMethod::Dense => dense_lambda2(g),
        EigenMethod::Lanczos => lanczos_lambda2(g, 1e-9),
    };
    Ok(SpectralSummary {
        lambda2,
        gap: 1.0 - lambda2 / delta as f64,
        degree: delta,
        method,
        residual,
    })
}

/// All adjacency eigenvalues in decreasing order (dense solve).
pub fn adjacency_spectrum(g: &Graph) -> Vec<f64> {
    let eig = SymmetricEigen::new(adjacency_matrix(g));
    let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

fn adjacency_matrix(g: &Graph) -> DMatrix<f64> {
    let n = g.n();
    let mut a = DMatrix::zeros(n, n);
    for u in 0..n {
        for &v in g.neighbors(u) {
            a[(u, v)] = 1.0;
        }
    }
    a
}

fn dense_lambda2(g: &Graph) -> (f64, f64) {
    let eig = SymmetricEigen::new(adjacency_matrix(g));
    let mut order: Vec<usize> = (0..g.n()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let k = order[1];
    let y: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
    let lambda = eig.eigenvalues[k];
    (lambda, residual(g, &y, lambda))
}

fn apply(g: &Graph, x: &[f64], out: &mut [f64]) {
    out.par_iter_mut()
        .enumerate()
        .for_each(|(u, o)| *o = g.neighbors(u).iter().map(|&v| x[v]).sum());
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let prods: Vec<f64> = a.par_iter().zip(b).map(|(x, y)| x * y).collect();
    crate::sum::pairwise_sum(&prods)
}

fn residual(g: &Graph, y: &[f64], lambda: f64) -> f64 {
    let mut ay = vec![0.0; y.len()];
    apply(g, y, &mut ay);
    let norm = dot(y, y).sqrt();
    ay.iter().zip(y).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt() / norm
}

/// Lanczos with full reorthogonalisation on the complement of the all-ones
/// vector; the largest Ritz value there is `λ2`.
fn lanczos_lambda2(g: &Graph, tol: f64) -> (f64, f64) {
    let n = g.n();
    let max_iter = (n - 1).min(400);
    let mut rng = StreamFactory::new(0x6c61_6e63).stream("lanczos", n as u64);
    let ones = vec![1.0 / (n as f64).sqrt(); n];
    let mut q: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    orthogonalize(&mut q, &ones);
    let norm = dot(&q, &q).sqrt();
    q.iter_mut().for_each(|x| *x /= norm);

    let mut basis: Vec<Vec<f64>> = vec![q];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![0.0; n];
    loop {
        let k = basis.len() - 1;
        apply(g, &basis[k], &mut w);
        let a = dot(&w, &basis[k]);
        alpha.push(a);
        orthogonalize(&mut w, &ones);
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                w.par_iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let bnext = dot(&w, &w).sqrt();
        let (theta, s) = top_ritz(&alpha, &beta);
        let estimate = bnext * s[s.len() - 1].abs();
        if estimate <= tol || bnext <= 1e-12 || basis.len() >= max_iter {
            let y: Vec<f64> = (0..n)
                .into_par_iter()
                .map(|i| basis.iter().zip(&s).map(|(b, c)| b[i] * c).sum())
                .collect();
            return (theta, residual(g, &y, theta));
        }
        beta.push(bnext);
        basis.push(w.iter().map(|x| x / bnext).collect());
    }
}

fn orthogonalize(v: &mut [f64], unit: &[f64]) {
    let c = dot(v, unit);
    v.par_iter_mut().zip(unit).for_each(|(x, y)| *x -= c * y);
}

/// Largest eigenvalue of the symmetric tridiagonal matrix with diagonal
/// `alpha` and off-diagonal `beta`, with its eigenvector.
fn top_ritz(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let k = alpha.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let (idx, &theta) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    (theta, eig.eigenvectors.column(idx).iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng(i: u64) -> crate::rng::Stream {
        StreamFactory::new(5).stream("graphs-test", i)
    }

    #[test]
    fn regular_generation_examples() {
        let k4 = gen_regular(4, 3, &mut rng(0), 100).unwrap();
        assert_eq!(k4, Graph::complete(4));
        assert_eq!(gen_regular(6, 0, &mut rng(0), 1).unwrap().m(), 0);
        assert!(matches!(gen_regular(5, 3, &mut rng(0), 10), Err(Error::InvalidArgument(_))));
        assert!(gen_regular(3, 3, &mut rng(0), 10).is_err());
        let g = gen_regular(200, 3, &mut rng(1), 1000).unwrap();
        g.check_regular(3).unwrap();
        assert_eq!(g.m(), 300);
    }

    #[test]
    fn retries_are_reported() {
        // n = 4, Δ = 3 succeeds with probability 1/15 per attempt
        let mut exhausted = 0;
        for i in 0..50 {
            if let Err(Error::RetriesExhausted { attempts, .. }) = gen_regular(4, 3, &mut rng(100 + i), 1) {
                assert_eq!(attempts, 1);
                exhausted += 1;
            }
        }
        assert!(exhausted > 30);
    }

    #[test]
    fn gnm_examples() {
        assert_eq!(gen_gnm(4, 6, &mut rng(2)).unwrap(), Graph::complete(4));
        assert_eq!(gen_gnm(3, 0, &mut rng(2)).unwrap().m(), 0);
        assert!(gen_gnm(4, 7, &mut rng(2)).is_err());
    }

    #[test]
    fn pair_ranking_inverts() {
        for n in [2usize, 3, 7, 50] {
            let mut k = 0;
            for u in 0..n {
                for v in u + 1..n {
                    assert_eq!(pair_of_index(n, k), (u, v));
                    k += 1;
                }
            }
        }
    }

    #[test]
    fn bfs_examples() {
        assert_eq!(bfs_distances(&Graph::cycle(4), 0), vec![Some(0), Some(1), Some(2), Some(1)]);
        assert_eq!(bfs_distances(&Graph::complete(4), 2), vec![Some(1), Some(1), Some(0), Some(1)]);
        let two = Graph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        assert_eq!(bfs_distances(&two, 0), vec![Some(0), Some(1), None, None]);
        assert_eq!(diameter(&Graph::cycle(6)), Some(3));
        assert_eq!(diameter(&Graph::complete(4)), Some(1));
        assert_eq!(diameter(&two), None);
        assert_eq!(diameter(&Graph::petersen()), Some(2));
    }

    #[test]
    fn spectra_of_named_graphs() {
        let s = second_eigenvalue(&Graph::complete(4)).unwrap();
        assert!((s.lambda2 + 1.0).abs() < 1e-10 && (s.gap - 4.0 / 3.0).abs() < 1e-10);
        let s = second_eigenvalue(&Graph::cycle(4)).unwrap();
        assert!(s.lambda2.abs() < 1e-10 && (s.gap - 1.0).abs() < 1e-10);
        let s = second_eigenvalue(&Graph::petersen()).unwrap();
        assert!((s.lambda2 - 1.0).abs() < 1e-10 && (s.gap - 2.0 / 3.0).abs() < 1e-10);
        assert!(matches!(second_eigenvalue(&Graph::path(3)), Err(Error::NotRegular(..))));
    }

    #[test]
    fn lanczos_agrees_with_dense() {
        for (n, seed) in [(60usize, 3u64), (300, 4), (1000, 5)] {
            let g = gen_regular(n, 3, &mut rng(seed), 1000).unwrap();
            let a = second_eigenvalue_with(&g, EigenMethod::Dense).unwrap();
            let b = second_eigenvalue_with(&g, EigenMethod::Lanczos).unwrap();
            assert!((a.lambda2 - b.lambda2).abs() < 1e-7, "{n}: {} vs {}", a.lambda2, b.lambda2);
        }
        let s = second_eigenvalue_with(&Graph::petersen(), EigenMethod::Lanczos).unwrap();
        assert!((s.lambda2 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn edge_list_round_trip() {
        let g = Graph::petersen();
        let text = g.to_edge_list();
        assert!(text.starts_with("10 15\n0 1\n0 4\n0 5\n"));
        assert_eq!(Graph::from_edge_list(&text).unwrap(), g);
        assert!(Graph::from_edge_list("3 2\n0 1\n").is_err());
        assert!(Graph::from_edge_list("3 1\n0 0\n").is_err());
    }
}
