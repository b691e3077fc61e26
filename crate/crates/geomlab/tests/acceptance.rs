//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines always reach the output.
//! Criteria listed in `KNOWN_UNATTAINABLE` may print FAIL without failing the
//! target; any other FAIL exits nonzero.

use std::process::Command;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;

use geomlab::count::{
    contiguity_prob_exact, count_regular_backtrack, count_regular_exact, count_regular_formula, prob_disjoint_exact,
    prob_disjoint_pairs, PrefactorMode,
};
use geomlab::discretize::{build_multiscale_net, check_discretization, discretize_with, long_distances, radius, Params};
use geomlab::embed::{landmark_embedding, stress_embed, StressSchedule};
use geomlab::geom::{in_domain, random_compact_tuple, random_domain_tuple, PointTuple};
use geomlab::graphs::{diameter, gen_gnm, gen_regular, second_eigenvalue, second_eigenvalue_with, EigenMethod, Graph};
use geomlab::norms::NormedSpace;
use geomlab::obstruct::poincare_ratio;
use geomlab::rng::StreamFactory;

const SEED: u64 = 20_240_601;
const KNOWN_UNATTAINABLE: &[u32] = &[8];

const FORMULA_RATIO_RANGE: (f64, f64) = (1.0, 1.6);
const MC_TRIALS: usize = 100_000;
const MC_SIGMAS: f64 = 3.0;
const POINCARE_REL_TOL: f64 = 1e-12;
const LAMBDA2_TYPICAL: f64 = 2.9;
const LAMBDA2_TYPICAL_SHARE: f64 = 0.9;
const LAMBDA2_STRICT_MARGIN: f64 = 1e-6;
const EIGEN_CROSS_TOL: f64 = 1e-7;
const AUDIT_RUNTIME: Duration = Duration::from_secs(120);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: Vec<Criterion> = vec![
        (1, "enumeration oracle", Duration::from_secs(300), enumeration),
        (2, "hypergeometric disjointness", Duration::from_secs(120), hypergeometric),
        (3, "contiguity probability", Duration::from_secs(60), contiguity),
        (4, "landmark guarantee", Duration::from_secs(120), landmark),
        (5, "Poincaré ratio of complete graphs", Duration::from_secs(60), poincare_exactness),
        (6, "volumetric lower bound", Duration::from_secs(300), volumetric),
        (7, "discretization invariants", Duration::from_secs(600), discretization),
        (8, "regime-true conditional claims", Duration::from_secs(600), regime_claims),
        (9, "second eigenvalue of random cubic graphs", Duration::from_secs(300), spectral),
        (10, "diameter of random cubic graphs", Duration::from_secs(600), diameters),
        (11, "embedding search sanity", Duration::from_secs(300), embedding_search),
        (12, "audit determinism", Duration::from_secs(300), determinism),
    ];
    let filter: Option<u32> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut unexpected = Vec::new();
    for (id, name, budget, run) in criteria {
        if filter.is_some_and(|f| f != id) {
            continue;
        }
        let start = Instant::now();
        let mut out = run();
        let elapsed = start.elapsed();
        if elapsed > budget {
            out.pass = false;
            out.detail.push_str(&format!("; runtime {elapsed:.1?} exceeds {budget:?}"));
        }
        let tag = if out.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {id:>2} ({name}, {:.1}s): {}", elapsed.as_secs_f64(), out.detail);
        if !out.pass && !KNOWN_UNATTAINABLE.contains(&id) {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}

fn streams(tag: &str) -> StreamFactory {
    StreamFactory::new(SEED).child(tag, 0)
}

fn ratio(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

fn enumeration() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for (n, d, want) in [(4, 3, 1u64), (6, 3, 70), (4, 2, 3)] {
        let dp = count_regular_exact(n, d).unwrap().to_string();
        let bt = count_regular_backtrack(n, d).unwrap();
        pass &= dp == want.to_string() && bt == want;
        notes.push(format!("({n},{d})={dp}"));
    }
    for n in [6, 8, 10] {
        let exact = count_regular_backtrack(n, 3).unwrap();
        pass &= count_regular_exact(n, 3).unwrap() == exact.into();
        let r = count_regular_formula(n, 3, PrefactorMode::Standard).unwrap().exp() / exact as f64;
        pass &= (FORMULA_RATIO_RANGE.0..=FORMULA_RATIO_RANGE.1).contains(&r);
        notes.push(format!("ratio n={n}: {r:.4}"));
    }
    outcome(pass, notes.join(", "))
}

fn hypergeometric() -> Outcome {
    let small = prob_disjoint_pairs(6, 3, 2).unwrap();
    let (n, delta, l_size) = (20, 3, 30);
    let m = n * delta / 2;
    let f = streams("hypergeometric");
    let mut rng = f.stream("marked", 0);
    let mut marked = std::collections::BTreeSet::new();
    while marked.len() < l_size {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u != v {
            marked.insert((u.min(v), u.max(v)));
        }
    }
    let mut rng = f.stream("draws", 0);
    let hits = (0..MC_TRIALS)
        .filter(|_| {
            let g = gen_gnm(n, m, &mut rng).unwrap();
            marked.iter().all(|&(u, v)| !g.has_edge(u, v))
        })
        .count();
    let exact = prob_disjoint_exact(n, m, l_size).unwrap();
    let p = exact.numer().to_string().parse::<f64>().unwrap() / exact.denom().to_string().parse::<f64>().unwrap();
    let freq = hits as f64 / MC_TRIALS as f64;
    let sigma = (p * (1.0 - p) / MC_TRIALS as f64).sqrt();
    let z = (freq - p) / sigma;
    outcome(
        small == ratio(1, 5) && z.abs() <= MC_SIGMAS,
        format!("P(T=6,m=3,L=2) = {small}; exact {p:.6} vs Monte Carlo {freq:.6} ({z:+.2}σ)"),
    )
}

fn contiguity() -> Outcome {
    let a = contiguity_prob_exact(4, 3).unwrap();
    let b = contiguity_prob_exact(6, 3).unwrap();
    outcome(a == ratio(1, 1) && b == ratio(2, 143), format!("(4,3) = {a}, (6,3) = {b}"))
}

fn landmark() -> Outcome {
    let f = streams("landmark");
    let mut worst = 0u32;
    for k in 0..100 {
        let g = gen_regular(500, 3, &mut f.stream("graph", k), 64).unwrap();
        let emb = landmark_embedding(&g, 8, &mut f.stream("landmarks", k)).unwrap();
        for (u, v) in g.edges() {
            let d = emb.coords[u].iter().zip(&emb.coords[v]).map(|(a, b)| a.abs_diff(*b)).max().unwrap();
            worst = worst.max(d);
        }
    }
    outcome(worst <= 1, format!("largest edge ℓ∞ distance over 100 graphs: {worst}"))
}

fn poincare_exactness() -> Outcome {
    let f = streams("poincare");
    let mut worst: f64 = 0.0;
    for (k, n) in [5usize, 20, 100].into_iter().enumerate() {
        let g = Graph::complete(n);
        for space in [NormedSpace::l1(3), NormedSpace::l2(3), NormedSpace::linf(3)] {
            let mut rng = f.stream("tuple", k as u64);
            let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.random_range(-5.0..5.0)).collect()).collect();
            let x = PointTuple::new(3, pts).unwrap();
            let r = poincare_ratio(&g, &space, &x, 1.0).unwrap();
            let want = (n - 1) as f64 / n as f64;
            worst = worst.max(((r - want) / want).abs());
        }
    }
    outcome(worst <= POINCARE_REL_TOL, format!("largest relative error {worst:.2e}"))
}

fn volumetric() -> Outcome {
    let f = streams("volumetric");
    let delta = 3;
    let mut checked = 0;
    let mut violations = 0;
    let mut tightest = f64::INFINITY;
    for k in 0..200u64 {
        let d = 1 + (k % 3) as usize;
        let n = (1usize << (d + 1)) * (delta + 1) * (1 + (k as usize / 3) % 4);
        let space = match (k / 3) % 3 {
            0 => NormedSpace::l1(d),
            1 => NormedSpace::l2(d),
            _ => NormedSpace::linf(d),
        };
        let x = random_compact_tuple(&space, n, delta, 8.0, &mut f.stream("tuple", k)).unwrap();
        assert!(in_domain(&space, &x, delta, 8.0).unwrap().inside);
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                total += space.dist(&x.points[i], &x.points[j]);
            }
        }
        let mean = total / (n * n) as f64;
        let bound = 0.25 * (n as f64 / (2.0 * (delta + 1) as f64)).powf(1.0 / d as f64);
        tightest = tightest.min(mean / bound);
        checked += 1;
        if mean <= bound {
            violations += 1;
        }
    }
    outcome(
        violations == 0,
        format!("{checked} compact domain tuples, {violations} violations, smallest mean/bound = {tightest:.3}"),
    )
}

fn discretization() -> Outcome {
    let f = streams("discretization");
    let params = Params::default();
    let n = 2048;
    let mut notes = Vec::new();
    let mut pass = true;
    for (s, space) in [NormedSpace::l2(2), NormedSpace::linf(2)].into_iter().enumerate() {
        let net = build_multiscale_net(&space, n, &params, &mut f.stream("net", s as u64)).unwrap();
        let (mut remark, mut chain, mut factor, mut pairs) = (0, 0, 0, 0);
        for k in 0..50u64 {
            let x = random_domain_tuple(&space, n, params.delta, params.diam_const, &mut f.stream("tuple", k)).unwrap();
            let rec = discretize_with(&net, &x, &params, &mut f.stream("seeds", k)).unwrap();
            // independent recomputation of the Remark bounds and of L
            for i in 0..n {
                let r = radius(rec.profile.ells[i]);
                if space.dist(&x.points[i], &rec.anchors[i]) > r + 1.0 {
                    remark += 1;
                }
                if space.dist(&x.points[i], &rec.xhat.points[i]) > params.c0 * r + 1.0 {
                    remark += 1;
                }
            }
            let mut l_count = 0;
            for i in 0..n {
                let ri = radius(rec.profile.ells[i]);
                for j in 0..n {
                    let long = i != j && space.dist(&rec.xhat.points[i], &rec.xhat.points[j]) > ri / 3.0;
                    if long {
                        l_count += 1;
                    }
                    if long != rec.long.contains(i, j) {
                        factor += 1;
                    }
                }
            }
            if l_count != rec.long.len() || long_distances(&space, &rec) != rec.long {
                factor += 1;
            }
            let audit = check_discretization(&space, &x, &rec, &params, false);
            chain += audit.chain_violations;
            pairs += audit.chain_pairs;
            pass &= audit.passed() && !audit.regime;
        }
        pass &= remark == 0 && chain == 0 && factor == 0;
        notes.push(format!(
            "{}: {remark} remark, {chain} chain ({pairs} close pairs), {factor} L mismatches",
            space.label()
        ));
    }
    outcome(pass, notes.join("; "))
}

/// Clusters of four points with centers at least 0.51 apart: `(1/2, 3)`-sparse
/// and dense enough that every scale is large.
fn clustered_line(n: usize, seed: u64) -> PointTuple {
    let mut rng = StreamFactory::new(seed).stream("clusters", 0);
    let mut pts = Vec::with_capacity(n);
    let mut c = 0.0;
    while pts.len() < n {
        for _ in 0..4.min(n - pts.len()) {
            pts.push(vec![c + rng.random_range(0.0..0.005)]);
        }
        c += 0.51 + rng.random_range(0.0..0.02);
    }
    let mid = c / 2.0;
    pts.iter_mut().for_each(|p| p[0] -= mid);
    PointTuple::new(1, pts).unwrap()
}

fn regime_claims() -> Outcome {
    let (n, d) = (10_000usize, 1usize);
    let params = Params { eps: 0.45, delta: 3, ..Params::default() };
    let rhs = (n as f64).powf(params.eps) / (params.delta + 1) as f64;
    let regime = params.regime_holds(n, d);
    // a (1/2, 3)-sparse set on a segment of length L has at most 4⌈2L⌉ points
    let capacity = 4.0 * (2.0 * 2.0 * params.domain_radius(n)).ceil();

    // diagnostic: the same claims on a family that does have large scales
    let diag = Params { diam_const: 100.0, ..params };
    let space = NormedSpace::l2(1);
    let net = build_multiscale_net(&space, n, &diag, &mut streams("regime").stream("net", 0)).unwrap();
    let (mut c2, mut c3, mut excl, mut max_count, mut min_r) = (0, 0, 0, 0, f64::INFINITY);
    for k in 0..10u64 {
        let x = clustered_line(n, SEED + k);
        let rec = discretize_with(&net, &x, &diag, &mut streams("regime").stream("seeds", k)).unwrap();
        let audit = check_discretization(&space, &x, &rec, &diag, true);
        let c = audit.conditional.unwrap();
        c2 += c.claim2_violations;
        c3 += c.claim3_violations;
        excl += c.exclusion_violations;
        max_count = max_count.max(c.max_claim3_count);
        min_r = min_r.min(audit.min_radius);
    }
    println!(
        "INFO criterion  8 diagnostic: D = 100, 10 clustered tuples, n = {n}: min r = {min_r}, claim-2 violations {c2}, \
         claim-3 violations {c3} (max count {max_count} vs n^(2ε) = {:.0}), exclusion violations {excl}",
        diag.density_threshold(n)
    );
    outcome(
        regime,
        format!(
            "regime inequality 320^d ≤ n^ε/(Δ+1) is false (n^ε/(Δ+1) = {rhs:.2}); the domain at D = {} holds at most \
             {capacity:.0} < {n} sparse points in d = 1",
            params.diam_const
        ),
    )
}

fn spectral() -> Outcome {
    let f = streams("spectral");
    let (mut typical, mut strict, mut connected) = (0, 0, 0);
    let mut agree = true;
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let g = gen_regular(1000, 3, &mut f.stream("graph", k), 64).unwrap();
        let l2 = second_eigenvalue(&g).unwrap().lambda2;
        if k < 3 {
            let dense = second_eigenvalue_with(&g, EigenMethod::Dense).unwrap().lambda2;
            agree &= (dense - l2).abs() <= EIGEN_CROSS_TOL;
        }
        worst = worst.max(l2);
        if l2 <= LAMBDA2_TYPICAL {
            typical += 1;
        }
        if g.is_connected() {
            connected += 1;
            if l2 < 3.0 - LAMBDA2_STRICT_MARGIN {
                strict += 1;
            }
        }
    }
    outcome(
        agree && typical as f64 >= LAMBDA2_TYPICAL_SHARE * 50.0 && strict == connected,
        format!(
            "{typical}/50 with λ2 ≤ {LAMBDA2_TYPICAL}, {strict}/{connected} connected below 3 − 1e-6, max λ2 = {worst:.4}, \
             Lanczos agrees with dense on 3 samples: {agree}"
        ),
    )
}

fn diameters() -> Outcome {
    let f = streams("diameter");
    let limit = 8.0 * 1000f64.ln() / 2.0;
    let mut failures = Vec::new();
    let mut largest = 0;
    for k in 0..500 {
        let g = gen_regular(1000, 3, &mut f.stream("graph", k), 64).unwrap();
        match diameter(&g) {
            Some(d) if (d as f64) <= limit => largest = largest.max(d),
            other => failures.push((k, other)),
        }
    }
    for (k, d) in &failures {
        println!("INFO criterion 10 failure: sample {k}, diameter {d:?}");
    }
    outcome(
        failures.is_empty(),
        format!("500 samples, {} failures, largest diameter {largest} (limit {limit:.2})", failures.len()),
    )
}

fn c4_line_witness_on_grid() -> Option<[f64; 4]> {
    let grid: Vec<f64> = (-60..=60).map(|k| k as f64 * 0.05).collect();
    let adjacent = |i: usize, j: usize| (i + 1) % 4 == j || (j + 1) % 4 == i;
    for &b in &grid {
        for &c in &grid {
            for &d in &grid {
                let x = [0.0, b, c, d];
                let ok = (0..4).all(|i| {
                    (i + 1..4).all(|j| x[i] != x[j] && ((x[i] - x[j]).abs() <= 1.0) == adjacent(i, j))
                });
                if ok {
                    return Some(x);
                }
            }
        }
    }
    None
}

fn embedding_search() -> Outcome {
    let f = streams("stress");
    let schedule = StressSchedule { restarts: 8, ..StressSchedule::default() };
    let c6 = Graph::cycle(6);
    let a = stress_embed(&c6, &NormedSpace::l2(2), 3000, &mut f.stream("c6", 0), &schedule).unwrap();
    let euclid = |p: &[f64], q: &[f64]| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
    let pts = &a.tuple.points;
    let c6_ok = (0..6).all(|i| {
        (i + 1..6).all(|j| (euclid(&pts[i], &pts[j]) <= 1.0) == c6.has_edge(i, j) && euclid(&pts[i], &pts[j]) > 0.0)
    });
    let c4 = stress_embed(&Graph::cycle(4), &NormedSpace::l2(1), 3000, &mut f.stream("c4", 0), &schedule).unwrap();
    let grid = c4_line_witness_on_grid();
    outcome(
        a.success && c6_ok && !c4.success && grid.is_none(),
        format!(
            "C6 in l2^2: search {} / independent check {}; C4 in l2^1: search {}, grid oracle {}",
            a.success,
            c6_ok,
            c4.success,
            if grid.is_none() { "finds no witness" } else { "found a witness" }
        ),
    )
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_geomlab");
    let dir = tempfile::tempdir().unwrap();
    let mut reports = Vec::new();
    let mut slowest = Duration::ZERO;
    for threads in [1, 8] {
        for rep in 0..2 {
            let out = dir.path().join(format!("audit-{threads}-{rep}.json"));
            let start = Instant::now();
            let status = Command::new(bin)
                .args(["audit", "--n", "4096", "--delta", "3", "--d", "2", "--seed", "7", "--threads"])
                .arg(threads.to_string())
                .arg("--out")
                .arg(&out)
                .status()
                .unwrap();
            slowest = slowest.max(start.elapsed());
            if !status.success() {
                return outcome(false, format!("audit exited with {status}"));
            }
            reports.push(std::fs::read(&out).unwrap());
        }
    }
    let identical = reports.windows(2).all(|w| w[0] == w[1]);
    let report: serde_json::Value = serde_json::from_slice(&reports[0]).unwrap();
    let regime = report["result"]["xi"]["regime"].as_bool();
    let claims = report["result"]["trail"][4]["outcome"].as_str().unwrap_or("").to_string();
    outcome(
        identical && regime == Some(false) && claims == "unconditional-claims-pass" && slowest <= AUDIT_RUNTIME,
        format!(
            "4 runs at n = 4096 (1 and 8 threads) byte-identical: {identical}; regime {regime:?}; {claims}; slowest run {:.1}s",
            slowest.as_secs_f64()
        ),
    )
}
