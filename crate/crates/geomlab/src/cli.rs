//! Command-line front end.
//!
//! Every subcommand resolves an [`ExperimentConfig`] from defaults, an
//! optional flat `key = value` config file and command-line flags (flags
//! win), derives all randomness from named substreams of the seed, and
//! writes one output to `--out` or stdout. Reports are JSON envelopes that
//! echo the constants used; they contain no timings or thread counts, so a
//! run is byte-identical for a fixed config and seed.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::count::{
    contiguity_prob_exact, count_regular_exact, count_regular_formula, ln_rational, prob_disjoint_exact,
    prob_disjoint_exponent_bound, CountResult, ExponentBound, PrefactorMode,
};
use crate::discretize::{build_multiscale_net, check_discretization, discretize_with, DiscretizationAudit, Params};
use crate::embed::{embedding_report, landmark_embedding, stress_embed, EmbeddingAttempt, StressSchedule};
use crate::error::{Error, Result};
use crate::geom::{in_domain, is_geom_iso, random_domain_tuple, DomainCheck, DomainReason, PointTuple};
use crate::graphs::{diameter, gen_regular, second_eigenvalue, second_eigenvalue_with, EigenMethod, Graph};
use crate::norms::NormedSpace;
use crate::obstruct::{obstruction_report_with, ObstructionReport, Verdict};
use crate::rng::StreamFactory;

#[derive(Debug, Parser)]
#[command(name = "geomlab", version, about = "Geometric embeddability of random regular graphs")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by all subcommands; each may also come from `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Flat `key = value` file; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub delta: Option<usize>,
    #[arg(long, global = true)]
    pub d: Option<usize>,
    /// `l1`, `l2`, `linf` or `lp:<p>`.
    #[arg(long, global = true)]
    pub space: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    #[arg(long, global = true)]
    pub c0: Option<f64>,
    #[arg(long, global = true)]
    pub diam_const: Option<f64>,
    #[arg(long, global = true)]
    pub c_naor: Option<f64>,
    #[arg(long, global = true)]
    pub c_bm: Option<f64>,
    /// Numerical tolerance of norm checks.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub max_retries: Option<usize>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EmbedMethod {
    Landmark,
    Stress,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Random Δ-regular graph as an edge list.
    Gen,
    /// Embedding attempt (landmark or stress search) as JSON.
    Embed {
        #[arg(long, value_enum, default_value_t = EmbedMethod::Landmark)]
        method: EmbedMethod,
        /// Edge list to embed; generated from the seed when absent.
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long, default_value_t = 2000)]
        iters: usize,
    },
    /// Geometric-graph isomorphism and domain membership of a tuple.
    Check {
        #[arg(long)]
        graph: PathBuf,
        /// Tuple JSON, an embedding attempt, or an `embed` report.
        #[arg(long)]
        tuple: PathBuf,
    },
    /// Spectral non-embeddability report.
    Certify {
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Tuple whose Poincaré ratio is reported as a lower bound.
        #[arg(long)]
        witness: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
    },
    /// Multiscale-net discretization record and its audit.
    Discretize {
        /// Tuple to discretize; a random domain tuple when absent.
        #[arg(long)]
        tuple: Option<PathBuf>,
        /// Evaluate the conditional claims even outside their regime.
        #[arg(long)]
        force_conditional: bool,
    },
    /// Regular-graph counts and disjointness probabilities.
    Count {
        /// Print the exact value only.
        #[arg(long)]
        exact: bool,
        /// Prefactor of the asymptotic formula: none, paper or standard.
        #[arg(long, default_value = "standard")]
        mode: String,
        /// Probability that a uniform nΔ/2-edge graph is Δ-regular.
        #[arg(long)]
        contiguity: bool,
        /// Probability that a uniform nΔ/2-edge graph avoids this many fixed pairs.
        #[arg(long)]
        l_size: Option<usize>,
        /// Edges drawn in the disjointness probability; defaults to nΔ/2.
        #[arg(long)]
        edges: Option<usize>,
    },
    /// End-to-end pipeline on one instance with a verdict trail.
    Audit,
}

/// Fully resolved experiment settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub n: usize,
    pub delta: usize,
    pub d: usize,
    pub space: String,
    pub params: Params,
    pub trials: usize,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            n: 100,
            delta: 3,
            d: 2,
            space: "l2".into(),
            params: Params::default(),
            trials: 8,
            out: None,
            threads: None,
        }
    }
}

const CONFIG_KEYS: &[&str] = &[
    "n", "delta", "d", "space", "seed", "eps", "c0", "diam-const", "c-naor", "c-bm", "tol", "trials", "out",
    "max-retries", "threads",
];

/// Parse flat `key = value` lines. `#` starts a comment; underscores in keys
/// are read as dashes.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("config line {}: expected key = value, got {raw:?}", k + 1)))?;
        let key = key.trim().replace('_', "-");
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(Error::Parse(format!("config line {}: unknown key {key:?}", k + 1)));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

impl ExperimentConfig {
    pub fn resolve(args: &CommonArgs) -> Result<Self> {
        let file = match &args.config {
            Some(path) => parse_config(&std::fs::read_to_string(path)?)?,
            None => BTreeMap::new(),
        };
        fn pick<T: FromStr>(flag: Option<T>, file: &BTreeMap<String, String>, key: &str, default: T) -> Result<T> {
            if let Some(v) = flag {
                return Ok(v);
            }
            match file.get(key) {
                Some(s) => s.parse().map_err(|_| Error::Parse(format!("config key {key}: bad value {s:?}"))),
                None => Ok(default),
            }
        }
        let base = ExperimentConfig::default();
        let p = base.params;
        let params = Params {
            eps: pick(args.eps, &file, "eps", p.eps)?,
            c0: pick(args.c0, &file, "c0", p.c0)?,
            diam_const: pick(args.diam_const, &file, "diam-const", p.diam_const)?,
            c_naor: pick(args.c_naor, &file, "c-naor", p.c_naor)?,
            c_bm: pick(args.c_bm, &file, "c-bm", p.c_bm)?,
            tolerance: pick(args.tol, &file, "tol", p.tolerance)?,
            max_retries: pick(args.max_retries, &file, "max-retries", p.max_retries)?,
            delta: pick(args.delta, &file, "delta", p.delta)?,
            ..p
        };
        params.validate()?;
        let out = match (&args.out, file.get("out")) {
            (Some(p), _) => Some(p.clone()),
            (None, Some(s)) => Some(PathBuf::from(s)),
            (None, None) => None,
        };
        let threads = match args.threads {
            Some(t) => Some(t),
            None => file.get("threads").map(|s| s.parse()).transpose().map_err(|_| Error::Parse("config key threads".into()))?,
        };
        Ok(Self {
            seed: pick(args.seed, &file, "seed", base.seed)?,
            n: pick(args.n, &file, "n", base.n)?,
            delta: params.delta,
            d: pick(args.d, &file, "d", base.d)?,
            space: pick(args.space.clone(), &file, "space", base.space)?,
            params,
            trials: pick(args.trials, &file, "trials", base.trials)?,
            out,
            threads,
        })
    }

    pub fn streams(&self) -> StreamFactory {
        StreamFactory::new(self.seed)
    }

    pub fn space(&self) -> Result<NormedSpace> {
        parse_space(&self.space, self.d)
    }

    /// Whether every constant equals its default.
    pub fn paper_defaults(&self) -> bool {
        let p = Params::default();
        let q = &self.params;
        (q.eps, q.c0, q.diam_const, q.c_naor, q.c_bm, q.c_main) == (p.eps, p.c0, p.diam_const, p.c_naor, p.c_bm, p.c_main)
    }

    fn echo(&self) -> ConfigEcho {
        let p = &self.params;
        ConfigEcho {
            seed: self.seed,
            n: self.n,
            delta: self.delta,
            d: self.d,
            space: self.space.clone(),
            eps: p.eps,
            c0: p.c0,
            diam_const: p.diam_const,
            c_naor: p.c_naor,
            c_bm: p.c_bm,
            c_main: p.c_main,
            tolerance: p.tolerance,
            max_retries: p.max_retries,
            trials: self.trials,
            paper_defaults: self.paper_defaults(),
        }
    }
}

/// `l1`, `l2` and `linf` shorthands plus the library labels.
pub fn parse_space(label: &str, d: usize) -> Result<NormedSpace> {
    match label.trim() {
        "l1" => NormedSpace::lp(d, 1.0),
        "l2" => NormedSpace::lp(d, 2.0),
        other => NormedSpace::from_label(other, d),
    }
}

#[derive(Debug, Clone, Serialize)]
struct ConfigEcho {
    seed: u64,
    n: usize,
    delta: usize,
    d: usize,
    space: String,
    eps: f64,
    c0: f64,
    diam_const: f64,
    c_naor: f64,
    c_bm: f64,
    c_main: f64,
    tolerance: f64,
    max_retries: usize,
    trials: usize,
    paper_defaults: bool,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema: &'static str,
    command: &'a str,
    config: ConfigEcho,
    result: T,
}

fn envelope<T: Serialize>(cfg: &ExperimentConfig, command: &str, result: T) -> String {
    let env = Envelope { schema: crate::REPORT_SCHEMA, command, config: cfg.echo(), result };
    let mut s = serde_json::to_string_pretty(&env).expect("reports serialize");
    s.push('\n');
    s
}

/// Parse arguments, run, write the output and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            let report = serde_json::json!({
                "schema": crate::REPORT_SCHEMA,
                "error": e.kind(),
                "message": e.to_string(),
                "exit_code": e.exit_code(),
            });
            eprintln!("{report}");
            e.exit_code()
        }
    }
}

/// Run the parsed command and write its output.
pub fn execute(cli: &Cli) -> Result<()> {
    let cfg = ExperimentConfig::resolve(&cli.common)?;
    let text = match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(|| run(&cfg, &cli.command))?,
        None => run(&cfg, &cli.command)?,
    };
    match &cfg.out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(path, text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

/// Output text of one subcommand.
pub fn run(cfg: &ExperimentConfig, command: &Command) -> Result<String> {
    match command {
        Command::Gen => Ok(generate(cfg)?.to_edge_list()),
        Command::Embed { method, graph, iters } => embed(cfg, *method, graph.as_deref(), *iters),
        Command::Check { graph, tuple } => check(cfg, graph, tuple),
        Command::Certify { graph, witness, p } => certify(cfg, graph.as_deref(), witness.as_deref(), *p),
        Command::Discretize { tuple, force_conditional } => discretize_cmd(cfg, tuple.as_deref(), *force_conditional),
        Command::Count { exact, mode, contiguity, l_size, edges } => {
            count(cfg, *exact, mode, *contiguity, *l_size, *edges)
        }
        Command::Audit => Ok(envelope(cfg, "audit", audit(cfg)?)),
    }
}

fn generate(cfg: &ExperimentConfig) -> Result<Graph> {
    gen_regular(cfg.n, cfg.delta, &mut cfg.streams().stream("graph", 0), cfg.params.max_retries)
}

fn load_graph(cfg: &ExperimentConfig, path: Option<&Path>) -> Result<Graph> {
    match path {
        Some(p) => Graph::read_edge_list(p),
        None => generate(cfg),
    }
}

/// Read a tuple from plain tuple JSON, an embedding attempt or a report.
pub fn load_tuple(path: &Path) -> Result<PointTuple> {
    let value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let mut v = &value;
    for _ in 0..4 {
        if v.get("points").is_some() {
            let t: PointTuple = serde_json::from_value(v.clone())?;
            t.validate()?;
            return Ok(t);
        }
        v = match v.get("tuple").or_else(|| v.get("result")) {
            Some(inner) => inner,
            None => break,
        };
    }
    Err(Error::Parse(format!("{} holds no point tuple", path.display())))
}

fn embed(cfg: &ExperimentConfig, method: EmbedMethod, graph: Option<&Path>, iters: usize) -> Result<String> {
    let g = load_graph(cfg, graph)?;
    let attempt = match method {
        EmbedMethod::Landmark => {
            let emb = landmark_embedding(&g, cfg.d, &mut cfg.streams().stream("landmarks", 0))?;
            embedding_report(&NormedSpace::linf(cfg.d), &emb.to_tuple(), &g)?
        }
        EmbedMethod::Stress => {
            let schedule = StressSchedule { restarts: cfg.trials, ..StressSchedule::default() };
            stress_embed(&g, &cfg.space()?, iters, &mut cfg.streams().stream("stress", 0), &schedule)?
        }
    };
    Ok(envelope(cfg, "embed", attempt))
}

#[derive(Serialize)]
struct CheckResult {
    space_label: String,
    isomorphic: bool,
    iso: crate::geom::IsoCheck,
    domain: DomainCheck,
}

fn check(cfg: &ExperimentConfig, graph: &Path, tuple: &Path) -> Result<String> {
    let g = Graph::read_edge_list(graph)?;
    let x = load_tuple(tuple)?;
    let space = parse_space(&cfg.space, x.dim)?;
    let iso = is_geom_iso(&space, &x, &g)?;
    let domain = in_domain(&space, &x, cfg.delta, cfg.params.diam_const)?;
    Ok(envelope(cfg, "check", CheckResult { space_label: space.label(), isomorphic: iso.isomorphic, iso, domain }))
}

fn certify(cfg: &ExperimentConfig, graph: Option<&Path>, witness: Option<&Path>, p: f64) -> Result<String> {
    let g = load_graph(cfg, graph)?;
    let witness = witness.map(load_tuple).transpose()?;
    let d = witness.as_ref().map_or(cfg.d, |w| w.dim);
    let space = parse_space(&cfg.space, d)?;
    let spectrum = second_eigenvalue(&g)?;
    let report = obstruction_report_with(&g, &space, witness.as_ref(), p, cfg.params.c_naor, &spectrum)?;
    Ok(envelope(cfg, "certify", report))
}

#[derive(Serialize)]
struct DiscretizeResult {
    record: crate::discretize::DiscretizationRecord,
    audit: DiscretizationAudit,
}

fn discretize_cmd(cfg: &ExperimentConfig, tuple: Option<&Path>, force: bool) -> Result<String> {
    let streams = cfg.streams();
    let x = match tuple {
        Some(p) => load_tuple(p)?,
        None => random_domain_tuple(&cfg.space()?, cfg.n, cfg.delta, cfg.params.diam_const, &mut streams.stream("tuple", 0))?,
    };
    let space = parse_space(&cfg.space, x.dim)?;
    let net = build_multiscale_net(&space, x.len(), &cfg.params, &mut streams.stream("net", 0))?;
    let record = discretize_with(&net, &x, &cfg.params, &mut streams.stream("seeds", 0))?;
    let audit = check_discretization(&space, &x, &record, &cfg.params, force);
    Ok(envelope(cfg, "discretize", DiscretizeResult { record, audit }))
}

fn count(
    cfg: &ExperimentConfig,
    exact: bool,
    mode: &str,
    contiguity: bool,
    l_size: Option<usize>,
    edges: Option<usize>,
) -> Result<String> {
    let (n, delta) = (cfg.n, cfg.delta);
    let result = if let Some(l) = l_size {
        let m = match edges {
            Some(m) => m,
            None if (n * delta) % 2 == 1 => {
                return Err(Error::InvalidArgument(format!("Δ·n = {} is odd", n * delta)));
            }
            None => n * delta / 2,
        };
        CountResult::from_rational(&prob_disjoint_exact(n, m, l)?)
    } else if contiguity {
        CountResult::from_rational(&contiguity_prob_exact(n, delta)?)
    } else if exact {
        CountResult::from_integer(&count_regular_exact(n, delta)?)
    } else {
        let mode = PrefactorMode::parse(mode)?;
        CountResult::from_log(count_regular_formula(n, delta, mode)?, mode)
    };
    if exact {
        let v = result.exact.ok_or_else(|| Error::InvalidArgument("no exact value".into()))?;
        return Ok(format!("{v}\n"));
    }
    Ok(envelope(cfg, "count", result))
}

/// One stage of the audit pipeline.
#[derive(Debug, Clone, Serialize)]
pub struct Step {
    pub stage: String,
    pub outcome: String,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct GraphSummary {
    pub n: usize,
    pub delta: usize,
    pub m: usize,
    pub connected: bool,
    pub diameter: Option<usize>,
    pub lambda2: f64,
    pub gap: f64,
    pub eigen_method: EigenMethod,
    pub eigen_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessSummary {
    pub method: String,
    pub space_label: String,
    pub landmarks: Vec<usize>,
    pub max_edge_linf: u32,
    pub success: bool,
    pub edge_violations: usize,
    pub nonedge_violations: usize,
    pub coincident_pairs: usize,
    pub domain: DomainCheck,
}

#[derive(Debug, Clone, Serialize)]
pub struct XiSummary {
    pub source: String,
    pub space_label: String,
    pub regime: bool,
    pub audit: DiscretizationAudit,
    pub long_pairs: usize,
    pub short_pairs: usize,
    /// `n^{1+2ε}`.
    pub short_pair_bound: f64,
    pub net_sizes: crate::discretize::NetSizes,
    pub remark: crate::discretize::RemarkSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct DisjointnessSummary {
    /// `n(n−1)/2`.
    pub population: usize,
    /// `nΔ/2`.
    pub draws: usize,
    /// `|L|`.
    pub marked: usize,
    /// Absent when the probability is exactly zero (fewer unmarked pairs than draws).
    pub log_probability: Option<f64>,
    pub log10_probability: Option<f64>,
    /// Exact rational, when short enough to print.
    pub exact: Option<String>,
    pub exponent_bound: ExponentBound,
    pub within_explicit_bound: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub graph: GraphSummary,
    pub witness: WitnessSummary,
    pub obstruction: ObstructionReport,
    pub xi: XiSummary,
    pub disjointness: DisjointnessSummary,
    pub trail: Vec<Step>,
    pub verdict: Verdict,
}

const EXACT_PRINT_LIMIT: usize = 200;

/// Full pipeline on one instance: graph and spectrum, landmark witness and
/// its domain membership, spectral certificate, discretization of a random
/// domain tuple with its long-distance set, and the exact probability that
/// the graph avoids that set.
pub fn audit(cfg: &ExperimentConfig) -> Result<AuditReport> {
    let streams = cfg.streams();
    let params = &cfg.params;
    let mut trail = Vec::new();
    let mut step = |stage: &str, outcome: &str, detail: String| {
        trail.push(Step { stage: stage.into(), outcome: outcome.into(), detail });
    };

    let g = generate(cfg)?;
    let spectrum = second_eigenvalue_with(&g, EigenMethod::Lanczos)?;
    let graph = GraphSummary {
        n: g.n(),
        delta: cfg.delta,
        m: g.m(),
        connected: g.is_connected(),
        diameter: diameter(&g),
        lambda2: spectrum.lambda2,
        gap: spectrum.gap,
        eigen_method: spectrum.method,
        eigen_residual: spectrum.residual,
    };
    step(
        "graph",
        if graph.connected { "connected" } else { "disconnected" },
        format!("λ2 = {:.6}, gap = {:.6}, diameter = {:?}", graph.lambda2, graph.gap, graph.diameter),
    );

    let linf = NormedSpace::linf(cfg.d);
    let emb = landmark_embedding(&g, cfg.d, &mut streams.stream("landmarks", 0))?;
    let tuple = emb.to_tuple();
    let attempt: EmbeddingAttempt = embedding_report(&linf, &tuple, &g)?;
    let domain = in_domain(&linf, &tuple, cfg.delta, params.diam_const)?;
    let witness = WitnessSummary {
        method: "landmark".into(),
        space_label: linf.label(),
        landmarks: emb.landmarks.clone(),
        max_edge_linf: emb.max_edge_linf(&g),
        success: attempt.success,
        edge_violations: attempt.edge_violations,
        nonedge_violations: attempt.nonedge_violations,
        coincident_pairs: attempt.coincident_pairs,
        domain: domain.clone(),
    };
    step(
        "witness",
        if attempt.success { "embedding" } else { "not-an-embedding" },
        format!(
            "landmark tuple in {}: {} edge and {} non-edge violations",
            witness.space_label, attempt.edge_violations, attempt.nonedge_violations
        ),
    );
    step(
        "witness-domain",
        if domain.inside { "inside" } else { "rejected" },
        match &domain.reason {
            DomainReason::Ok => "tuple is in the domain".to_string(),
            DomainReason::Diameter { index, norm, limit } => format!("‖x_{index}‖ = {norm} exceeds D·ln n = {limit}"),
            DomainReason::Sparsity { index, crowd } => {
                format!("x_{index} has {} other points within 1/2, more than Δ = {}", crowd.len(), cfg.delta)
            }
        },
    );

    let obstruction = obstruction_report_with(&g, &linf, Some(&tuple), 1.0, params.c_naor, &spectrum)?;
    step(
        "certificate",
        match obstruction.verdict {
            Verdict::CertifiedNonembeddable => "certified-nonembeddable",
            Verdict::Inconclusive => "inconclusive",
        },
        obstruction.certificate.reason.clone(),
    );

    let space = cfg.space()?;
    let x = random_domain_tuple(&space, cfg.n, cfg.delta, params.diam_const, &mut streams.stream("tuple", 0))?;
    let net = build_multiscale_net(&space, cfg.n, params, &mut streams.stream("net", 0))?;
    let record = discretize_with(&net, &x, params, &mut streams.stream("seeds", 0))?;
    let disc = check_discretization(&space, &x, &record, params, false);
    let total = cfg.n * (cfg.n - 1) / 2;
    let long_pairs = record.long.unordered_len();
    let xi = XiSummary {
        source: "synthetic".into(),
        space_label: space.label(),
        regime: disc.regime,
        long_pairs,
        short_pairs: total - long_pairs,
        short_pair_bound: (cfg.n as f64).powf(1.0 + 2.0 * params.eps),
        net_sizes: record.net_sizes,
        remark: record.remark,
        audit: disc,
    };
    step(
        "discretize",
        if xi.audit.passed() { "unconditional-claims-pass" } else { "violations" },
        format!(
            "regime {}; {} remark and {} chain violations; L recomputed {}",
            if xi.regime { "holds" } else { "fails" },
            xi.audit.remark_violations,
            xi.audit.chain_violations,
            if xi.audit.factorization { "matches" } else { "differs" }
        ),
    );

    let draws = cfg.n * cfg.delta / 2;
    let prob = prob_disjoint_exact(cfg.n, draws, long_pairs)?;
    let log_p = ln_rational(&prob);
    let exact = prob.to_string();
    let bound = prob_disjoint_exponent_bound(cfg.n, cfg.delta, params.eps)?;
    let disjointness = DisjointnessSummary {
        population: total,
        draws,
        marked: long_pairs,
        log_probability: log_p.is_finite().then_some(log_p),
        log10_probability: log_p.is_finite().then_some(log_p / std::f64::consts::LN_10),
        exact: (exact.len() <= EXACT_PRINT_LIMIT).then_some(exact),
        exponent_bound: bound,
        within_explicit_bound: log_p <= bound.explicit,
    };
    step(
        "disjointness",
        if disjointness.within_explicit_bound { "within-bound" } else { "exceeds-bound" },
        if log_p.is_finite() {
            format!("log P[E(G) ∩ L = ∅] = {log_p:.6} vs explicit bound {:.6}", bound.explicit)
        } else {
            format!("P[E(G) ∩ L = ∅] = 0: {} short pairs cannot hold {draws} edges", total - long_pairs)
        },
    );

    let verdict = obstruction.verdict;
    Ok(AuditReport { graph, witness, obstruction, xi, disjointness, trail, verdict })
}
