//! The end-to-end audit: graph, witness, certificate, discretization, L and
//! the disjointness probability, printed as a verdict trail.
//!
//! cargo run --release --example audit_pipeline

use geomlab::cli::{audit, ExperimentConfig};

fn main() -> geomlab::error::Result<()> {
    let cfg = ExperimentConfig { n: 1024, d: 2, seed: 9, ..ExperimentConfig::default() };
    let report = audit(&cfg)?;
    for step in &report.trail {
        println!("{:<15} {:<28} {}", step.stage, step.outcome, step.detail);
    }
    println!("verdict: {:?}", report.verdict);
    Ok(())
}
