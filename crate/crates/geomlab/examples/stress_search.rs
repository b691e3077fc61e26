//! Gradient search for geometric embeddings of small graphs.
//!
//! cargo run --release --example stress_search

use geomlab::embed::{stress_embed, StressSchedule};
use geomlab::graphs::Graph;
use geomlab::norms::NormedSpace;
use geomlab::rng::StreamFactory;

fn main() -> geomlab::error::Result<()> {
    let streams = StreamFactory::new(3);
    let schedule = StressSchedule::default();
    let cases = [
        ("C6", Graph::cycle(6), NormedSpace::l2(2)),
        ("C4", Graph::cycle(4), NormedSpace::l2(1)),
        ("P5", Graph::path(5), NormedSpace::l2(1)),
        ("K4", Graph::complete(4), NormedSpace::linf(2)),
        ("Petersen", Graph::petersen(), NormedSpace::l2(2)),
    ];
    for (k, (name, g, space)) in cases.iter().enumerate() {
        let a = stress_embed(g, space, 3000, &mut streams.stream("stress", k as u64), &schedule)?;
        println!(
            "{name:>8} in {}^{}: success = {}, edge violations = {}, non-edge violations = {}, final objective = {:.3e}",
            space.label(),
            space.dim(),
            a.success,
            a.edge_violations,
            a.nonedge_violations,
            a.objective_trace.last().copied().unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
