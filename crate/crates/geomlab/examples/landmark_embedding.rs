//! Landmark (Fréchet-type) maps of graphs into ℓ∞^d: edges never stretch
//! beyond 1, but most non-edges collapse.
//!
//! cargo run --release --example landmark_embedding

use geomlab::embed::{embedding_report, landmark_embedding};
use geomlab::graphs::gen_regular;
use geomlab::norms::NormedSpace;
use geomlab::rng::StreamFactory;

fn main() -> geomlab::error::Result<()> {
    let streams = StreamFactory::new(11);
    let g = gen_regular(500, 3, &mut streams.stream("graph", 0), 64)?;
    for d in [2, 4, 8, 16] {
        let emb = landmark_embedding(&g, d, &mut streams.stream("landmarks", d as u64))?;
        let report = embedding_report(&NormedSpace::linf(d), &emb.to_tuple(), &g)?;
        println!(
            "d = {d:>2}: max edge ℓ∞ = {}, non-edge violations = {:>6}, coincident pairs = {:>6}, pairs at distance ≥ 3: {:.3}",
            emb.max_edge_linf(&g),
            report.nonedge_violations,
            report.coincident_pairs,
            emb.far_pair_fraction(3)
        );
    }
    Ok(())
}
