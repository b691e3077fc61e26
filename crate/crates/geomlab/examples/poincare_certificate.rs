//! Poincaré ratios and the spectral non-embeddability certificate.
//!
//! cargo run --release --example poincare_certificate

use geomlab::geom::random_compact_tuple;
use geomlab::graphs::{gen_regular, second_eigenvalue, Graph};
use geomlab::norms::NormedSpace;
use geomlab::obstruct::{avg_distance_lower_bound, dimension_threshold, mean_pairwise_distance, obstruction_report, poincare_ratio};
use geomlab::rng::StreamFactory;

fn main() -> geomlab::error::Result<()> {
    let streams = StreamFactory::new(17);

    let k = Graph::complete(20);
    let l1 = NormedSpace::l1(3);
    let x = random_compact_tuple(&l1, 20, 19, 8.0, &mut streams.stream("tuple", 0))?;
    println!("K20 Poincaré ratio in l1^3: {:.12} (expected 19/20)", poincare_ratio(&k, &l1, &x, 1.0)?);

    let l2 = NormedSpace::l2(2);
    let t = random_compact_tuple(&l2, 400, 3, 8.0, &mut streams.stream("tuple", 1))?;
    let bound = avg_distance_lower_bound(400, 3, 2);
    println!(
        "compact sparse tuple, n = 400: mean distance {:.3} vs volumetric lower bound {:.3}",
        mean_pairwise_distance(&l2, &t, 1.0)?,
        bound.value
    );

    let g = gen_regular(2000, 3, &mut streams.stream("graph", 0), 64)?;
    let gap = second_eigenvalue(&g)?.gap;
    for c in [16.0, 1.0] {
        println!("n = 2000, gap = {gap:.4}, C = {c}: certified up to d = {}", dimension_threshold(2000, 3, gap, c)?);
    }
    let report = obstruction_report(&g, &NormedSpace::l2(2), None, 1.0, 1.0)?;
    println!("l2^2 with C = 1: {:?} ({})", report.verdict, report.certificate.reason);
    Ok(())
}
