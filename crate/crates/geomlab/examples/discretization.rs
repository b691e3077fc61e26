//! Multiscale-net discretization of a domain tuple and its audit.
//!
//! cargo run --release --example discretization

use geomlab::discretize::{build_multiscale_net, check_discretization, discretize_with, Params};
use geomlab::geom::random_domain_tuple;
use geomlab::norms::NormedSpace;
use geomlab::rng::StreamFactory;

fn main() -> geomlab::error::Result<()> {
    let streams = StreamFactory::new(23);
    let n = 1024;
    let params = Params { c0: 0.05, ..Params::default() };
    for space in [NormedSpace::l2(2), NormedSpace::linf(2)] {
        let net = build_multiscale_net(&space, n, &params, &mut streams.stream("net", 0))?;
        let sizes = net.sizes();
        println!("{}: base net {} points (bound {:.0}), local template {} points", space.label(), sizes.base, sizes.base_bound, sizes.local);
        for k in 0..3 {
            let x = random_domain_tuple(&space, n, params.delta, params.diam_const, &mut streams.stream("tuple", k))?;
            let rec = discretize_with(&net, &x, &params, &mut streams.stream("seeds", k))?;
            let audit = check_discretization(&space, &x, &rec, &params, false);
            let completed: usize = rec.seeds.levels.iter().map(|l| l.completed).sum();
            println!(
                "  tuple {k}: levels {:?}..={}, {} seeds completed greedily, |L| = {} of {} pairs, audit passed = {}, regime = {}",
                rec.profile.ell_min,
                rec.profile.ell_max,
                completed,
                rec.long.unordered_len(),
                n * (n - 1) / 2,
                audit.passed(),
                audit.regime
            );
        }
    }
    Ok(())
}
