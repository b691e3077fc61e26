//! Norms, projections and greedy r-nets of norm balls.
//!
//! cargo run --release --example norms_and_nets

use geomlab::norms::{greedy_net, identity_distortion, project_to_set, NormedSpace};
use geomlab::rng::StreamFactory;

fn main() -> geomlab::error::Result<()> {
    let streams = StreamFactory::new(7);
    let spaces = [NormedSpace::l1(2), NormedSpace::l2(2), NormedSpace::linf(2), NormedSpace::lp(2, 3.0)?];

    let (u, v) = ([0.0, 0.0], [3.0, 4.0]);
    for s in &spaces {
        println!("{:>8}: dist((0,0), (3,4)) = {:.4}", s.label(), s.dist(&u, &v));
    }

    let candidates = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0]];
    let (k, p) = project_to_set(&spaces[1], &[0.4, 0.6], &candidates)?;
    println!("nearest candidate to (0.4, 0.6) in l2: #{k} = {p:?}");

    for (i, s) in spaces.iter().enumerate() {
        let net = greedy_net(s, &[0.0, 0.0], 1.0, 0.1, &mut streams.stream("net", i as u64))?;
        let cover = net.verify_covering(s, 20_000, 1e-9, &mut streams.stream("cover", i as u64))?;
        let build = net.build.expect("fresh nets record their build");
        println!(
            "{:>8}: 0.1-net of the unit ball has {} points, min separation {:.4} (> {:.4}), {} of {} samples uncovered",
            s.label(),
            net.len(),
            net.min_separation(s),
            build.insertion_threshold,
            cover.uncovered,
            cover.samples
        );
    }

    let bm = identity_distortion(&spaces[1], &spaces[2], 4096, &mut streams.stream("bm", 0))?;
    println!("identity distortion l2 -> linf in 2D: {bm:.4} (exact value √2 = {:.4})", 2f64.sqrt());
    Ok(())
}
