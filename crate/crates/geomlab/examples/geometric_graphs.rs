//! Geometric graphs of point tuples, sparsity and the domain of tuples.
//!
//! cargo run --release --example geometric_graphs

use geomlab::geom::{geom, in_domain, is_geom_iso, random_domain_tuple, PointTuple};
use geomlab::graphs::Graph;
use geomlab::norms::NormedSpace;
use geomlab::rng::StreamFactory;

fn main() -> geomlab::error::Result<()> {
    let l2 = NormedSpace::l2(2);
    let hexagon: Vec<Vec<f64>> = (0..6)
        .map(|k| {
            let a = std::f64::consts::PI * k as f64 / 3.0;
            vec![0.99 * a.cos(), 0.99 * a.sin()]
        })
        .collect();
    let x = PointTuple::new(2, hexagon)?;
    let g = geom(&l2, &x, 1.0)?;
    println!("regular hexagon with side 0.99: {} edges, is C6: {}", g.m(), is_geom_iso(&l2, &x, &Graph::cycle(6))?.isomorphic);

    let dense = PointTuple::new(2, vec![vec![0.0, 0.0], vec![0.1, 0.0], vec![0.0, 0.1], vec![0.1, 0.1], vec![0.05, 0.05]])?;
    println!("five points in a 0.1-square: {:?}", in_domain(&l2, &dense, 3, 8.0)?);

    let streams = StreamFactory::new(5);
    let t = random_domain_tuple(&l2, 500, 3, 8.0, &mut streams.stream("tuple", 0))?;
    let gt = geom(&l2, &t, 1.0)?;
    let max_deg = (0..gt.n()).map(|u| gt.degree(u)).max().unwrap_or(0);
    println!(
        "random domain tuple, n = 500: inside = {}, geometric graph has {} edges, max degree {}",
        in_domain(&l2, &t, 3, 8.0)?.inside,
        gt.m(),
        max_deg
    );
    Ok(())
}
