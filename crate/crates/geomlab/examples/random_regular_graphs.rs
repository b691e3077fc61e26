//! Uniform random Δ-regular graphs: connectivity, diameter and λ2.
//!
//! cargo run --release --example random_regular_graphs

use geomlab::graphs::{diameter, gen_regular, second_eigenvalue};
use geomlab::rng::StreamFactory;

fn main() -> geomlab::error::Result<()> {
    let streams = StreamFactory::new(2024);
    let (n, delta) = (1000, 3);
    let ramanujan = 2.0 * ((delta - 1) as f64).sqrt();
    println!("n = {n}, Δ = {delta}, 2√(Δ−1) = {ramanujan:.4}");
    for k in 0..5 {
        let g = gen_regular(n, delta, &mut streams.stream("graph", k), 64)?;
        let spec = second_eigenvalue(&g)?;
        println!(
            "sample {k}: connected = {}, diameter = {:?}, λ2 = {:.4}, gap = {:.4}",
            g.is_connected(),
            diameter(&g),
            spec.lambda2,
            spec.gap
        );
    }
    let g = gen_regular(10, 3, &mut streams.stream("graph", 99), 64)?;
    print!("a 3-regular graph on 10 vertices:\n{}", g.to_edge_list());
    Ok(())
}
