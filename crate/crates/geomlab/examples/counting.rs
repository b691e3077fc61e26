//! Exact and asymptotic counts of labeled regular graphs, and the
//! hypergeometric disjointness probability.
//!
//! cargo run --release --example counting

use geomlab::count::{
    contiguity_prob_exact, count_regular_backtrack, count_regular_exact, count_regular_formula, ln_rational,
    prob_disjoint_exact, prob_disjoint_exponent_bound, PrefactorMode,
};

fn main() -> geomlab::error::Result<()> {
    println!("{:>3} {:>16} {:>10} {:>10}", "n", "cubic graphs", "standard", "paper");
    for n in (4..=20).step_by(2) {
        let exact = count_regular_exact(n, 3)?;
        let ex = exact.to_string().parse::<f64>().unwrap_or(f64::NAN);
        let std = count_regular_formula(n, 3, PrefactorMode::Standard)?.exp() / ex;
        let paper = count_regular_formula(n, 3, PrefactorMode::Paper)?.exp() / ex;
        println!("{n:>3} {exact:>16} {std:>10.4} {paper:>10.4}");
    }
    println!("backtracking count for n = 10: {}", count_regular_backtrack(10, 3)?);
    println!("P[uniform 9-edge graph on 6 vertices is cubic] = {}", contiguity_prob_exact(6, 3)?);

    for n in [50, 100, 200] {
        let eps = 0.1;
        let total = n * (n - 1) / 2;
        let short = (n as f64).powf(1.0 + 2.0 * eps).floor() as usize;
        let p = prob_disjoint_exact(n, 3 * n / 2, total - short)?;
        let b = prob_disjoint_exponent_bound(n, 3, eps)?;
        println!(
            "n = {n}: ln P[disjoint from all but {short} pairs] = {:.2}, explicit bound {:.2}, leading term {:.2}",
            ln_rational(&p),
            b.explicit,
            b.leading
        );
    }
    Ok(())
}
