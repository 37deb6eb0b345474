//! Closed-form bound curves over a threshold grid, no simulation.
//!
//! Prints the gap bound for a finite-variance Pareto law and the residual
//! cost chain for an infinite-variance one.

use mg1lab::bounds::{gap_bound, gap_constants, residual_chain, BoundParams};
use mg1lab::ServiceDistribution;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let d = ServiceDistribution::pareto(3.0)?;
    let p = BoundParams::from_distribution(1.0, &d)?;
    let (k1, k2) = gap_constants(&p)?;
    println!(
        "{d}, lambda = 1, rho = {:.3}: K1 = {k1}, K2 = {k2}",
        p.rho()
    );
    println!(
        "{:>6} {:>12} {:>12} {:>12}",
        "s", "g", "g_published", "product_ub"
    );
    for s in [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0] {
        let b = gap_bound(&p, &d, s)?;
        println!(
            "{s:>6} {:>12.5} {:>12.5} {:>12.5}",
            b.g, b.g_published, b.product_ub
        );
    }

    let heavy = ServiceDistribution::pareto(1.5)?;
    let p = BoundParams::from_distribution(0.25, &heavy)?;
    println!();
    println!("{heavy}, lambda = 0.25 (infinite variance)");
    println!(
        "{:>6} {:>10} {:>10} {:>10} {:>12}",
        "s", "E[M]", "E[L]", "ER_ub", "condition"
    );
    for s in [10.0, 20.0, 40.0, 80.0, 160.0, 320.0] {
        let c = residual_chain(&p, &heavy, s)?;
        println!(
            "{s:>6} {:>10.5} {:>10.5} {:>10.5} {:>12.6}",
            c.em,
            c.el,
            c.er_ub,
            heavy.residual_condition(s)
        );
    }
    Ok(())
}
