//! Checks FCFS mean sojourn against the Pollaczek-Khinchine formula.
//!
//! `cargo run --release --example validate_simulator -- [periods]`

use mg1lab::bounds::{pk_mean_sojourn, BoundParams};
use mg1lab::estim::{ratio_mean, regen_mean, Confidence, Field};
use mg1lab::sim::PolicyFactory;
use mg1lab::{ServiceDistribution, Simulator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n: u64 = std::env::args()
        .nth(1)
        .map(|a| a.parse())
        .transpose()?
        .unwrap_or(200_000);
    let conf = Confidence::two_sided(0.99)?;
    for (lambda, d) in [
        (0.5, ServiceDistribution::exponential(1.0)?),
        (0.3, ServiceDistribution::deterministic(2.0)?),
        (0.5, ServiceDistribution::uniform(0.0, 1.0)?),
    ] {
        let p = BoundParams::from_distribution(lambda, &d)?;
        let sim = Simulator::new(lambda, d.clone())?;
        let rs = sim.run_batch(&PolicyFactory::Fcfs, n, 1)?;
        let t = ratio_mean(&rs, Field::Sojourn, Field::Jobs, conf)?;
        let w = regen_mean(&rs, Field::Busy, conf)?;
        println!(
            "{d}, lambda {lambda}: T {t}  (exact {:.6});  W {w}  (exact {:.6})",
            pk_mean_sojourn(&p)?,
            p.mean_busy()
        );
    }
    Ok(())
}
