//! Truncate-then-switch against FB on common random numbers, with the
//! per-period cost gap compared to its bound.

use mg1lab::bounds::{gap_bound, BoundParams};
use mg1lab::estim::{compare, paired_difference, Confidence, Field};
use mg1lab::sim::PolicyFactory;
use mg1lab::{GittinsConfig, PolicySpec, ServiceDistribution, Simulator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let d = ServiceDistribution::pareto(3.0)?;
    let p = BoundParams::from_distribution(1.0, &d)?;
    let sim = Simulator::new(1.0, d.clone())?;
    let conf = Confidence::one_sided(0.99)?;
    let n = 200_000;
    let reference = sim.run_batch(&PolicyFactory::Fb, n, 4)?;
    for s in [1.0, 2.0, 4.0, 8.0] {
        let spec = PolicySpec::trunc_switch(PolicySpec::LcfsPreempt, s);
        let f = spec.resolve(&d, &GittinsConfig::default())?;
        let rs = sim.run_batch(&f, n, 4)?;
        let gap = paired_difference(&rs, &reference, Field::Sojourn, conf)?;
        let b = gap_bound(&p, &d, s)?;
        let switched = rs.iter().filter(|r| r.switched).count();
        println!(
            "{spec}: gap {gap}  g {:.3}  {}  ({switched} of {n} periods switched)",
            b.g,
            compare(&gap, b.g)
        );
    }
    Ok(())
}
