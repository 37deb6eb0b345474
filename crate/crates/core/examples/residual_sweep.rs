//! PO-LCFS residual cost under an infinite-variance law, swept over the
//! demotion threshold.

use mg1lab::bounds::{residual_chain, BoundParams};
use mg1lab::estim::{batch_means_median, compare, Confidence, Field};
use mg1lab::sim::PolicyFactory;
use mg1lab::{GittinsConfig, PolicySpec, ServiceDistribution, Simulator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let lambda = 0.25;
    let d = ServiceDistribution::pareto(1.5)?;
    let p = BoundParams::from_distribution(lambda, &d)?;
    let sim = Simulator::new(lambda, d.clone())?;
    let conf = Confidence::one_sided(0.99)?;
    for s in [10.0, 20.0, 40.0, 80.0] {
        let spec = PolicySpec::po_lcfs(PolicySpec::Gittins, s);
        let f: PolicyFactory = spec.resolve(&d, &GittinsConfig::default())?;
        let rs = sim.run_batch(&f, 200_000, 3)?;
        let r = batch_means_median(&rs, Field::Residual, 32, conf)?;
        let b = residual_chain(&p, &d, s)?;
        println!(
            "{spec}: R {r}  ER_ub {:.4}  {}",
            b.er_ub,
            compare(&r, b.er_ub)
        );
    }
    Ok(())
}
