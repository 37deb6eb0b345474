//! Busy-period statistics on periods that contain a long job, against
//! their closed-form upper bounds.

use mg1lab::bounds::{long_period_bounds, BoundParams};
use mg1lab::estim::{compare, conditional_mean, Confidence, Field};
use mg1lab::sim::PolicyFactory;
use mg1lab::{ServiceDistribution, Simulator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let d = ServiceDistribution::pareto(3.0)?;
    let p = BoundParams::from_distribution(1.0, &d)?;
    let conf = Confidence::one_sided(0.99)?;
    for s in [1.0, 2.0, 4.0] {
        let b = long_period_bounds(&p, &d.tail_stats(s)?)?;
        let sim = Simulator::new(1.0, d.clone())?.with_threshold(s);
        let rs = sim.run_batch(&PolicyFactory::Fb, 300_000, 2)?;
        let w = conditional_mean(&rs, Field::Busy, conf, 100)?;
        let n = conditional_mean(&rs, Field::Jobs, conf, 100)?;
        println!("s = {s}");
        println!(
            "  P(long)      {}  bound {:.5}  {}",
            w.p_long,
            b.p_long_ub,
            compare(&w.p_long, b.p_long_ub)
        );
        println!(
            "  W | long     {}  bound {:.5}  {}",
            w.estimate,
            b.busy_ub,
            compare(&w.estimate, b.busy_ub)
        );
        println!(
            "  N_B | long   {}  bound {:.5}  {}",
            n.estimate,
            b.jobs_ub,
            compare(&n.estimate, b.jobs_ub)
        );
    }
    Ok(())
}
