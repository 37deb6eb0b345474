//! Event trace of the first busy period that demotes a job, as CSV.

use std::io;

use mg1lab::sim::{write_trace_csv, BuildPolicy};
use mg1lab::{GittinsConfig, PolicySpec, ServiceDistribution, Simulator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let d = ServiceDistribution::pareto(3.0)?;
    let sim = Simulator::new(0.8, d.clone())?;
    let spec: PolicySpec = "po-lcfs(inner=fb,s=1)".parse()?;
    let mut policy = spec.resolve(&d, &GittinsConfig::default())?.build();
    for k in 0.. {
        let mut rng = Simulator::period_rng(7, k);
        let (record, events, _) = sim.run_traced(policy.as_mut(), &mut rng)?;
        if !record.event_a {
            eprintln!(
                "period {k}: {} jobs, busy {:.4}",
                record.jobs,
                record.busy_time()
            );
            write_trace_csv(io::stdout().lock(), &events)?;
            break;
        }
    }
    Ok(())
}
