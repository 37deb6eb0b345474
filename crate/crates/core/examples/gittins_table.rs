//! Gittins index tables for a few service laws.

use mg1lab::gittins::gittins_index;
use mg1lab::{GittinsConfig, GittinsTable, ServiceDistribution};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = GittinsConfig::default();
    for spec in [
        "exp:rate=1",
        "pareto:alpha=3",
        "pareto:alpha=1.5",
        "unif:a=0,b=2",
    ] {
        let d: ServiceDistribution = spec.parse()?;
        let table = GittinsTable::build(&d, &cfg)?;
        println!(
            "{d}: {} grid points up to a = {}",
            table.grid().len(),
            table.a_max()
        );
        for a in [0.0, 0.5, 1.0, 1.9, 4.0, 10.0] {
            println!(
                "  a = {a:>4}: table {:>10.6}  direct {:>10.6}",
                table.lookup(a),
                gittins_index(&d, a, &cfg)
            );
        }
    }
    Ok(())
}
