//! Drives the experiment layer from a JSON config, as the CLI does.

use mg1lab::experiment::{cmd_bounds, cmd_sweep, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::temp_dir().join("mg1lab-example");
    let cfg = ExperimentConfig::from_json(&format!(
        r#"{{"lambda": 1, "dist": "pareto:alpha=3",
            "policy": "trunc-switch(fallback=lcfs,s=1)",
            "s_list": [1, 2, 4], "n_periods": 50000, "seed": 9,
            "out": {:?}}}"#,
        out.display().to_string()
    ))?;
    print!("{}", cmd_bounds(&cfg)?.render());
    let sweep = cmd_sweep(&cfg)?;
    print!("{}", sweep.gap.render());
    for w in &sweep.warnings {
        eprintln!("warning: {w}");
    }
    println!("written under {}", out.display());
    Ok(())
}
