use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mg1lab::experiment::{self, ExperimentConfig, ExperimentError, Overrides};

/// M/G/1 scheduling laboratory.
///
/// Settings come from an optional JSON config (same keys as the long
/// flags, plus `reference`, `batches` and `event_cap`) and are overridden by
/// flags. Defaults: lambda 1, dist pareto:alpha=3, policy
/// trunc-switch(fallback=lcfs,s=1), reference fb, s 1,2,4,8, n 100000,
/// seed 1, confidence 0.99, out ./out.
///
/// Exit status: 0 ok, 1 config error, 2 validation failure, 3 divergence
/// guard (a busy period exceeded the event cap).
#[derive(Parser)]
#[command(name = "mg1lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Oracle checks (P-K mean sojourn, renewal means, workload invariance).
    Validate(Common),
    /// Simulate one policy and report per-busy-period estimates.
    Simulate(Common),
    /// Gap and residual-cost sweep over truncation points.
    Sweep(Common),
    /// Closed-form bounds over truncation points.
    Bounds(Common),
    /// Gittins index table for the service law.
    GittinsTable(Common),
}

#[derive(Args)]
struct Common {
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Arrival rate.
    #[arg(long)]
    lambda: Option<f64>,
    /// Service law, e.g. pareto:alpha=3, exp:rate=1, truncA(pareto:alpha=3,s=4).
    #[arg(long)]
    dist: Option<String>,
    /// Policy: fcfs, lcfs, fb, srpt, gittins, po-lcfs(inner=..,s=..),
    /// trunc-switch(fallback=..,s=..).
    #[arg(long)]
    policy: Option<String>,
    /// Truncation points, comma separated.
    #[arg(long, value_delimiter = ',')]
    s: Option<Vec<f64>>,
    /// Busy periods per run.
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    confidence: Option<f64>,
}

impl Common {
    fn config(self) -> Result<ExperimentConfig, ExperimentError> {
        let base = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        Ok(base.apply(Overrides {
            lambda: self.lambda,
            dist: self.dist,
            policy: self.policy,
            s_list: self.s,
            n_periods: self.n,
            seed: self.seed,
            out: self.out,
            confidence: self.confidence,
        }))
    }
}

fn run(cmd: Command) -> Result<(), ExperimentError> {
    match cmd {
        Command::Validate(c) => {
            let cfg = c.config()?;
            let report = experiment::cmd_validate(&cfg)?;
            print!("{}", report.table.render());
        }
        Command::Simulate(c) => print!("{}", experiment::cmd_simulate(&c.config()?)?.render()),
        Command::Sweep(c) => {
            let out = experiment::cmd_sweep(&c.config()?)?;
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            print!("{}", out.gap.render());
            print!("{}", out.residual.render());
        }
        Command::Bounds(c) => print!("{}", experiment::cmd_bounds(&c.config()?)?.render()),
        Command::GittinsTable(c) => {
            print!("{}", experiment::cmd_gittins_table(&c.config()?)?.render())
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
