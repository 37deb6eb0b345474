//! Experiment configuration and the command implementations behind the
//! `mg1lab` binary. Every command writes its CSV output atomically into the
//! configured directory and also returns the rendered tables.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{self, BoundParams};
use crate::dist::ServiceDistribution;
use crate::estim::{self, Confidence, EstimError, Estimate, Field};
use crate::gittins::{GittinsConfig, GittinsTable};
use crate::report::{num, Table};
use crate::sim::{PolicyFactory, PolicySpec, SimError, Simulator, DEFAULT_EVENT_CAP};

const NA: &str = "N/A";

/// Relative tolerance for oracle checks in `validate`.
pub const ORACLE_TOLERANCE: f64 = 0.02;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config: {0}")]
    Config(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("divergence guard: {0}")]
    Divergence(SimError),
    #[error("simulation: {0}")]
    Sim(SimError),
    #[error("estimation: {0}")]
    Estim(#[from] EstimError),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
}

impl ExperimentError {
    /// 1 config error, 2 validation failure, 3 divergence guard.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) => 2,
            Self::Divergence(_) => 3,
            _ => 1,
        }
    }
}

impl From<SimError> for ExperimentError {
    fn from(e: SimError) -> Self {
        let root = match &e {
            SimError::InPeriod { source, .. } => source.as_ref(),
            other => other,
        };
        match root {
            SimError::EventCap { .. } | SimError::Horizon => Self::Divergence(e),
            SimError::Unstable { .. }
            | SimError::BadRate(_)
            | SimError::ThresholdMismatch { .. } => Self::Config(e.to_string()),
            _ => Self::Sim(e),
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> ExperimentError {
    ExperimentError::Config(e.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Arrival rate.
    pub lambda: f64,
    /// Service law, e.g. `pareto:alpha=3` or `truncA(exp:rate=1,s=2)`.
    pub dist: String,
    /// Policy under test, e.g. `trunc-switch(fallback=lcfs,s=1)`.
    pub policy: String,
    /// Comparison policy for `sweep`, run on the untruncated law.
    pub reference: String,
    /// Truncation points, strictly increasing.
    pub s_list: Vec<f64>,
    pub n_periods: u64,
    pub seed: u64,
    /// Confidence level of reported intervals (two-sided) and verdicts
    /// (one-sided).
    pub confidence: f64,
    pub out: PathBuf,
    /// Batches for batch-means estimates of the residual cost.
    pub batches: usize,
    pub event_cap: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            dist: "pareto:alpha=3".into(),
            policy: "trunc-switch(fallback=lcfs,s=1)".into(),
            reference: "fb".into(),
            s_list: vec![1.0, 2.0, 4.0, 8.0],
            n_periods: 100_000,
            seed: 1,
            confidence: estim::DEFAULT_CONFIDENCE,
            out: PathBuf::from("out"),
            batches: estim::DEFAULT_BATCHES,
            event_cap: DEFAULT_EVENT_CAP,
        }
    }
}

/// Command-line values that replace fields of a loaded config.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub lambda: Option<f64>,
    pub dist: Option<String>,
    pub policy: Option<String>,
    pub s_list: Option<Vec<f64>>,
    pub n_periods: Option<u64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub confidence: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        serde_json::from_str(text).map_err(config_err)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text =
            fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn apply(mut self, o: Overrides) -> Self {
        if let Some(v) = o.lambda {
            self.lambda = v;
        }
        if let Some(v) = o.dist {
            self.dist = v;
        }
        if let Some(v) = o.policy {
            self.policy = v;
        }
        if let Some(v) = o.s_list {
            self.s_list = v;
        }
        if let Some(v) = o.n_periods {
            self.n_periods = v;
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.out {
            self.out = v;
        }
        if let Some(v) = o.confidence {
            self.confidence = v;
        }
        self
    }

    /// Parses and checks everything; the single gate for config errors.
    pub fn resolve(&self) -> Result<Resolved, ExperimentError> {
        let dist: ServiceDistribution = self.dist.parse().map_err(config_err)?;
        let policy: PolicySpec = self.policy.parse().map_err(config_err)?;
        let reference: PolicySpec = self.reference.parse().map_err(config_err)?;
        let params = BoundParams::from_distribution(self.lambda, &dist).map_err(config_err)?;
        if let Some(bad) = self.s_list.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
            return Err(config_err(format!(
                "truncation points must be positive, got {bad}"
            )));
        }
        if self.s_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(config_err("s_list must be strictly increasing"));
        }
        if self.n_periods < 2 {
            return Err(config_err("n_periods must be at least 2"));
        }
        let confidence = Confidence::two_sided(self.confidence).map_err(config_err)?;
        let sim = Simulator::new(self.lambda, dist.clone())
            .map_err(config_err)?
            .with_event_cap(self.event_cap);
        Ok(Resolved {
            dist,
            policy,
            reference,
            params,
            confidence,
            verdict: Confidence::one_sided(self.confidence).map_err(config_err)?,
            sim,
        })
    }
}

/// A checked config.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub dist: ServiceDistribution,
    pub policy: PolicySpec,
    pub reference: PolicySpec,
    pub params: BoundParams,
    /// For reported intervals.
    pub confidence: Confidence,
    /// For bound verdicts.
    pub verdict: Confidence,
    pub sim: Simulator,
}

fn factory(spec: &PolicySpec, d: &ServiceDistribution) -> Result<PolicyFactory, ExperimentError> {
    spec.resolve(d, &GittinsConfig::default())
        .map_err(config_err)
}

fn verdict_row(quantity: &str, est: &Estimate, bound: f64, pass: Option<bool>) -> Vec<String> {
    let margin = bound - est.lower();
    let pass = pass.unwrap_or(margin >= 0.0);
    vec![
        quantity.to_string(),
        num(est.mean),
        num(est.ci_half),
        num(bound),
        if pass { "PASS" } else { "FAIL" }.to_string(),
        num(margin),
    ]
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub table: Table,
    pub failures: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Oracle checks: Pollaczek-Khinchine mean sojourn under FCFS (finite
/// variance only), renewal means of `W` and `N_B`, workload invariance
/// across size-blind policies, and moment partition identities.
/// Writes `validation.csv`; a failed check is an `Err(Validation)`.
pub fn cmd_validate(cfg: &ExperimentConfig) -> Result<ValidationReport, ExperimentError> {
    let r = cfg.resolve()?;
    let mut table = Table::new(&["quantity", "estimate", "ci", "bound", "verdict", "margin"]);
    let mut failures = Vec::new();
    let mut check = |name: &str, est: &Estimate, target: f64, table: &mut Table| {
        let ok = (est.mean - target).abs() <= ORACLE_TOLERANCE * target.abs();
        if !ok {
            failures.push(format!("{name}: {} vs {target}", est.mean));
        }
        table.push(verdict_row(name, est, target, Some(ok)));
    };

    let fcfs = r
        .sim
        .run_batch(&PolicyFactory::Fcfs, cfg.n_periods, cfg.seed)?;
    let w = estim::regen_mean(&fcfs, Field::Busy, r.confidence)?;
    check("E(W)", &w, r.params.mean_busy(), &mut table);
    let nb = estim::regen_mean(&fcfs, Field::Jobs, r.confidence)?;
    check("E(N_B)", &nb, r.params.mean_jobs(), &mut table);
    if let Ok(pk) = bounds::pk_mean_sojourn(&r.params) {
        let per_job = estim::ratio_mean(&fcfs, Field::Sojourn, Field::Jobs, r.confidence)?;
        check("mean_sojourn_fcfs", &per_job, pk, &mut table);
    }

    let blind = [
        PolicyFactory::Fcfs,
        PolicyFactory::LcfsPreempt,
        PolicyFactory::Fb,
    ];
    let refs: Vec<&dyn crate::sim::BuildPolicy> = blind.iter().map(|p| p as _).collect();
    let inv = r
        .sim
        .verify_workload_invariance(&refs, cfg.n_periods.min(1000), cfg.seed)?;
    let inv_est = Estimate {
        mean: f64::from(u8::from(inv.passed())),
        ci_half: 0.0,
        n: inv.periods as usize,
        label: "workload_invariance".into(),
        heavy_tail: false,
    };
    if let Some(d) = &inv.divergence {
        failures.push(format!("workload invariance: period {} diverged", d.period));
    }
    table.push(verdict_row(
        "workload_invariance",
        &inv_est,
        1.0,
        Some(inv.passed()),
    ));

    let m = r.dist.moments();
    for &s in &cfg.s_list {
        let t = r.dist.tail_stats(s).map_err(config_err)?;
        let total = t.m1_tail + t.m1_below();
        let ok = (total - m.mean).abs() <= 1e-9 * m.mean.max(1.0);
        if !ok {
            failures.push(format!(
                "partition identity at s={s}: {total} vs {}",
                m.mean
            ));
        }
        let est = Estimate {
            mean: total,
            ci_half: 0.0,
            n: 1,
            label: "partition".into(),
            heavy_tail: false,
        };
        table.push(verdict_row(
            &format!("partition_m1_s={s}"),
            &est,
            m.mean,
            Some(ok),
        ));
    }

    table.write_atomic(&cfg.out.join("validation.csv"))?;
    let report = ValidationReport { table, failures };
    if report.passed() {
        Ok(report)
    } else {
        Err(ExperimentError::Validation(report.failures.join("; ")))
    }
}

/// Runs the configured policy and writes `simulate.csv` with per-period
/// estimates. Threshold accounting uses the policy's own truncation point,
/// or the first entry of `s_list` for policies without one.
pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<Table, ExperimentError> {
    let r = cfg.resolve()?;
    let f = factory(&r.policy, &r.dist)?;
    let mut sim = r.sim.clone();
    if r.policy.threshold().is_none() {
        if let Some(&s) = cfg.s_list.first() {
            sim = sim.with_threshold(s);
        }
    }
    let records = sim.run_batch(&f, cfg.n_periods, cfg.seed)?;
    let mut table = Table::new(&["quantity", "estimate", "ci", "n"]);
    let heavy = !r.params.finite_variance();
    let mut push = |e: Estimate| {
        let e = if heavy { e.heavy_tail() } else { e };
        table.push(vec![
            e.label.clone(),
            num(e.mean),
            num(e.ci_half),
            e.n.to_string(),
        ]);
    };
    for field in [
        Field::Busy,
        Field::Jobs,
        Field::Sojourn,
        Field::Residual,
        Field::LongIndicator,
        Field::LowQueue,
        Field::HighTime,
    ] {
        push(estim::regen_mean(&records, field, r.confidence)?);
    }
    push(estim::ratio_mean(
        &records,
        Field::Sojourn,
        Field::Jobs,
        r.confidence,
    )?);
    table.write_atomic(&cfg.out.join("simulate.csv"))?;
    Ok(table)
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub gap: Table,
    pub residual: Table,
    /// Per-row problems that did not abort the sweep.
    pub warnings: Vec<String>,
}

/// For each truncation point, runs the policy family and the reference
/// policy on common random numbers and writes `gap.csv` and `residual.csv`.
pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<SweepOutput, ExperimentError> {
    let r = cfg.resolve()?;
    if r.policy.threshold().is_none() {
        return Err(config_err("sweep needs a po-lcfs or trunc-switch policy"));
    }
    if cfg.s_list.is_empty() {
        return Err(config_err("sweep needs a non-empty s_list"));
    }
    let is_po_lcfs = matches!(r.policy, PolicySpec::PoLcfs { .. });
    let reference = factory(&r.reference, &r.dist)?;
    let ref_records = r.sim.run_batch(&reference, cfg.n_periods, cfg.seed)?;
    let v_ref = estim::regen_mean(&ref_records, Field::Sojourn, r.confidence)?;

    let mut gap = Table::new(&[
        "s",
        "V_policy",
        "V_policy_ci",
        "V_reference",
        "V_reference_ci",
        "gap",
        "gap_ci",
        "g_formula",
        "g_paper_constants",
        "verdict",
    ]);
    let mut residual = Table::new(&["s", "R_hat", "R_ci", "ER_ub", "thm1_condition", "verdict"]);
    let mut warnings = Vec::new();

    for &s in &cfg.s_list {
        let spec = r.policy.with_threshold(s);
        let f = factory(&spec, &r.dist)?;
        let records = r.sim.run_batch(&f, cfg.n_periods, cfg.seed)?;
        let v = estim::regen_mean(&records, Field::Sojourn, r.confidence)?;
        let diff = estim::paired_difference(&records, &ref_records, Field::Sojourn, r.verdict)?;
        let (g, g_pub, verdict) = match bounds::gap_bound(&r.params, &r.dist, s) {
            Ok(b) => (
                num(b.g),
                num(b.g_published),
                estim::compare(&diff, b.g).to_string(),
            ),
            Err(e) => {
                warnings.push(format!("s={s}: {e}"));
                (NA.into(), NA.into(), NA.into())
            }
        };
        gap.push(vec![
            num(s),
            num(v.mean),
            num(v.ci_half),
            num(v_ref.mean),
            num(v_ref.ci_half),
            num(diff.mean),
            num(diff.ci_half),
            g,
            g_pub,
            verdict,
        ]);

        let r_hat = estim::batch_means_median(&records, Field::Residual, cfg.batches, r.verdict)?;
        let (er, verdict) = match bounds::residual_chain(&r.params, &r.dist, s) {
            Ok(b) if is_po_lcfs => (num(b.er_ub), estim::compare(&r_hat, b.er_ub).to_string()),
            Ok(b) => (num(b.er_ub), NA.into()),
            Err(e) => {
                warnings.push(format!("s={s}: {e}"));
                (NA.into(), NA.into())
            }
        };
        residual.push(vec![
            num(s),
            num(r_hat.mean),
            num(r_hat.ci_half),
            er,
            num(r.dist.residual_condition(s)),
            verdict,
        ]);
    }
    gap.write_atomic(&cfg.out.join("gap.csv"))?;
    residual.write_atomic(&cfg.out.join("residual.csv"))?;
    Ok(SweepOutput {
        gap,
        residual,
        warnings,
    })
}

/// Closed-form bounds over `s_list`, written to `bounds.csv`. Gap-bound
/// columns are `N/A` for infinite-variance laws.
pub fn cmd_bounds(cfg: &ExperimentConfig) -> Result<Table, ExperimentError> {
    let r = cfg.resolve()?;
    let mut table = Table::new(&[
        "s",
        "p_tail",
        "m1_tail",
        "m2_tail",
        "K1",
        "K2",
        "g_formula",
        "g_paper_constants",
        "EM",
        "EL",
        "ER_ub",
        "lemma1_W_ub",
        "lemma1_N_ub",
        "PAc_ub",
    ]);
    let na = || NA.to_string();
    for &s in &cfg.s_list {
        let t = r.dist.tail_stats(s).map_err(config_err)?;
        let gap = bounds::gap_bound(&r.params, &r.dist, s).ok();
        let residual = bounds::residual_chain(&r.params, &r.dist, s).ok();
        let long_period = bounds::long_period_bounds(&r.params, &t).ok();
        let mut row = vec![num(s), num(t.p_tail), num(t.m1_tail), num(t.m2_tail)];
        match gap {
            Some(b) => row.extend([num(b.k1), num(b.k2), num(b.g), num(b.g_published)]),
            None => row.extend([na(), na(), na(), na()]),
        }
        match residual {
            Some(b) => row.extend([num(b.em), num(b.el), num(b.er_ub)]),
            None => row.extend([na(), na(), na()]),
        }
        match long_period {
            Some(b) => row.extend([num(b.busy_ub), num(b.jobs_ub), num(b.p_long_ub)]),
            None => row.extend([na(), na(), na()]),
        }
        table.push(row);
    }
    table.write_atomic(&cfg.out.join("bounds.csv"))?;
    Ok(table)
}

/// Gittins index table for the configured law, written to `gittins.csv`.
pub fn cmd_gittins_table(cfg: &ExperimentConfig) -> Result<Table, ExperimentError> {
    let dist: ServiceDistribution = cfg.dist.parse().map_err(config_err)?;
    let gt = GittinsTable::for_distribution(&dist).map_err(config_err)?;
    let mut table = Table::new(&["a", "G"]);
    for (a, g) in gt.grid().iter().zip(gt.values()) {
        table.push(vec![num(*a), num(*g)]);
    }
    table.write_atomic(&cfg.out.join("gittins.csv"))?;
    Ok(table)
}
