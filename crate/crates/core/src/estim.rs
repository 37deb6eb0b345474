//! Regenerative estimators over busy-period records.
//!
//! Busy periods are i.i.d. cycles, so plain sample means over records are
//! unbiased for per-period expectations and normal-approximation intervals
//! apply whenever the field has finite variance. Fields without a finite
//! variance should go through [`batch_means_median`] and be marked
//! [`Estimate::heavy_tail`].

use std::fmt;

use statrs::distribution::{ContinuousCDF, Normal};
use statrs::statistics::{Data, Median, Statistics};
use thiserror::Error;

use crate::sim::BusyPeriodRecord;

pub const DEFAULT_CONFIDENCE: f64 = 0.99;
pub const DEFAULT_CONDITIONING_FLOOR: usize = 100;
pub const DEFAULT_BATCHES: usize = 32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimError {
    #[error("need at least {need} records, got {got}")]
    TooFewRecords { need: usize, got: usize },
    #[error("only {got} busy periods with a job above the threshold (floor {floor})")]
    TooFewConditioning { got: usize, floor: usize },
    #[error("confidence must lie in (0, 1), got {0}")]
    BadConfidence(f64),
    #[error("paired batches differ in length ({0} vs {1})")]
    Unpaired(usize, usize),
    #[error("ratio estimator denominator has zero mean")]
    ZeroDenominator,
}

/// Per-period quantity to estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    /// Busy-period length `W`.
    Busy,
    /// Jobs per period `N_B`.
    Jobs,
    /// Sum of sojourn times.
    Sojourn,
    /// Sum of first-sub-job sojourn times.
    TruncatedSojourn,
    /// Sum of residual sojourn times `R`.
    Residual,
    /// `M`
    LowQueue,
    /// `L`
    HighTime,
    Work,
    /// `W N_B`
    BusyTimesJobs,
    /// Indicator of a job above the threshold.
    LongIndicator,
}

impl Field {
    pub fn of(self, r: &BusyPeriodRecord) -> f64 {
        match self {
            Self::Busy => r.busy_time(),
            Self::Jobs => r.jobs as f64,
            Self::Sojourn => r.sum_sojourn(),
            Self::TruncatedSojourn => r.truncated_sojourn(),
            Self::Residual => r.residual(),
            Self::LowQueue => r.low_queue_at_first_service as f64,
            Self::HighTime => r.high_time_before_low(),
            Self::Work => r.work(),
            Self::BusyTimesJobs => r.busy_time() * r.jobs as f64,
            Self::LongIndicator => f64::from(u8::from(!r.event_a)),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Busy => "W",
            Self::Jobs => "N_B",
            Self::Sojourn => "sum_sojourn",
            Self::TruncatedSojourn => "truncated_sojourn",
            Self::Residual => "R",
            Self::LowQueue => "M",
            Self::HighTime => "L",
            Self::Work => "work",
            Self::BusyTimesJobs => "W*N_B",
            Self::LongIndicator => "1{A^c}",
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Interval convention for half-widths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Confidence {
    pub level: f64,
    /// One-sided intervals put the whole `1 - level` in one tail.
    pub one_sided: bool,
}

impl Default for Confidence {
    fn default() -> Self {
        Self {
            level: DEFAULT_CONFIDENCE,
            one_sided: false,
        }
    }
}

impl Confidence {
    pub fn two_sided(level: f64) -> Result<Self, EstimError> {
        Self::checked(level, false)
    }

    pub fn one_sided(level: f64) -> Result<Self, EstimError> {
        Self::checked(level, true)
    }

    fn checked(level: f64, one_sided: bool) -> Result<Self, EstimError> {
        if !(level > 0.0 && level < 1.0) {
            return Err(EstimError::BadConfidence(level));
        }
        Ok(Self { level, one_sided })
    }

    /// Standard normal quantile for the half-width.
    pub fn z(&self) -> f64 {
        let tail = if self.one_sided {
            1.0 - self.level
        } else {
            (1.0 - self.level) / 2.0
        };
        Normal::standard().inverse_cdf(1.0 - tail)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub ci_half: f64,
    pub n: usize,
    pub label: String,
    /// The half-width assumes a finite variance that may not exist.
    pub heavy_tail: bool,
}

impl Estimate {
    /// Sample mean and normal-approximation half-width.
    pub fn from_samples(xs: &[f64], conf: Confidence, label: String) -> Result<Self, EstimError> {
        if xs.len() < 2 {
            return Err(EstimError::TooFewRecords {
                need: 2,
                got: xs.len(),
            });
        }
        let mean = xs.iter().mean();
        let var = xs.iter().variance().max(0.0);
        Ok(Self {
            mean,
            ci_half: conf.z() * (var / xs.len() as f64).sqrt(),
            n: xs.len(),
            label,
            heavy_tail: false,
        })
    }

    pub fn heavy_tail(mut self) -> Self {
        self.heavy_tail = true;
        self
    }

    pub fn lower(&self) -> f64 {
        self.mean - self.ci_half
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.ci_half
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower() <= x && x <= self.upper()
    }
}

impl fmt::Display for Estimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} = {:.6} ± {:.6} (n = {})",
            self.label, self.mean, self.ci_half, self.n
        )?;
        if self.heavy_tail {
            f.write_str(" [heavy tail, indicative only]")?;
        }
        Ok(())
    }
}

pub fn regen_mean(
    records: &[BusyPeriodRecord],
    field: Field,
    conf: Confidence,
) -> Result<Estimate, EstimError> {
    let xs: Vec<f64> = records.iter().map(|r| field.of(r)).collect();
    Estimate::from_samples(&xs, conf, field.name().to_string())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conditional {
    /// Mean of the field over periods with a job above the threshold.
    pub estimate: Estimate,
    /// Empirical `P(A^c)`.
    pub p_long: Estimate,
}

/// Mean of `field` over periods with a job above the threshold.
pub fn conditional_mean(
    records: &[BusyPeriodRecord],
    field: Field,
    conf: Confidence,
    floor: usize,
) -> Result<Conditional, EstimError> {
    let p_long = regen_mean(records, Field::LongIndicator, conf)?;
    let xs: Vec<f64> = records
        .iter()
        .filter(|r| !r.event_a)
        .map(|r| field.of(r))
        .collect();
    if xs.len() < floor.max(2) {
        return Err(EstimError::TooFewConditioning {
            got: xs.len(),
            floor,
        });
    }
    let estimate = Estimate::from_samples(&xs, conf, format!("E[{field} | A^c]"))?;
    Ok(Conditional { estimate, p_long })
}

/// `E[W N_B 1{A^c}]` over all periods.
pub fn product_tail(
    records: &[BusyPeriodRecord],
    conf: Confidence,
) -> Result<Estimate, EstimError> {
    let xs: Vec<f64> = records
        .iter()
        .map(|r| {
            if r.event_a {
                0.0
            } else {
                Field::BusyTimesJobs.of(r)
            }
        })
        .collect();
    Estimate::from_samples(&xs, conf, "E[W N_B 1{A^c}]".to_string())
}

/// Ratio of per-period means, `E(num) / E(den)`, with a delta-method
/// interval. With `Sojourn / Jobs` this is the mean sojourn per job.
pub fn ratio_mean(
    records: &[BusyPeriodRecord],
    num: Field,
    den: Field,
    conf: Confidence,
) -> Result<Estimate, EstimError> {
    let ys: Vec<f64> = records.iter().map(|r| num.of(r)).collect();
    let xs: Vec<f64> = records.iter().map(|r| den.of(r)).collect();
    ratio_of_samples(&ys, &xs, conf, format!("{num}/{den}"))
}

/// `sum(ys) / sum(xs)` over paired per-period samples.
pub fn ratio_of_samples(
    ys: &[f64],
    xs: &[f64],
    conf: Confidence,
    label: String,
) -> Result<Estimate, EstimError> {
    let n = ys.len();
    if xs.len() != n {
        return Err(EstimError::Unpaired(n, xs.len()));
    }
    if n < 2 {
        return Err(EstimError::TooFewRecords { need: 2, got: n });
    }
    let (my, mx) = (ys.iter().mean(), xs.iter().mean());
    if mx == 0.0 {
        return Err(EstimError::ZeroDenominator);
    }
    let ratio = my / mx;
    let resid: Vec<f64> = ys.iter().zip(xs).map(|(y, x)| y - ratio * x).collect();
    let var = resid.iter().variance().max(0.0);
    Ok(Estimate {
        mean: ratio,
        ci_half: conf.z() * (var / n as f64).sqrt() / mx.abs(),
        n,
        label,
        heavy_tail: false,
    })
}

/// Per-period difference `field(a) - field(b)` on paired batches run with
/// common random numbers.
pub fn paired_difference(
    a: &[BusyPeriodRecord],
    b: &[BusyPeriodRecord],
    field: Field,
    conf: Confidence,
) -> Result<Estimate, EstimError> {
    if a.len() != b.len() {
        return Err(EstimError::Unpaired(a.len(), b.len()));
    }
    let xs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| field.of(x) - field.of(y))
        .collect();
    Estimate::from_samples(&xs, conf, format!("delta {field}"))
}

/// Splits the records into `batches` contiguous batches and reports the
/// median of the batch means; the half-width comes from the spread of the
/// batch means. Robust to single huge cycles dominating a plain mean.
pub fn batch_means_median(
    records: &[BusyPeriodRecord],
    field: Field,
    batches: usize,
    conf: Confidence,
) -> Result<Estimate, EstimError> {
    let batches = batches.max(2);
    if records.len() < batches {
        return Err(EstimError::TooFewRecords {
            need: batches,
            got: records.len(),
        });
    }
    let size = records.len() / batches;
    let means: Vec<f64> = records
        .chunks_exact(size)
        .take(batches)
        .map(|c| c.iter().map(|r| field.of(r)).mean())
        .collect();
    let median = Data::new(means.clone()).median();
    let sd = means.iter().std_dev();
    Ok(Estimate {
        mean: median,
        ci_half: conf.z() * sd / (batches as f64).sqrt(),
        n: records.len(),
        label: format!("median batch mean of {field}"),
        heavy_tail: false,
    })
}

/// Outcome of checking an estimate against an upper bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub pass: bool,
    /// `bound - (mean - ci_half)`; negative on failure.
    pub margin: f64,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.pass { "PASS" } else { "FAIL" })
    }
}

/// Passes when the lower end of the interval does not exceed `bound`.
pub fn compare(est: &Estimate, bound: f64) -> Verdict {
    let margin = bound - est.lower();
    Verdict {
        pass: margin >= 0.0,
        margin,
    }
}
