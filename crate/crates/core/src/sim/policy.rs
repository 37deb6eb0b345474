//! Scheduling rules and their text grammar.
//!
//! A [`Policy`] is consulted at decision points and returns the position of
//! the job to serve. Size-blind policies see only [`JobView`]s; remaining
//! sizes are handed out only to policies that declare themselves size-aware.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::dist::ServiceDistribution;
use crate::gittins::{GittinsConfig, GittinsError, GittinsTable};

use super::clock;

/// What a size-blind scheduler may observe about a job.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JobView {
    pub id: u64,
    /// Arrival instant in ticks since the start of the busy period.
    pub arrival: u64,
    /// Attained service in ticks.
    pub attained: u64,
    /// Instant the attained service reached the threshold, if it has.
    pub demoted_at: Option<u64>,
}

/// Input to one scheduling decision. Jobs are listed in arrival order.
pub struct Decision<'a> {
    pub now: u64,
    pub jobs: &'a [JobView],
    remaining: Option<&'a [u64]>,
}

impl<'a> Decision<'a> {
    pub fn new(now: u64, jobs: &'a [JobView], remaining: Option<&'a [u64]>) -> Self {
        Self {
            now,
            jobs,
            remaining,
        }
    }

    /// Remaining sizes, parallel to `jobs`; only given to size-aware policies.
    pub fn remaining(&self) -> Option<&'a [u64]> {
        self.remaining
    }
}

pub trait Policy: Send {
    fn name(&self) -> String;

    /// Position in `d.jobs` of the job to serve, or `None` to idle until the
    /// next arrival (never done by the built-in, work-conserving policies).
    fn select(&mut self, d: &Decision<'_>) -> Option<usize>;

    fn size_aware(&self) -> bool {
        false
    }

    /// Truncation point the policy is built around.
    fn threshold(&self) -> Option<f64> {
        None
    }

    /// Whether reaching the threshold is a decision point for this policy.
    fn reacts_to_threshold(&self) -> bool {
        false
    }

    fn on_threshold(&mut self, _job: &JobView) {}

    fn begin_period(&mut self) {}

    /// Whether the policy has given up its pre-discovery rule this period.
    fn switched(&self) -> bool {
        false
    }

    /// Whether jobs past the threshold wait in a separate low-priority queue.
    fn has_low_priority_queue(&self) -> bool {
        false
    }
}

/// Something that can hand out fresh policy instances, one per worker.
pub trait BuildPolicy: Sync {
    fn build(&self) -> Box<dyn Policy>;
}

impl<F> BuildPolicy for F
where
    F: Fn() -> Box<dyn Policy> + Sync,
{
    fn build(&self) -> Box<dyn Policy> {
        self()
    }
}

fn argmin_by_key<K: PartialOrd>(jobs: &[JobView], key: impl Fn(usize) -> K) -> Option<usize> {
    let mut best: Option<(usize, K)> = None;
    for i in 0..jobs.len() {
        let k = key(i);
        // strict comparison keeps the earliest arrival on ties
        if best.as_ref().is_none_or(|(_, b)| k < *b) {
            best = Some((i, k));
        }
    }
    best.map(|(i, _)| i)
}

#[derive(Debug, Default, Clone)]
pub struct Fcfs;

impl Policy for Fcfs {
    fn name(&self) -> String {
        "fcfs".into()
    }

    fn select(&mut self, d: &Decision<'_>) -> Option<usize> {
        (!d.jobs.is_empty()).then_some(0)
    }
}

/// Preemptive LCFS: the newest arrival is always in service.
#[derive(Debug, Default, Clone)]
pub struct LcfsPreempt;

impl Policy for LcfsPreempt {
    fn name(&self) -> String {
        "lcfs".into()
    }

    fn select(&mut self, d: &Decision<'_>) -> Option<usize> {
        d.jobs.len().checked_sub(1)
    }
}

/// Foreground-background: least attained service first.
#[derive(Debug, Default, Clone)]
pub struct Fb;

impl Policy for Fb {
    fn name(&self) -> String {
        "fb".into()
    }

    fn select(&mut self, d: &Decision<'_>) -> Option<usize> {
        argmin_by_key(d.jobs, |i| d.jobs[i].attained)
    }
}

#[derive(Debug, Default, Clone)]
pub struct Srpt;

impl Policy for Srpt {
    fn name(&self) -> String {
        "srpt".into()
    }

    fn size_aware(&self) -> bool {
        true
    }

    fn select(&mut self, d: &Decision<'_>) -> Option<usize> {
        let rem = d.remaining().expect("SRPT is size-aware");
        argmin_by_key(d.jobs, |i| rem[i])
    }
}

/// Highest Gittins index first, looked up from a precomputed table.
#[derive(Debug, Clone)]
pub struct Gittins {
    table: Arc<GittinsTable>,
}

impl Gittins {
    pub fn new(table: Arc<GittinsTable>) -> Self {
        Self { table }
    }
}

impl Policy for Gittins {
    fn name(&self) -> String {
        format!("gittins[{}]", self.table.distribution())
    }

    fn select(&mut self, d: &Decision<'_>) -> Option<usize> {
        argmin_by_key(d.jobs, |i| {
            -self.table.lookup(clock::to_units(d.jobs[i].attained))
        })
    }
}

/// Priority to jobs below the threshold (scheduled by `inner`), then LCFS
/// over demotion instants.
pub struct PoLcfs {
    inner: Box<dyn Policy>,
    s: f64,
    high: Vec<JobView>,
    high_pos: Vec<usize>,
    high_rem: Vec<u64>,
}

impl PoLcfs {
    pub fn new(inner: Box<dyn Policy>, s: f64) -> Self {
        Self {
            inner,
            s,
            high: Vec::new(),
            high_pos: Vec::new(),
            high_rem: Vec::new(),
        }
    }
}

impl Policy for PoLcfs {
    fn name(&self) -> String {
        format!("po-lcfs(inner={},s={})", self.inner.name(), self.s)
    }

    fn size_aware(&self) -> bool {
        self.inner.size_aware()
    }

    fn threshold(&self) -> Option<f64> {
        Some(self.s)
    }

    fn reacts_to_threshold(&self) -> bool {
        true
    }

    fn has_low_priority_queue(&self) -> bool {
        true
    }

    fn begin_period(&mut self) {
        self.inner.begin_period();
    }

    fn select(&mut self, d: &Decision<'_>) -> Option<usize> {
        self.high.clear();
        self.high_pos.clear();
        self.high_rem.clear();
        for (i, job) in d.jobs.iter().enumerate() {
            if job.demoted_at.is_none() {
                self.high.push(*job);
                self.high_pos.push(i);
                if let Some(rem) = d.remaining() {
                    self.high_rem.push(rem[i]);
                }
            }
        }
        if !self.high.is_empty() {
            let rem = d.remaining().map(|_| self.high_rem.as_slice());
            let sub = Decision::new(d.now, &self.high, rem);
            return self.inner.select(&sub).map(|k| self.high_pos[k]);
        }
        // every job is demoted: most recent demotion first
        d.jobs
            .iter()
            .enumerate()
            .max_by_key(|(_, j)| j.demoted_at)
            .map(|(i, _)| i)
    }
}

/// Gittins for the Type-B truncated law until some job's attained service
/// reaches `s`, then `fallback` until the busy period ends.
pub struct TruncSwitch {
    before: Gittins,
    fallback: Box<dyn Policy>,
    s: f64,
    switched: bool,
}

impl TruncSwitch {
    pub fn new(before: Gittins, fallback: Box<dyn Policy>, s: f64) -> Self {
        Self {
            before,
            fallback,
            s,
            switched: false,
        }
    }
}

impl Policy for TruncSwitch {
    fn name(&self) -> String {
        format!(
            "trunc-switch(fallback={},s={})",
            self.fallback.name(),
            self.s
        )
    }

    fn size_aware(&self) -> bool {
        self.fallback.size_aware()
    }

    fn threshold(&self) -> Option<f64> {
        Some(self.s)
    }

    fn reacts_to_threshold(&self) -> bool {
        true
    }

    fn on_threshold(&mut self, _job: &JobView) {
        self.switched = true;
    }

    fn begin_period(&mut self) {
        self.switched = false;
        self.fallback.begin_period();
    }

    fn switched(&self) -> bool {
        self.switched
    }

    fn select(&mut self, d: &Decision<'_>) -> Option<usize> {
        if self.switched {
            self.fallback.select(d)
        } else {
            self.before.select(d)
        }
    }
}

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("cannot parse policy spec `{spec}`: {reason}")]
    Parse { spec: String, reason: String },
    #[error("{0} cannot be nested inside a threshold policy")]
    NestedThreshold(String),
    #[error("invalid truncation point {0}")]
    BadThreshold(f64),
    #[error(transparent)]
    Dist(#[from] crate::dist::DistError),
    #[error(transparent)]
    Gittins(#[from] GittinsError),
}

/// Declarative policy description, parsed from text such as
/// `po-lcfs(inner=gittins,s=10)` or `trunc-switch(fallback=lcfs,s=4)`.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicySpec {
    Fcfs,
    LcfsPreempt,
    Fb,
    Srpt,
    /// Gittins index for the service law being simulated.
    Gittins,
    PoLcfs {
        inner: Box<PolicySpec>,
        s: f64,
    },
    TruncSwitch {
        fallback: Box<PolicySpec>,
        s: f64,
    },
}

impl PolicySpec {
    pub fn po_lcfs(inner: PolicySpec, s: f64) -> Self {
        Self::PoLcfs {
            inner: Box::new(inner),
            s,
        }
    }

    pub fn trunc_switch(fallback: PolicySpec, s: f64) -> Self {
        Self::TruncSwitch {
            fallback: Box::new(fallback),
            s,
        }
    }

    pub fn threshold(&self) -> Option<f64> {
        match self {
            Self::PoLcfs { s, .. } | Self::TruncSwitch { s, .. } => Some(*s),
            _ => None,
        }
    }

    /// Same policy family at a different truncation point.
    pub fn with_threshold(&self, s: f64) -> Self {
        match self {
            Self::PoLcfs { inner, .. } => Self::PoLcfs {
                inner: inner.clone(),
                s,
            },
            Self::TruncSwitch { fallback, .. } => Self::TruncSwitch {
                fallback: fallback.clone(),
                s,
            },
            other => other.clone(),
        }
    }

    /// Precomputes whatever tables the policy needs for service law `d`.
    pub fn resolve(
        &self,
        d: &ServiceDistribution,
        cfg: &GittinsConfig,
    ) -> Result<PolicyFactory, PolicyError> {
        let flat = |spec: &PolicySpec, law: &ServiceDistribution| match spec {
            PolicySpec::PoLcfs { .. } | PolicySpec::TruncSwitch { .. } => {
                Err(PolicyError::NestedThreshold(spec.to_string()))
            }
            other => other.resolve(law, cfg),
        };
        let check = |s: f64| {
            if s > 0.0 && s.is_finite() {
                Ok(s)
            } else {
                Err(PolicyError::BadThreshold(s))
            }
        };
        Ok(match self {
            Self::Fcfs => PolicyFactory::Fcfs,
            Self::LcfsPreempt => PolicyFactory::LcfsPreempt,
            Self::Fb => PolicyFactory::Fb,
            Self::Srpt => PolicyFactory::Srpt,
            Self::Gittins => {
                let mut table_cfg = cfg.clone();
                table_cfg.a_max = None;
                table_cfg.grid_step = None;
                PolicyFactory::Gittins(Arc::new(GittinsTable::build(d, &table_cfg)?))
            }
            Self::PoLcfs { inner, s } => {
                let s = check(*s)?;
                let truncated = ServiceDistribution::truncated_a(d.clone(), s)?;
                PolicyFactory::PoLcfs {
                    inner: Box::new(flat(inner, &truncated)?),
                    s,
                }
            }
            Self::TruncSwitch { fallback, s } => {
                let s = check(*s)?;
                let truncated = ServiceDistribution::truncated_b(d.clone(), s)?;
                let mut table_cfg = cfg.clone();
                table_cfg.a_max = None;
                table_cfg.grid_step = None;
                PolicyFactory::TruncSwitch {
                    before: Arc::new(GittinsTable::build(&truncated, &table_cfg)?),
                    fallback: Box::new(flat(fallback, d)?),
                    s,
                }
            }
        })
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fcfs => f.write_str("fcfs"),
            Self::LcfsPreempt => f.write_str("lcfs"),
            Self::Fb => f.write_str("fb"),
            Self::Srpt => f.write_str("srpt"),
            Self::Gittins => f.write_str("gittins"),
            Self::PoLcfs { inner, s } => write!(f, "po-lcfs(inner={inner},s={s})"),
            Self::TruncSwitch { fallback, s } => {
                write!(f, "trunc-switch(fallback={fallback},s={s})")
            }
        }
    }
}

impl FromStr for PolicySpec {
    type Err = PolicyError;

    fn from_str(spec: &str) -> Result<Self, Self::Err> {
        let err = |reason: &str| PolicyError::Parse {
            spec: spec.to_string(),
            reason: reason.to_string(),
        };
        let text = spec.trim();
        match text {
            "fcfs" => return Ok(Self::Fcfs),
            "lcfs" | "lcfs-preempt" => return Ok(Self::LcfsPreempt),
            "fb" | "las" => return Ok(Self::Fb),
            "srpt" => return Ok(Self::Srpt),
            "gittins" => return Ok(Self::Gittins),
            _ => {}
        }
        let (head, body) = text.split_once('(').ok_or_else(|| err("unknown policy"))?;
        let body = body
            .strip_suffix(')')
            .ok_or_else(|| err("missing closing parenthesis"))?;
        let (sub_key, default_sub) = match head {
            "po-lcfs" => ("inner", Self::Gittins),
            "trunc-switch" => ("fallback", Self::LcfsPreempt),
            _ => return Err(err("unknown policy")),
        };
        let mut s = None;
        let mut sub = default_sub;
        for pair in body.split(',') {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| err("expected key=value"))?;
            match k.trim() {
                "s" => {
                    s = Some(
                        v.trim()
                            .parse::<f64>()
                            .map_err(|_| err("bad value for s"))?,
                    )
                }
                k if k == sub_key => sub = v.parse()?,
                _ => return Err(err("unknown parameter")),
            }
        }
        let s = s.ok_or_else(|| err("missing s"))?;
        Ok(if head == "po-lcfs" {
            Self::po_lcfs(sub, s)
        } else {
            Self::trunc_switch(sub, s)
        })
    }
}

/// A [`PolicySpec`] with its tables built, ready to instantiate per worker.
#[derive(Debug, Clone)]
pub enum PolicyFactory {
    Fcfs,
    LcfsPreempt,
    Fb,
    Srpt,
    Gittins(Arc<GittinsTable>),
    PoLcfs {
        inner: Box<PolicyFactory>,
        s: f64,
    },
    TruncSwitch {
        before: Arc<GittinsTable>,
        fallback: Box<PolicyFactory>,
        s: f64,
    },
}

impl PolicyFactory {
    /// The Gittins table driving this policy, if any.
    pub fn table(&self) -> Option<&GittinsTable> {
        match self {
            Self::Gittins(t) | Self::TruncSwitch { before: t, .. } => Some(t),
            Self::PoLcfs { inner, .. } => inner.table(),
            _ => None,
        }
    }
}

impl BuildPolicy for PolicyFactory {
    fn build(&self) -> Box<dyn Policy> {
        match self {
            Self::Fcfs => Box::new(Fcfs),
            Self::LcfsPreempt => Box::new(LcfsPreempt),
            Self::Fb => Box::new(Fb),
            Self::Srpt => Box::new(Srpt),
            Self::Gittins(t) => Box::new(Gittins::new(t.clone())),
            Self::PoLcfs { inner, s } => Box::new(PoLcfs::new(inner.build(), *s)),
            Self::TruncSwitch {
                before,
                fallback,
                s,
            } => Box::new(TruncSwitch::new(
                Gittins::new(before.clone()),
                fallback.build(),
                *s,
            )),
        }
    }
}
