//! Event-driven, preemptive-resume M/G/1 busy-period simulator.
//!
//! A busy period starts with one arrival into an empty system at time zero
//! and ends when the system next empties. Decision points are arrivals,
//! completions, and (for threshold-driven policies) the instants at which a
//! job's attained service reaches the truncation point; between them the
//! chosen job is served alone.

pub mod clock;
mod policy;
mod trace;

pub use policy::{
    BuildPolicy, Decision, Fb, Fcfs, Gittins, JobView, LcfsPreempt, PoLcfs, Policy, PolicyError,
    PolicyFactory, PolicySpec, Srpt, TruncSwitch,
};
pub use trace::{write_trace_csv, TraceEvent, TraceKind};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::dist::ServiceDistribution;

pub const DEFAULT_EVENT_CAP: u64 = 100_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("unstable queue: lambda * E(X) = {rho} >= 1")]
    Unstable { rho: f64 },
    #[error("arrival rate must be positive and finite, got {0}")]
    BadRate(f64),
    #[error("busy period exceeded {cap} events (unstable load or non-work-conserving policy)")]
    EventCap { cap: u64 },
    #[error("simulated time left the representable horizon")]
    Horizon,
    #[error("policy threshold {policy} disagrees with accounting threshold {accounting}")]
    ThresholdMismatch { policy: f64, accounting: f64 },
    #[error("policy `{0}` selected a job that does not exist")]
    BadSelection(String),
    #[error("batch needs at least one busy period")]
    EmptyBatch,
    #[error("busy period {index}: {source}")]
    InPeriod {
        index: u64,
        #[source]
        source: Box<SimError>,
    },
}

/// Per-busy-period observables. Durations are kept in exact ticks; use the
/// accessor methods for time units.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BusyPeriodRecord {
    pub index: u64,
    /// Busy-period length `W`.
    pub busy_ticks: u64,
    /// Number of jobs `N_B`.
    pub jobs: u64,
    /// Sum of all job sizes.
    pub work_ticks: u64,
    /// `C(u)`: sum of full sojourn times.
    pub sojourn_ticks: u128,
    /// Sum over jobs of the sojourn of the first sub-job (up to completion or
    /// up to attained service reaching the threshold).
    pub truncated_sojourn_ticks: u128,
    /// `R`: sum over jobs larger than the threshold of the time from reaching
    /// the threshold to completion.
    pub residual_sojourn_ticks: u128,
    /// Jobs larger than the threshold.
    pub long_jobs: u64,
    /// `M`: jobs waiting in the low-priority queue when it is first served
    /// (policies with a low-priority queue only; zero otherwise).
    pub low_queue_at_first_service: u64,
    /// `L`: time before the low-priority queue is first served, or the whole
    /// period if it never is (policies with a low-priority queue only).
    pub high_ticks_before_low: u64,
    /// Event A: no job in the period is larger than the threshold.
    pub event_a: bool,
    /// The policy abandoned its pre-discovery rule in this period.
    pub switched: bool,
    pub events: u64,
}

impl BusyPeriodRecord {
    pub fn busy_time(&self) -> f64 {
        clock::to_units(self.busy_ticks)
    }

    pub fn work(&self) -> f64 {
        clock::to_units(self.work_ticks)
    }

    pub fn sum_sojourn(&self) -> f64 {
        clock::wide_to_units(self.sojourn_ticks)
    }

    pub fn truncated_sojourn(&self) -> f64 {
        clock::wide_to_units(self.truncated_sojourn_ticks)
    }

    pub fn residual(&self) -> f64 {
        clock::wide_to_units(self.residual_sojourn_ticks)
    }

    pub fn high_time_before_low(&self) -> f64 {
        clock::to_units(self.high_ticks_before_low)
    }
}

/// Per-job result of a traced run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JobOutcome {
    pub id: u64,
    pub arrival: u64,
    pub size: u64,
    pub reached_threshold: Option<u64>,
    pub completion: u64,
}

#[derive(Debug, Clone)]
pub struct Simulator {
    lambda: f64,
    dist: ServiceDistribution,
    threshold: Option<f64>,
    event_cap: u64,
}

#[derive(Default)]
struct Recorder {
    events: Option<Vec<TraceEvent>>,
    jobs: Option<Vec<JobOutcome>>,
}

impl Simulator {
    /// Rejects `lambda * E(X) >= 1`.
    pub fn new(lambda: f64, dist: ServiceDistribution) -> Result<Self, SimError> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(SimError::BadRate(lambda));
        }
        let rho = lambda * dist.moments().mean;
        if !(rho < 1.0) {
            return Err(SimError::Unstable { rho });
        }
        Ok(Self {
            lambda,
            dist,
            threshold: None,
            event_cap: DEFAULT_EVENT_CAP,
        })
    }

    /// Threshold for event-A and residual accounting under policies that do
    /// not carry their own.
    pub fn with_threshold(mut self, s: f64) -> Self {
        self.threshold = Some(s);
        self
    }

    pub fn with_event_cap(mut self, cap: u64) -> Self {
        self.event_cap = cap;
        self
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn distribution(&self) -> &ServiceDistribution {
        &self.dist
    }

    /// Generator for busy period `index` under `seed`: one ChaCha stream per
    /// period, so any subset of periods can be replayed in any order.
    pub fn period_rng(seed: u64, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        rng
    }

    fn effective_threshold(&self, policy: &dyn Policy) -> Result<Option<u64>, SimError> {
        let s = match (policy.threshold(), self.threshold) {
            (Some(p), Some(a)) if p != a => {
                return Err(SimError::ThresholdMismatch {
                    policy: p,
                    accounting: a,
                })
            }
            (Some(p), _) => Some(p),
            (None, a) => a,
        };
        s.map(|s| clock::to_ticks(s).ok_or(SimError::Horizon))
            .transpose()
    }

    pub fn run_busy_period<R: Rng + ?Sized>(
        &self,
        policy: &mut dyn Policy,
        rng: &mut R,
    ) -> Result<BusyPeriodRecord, SimError> {
        self.simulate(policy, rng, &mut Recorder::default())
    }

    /// Like [`Self::run_busy_period`], also returning the event trace and
    /// per-job outcomes.
    pub fn run_traced<R: Rng + ?Sized>(
        &self,
        policy: &mut dyn Policy,
        rng: &mut R,
    ) -> Result<(BusyPeriodRecord, Vec<TraceEvent>, Vec<JobOutcome>), SimError> {
        let mut rec = Recorder {
            events: Some(Vec::new()),
            jobs: Some(Vec::new()),
        };
        let record = self.simulate(policy, rng, &mut rec)?;
        Ok((
            record,
            rec.events.unwrap_or_default(),
            rec.jobs.unwrap_or_default(),
        ))
    }

    fn draw_size<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<u64, SimError> {
        clock::to_ticks(self.dist.sample(rng)).ok_or(SimError::Horizon)
    }

    fn draw_gap<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<u64, SimError> {
        let u: f64 = rng.random();
        clock::to_ticks(-(-u).ln_1p() / self.lambda).ok_or(SimError::Horizon)
    }

    fn simulate<R: Rng + ?Sized>(
        &self,
        policy: &mut dyn Policy,
        rng: &mut R,
        rec: &mut Recorder,
    ) -> Result<BusyPeriodRecord, SimError> {
        let threshold = self.effective_threshold(policy)?;
        let reacts = policy.reacts_to_threshold();
        let size_aware = policy.size_aware();
        let tracks_low = policy.has_low_priority_queue();
        policy.begin_period();

        let mut views: Vec<JobView> = Vec::new();
        let mut sizes: Vec<u64> = Vec::new();
        let mut remaining: Vec<u64> = Vec::new();

        let mut now = 0u64;
        let mut next_id = 0u64;
        let mut work = 0u64;
        let mut long_jobs = 0u64;
        let mut sojourn = 0u128;
        let mut truncated = 0u128;
        let mut residual = 0u128;
        let mut low_started: Option<(u64, u64)> = None;
        let mut was_switched = false;
        let mut sticky: Option<usize> = None;
        let mut events = 0u64;

        let mut admit = |now: u64,
                         rng: &mut R,
                         views: &mut Vec<JobView>,
                         sizes: &mut Vec<u64>,
                         remaining: &mut Vec<u64>,
                         rec: &mut Recorder|
         -> Result<(), SimError> {
            let size = self.draw_size(rng)?;
            work = work.checked_add(size).ok_or(SimError::Horizon)?;
            if threshold.is_some_and(|t| size > t) {
                long_jobs += 1;
            }
            views.push(JobView {
                id: next_id,
                arrival: now,
                attained: 0,
                demoted_at: None,
            });
            sizes.push(size);
            remaining.push(size);
            if let Some(ev) = rec.events.as_mut() {
                ev.push(TraceEvent::new(now, TraceKind::Arrival, next_id, 0));
            }
            next_id += 1;
            Ok(())
        };

        admit(now, rng, &mut views, &mut sizes, &mut remaining, rec)?;
        let mut next_arrival = now
            .checked_add(self.draw_gap(rng)?)
            .ok_or(SimError::Horizon)?;

        while !views.is_empty() {
            events += 1;
            if events > self.event_cap {
                return Err(SimError::EventCap {
                    cap: self.event_cap,
                });
            }
            let pick = match sticky.take() {
                Some(i) => Some(i),
                None => {
                    let rem = size_aware.then_some(remaining.as_slice());
                    policy.select(&Decision::new(now, &views, rem))
                }
            };
            let Some(i) = pick else {
                now = next_arrival;
                admit(now, rng, &mut views, &mut sizes, &mut remaining, rec)?;
                next_arrival = now
                    .checked_add(self.draw_gap(rng)?)
                    .ok_or(SimError::Horizon)?;
                continue;
            };
            if i >= views.len() {
                return Err(SimError::BadSelection(policy.name()));
            }
            if tracks_low && low_started.is_none() && views[i].demoted_at.is_some() {
                let waiting = views.iter().filter(|v| v.demoted_at.is_some()).count() as u64;
                low_started = Some((waiting, now));
            }

            let to_threshold = match threshold {
                Some(t) if views[i].attained < t && sizes[i] > t => t - views[i].attained,
                _ => u64::MAX,
            };
            let service = remaining[i].min(to_threshold);
            let gap = next_arrival - now;

            if gap < service {
                now = next_arrival;
                views[i].attained += gap;
                remaining[i] -= gap;
                admit(now, rng, &mut views, &mut sizes, &mut remaining, rec)?;
                next_arrival = now
                    .checked_add(self.draw_gap(rng)?)
                    .ok_or(SimError::Horizon)?;
                continue;
            }

            now += service;
            views[i].attained += service;
            remaining[i] -= service;
            if remaining[i] == 0 {
                let job = views.remove(i);
                let size = sizes.remove(i);
                remaining.remove(i);
                let split = job.demoted_at.unwrap_or(now);
                sojourn += u128::from(now - job.arrival);
                truncated += u128::from(split - job.arrival);
                residual += u128::from(now - split);
                if let Some(ev) = rec.events.as_mut() {
                    ev.push(TraceEvent::new(now, TraceKind::Completion, job.id, size));
                }
                if let Some(out) = rec.jobs.as_mut() {
                    out.push(JobOutcome {
                        id: job.id,
                        arrival: job.arrival,
                        size,
                        reached_threshold: job.demoted_at,
                        completion: now,
                    });
                }
            } else {
                views[i].demoted_at = Some(now);
                policy.on_threshold(&views[i]);
                if let Some(ev) = rec.events.as_mut() {
                    ev.push(TraceEvent::new(
                        now,
                        TraceKind::Demotion,
                        views[i].id,
                        views[i].attained,
                    ));
                    if policy.switched() && !was_switched {
                        ev.push(TraceEvent::new(
                            now,
                            TraceKind::Switch,
                            views[i].id,
                            views[i].attained,
                        ));
                    }
                }
                was_switched = policy.switched();
                if !reacts {
                    sticky = Some(i);
                }
            }
        }

        let (m, l) = match (tracks_low, low_started) {
            (true, Some(first)) => first,
            (true, None) => (0, now),
            (false, _) => (0, 0),
        };
        Ok(BusyPeriodRecord {
            index: 0,
            busy_ticks: now,
            jobs: next_id,
            work_ticks: work,
            sojourn_ticks: sojourn,
            truncated_sojourn_ticks: truncated,
            residual_sojourn_ticks: residual,
            long_jobs,
            low_queue_at_first_service: m,
            high_ticks_before_low: l,
            event_a: long_jobs == 0,
            switched: policy.switched(),
            events,
        })
    }

    /// Busy period `index` of the batch identified by `seed`.
    pub fn run_indexed(
        &self,
        policy: &mut dyn Policy,
        seed: u64,
        index: u64,
    ) -> Result<BusyPeriodRecord, SimError> {
        let mut rng = Self::period_rng(seed, index);
        self.run_busy_period(policy, &mut rng)
            .map(|r| BusyPeriodRecord { index, ..r })
            .map_err(|e| SimError::InPeriod {
                index,
                source: Box::new(e),
            })
    }

    /// `n` independent busy periods, spread over worker threads. The result
    /// is identical for any thread count.
    pub fn run_batch(
        &self,
        policy: &dyn BuildPolicy,
        n: u64,
        seed: u64,
    ) -> Result<Vec<BusyPeriodRecord>, SimError> {
        self.run_range(policy, 0..n, seed)
    }

    /// Periods `range` of the batch identified by `seed`.
    pub fn run_range(
        &self,
        policy: &dyn BuildPolicy,
        range: std::ops::Range<u64>,
        seed: u64,
    ) -> Result<Vec<BusyPeriodRecord>, SimError> {
        if range.is_empty() {
            return Err(SimError::EmptyBatch);
        }
        range
            .into_par_iter()
            .map_init(
                || policy.build(),
                |p, k| self.run_indexed(p.as_mut(), seed, k),
            )
            .collect()
    }

    /// Replays the same arrival/size streams under every policy and checks
    /// that busy-period lengths and job counts agree exactly.
    pub fn verify_workload_invariance(
        &self,
        policies: &[&dyn BuildPolicy],
        n: u64,
        seed: u64,
    ) -> Result<InvarianceReport, SimError> {
        let mut report = InvarianceReport {
            periods: n,
            policies: policies.len(),
            divergence: None,
        };
        if policies.len() < 2 {
            return Ok(report);
        }
        let mut instances: Vec<Box<dyn Policy>> = policies.iter().map(|p| p.build()).collect();
        for k in 0..n {
            let reference = self.run_indexed(instances[0].as_mut(), seed, k)?;
            for (j, p) in instances.iter_mut().enumerate().skip(1) {
                let other = self.run_indexed(p.as_mut(), seed, k)?;
                if (other.busy_ticks, other.jobs) != (reference.busy_ticks, reference.jobs) {
                    report.divergence = Some(Divergence {
                        period: k,
                        policy: j,
                        expected: (reference.busy_ticks, reference.jobs),
                        found: (other.busy_ticks, other.jobs),
                    });
                    return Ok(report);
                }
            }
        }
        Ok(report)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Divergence {
    pub period: u64,
    /// Position of the offending policy in the input list.
    pub policy: usize,
    /// `(busy_ticks, jobs)` under the first policy.
    pub expected: (u64, u64),
    pub found: (u64, u64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvarianceReport {
    pub periods: u64,
    pub policies: usize,
    pub divergence: Option<Divergence>,
}

impl InvarianceReport {
    pub fn passed(&self) -> bool {
        self.divergence.is_none()
    }
}
