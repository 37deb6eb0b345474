//! M/G/1 scheduling laboratory for heavy-tailed service times.
//!
//! The crate simulates single busy periods of a preemptive-resume M/G/1
//! queue under size-blind policies (FCFS, preemptive LCFS, FB, Gittins),
//! the size-aware SRPT baseline, and two truncation-driven policies:
//!
//! * **PO-LCFS**: jobs with attained service below `s` are scheduled by the
//!   optimal policy for the Type-A truncated law; a job reaching `s` is
//!   demoted to a low-priority queue served LCFS when nothing else waits.
//! * **Truncate-then-switch**: the Gittins policy for the Type-B truncated
//!   law runs until some job's attained service reaches `s`, after which a
//!   fallback work-conserving policy takes over for the rest of the busy
//!   period.
//!
//! [`bounds`] evaluates the closed-form residual-cost and gap bounds for
//! these policies, and [`estim`] turns busy-period records into regenerative
//! estimates that can be checked against them.

pub mod bounds;
pub mod dist;
pub mod estim;
pub mod experiment;
pub mod gittins;
pub mod report;
pub mod sim;

pub use bounds::{BoundParams, GapBound, ResidualBound};
pub use dist::{Moments, ServiceDistribution, TailStats};
pub use estim::{Estimate, Field, Verdict};
pub use gittins::{GittinsConfig, GittinsTable};
pub use sim::{BusyPeriodRecord, PolicySpec, Simulator};
