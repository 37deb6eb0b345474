use std::fmt;
use std::io::{self, Write};

use super::clock;
use crate::report::fmt_g12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    Arrival,
    Completion,
    Demotion,
    Switch,
}

impl fmt::Display for TraceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Arrival => "arrival",
            Self::Completion => "completion",
            Self::Demotion => "demotion",
            Self::Switch => "switch",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceEvent {
    pub time: u64,
    pub kind: TraceKind,
    pub job: u64,
    pub attained: u64,
}

impl TraceEvent {
    pub fn new(time: u64, kind: TraceKind, job: u64, attained: u64) -> Self {
        Self {
            time,
            kind,
            job,
            attained,
        }
    }
}

/// `event_time,event_kind,job_id,attained`, times in time units.
pub fn write_trace_csv<W: Write>(mut out: W, events: &[TraceEvent]) -> io::Result<()> {
    writeln!(out, "event_time,event_kind,job_id,attained")?;
    for e in events {
        writeln!(
            out,
            "{},{},{},{}",
            fmt_g12(clock::to_units(e.time)),
            e.kind,
            e.job,
            fmt_g12(clock::to_units(e.attained))
        )?;
    }
    Ok(())
}
