//! Fixed-point simulation time.
//!
//! Times are integer ticks of `2^-32` time units, so every per-period
//! accounting identity (work conservation, the sojourn split at the
//! threshold) holds exactly rather than up to rounding.

pub const TICKS_PER_UNIT: f64 = 4_294_967_296.0;

/// Largest representable duration, in time units.
pub const MAX_UNITS: f64 = (u64::MAX >> 1) as f64 / TICKS_PER_UNIT;

/// Rounds a nonnegative duration to the nearest tick; `None` past the horizon.
pub fn to_ticks(x: f64) -> Option<u64> {
    if !(x >= 0.0) || x > MAX_UNITS {
        return None;
    }
    Some((x * TICKS_PER_UNIT).round() as u64)
}

pub fn to_units(t: u64) -> f64 {
    t as f64 / TICKS_PER_UNIT
}

pub fn wide_to_units(t: u128) -> f64 {
    t as f64 / TICKS_PER_UNIT
}
