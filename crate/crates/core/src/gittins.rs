//! Gittins index of a service law, and tabulated indices for the simulator.
//!
//! The index at attained service `a` is the best ratio, over service quanta
//! `delta`, of completion probability to expected service invested:
//!
//! ```text
//! G(a) = sup_delta [F(a + delta) - F(a)] / ∫_a^{a+delta} P(X > t) dt
//! ```
//!
//! The supremum is taken over a log-spaced grid of quanta plus every quantum
//! that lands exactly on an atom, since atoms make the ratio jump.

use rayon::prelude::*;
use thiserror::Error;

use crate::dist::ServiceDistribution;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GittinsError {
    #[error("service quantum must be positive, got {0}")]
    NonPositiveDelta(f64),
    #[error("no mass beyond attained service {0}")]
    ExhaustedSupport(f64),
    #[error("table range a_max = {a_max} exceeds the support edge {edge}")]
    BeyondSupport { a_max: f64, edge: f64 },
    #[error("invalid table grid: {0}")]
    BadGrid(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GittinsConfig {
    /// Points in the log-spaced quantum grid.
    pub n_delta: usize,
    /// Smallest quantum, relative to the remaining support width.
    pub delta_min_rel: f64,
    /// Quantile that stands in for the right edge of unbounded supports.
    pub tail_quantile: f64,
    /// Table spacing; defaults to `a_max / 512`.
    pub grid_step: Option<f64>,
    /// Table range; defaults to the truncation point for truncated laws and
    /// the 0.9999 quantile otherwise.
    pub a_max: Option<f64>,
}

impl Default for GittinsConfig {
    fn default() -> Self {
        Self {
            n_delta: 64,
            delta_min_rel: 1e-7,
            tail_quantile: 1.0 - 1e-12,
            grid_step: None,
            a_max: None,
        }
    }
}

/// `[F(a + delta) - F(a)] / ∫_a^{a+delta} P(X > t) dt`.
pub fn efficiency(d: &ServiceDistribution, a: f64, delta: f64) -> Result<f64, GittinsError> {
    if !(delta > 0.0) {
        return Err(GittinsError::NonPositiveDelta(delta));
    }
    if d.survival(a) <= 0.0 {
        return Err(GittinsError::ExhaustedSupport(a));
    }
    let invested = d.integrated_survival(a, a + delta);
    Ok(d.survival_diff(a, a + delta) / invested)
}

/// Gittins index at attained service `a`.
///
/// Returns `+inf` once no continuous mass is left ahead of `a` (at or past
/// the right edge of a bounded support, which is where a Type-A atom sits).
pub fn gittins_index(d: &ServiceDistribution, a: f64, cfg: &GittinsConfig) -> f64 {
    let (_, edge) = d.support();
    if a >= edge || d.survival(a) <= 0.0 {
        return f64::INFINITY;
    }
    let width = if edge.is_finite() {
        if edge - a <= 1e-12 * edge.max(1.0) {
            return f64::INFINITY;
        }
        edge - a
    } else {
        (d.quantile(cfg.tail_quantile) - a).max(a)
    };
    let n = cfg.n_delta.max(2);
    let lo = (width * cfg.delta_min_rel).ln();
    let hi = width.ln();
    let grid = (0..n).map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp());
    let atoms = d
        .atoms()
        .into_iter()
        .filter(|&(x, _)| x > a)
        .map(|(x, _)| x - a);
    grid.chain(atoms)
        .filter_map(|delta| efficiency(d, a, delta).ok())
        .fold(0.0, f64::max)
}

/// Indices on a uniform grid `0, step, 2 step, ..., a_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct GittinsTable {
    grid: Vec<f64>,
    index: Vec<f64>,
    step: f64,
    dist: String,
}

impl GittinsTable {
    pub fn build(d: &ServiceDistribution, cfg: &GittinsConfig) -> Result<Self, GittinsError> {
        let a_max = match (cfg.a_max, d.truncation_point()) {
            (Some(a), _) => a,
            (None, Some(s)) => s,
            (None, None) => d.quantile(0.9999),
        };
        if !a_max.is_finite() || a_max <= 0.0 {
            return Err(GittinsError::BadGrid("a_max must be positive and finite"));
        }
        let (_, edge) = d.support();
        if edge.is_finite() && a_max > edge {
            return Err(GittinsError::BeyondSupport { a_max, edge });
        }
        let step = cfg.grid_step.unwrap_or(a_max / 512.0);
        if !(step > 0.0) || !step.is_finite() {
            return Err(GittinsError::BadGrid("grid_step must be positive"));
        }
        let cells = (a_max / step).round().max(1.0) as usize;
        let step = a_max / cells as f64;
        let grid: Vec<f64> = (0..=cells)
            .map(|i| if i == cells { a_max } else { i as f64 * step })
            .collect();
        let index = grid.par_iter().map(|&a| gittins_index(d, a, cfg)).collect();
        Ok(Self {
            grid,
            index,
            step,
            dist: d.to_string(),
        })
    }

    /// Builds the table with the default grid for `d`.
    pub fn for_distribution(d: &ServiceDistribution) -> Result<Self, GittinsError> {
        Self::build(d, &GittinsConfig::default())
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.index
    }

    pub fn a_max(&self) -> f64 {
        *self.grid.last().expect("table has at least two points")
    }

    pub fn distribution(&self) -> &str {
        &self.dist
    }

    /// Linear interpolation between grid points, clamped past `a_max`.
    /// A cell touching an infinite entry evaluates to `+inf` inside it.
    pub fn lookup(&self, a: f64) -> f64 {
        let last = self.grid.len() - 1;
        if a >= self.grid[last] {
            return self.index[last];
        }
        if a <= 0.0 {
            return self.index[0];
        }
        let i = ((a / self.step) as usize).min(last - 1);
        let (a0, a1) = (self.grid[i], self.grid[i + 1]);
        let (g0, g1) = (self.index[i], self.index[i + 1]);
        let t = ((a - a0) / (a1 - a0)).clamp(0.0, 1.0);
        if t == 0.0 {
            g0
        } else if t == 1.0 {
            g1
        } else if g0.is_infinite() || g1.is_infinite() {
            f64::INFINITY
        } else {
            g0 + t * (g1 - g0)
        }
    }
}
