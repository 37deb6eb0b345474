//! Closed-form bounds computed from service-law moments.
//!
//! * Busy-period bounds conditional on at least one job exceeding `s`.
//! * The residual-cost chain for PO-LCFS, which only needs `E(X) < ∞`.
//! * The gap bound `K1 E[X 1{X>s}] + K2 E[X^2 1{X>s}]` for
//!   truncate-then-switch, which needs finite variance.

use thiserror::Error;

use crate::dist::{DistError, ServiceDistribution, TailStats};

/// Constants printed alongside the closed-form ones for the Pareto(3), λ = 1
/// worked example. They do not follow from the formulas and are kept only
/// as a second, looser curve.
pub const PUBLISHED_K1: f64 = 120.0;
pub const PUBLISHED_K2: f64 = 144.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundError {
    #[error("unstable parameters: lambda * E(X) = {0} >= 1")]
    Unstable(f64),
    #[error("arrival rate must be positive and finite, got {0}")]
    BadRate(f64),
    #[error("E(X^2) is infinite; the gap bound needs finite variance")]
    InfiniteVariance,
    #[error("P(X > {0}) = 0; conditioning on an empty tail")]
    EmptyTail(f64),
    #[error("s = {s} too small: 1 - lambda E(M) E(X - s | X > s) = {denominator} <= 0")]
    STooSmall { s: f64, denominator: f64 },
    #[error("truncated load lambda * E(min(X, s)) = {0} >= 1")]
    TruncatedUnstable(f64),
    #[error(transparent)]
    Dist(#[from] DistError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    pub lambda: f64,
    pub mean: f64,
    /// `E(X^2)`, possibly `+inf`.
    pub second: f64,
}

impl BoundParams {
    pub fn new(lambda: f64, mean: f64, second: f64) -> Result<Self, BoundError> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(BoundError::BadRate(lambda));
        }
        let rho = lambda * mean;
        if !(rho < 1.0) {
            return Err(BoundError::Unstable(rho));
        }
        Ok(Self {
            lambda,
            mean,
            second,
        })
    }

    pub fn from_distribution(lambda: f64, d: &ServiceDistribution) -> Result<Self, BoundError> {
        let m = d.moments();
        Self::new(lambda, m.mean, m.second)
    }

    pub fn rho(&self) -> f64 {
        self.lambda * self.mean
    }

    /// `1 - lambda E(X)`
    pub fn slack(&self) -> f64 {
        1.0 - self.rho()
    }

    pub fn finite_variance(&self) -> bool {
        self.second.is_finite()
    }

    /// Mean busy-period length `E(X) / D`.
    pub fn mean_busy(&self) -> f64 {
        self.mean / self.slack()
    }

    /// Mean number of jobs per busy period `1 / D`.
    pub fn mean_jobs(&self) -> f64 {
        1.0 / self.slack()
    }
}

/// Busy-period bounds on the event that some job exceeds `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LongPeriodBounds {
    /// Upper bound on `E[W | A^c]`.
    pub busy_ub: f64,
    /// Upper bound on `E[N_B | A^c]`.
    pub jobs_ub: f64,
    /// Upper bound on `P(A^c)`.
    pub p_long_ub: f64,
}

pub fn long_period_bounds(p: &BoundParams, t: &TailStats) -> Result<LongPeriodBounds, BoundError> {
    if !t.conditional_defined || t.p_tail <= 0.0 {
        return Err(BoundError::EmptyTail(t.s));
    }
    let d = p.slack();
    Ok(LongPeriodBounds {
        busy_ub: t.cond_m1 / (d * d),
        jobs_ub: 1.0 / d + p.lambda * t.cond_m1 / (d * d),
        p_long_ub: t.p_tail / d,
    })
}

/// `(K1, K2)` of the gap bound.
pub fn gap_constants(p: &BoundParams) -> Result<(f64, f64), BoundError> {
    if !p.finite_variance() {
        return Err(BoundError::InfiniteVariance);
    }
    let d = p.slack();
    let d4 = d.powi(4);
    let l = p.lambda;
    let k1 = (2.0 + d + (l * p.mean + l * l * p.second) / d) / d4;
    let k2 = (2.0 * l / d + l) / d4;
    Ok((k1, k2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapBound {
    pub s: f64,
    pub k1: f64,
    pub k2: f64,
    /// `K1 E[X 1{X>s}] + K2 E[X^2 1{X>s}]`
    pub g: f64,
    /// Same expression with the published constants.
    pub g_published: f64,
    /// Bound on `E[W N_B 1{A^c}]` before the Jensen simplification; never
    /// exceeds `g`.
    pub product_ub: f64,
    pub long_period: Option<LongPeriodBounds>,
    /// Upper bound on `E(W N_B)`.
    pub busy_jobs_ub: f64,
}

pub fn gap_bound(p: &BoundParams, d: &ServiceDistribution, s: f64) -> Result<GapBound, BoundError> {
    let (k1, k2) = gap_constants(p)?;
    let t = d.tail_stats(s)?;
    let long_period = long_period_bounds(p, &t).ok();
    let dd = p.slack();
    let l = p.lambda;
    let product_ub = if t.conditional_defined {
        let (c1, c2) = (t.cond_m1, t.cond_m2);
        let d3 = dd.powi(3);
        let d2 = dd * dd;
        let inner = c1
            * ((d2 + dd + l * c1) / d3 + (l * p.mean + l * l * p.second) / d3 + l * c1 / d3)
            + l * c2 / d2
            + c1 / d2;
        t.p_tail / d2 * inner
    } else {
        0.0
    };
    Ok(GapBound {
        s,
        k1,
        k2,
        g: k1 * t.m1_tail + k2 * t.m2_tail,
        g_published: PUBLISHED_K1 * t.m1_tail + PUBLISHED_K2 * t.m2_tail,
        product_ub,
        long_period,
        busy_jobs_ub: (p.mean + l * p.second) / dd.powi(3),
    })
}

/// Residual-cost chain for PO-LCFS at threshold `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualBound {
    pub s: f64,
    /// `E(M)`: demoted jobs waiting when the low-priority queue is first served.
    pub em: f64,
    /// `E(L)`: high-priority work before the low-priority queue is first served.
    pub el: f64,
    pub em2: f64,
    pub eml_ub: f64,
    pub emq_ub: f64,
    /// Upper bound on `E(R)`, the mean residual sojourn per busy period.
    pub er_ub: f64,
}

impl ResidualBound {
    /// The three quantities whose decay drives `er_ub` to zero.
    pub fn convergence_terms(&self, t: &TailStats) -> [f64; 3] {
        [
            self.em * t.resid_m1,
            self.em * t.m1_trunc,
            self.em * t.m2_trunc,
        ]
    }
}

pub fn residual_chain(
    p: &BoundParams,
    d: &ServiceDistribution,
    s: f64,
) -> Result<ResidualBound, BoundError> {
    let t = d.tail_stats(s)?;
    let l = p.lambda;
    let load = l * t.m1_trunc;
    if !(load < 1.0) {
        return Err(BoundError::TruncatedUnstable(load));
    }
    let slack = 1.0 - load;
    let em = t.p_tail / slack;
    let el = t.m1_trunc / slack;
    let eml_ub = (s * t.p_tail + l * t.m2_trunc * em) * (1.0 + l * el) / slack;
    let em2 = (t.p_tail
        + 2.0 * s * t.p_tail * l * em
        + l * l * t.m2_trunc * em * em
        + l * t.m1_trunc * em * em)
        / slack;
    let emq_ub = em2 * t.resid_m1;
    let denominator = 1.0 - l * em * t.resid_m1;
    if !(denominator > 0.0) {
        return Err(BoundError::STooSmall { s, denominator });
    }
    let er_ub = (eml_ub + emq_ub * (1.0 + p.rho() / p.slack())) / denominator;
    Ok(ResidualBound {
        s,
        em,
        el,
        em2,
        eml_ub,
        emq_ub,
        er_ub,
    })
}

/// Mean sojourn under FCFS, `E(X) + lambda E(X^2) / (2 (1 - rho))`.
pub fn pk_mean_sojourn(p: &BoundParams) -> Result<f64, BoundError> {
    if !p.finite_variance() {
        return Err(BoundError::InfiniteVariance);
    }
    Ok(p.mean + p.lambda * p.second / (2.0 * p.slack()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p3() -> ServiceDistribution {
        ServiceDistribution::pareto(3.0).unwrap()
    }

    fn unit_load() -> BoundParams {
        BoundParams::from_distribution(1.0, &p3()).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn long_period_pareto_s1() {
        let t = p3().tail_stats(1.0).unwrap();
        let b = long_period_bounds(&unit_load(), &t).unwrap();
        assert!(close(b.busy_ub, 8.0, 1e-12));
        assert!(close(b.jobs_ub, 10.0, 1e-12));
        assert!(close(b.p_long_ub, 0.25, 1e-12));
    }

    #[test]
    fn long_period_rejects_empty_tail() {
        let det = ServiceDistribution::deterministic(1.0).unwrap();
        let p = BoundParams::from_distribution(0.5, &det).unwrap();
        let t = det.tail_stats(2.0).unwrap();
        assert_eq!(long_period_bounds(&p, &t), Err(BoundError::EmptyTail(2.0)));
    }

    #[test]
    fn long_period_light_traffic_limit() {
        let p = BoundParams::from_distribution(1e-9, &p3()).unwrap();
        let t = p3().tail_stats(1.0).unwrap();
        let b = long_period_bounds(&p, &t).unwrap();
        assert!(close(b.busy_ub, t.cond_m1, 1e-6));
        assert!(close(b.jobs_ub, 1.0, 1e-6));
    }

    #[test]
    fn constants_from_formulas() {
        let (k1, k2) = gap_constants(&unit_load()).unwrap();
        assert!(close(k1, 88.0, 1e-12));
        assert!(close(k2, 80.0, 1e-12));
        let p = BoundParams::new(1e-12, 0.5, 1.0).unwrap();
        let (k1, k2) = gap_constants(&p).unwrap();
        assert!(close(k1, 3.0, 1e-9) && k2 < 1e-9);
    }

    #[test]
    fn k1_linear_in_second_moment() {
        let a = BoundParams::new(1.0, 0.5, 1.0).unwrap();
        let b = BoundParams::new(1.0, 0.5, 2.0).unwrap();
        let (ka, _) = gap_constants(&a).unwrap();
        let (kb, _) = gap_constants(&b).unwrap();
        assert!(close(kb - ka, 16.0 * 2.0 * 1.0, 1e-12));
    }

    #[test]
    fn infinite_variance_gated() {
        let d = ServiceDistribution::pareto(1.5).unwrap();
        let p = BoundParams::from_distribution(0.25, &d).unwrap();
        assert_eq!(gap_constants(&p), Err(BoundError::InfiniteVariance));
        assert!(residual_chain(&p, &d, 10.0).is_ok());
        assert_eq!(pk_mean_sojourn(&p), Err(BoundError::InfiniteVariance));
    }

    #[test]
    fn gap_curve_pareto() {
        for s in [1.0, 2.0, 4.0, 8.0] {
            let b = gap_bound(&unit_load(), &p3(), s).unwrap();
            let y = s + 1.0;
            let m1 = (3.0 * s + 1.0) / (2.0 * y.powi(3));
            let m2 = (3.0 * s * s + 3.0 * s + 1.0) / y.powi(3);
            assert!(close(b.g, 88.0 * m1 + 80.0 * m2, 1e-12));
            assert!(close(b.g_published, 120.0 * m1 + 144.0 * m2, 1e-12));
            assert!(b.product_ub <= b.g);
            assert!(close(b.busy_jobs_ub, 12.0, 1e-12));
        }
        let far = gap_bound(&unit_load(), &p3(), 1e8).unwrap();
        assert!(far.g < 1e-4);
    }

    #[test]
    fn gap_long_period_fields_match() {
        let b = gap_bound(&unit_load(), &p3(), 2.0).unwrap();
        let t = p3().tail_stats(2.0).unwrap();
        assert_eq!(
            b.long_period,
            Some(long_period_bounds(&unit_load(), &t).unwrap())
        );
    }

    #[test]
    fn chain_vanishes_without_tail() {
        let det = ServiceDistribution::deterministic(1.0).unwrap();
        let p = BoundParams::from_distribution(0.5, &det).unwrap();
        let b = residual_chain(&p, &det, 2.0).unwrap();
        assert_eq!(b.em, 0.0);
        assert_eq!(b.er_ub, 0.0);
    }

    #[test]
    fn chain_decreases_for_heavy_tail() {
        let d = ServiceDistribution::pareto(1.5).unwrap();
        let p = BoundParams::from_distribution(0.25, &d).unwrap();
        let er: Vec<f64> = [10.0, 20.0, 40.0, 80.0]
            .iter()
            .map(|&s| residual_chain(&p, &d, s).unwrap().er_ub)
            .collect();
        assert!(er.windows(2).all(|w| w[1] < w[0]), "{er:?}");
    }

    #[test]
    fn residual_denominator_positive_under_stability() {
        // lambda E[(X - s)+] < 1 - lambda E[min(X, s)] whenever rho < 1
        let d = ServiceDistribution::pareto(1.5).unwrap();
        let p = BoundParams::from_distribution(0.499, &d).unwrap();
        for s in [1e-3, 0.1, 1.0, 10.0, 1e3] {
            assert!(residual_chain(&p, &d, s).is_ok(), "s={s}");
        }
    }

    #[test]
    fn pollaczek_khinchine_values() {
        let e = ServiceDistribution::exponential(1.0).unwrap();
        let p = BoundParams::from_distribution(0.5, &e).unwrap();
        assert!(close(pk_mean_sojourn(&p).unwrap(), 2.0, 1e-12));
        assert!(close(pk_mean_sojourn(&unit_load()).unwrap(), 1.5, 1e-12));
    }

    #[test]
    fn rejects_unstable_params() {
        assert!(matches!(
            BoundParams::new(2.0, 0.5, 1.0),
            Err(BoundError::Unstable(_))
        ));
    }
}
