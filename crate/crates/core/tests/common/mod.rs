//! Independent numerical oracles shared by the integration tests.
#![allow(dead_code)]

use mg1lab::sim::{BuildPolicy, PolicyFactory, PolicySpec};
use mg1lab::{GittinsConfig, ServiceDistribution};

/// Adaptive Simpson quadrature of `f` on `[a, b]`.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn step<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    if b <= a {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Splits `[a, b]` into `pieces` equal panels before adapting; helps with
/// integrands that vary over several scales.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let pieces = 64;
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let lo = a + h * i as f64;
            let hi = if i + 1 == pieces { b } else { lo + h };
            simpson(&f, lo, hi, tol / pieces as f64)
        })
        .sum()
}

/// `∫_a^∞ f`, via `x = a + (u^-4 - 1)` which makes power-law tails down to
/// `x^-1.25` bounded in `u`.
pub fn integrate_to_inf<F: Fn(f64) -> f64>(f: F, a: f64, tol: f64) -> f64 {
    let g = |u: f64| {
        if u <= 0.0 {
            return 0.0;
        }
        let x = a + (u.powi(-4) - 1.0);
        let dx = 4.0 * u.powi(-5);
        let v = f(x) * dx;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate(g, 0.0, 1.0, tol)
}

/// `E[X^k 1{lo < X <= hi}]` by quadrature of the density plus atoms.
pub fn partial_moment_oracle(d: &ServiceDistribution, k: i32, lo: f64, hi: f64) -> f64 {
    let dens = |x: f64| x.powi(k) * d.density(x);
    let cont = if hi.is_infinite() {
        let (_, edge) = d.support();
        if edge.is_finite() {
            integrate(dens, lo.max(0.0), edge, 1e-13)
        } else {
            integrate(dens, lo.max(0.0), lo.max(0.0) + 1.0, 1e-13)
                + integrate_to_inf(dens, lo.max(0.0) + 1.0, 1e-13)
        }
    } else {
        integrate(dens, lo.max(0.0), hi, 1e-13)
    };
    let atoms: f64 = d
        .atoms()
        .into_iter()
        .filter(|&(x, _)| lo < x && x <= hi)
        .map(|(x, m)| m * x.powi(k))
        .sum();
    cont + atoms
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1e-300)
}

pub fn p3() -> ServiceDistribution {
    ServiceDistribution::pareto(3.0).unwrap()
}

pub fn p15() -> ServiceDistribution {
    ServiceDistribution::pareto(1.5).unwrap()
}

pub fn factory(spec: &str, d: &ServiceDistribution) -> PolicyFactory {
    spec.parse::<PolicySpec>()
        .unwrap()
        .resolve(d, &GittinsConfig::default())
        .unwrap()
}

pub fn as_builders(fs: &[PolicyFactory]) -> Vec<&dyn BuildPolicy> {
    fs.iter().map(|f| f as &dyn BuildPolicy).collect()
}
