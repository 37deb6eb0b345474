mod common;

use common::*;
use mg1lab::gittins::{efficiency, gittins_index, GittinsConfig, GittinsTable};
use mg1lab::sim::Simulator;
use mg1lab::ServiceDistribution;
use proptest::prelude::*;

fn family() -> Vec<ServiceDistribution> {
    let p3 = p3();
    vec![
        p3.clone(),
        p15(),
        ServiceDistribution::exponential(1.7).unwrap(),
        ServiceDistribution::deterministic(2.0).unwrap(),
        ServiceDistribution::uniform(0.5, 3.0).unwrap(),
        ServiceDistribution::truncated_a(p3.clone(), 4.0).unwrap(),
        ServiceDistribution::truncated_b(p3.clone(), 4.0).unwrap(),
        ServiceDistribution::truncated_a(ServiceDistribution::uniform(0.0, 2.0).unwrap(), 1.5)
            .unwrap(),
        ServiceDistribution::truncated_b(ServiceDistribution::exponential(0.5).unwrap(), 3.0)
            .unwrap(),
    ]
}

#[test]
fn pareto_mean_by_quadrature() {
    let d = p15();
    let oracle = integrate_to_inf(|x| d.survival(x), 0.0, 1e-12);
    assert!(rel_close(d.moments().mean, oracle, 1e-8), "{oracle}");
    assert!(rel_close(d.moments().mean, 2.0, 1e-15));
}

#[test]
fn infinite_second_moment_detected_by_quadrature_growth() {
    let d = p15();
    assert!(d.moments().second.is_infinite());
    // truncated second moments grow without bound, roughly like sqrt(s)
    let m = |s: f64| integrate(|x| x * x * d.density(x), 0.0, s, 1e-10);
    let (a, b) = (m(1e2), m(1e4));
    assert!(b > 5.0 * a, "{a} {b}");
}

#[test]
fn pareto15_tail_mean_closed_form() {
    let d = p15();
    let t = d.tail_stats(4.0).unwrap();
    let want = 3.0 * 5f64.powf(-0.5) - 5f64.powf(-1.5);
    assert!(rel_close(t.m1_tail, want, 1e-12));
    let oracle = partial_moment_oracle(&d, 1, 4.0, f64::INFINITY);
    assert!(rel_close(t.m1_tail, oracle, 1e-8), "{oracle}");
}

#[test]
fn pareto3_tail_moments_match_formulas() {
    for s in [0.5, 1.0, 2.0, 4.0, 8.0, 20.0] {
        let t = p3().tail_stats(s).unwrap();
        let y = (s + 1.0) * (s + 1.0) * (s + 1.0);
        assert!(rel_close(t.m1_tail, (3.0 * s + 1.0) / (2.0 * y), 1e-12));
        assert!(rel_close(
            t.m2_tail,
            (3.0 * s * s + 3.0 * s + 1.0) / y,
            1e-12
        ));
    }
    let t = p3().tail_stats(1.0).unwrap();
    assert!(rel_close(t.m1_tail, 0.25, 1e-14));
    assert!(rel_close(t.m2_tail, 0.875, 1e-14));
}

#[test]
fn closed_forms_agree_with_quadrature() {
    for d in family() {
        for s in [0.75, 1.5, 2.5, 3.9] {
            for k in [0, 1, 2] {
                let below = d.partial_moment(k as u32, f64::NEG_INFINITY, s);
                let oracle = partial_moment_oracle(&d, k, f64::NEG_INFINITY, s);
                assert!(
                    (below - oracle).abs() <= 1e-9 * oracle.abs().max(1e-3),
                    "{d} k={k} s={s}: {below} vs {oracle}"
                );
            }
            let t = d.tail_stats(s).unwrap();
            let oracle = partial_moment_oracle(&d, 1, s, f64::INFINITY);
            assert!(
                (t.m1_tail - oracle).abs() <= 1e-8 * oracle.abs().max(1e-3),
                "{d} s={s}: {} vs {oracle}",
                t.m1_tail
            );
        }
    }
}

#[test]
fn truncated_moments_by_quadrature() {
    // E[min(X, s)^k] = ∫_0^s x^k f(x) dx + s^k P(X >= s)
    for s in [0.5, 2.0, 10.0] {
        let d = p15();
        let t = d.tail_stats(s).unwrap();
        let m1 = integrate(|x| x * d.density(x), 0.0, s, 1e-13) + s * d.survival(s);
        let m2 = integrate(|x| x * x * d.density(x), 0.0, s, 1e-13) + s * s * d.survival(s);
        assert!(rel_close(t.m1_trunc, m1, 1e-9), "{} {m1}", t.m1_trunc);
        assert!(rel_close(t.m2_trunc, m2, 1e-9), "{} {m2}", t.m2_trunc);
        let ta = ServiceDistribution::truncated_a(d.clone(), s)
            .unwrap()
            .moments();
        assert!(rel_close(ta.mean, t.m1_trunc, 1e-12));
        assert!(rel_close(ta.second, t.m2_trunc, 1e-12));
    }
}

#[test]
fn type_a_keeps_cdf_below_threshold() {
    let base = p3();
    let s = 2.0;
    let a = ServiceDistribution::truncated_a(base.clone(), s).unwrap();
    for i in 0..200 {
        let x = s * i as f64 / 200.0;
        assert_eq!(a.cdf(x), base.cdf(x));
    }
    assert!(rel_close(a.atom_mass(s), base.survival_left(s), 1e-15));
    let cont = integrate(|x| a.density(x), 0.0, s, 1e-13);
    assert!(rel_close(cont + a.atom_mass(s), 1.0, 1e-10));
    assert_eq!(a.survival(s), 0.0);
    assert!(rel_close(a.survival(0.5), 1.5f64.powi(-3), 1e-14));
}

#[test]
fn type_b_is_conditional_law() {
    let base = p3();
    let s = 2.0;
    let b = ServiceDistribution::truncated_b(base.clone(), s).unwrap();
    for i in 0..200 {
        let x = s * i as f64 / 200.0;
        let want = (base.cdf(s) - base.cdf(x)) / base.cdf(s);
        assert!((b.survival(x) - want).abs() < 1e-14);
    }
    assert_eq!(b.survival(s), 0.0);
    assert!(b.atoms().is_empty());
}

#[test]
fn residual_condition_on_pareto() {
    for alpha in [1.5, 2.5, 3.0] {
        let d = ServiceDistribution::pareto(alpha).unwrap();
        for s in [1.0, 5.0, 10.0, 100.0] {
            let c = d.residual_condition(s);
            assert!(c <= alpha * s / (s + 1.0).powf(alpha) * (1.0 + 1e-12));
        }
    }
    let d = p15();
    let q = |s: f64| d.survival(s) * integrate(|x| x * x * d.density(x), 0.0, s, 1e-12);
    let (c10, c100) = (d.residual_condition(10.0), d.residual_condition(100.0));
    assert!(rel_close(c10, q(10.0), 1e-8));
    assert!(rel_close(c100, q(100.0), 1e-8));
    assert!(c100 < c10);
    let det = ServiceDistribution::deterministic(1.0).unwrap();
    assert_eq!(det.residual_condition(2.0), 0.0);
}

#[test]
fn truncated_mean_monotone_and_tail_moments_decrease() {
    for d in [p3(), p15(), ServiceDistribution::uniform(0.0, 5.0).unwrap()] {
        let mean = d.moments().mean;
        let mut prev = d.tail_stats(0.1).unwrap();
        for i in 2..200 {
            let t = d.tail_stats(0.1 * i as f64).unwrap();
            assert!(t.m1_trunc >= prev.m1_trunc && t.m1_trunc <= mean * (1.0 + 1e-12));
            assert!(t.m1_tail <= prev.m1_tail && t.m2_tail <= prev.m2_tail);
            assert!(t.m1_trunc <= mean.min(t.s + t.m1_below()) * (1.0 + 1e-12));
            prev = t;
        }
    }
}

fn ks_statistic(d: &ServiceDistribution, mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = d.cdf(x);
            let fl = d.cdf_left(x);
            ((i as f64 + 1.0) / n - f)
                .abs()
                .max((fl - i as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn sampling_passes_kolmogorov_smirnov() {
    let crit = 1.628 / (1e5f64).sqrt();
    for (k, d) in [p3(), p15(), ServiceDistribution::exponential(2.0).unwrap()]
        .into_iter()
        .chain([ServiceDistribution::truncated_b(p3(), 3.0).unwrap()])
        .enumerate()
    {
        let mut rng = Simulator::period_rng(11, k as u64);
        let xs: Vec<f64> = (0..100_000).map(|_| d.sample(&mut rng)).collect();
        let ks = ks_statistic(&d, xs);
        assert!(ks < crit, "{d}: {ks} >= {crit}");
    }
}

#[test]
fn truncated_a_sampling_hits_atom_with_right_mass() {
    let d = ServiceDistribution::truncated_a(p3(), 1.0).unwrap();
    let mut rng = Simulator::period_rng(5, 0);
    let n = 200_000;
    let hits = (0..n).filter(|_| d.sample(&mut rng) == 1.0).count() as f64 / n as f64;
    let p = 0.125;
    assert!(
        (hits - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt(),
        "{hits}"
    );
}

#[test]
fn pareto3_sample_mean_within_clt_band() {
    let d = p3();
    let mut rng = Simulator::period_rng(3, 0);
    let n = 1_000_000;
    let mean = (0..n).map(|_| d.sample(&mut rng)).sum::<f64>() / n as f64;
    let sigma = d.moments().variance().sqrt();
    assert!(
        (mean - 0.5).abs() < 3.0 * sigma / (n as f64).sqrt(),
        "{mean}"
    );
}

proptest! {
    #[test]
    fn partition_identities(s in 0.01f64..50.0, which in 0usize..9) {
        let d = &family()[which];
        let m = d.moments();
        let t = d.tail_stats(s).unwrap();
        prop_assert!(rel_close(t.m1_tail + t.m1_below(), m.mean, 1e-9));
        if m.second.is_finite() {
            prop_assert!(rel_close(t.m2_tail + t.m2_below(), m.second, 1e-9));
        }
        if t.conditional_defined {
            prop_assert!(rel_close(t.cond_m1, t.m1_tail / t.p_tail, 1e-12));
            prop_assert!(t.resid_m1 >= 0.0);
        }
    }

    #[test]
    fn quantile_is_generalized_inverse(u in 0.0f64..0.999, which in 0usize..9) {
        let d = &family()[which];
        let x = d.quantile(u);
        prop_assert!(d.cdf(x) >= u - 1e-12);
        prop_assert!(d.cdf_left(x) <= u + 1e-12);
    }

    #[test]
    fn display_round_trips(which in 0usize..9) {
        let d = &family()[which];
        let back: ServiceDistribution = d.to_string().parse().unwrap();
        prop_assert_eq!(&back, d);
    }
}

// Gittins index oracles.

fn brute_force_index(d: &ServiceDistribution, a: f64, width: f64) -> f64 {
    (1..=20_000)
        .map(|i| width * (i as f64 / 20_000.0).powi(3))
        .filter_map(|delta| efficiency(d, a, delta).ok())
        .fold(0.0, f64::max)
}

#[test]
fn pareto_index_against_brute_force() {
    let cfg = GittinsConfig::default();
    for a in [0.0, 0.3, 1.0, 2.5, 5.0, 10.0] {
        let g = gittins_index(&p3(), a, &cfg);
        let brute = brute_force_index(&p3(), a, 50.0);
        assert!(rel_close(g, brute, 0.01), "a={a}: {g} vs {brute}");
        assert!(rel_close(g, 3.0 / (a + 1.0), 0.01));
    }
}

#[test]
fn exponential_index_constant() {
    let cfg = GittinsConfig::default();
    let d = ServiceDistribution::exponential(0.7).unwrap();
    for a in [0.0, 0.5, 3.0, 20.0] {
        assert!((gittins_index(&d, a, &cfg) - 0.7).abs() < 1e-9);
    }
}

#[test]
fn index_scales_inversely_with_time() {
    // exponential and uniform have a scale parameter; the shifted Pareto
    // family does not, so it cannot be rescaled within the family
    let cfg = GittinsConfig::default();
    let c = 2.5;
    let pairs = [
        (
            ServiceDistribution::exponential(1.0).unwrap(),
            ServiceDistribution::exponential(1.0 / c).unwrap(),
        ),
        (
            ServiceDistribution::uniform(0.0, 2.0).unwrap(),
            ServiceDistribution::uniform(0.0, 2.0 * c).unwrap(),
        ),
        (
            ServiceDistribution::uniform(1.0, 3.0).unwrap(),
            ServiceDistribution::uniform(c, 3.0 * c).unwrap(),
        ),
    ];
    for (d, scaled) in pairs {
        for a in [0.0, 0.4, 1.1, 1.7] {
            let g = gittins_index(&d, a, &cfg);
            let gs = gittins_index(&scaled, a * c, &cfg);
            assert!(rel_close(gs, g / c, 1e-9), "{d} a={a}: {gs} vs {}", g / c);
        }
    }
}

#[test]
fn uniform_index_is_increasing() {
    // increasing hazard: the best quantum runs to the end of the support
    let d = ServiceDistribution::uniform(0.0, 1.0).unwrap();
    let cfg = GittinsConfig::default();
    for a in [0.0, 0.25, 0.5, 0.75] {
        let g = gittins_index(&d, a, &cfg);
        assert!(rel_close(g, 2.0 / (1.0 - a), 1e-9), "{a}: {g}");
    }
}

#[test]
fn grid_refinement_is_stable() {
    let coarse = GittinsConfig::default();
    let fine = GittinsConfig {
        n_delta: 128,
        ..GittinsConfig::default()
    };
    let base = GittinsTable::build(
        &p3(),
        &GittinsConfig {
            a_max: Some(10.0),
            grid_step: Some(0.05),
            ..coarse.clone()
        },
    )
    .unwrap();
    let refined = GittinsTable::build(
        &p3(),
        &GittinsConfig {
            a_max: Some(10.0),
            grid_step: Some(0.025),
            ..fine
        },
    )
    .unwrap();
    for i in 0..=200 {
        let a = 10.0 * i as f64 / 200.0 + 0.0123;
        let (x, y) = (base.lookup(a), refined.lookup(a));
        assert!(rel_close(x, y, 0.005), "a={a}: {x} vs {y}");
    }
}

#[test]
fn pareto_table_decreasing() {
    let t = GittinsTable::for_distribution(&p3()).unwrap();
    assert!(t.values().windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn truncated_a_table_rises_toward_atom() {
    let s = 4.0;
    let d = ServiceDistribution::truncated_a(p3(), s).unwrap();
    let t = GittinsTable::for_distribution(&d).unwrap();
    let tail: Vec<f64> = t
        .grid()
        .iter()
        .zip(t.values())
        .filter(|(a, _)| **a >= 0.9 * s)
        .map(|(_, g)| *g)
        .collect();
    assert!(tail.windows(2).all(|w| w[1] > w[0]), "{tail:?}");
    assert!(tail.last().unwrap().is_infinite());
    let direct = efficiency(&d, 3.9, s - 3.9).unwrap();
    assert!(rel_close(t.lookup(3.9), direct, 1e-3));
}
