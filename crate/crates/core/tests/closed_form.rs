use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zenotrap::closed_form::{
    asymptotic_mean, coherences_of, equipartition_check, fit, kappa_crit, occupations_of, p_down, p_down_fock,
    BranchedFrequency, ClosedForm,
};
use zenotrap::dynamics::{channels as ch, integrate, uniform_grid, DynamicsMode, IntegratorConfig};
use zenotrap::hilbert::{
    compose_initial, default_dim_fock, initial_state, rabi_table, MotionalObservable, MotionalStateSpec,
    RabiTable, TrapParams,
};
use zenotrap::{TimeSeries, C64};

struct Run {
    series: TimeSeries,
    analytic: TimeSeries,
}

fn run(spec: MotionalStateSpec, p: TrapParams, t_end: f64, samples: usize) -> Run {
    let dim = default_dim_fock(&spec, p.k_sideband, 1e-8);
    let m = initial_state(&spec, dim).unwrap().matrix;
    let rho0 = compose_initial(&m, dim).unwrap();
    let mut cfg = IntegratorConfig::uniform(t_end, samples);
    cfg.eigen_stride = 0;
    let traj = integrate(&rho0, &p, DynamicsMode::ReducedJcm, &cfg).unwrap();
    let table = rabi_table(&p, dim + 4).unwrap();
    let cf = ClosedForm::new(&p, &table, &occupations_of(&m), &coherences_of(&m)).unwrap();
    let analytic = cf.series(&traj.series.times).unwrap();
    Run {
        series: traj.series,
        analytic,
    }
}

fn max_dev(r: &Run, name: &str) -> f64 {
    let a = r.series.values(name).unwrap();
    let b = r.analytic.values(name).unwrap();
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn node(kappa: f64) -> TrapParams {
    TrapParams::node(100.0, 1.0, 0.2).with_kappa(kappa)
}

fn table() -> RabiTable {
    rabi_table(&node(0.0), 40).unwrap()
}

#[test]
fn coherent_occupancy_matches_integrator() {
    let r = run(MotionalStateSpec::Coherent(C64::new(3f64.sqrt(), 0.0)), node(0.05), 40.0, 801);
    assert!(max_dev(&r, ch::P_DOWN) < 1e-6, "{}", max_dev(&r, ch::P_DOWN));
    assert!(max_dev(&r, ch::MEAN_ENERGY) < 1e-6);
}

#[test]
fn overdamped_fock_matches_integrator() {
    let kc = kappa_crit(2, &table()).unwrap();
    let r = run(MotionalStateSpec::Fock(2), node(2.0 * kc), 60.0, 601);
    assert!(max_dev(&r, ch::P_DOWN) < 1e-6);
    let pd = r.series.values(ch::P_DOWN).unwrap();
    assert!(pd.windows(2).all(|w| w[1] <= w[0] + 1e-12));
}

#[test]
fn position_matches_integrator_k1() {
    let r = run(MotionalStateSpec::Coherent(C64::new(1.0, 0.0)), node(0.1), 20.0, 2001);
    assert!(max_dev(&r, ch::MEAN_POSITION) < 1e-5, "{}", max_dev(&r, ch::MEAN_POSITION));
}

#[test]
fn position_matches_integrator_higher_sidebands() {
    for k in [0usize, 2, 3] {
        let p = node(0.15).with_sideband(k);
        let r = run(MotionalStateSpec::Coherent(C64::from_polar(1.1, 0.7)), p, 20.0, 1001);
        assert!(max_dev(&r, ch::MEAN_POSITION) < 1e-5, "k={k}: {}", max_dev(&r, ch::MEAN_POSITION));
        assert!(max_dev(&r, ch::MEAN_ENERGY) < 1e-6, "k={k}");
        assert!(max_dev(&r, ch::P_DOWN) < 1e-6, "k={k}");
    }
}

#[test]
fn long_time_means_match_asymptotic_formula() {
    let kappa = 0.3;
    for spec in [MotionalStateSpec::Fock(1), MotionalStateSpec::Thermal(0.5)] {
        let dim = default_dim_fock(&spec, 1, 1e-8);
        let m = initial_state(&spec, dim).unwrap().matrix;
        let r = run(spec.clone(), node(kappa), 200.0 / kappa, 11);
        let diag = occupations_of(&m);
        let last = |name: &str| *r.series.values(name).unwrap().last().unwrap();
        let cases = [
            (ch::MEAN_NUMBER, MotionalObservable::number(dim + 1)),
            (ch::MEAN_POSITION_SQ, MotionalObservable::position_squared(dim + 1)),
            (ch::MEAN_MOMENTUM_SQ, MotionalObservable::momentum_squared(dim + 1)),
            (ch::MEAN_PARITY, MotionalObservable::parity(dim + 1)),
        ];
        for (name, obs) in cases {
            let want = asymptotic_mean(&obs, &diag, 1).unwrap();
            assert!((last(name) - want).abs() < 1e-4, "{spec:?} {name}: {} vs {want}", last(name));
        }
    }
}

#[test]
fn equipartition_reached_and_flagged() {
    let kappa = 0.2;
    let r = run(MotionalStateSpec::Fock(0), node(kappa), 80.0 / kappa, 401);
    let rep = equipartition_check(&r.series, 0.1).unwrap();
    assert!(rep.converged && rep.max_deviation < 1e-4, "{rep:?}");

    let r = run(MotionalStateSpec::Fock(0), node(0.0), 200.0, 401);
    assert!(!equipartition_check(&r.series, 0.2).unwrap().converged);

    let r = run(MotionalStateSpec::Thermal(0.5), node(0.4).with_sideband(0), 100.0, 201);
    let rep = equipartition_check(&r.series, 0.2).unwrap();
    assert!(rep.max_change_from_start < 1e-8, "{rep:?}");
}

#[test]
fn decay_rate_independent_of_fock_number() {
    let t = table();
    let kappa = 0.05;
    let p = node(kappa);
    let times = uniform_grid(200.0, 8001);
    for n in 0..4 {
        let v: Vec<f64> = times.iter().map(|&s| p_down_fock(s, n, &p, &t).unwrap()).collect();
        let f = fit::peak_rate(&times, &v, 0.5, 3).unwrap();
        assert!(f.relative_error(kappa / 4.0) < 0.01, "n={n}: {f:?}");
    }
}

#[test]
fn envelope_continuous_across_critical_point() {
    let t = table();
    let omega = t.values[1];
    let kc = kappa_crit(1, &t).unwrap();
    let (lo, hi) = (kc * (1.0 - 1e-8), kc * (1.0 + 1e-8));
    let (a, b) = (BranchedFrequency::from_half(omega, lo), BranchedFrequency::from_half(omega, hi));
    for i in 0..=100 {
        let s = 10.0 / kc * i as f64 / 100.0;
        let ea = a.envelope(lo, s);
        let eb = b.envelope(hi, s);
        assert!((ea - eb).abs() <= 1e-6, "t={s}: {ea} vs {eb}");
    }
}

#[test]
fn occupancy_bounded_for_random_draws() {
    let t = rabi_table(&node(0.0), 24).unwrap();
    let kc = kappa_crit(0, &t).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_611);
    let mut worst: f64 = 0.0;
    for _ in 0..100_000 {
        let len = rng.random_range(1..=20);
        let mut diag: Vec<f64> = (0..len).map(|_| rng.random::<f64>()).collect();
        let s: f64 = diag.iter().sum();
        diag.iter_mut().for_each(|v| *v /= s);
        let p = node(rng.random_range(0.0..10.0 * kc));
        let time = rng.random_range(0.0..200.0);
        let v = p_down(time, &diag, &p, &t).unwrap();
        worst = worst.max(-v).max(v - 1.0);
    }
    assert!(worst <= 1e-12, "excursion {worst:e}");
}

proptest! {
    #[test]
    fn occupancy_starts_at_one_and_settles_at_half(
        weights in prop::collection::vec(0.0f64..1.0, 1..12),
        kappa_scale in 0.01f64..8.0,
    ) {
        let s: f64 = weights.iter().sum();
        prop_assume!(s > 1e-3);
        let diag: Vec<f64> = weights.iter().map(|w| w / s).collect();
        let t = table();
        let kappa = kappa_scale * kappa_crit(0, &t).unwrap();
        let p = node(kappa);
        prop_assert!((p_down(0.0, &diag, &p, &t).unwrap() - 1.0).abs() < 1e-12);
        // Slowest overdamped mode decays at κ/4 − √(κ²/16 − Ω²) ≥ 2Ω²/κ.
        let omega_min = t.values[..diag.len()].iter().copied().fold(f64::INFINITY, f64::min);
        let slow = if kappa > 4.0 * omega_min { omega_min * omega_min / kappa } else { kappa / 4.0 };
        let late = 40.0 / slow;
        prop_assert!((p_down(late, &diag, &p, &t).unwrap() - 0.5).abs() < 1e-6);
    }
}
