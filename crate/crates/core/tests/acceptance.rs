//! End-to-end acceptance checks. Each criterion prints one `[PASS]`/`[FAIL]`
//! line; the test fails if any criterion does.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zenotrap::closed_form::{
    asymptotic_mean, asymptotic_position_variance, coherences_of, equipartition_check, fit, occupations_of,
    ClosedForm,
};
use zenotrap::dynamics::{channels as ch, integrate, uniform_grid, DynamicsMode, IntegratorConfig};
use zenotrap::hilbert::{
    compose_initial, coupling_matrix, initial_state, initial_state_with_budget, rabi_table, MotionalObservable,
    MotionalStateSpec, TrapParams, VibronicDensityMatrix,
};
use zenotrap::scenario::{headline_numbers, kappa_grid, parse_str, simulate, sweep_kappa, ScenarioConfig};
use zenotrap::{TimeSeries, C64};

// Pinned tolerances.
const TOL_P_DOWN: f64 = 1e-6;
const MATRIX_BUDGET_SECS: f64 = 10.0;
const TOL_POSITION: f64 = 1e-5;
const TOL_RATE_REL: f64 = 0.01;
const TOL_ENERGY_START: f64 = 1e-15;
const TOL_ENERGY_LIMIT: f64 = 1e-4;
const TOL_ENERGY_DRIFT: f64 = 1e-8;
const SWEEP_POINTS: usize = 64;
const MAX_FLIP_OFFSET: usize = 1;
const TOL_ASYMPTOTE: f64 = 1e-4;
const TOL_EQUIPARTITION: f64 = 1e-4;
const TOL_VARIANCE: f64 = 1e-4;
const TOL_FACTOR_FOUR_RATIO: f64 = 1e-3;
const HEISENBERG_FLOOR: f64 = 0.5 - 1e-8;
const TOL_ORACLE: f64 = 1e-8;
const TOL_HALVING: f64 = 0.1;
const TOL_RATIO_ROUND_TRIP: f64 = 1e-12;

const TRAP: &str = "\
omega = 11.2 MHz
omega0 = 0.01 omega
eta = 0.2
phi = -90 deg
k = 1
";

thread_local! {
    /// Smallest Δx·Δp seen in each run, for the Heisenberg criterion.
    static UNCERTAINTY: RefCell<Vec<(String, f64)>> = const { RefCell::new(Vec::new()) };
}

fn log_uncertainty(label: &str, s: &TimeSeries) {
    let m = s.min_of(ch::UNCERTAINTY_PRODUCT).unwrap_or(f64::NAN);
    UNCERTAINTY.with(|u| u.borrow_mut().push((label.to_string(), m)));
}

fn config(body: &str) -> ScenarioConfig {
    parse_str(&format!("{TRAP}{body}")).unwrap_or_else(|e| panic!("{e}\n{body}"))
}

/// Numeric and closed-form series for a reduced-JCM scenario.
fn run(label: &str, cfg: &ScenarioConfig) -> (TimeSeries, TimeSeries) {
    let (traj, analytic) = simulate(cfg).unwrap_or_else(|e| panic!("{label}: {e}"));
    log_uncertainty(label, &traj.series);
    (traj.series, analytic.expect("reduced JCM"))
}

fn max_dev(a: &TimeSeries, b: &TimeSeries, name: &str) -> f64 {
    let (x, y) = (a.values(name).unwrap(), b.values(name).unwrap());
    x.iter().zip(y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

fn last(s: &TimeSeries, name: &str) -> f64 {
    *s.values(name).unwrap().last().unwrap()
}

type Verdict = (bool, String);

fn matrix_equivalence() -> Verdict {
    let states = [
        ("fock0", "initial = fock\nfock_n = 0\n"),
        ("fock2", "initial = fock\nfock_n = 2\n"),
        ("coherent_sqrt3", "initial = coherent\nalpha = 3^0.5\n"),
        ("thermal0.5", "initial = thermal\nnbar = 0.5\n"),
    ];
    let start = Instant::now();
    let mut worst: (f64, String) = (0.0, String::new());
    for (s_name, s_body) in states {
        for kappa in ["0", "0.5", "2"] {
            let label = format!("{s_name}/kappa={kappa}kc");
            let cfg = config(&format!(
                "{s_body}kappa = {kappa} kappa_crit\ncrit_manifold = 0\nt_end = 40 inv_rabi\nsamples = 400\n\
                 eigen_stride = 0\n"
            ));
            let (num, ana) = run(&label, &cfg);
            let d = max_dev(&num, &ana, ch::P_DOWN);
            if d >= worst.0 {
                worst = (d, label);
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    (
        worst.0 <= TOL_P_DOWN && secs < MATRIX_BUDGET_SECS,
        format!("max |dP_down| {:.2e} ({}), {secs:.2} s for 12 runs", worst.0, worst.1),
    )
}

fn damping_config() -> ScenarioConfig {
    config(
        "initial = coherent\nalpha = 1\nkappa = 0.1 omega0\nt_end = 80 inv_kappa\nsamples = 4000\n\
         eigen_stride = 0\n",
    )
}

fn position_damping(num: &TimeSeries, ana: &TimeSeries, cfg: &ScenarioConfig) -> Verdict {
    let d = max_dev(num, ana, ch::MEAN_POSITION);
    let spec = cfg.initial.motional_spec();
    let m = initial_state_with_budget(&spec, cfg.dim_fock, cfg.truncation_budget).unwrap().matrix;
    let table = rabi_table(&cfg.trap, cfg.dim_fock + 1).unwrap();
    let cf = ClosedForm::new(&cfg.trap, &table, &occupations_of(&m), &coherences_of(&m)).unwrap();
    let kappa = cfg.trap.kappa;
    // Undamped carrier: the closed form with its e^{−κt/4} removed.
    let shape = |t: f64| cf.mean_position(t).unwrap() * (0.25 * kappa * t).exp();
    let x = num.values(ch::MEAN_POSITION).unwrap();
    let f = fit::carrier_model_rate(&num.times, x, shape, 0.0, kappa).unwrap();
    let rel = f.relative_error(kappa / 4.0);
    (
        d <= TOL_POSITION && rel <= TOL_RATE_REL,
        format!("max |dx| {d:.2e} x0, rate {:.6e} vs kappa/4 {:.6e} (rel {rel:.1e})", f.rate, kappa / 4.0),
    )
}

fn energy_asymptote() -> Verdict {
    let cfg = config(
        "initial = fock\nfock_n = 0\nkappa = 0.5 kappa_crit\nt_end = 200 inv_kappa\nsamples = 2000\neigen_stride = 0\n",
    );
    let (num, _) = run("fock0/energy", &cfg);
    let e = num.values(ch::MEAN_ENERGY).unwrap();
    let (e0, e1) = (e[0], *e.last().unwrap());
    (
        (e0 - 0.5).abs() <= TOL_ENERGY_START && (e1 - 1.0).abs() <= TOL_ENERGY_LIMIT,
        format!("E(0) - 0.5 = {:.1e}, E(200/kappa) - 1 = {:.2e} hbar*omega", e0 - 0.5, e1 - 1.0),
    )
}

fn k0_conservation() -> Verdict {
    let mut worst = 0.0f64;
    for kappa in ["0 1/s", "1e6 1/s"] {
        let text = format!(
            "{}initial = coherent\nalpha = 1\nkappa = {kappa}\nt_end = 40 inv_rabi\nsamples = 2000\neigen_stride = 0\n",
            TRAP.replace("phi = -90 deg", "phi = 0 rad").replace("k = 1", "k = 0")
        );
        let (num, _) = run(&format!("k0/kappa={kappa}"), &parse_str(&text).unwrap());
        let e = num.values(ch::MEAN_ENERGY).unwrap();
        worst = worst.max(e.iter().map(|v| (v - e[0]).abs()).fold(0.0, f64::max));
    }
    (worst <= TOL_ENERGY_DRIFT, format!("max energy drift {worst:.2e} hbar*omega"))
}

fn zeno_transition() -> Verdict {
    let cfg = config("initial = fock\nfock_n = 0\nkappa = 0 1/s\nsamples = 1500\neigen_stride = 0\n");
    let kc = 4.0 * cfg.reference_rabi().unwrap();
    let grid = kappa_grid(0.25 * kc, 4.0 * kc, SWEEP_POINTS, true).unwrap();
    let table = sweep_kappa(&cfg, &grid).unwrap();
    let errors = table.rows.iter().filter(|r| r.error.is_some()).count();
    let (Some(flip), Some(frozen)) = (table.branch_flip(), table.frozen_from()) else {
        return (false, format!("no flip or no frozen region ({errors} row errors)"));
    };
    let at = |i: usize| table.rows[i].kappa_over_crit;
    (
        errors == 0 && flip.abs_diff(frozen) <= MAX_FLIP_OFFSET,
        format!(
            "radicand sign change at row {flip} (kappa/kc {:.4}), crossings vanish from row {frozen} (kappa/kc {:.4})",
            at(flip),
            at(frozen)
        ),
    )
}

struct LongRun {
    name: &'static str,
    diag0: Vec<f64>,
    series: TimeSeries,
}

/// Runs criterion 6 and returns the long-time series for criterion 8.
fn asymptotic_means() -> (Verdict, Vec<LongRun>) {
    let mut worst = 0.0f64;
    let mut runs = Vec::new();
    for (name, body) in [("fock1", "initial = fock\nfock_n = 1\n"), ("thermal0.5", "initial = thermal\nnbar = 0.5\n")] {
        let cfg = config(&format!(
            "{body}kappa = 0.5 kappa_crit\ncrit_manifold = 0\nt_end = 200 inv_kappa\nsamples = 1000\neigen_stride = 0\n"
        ));
        let (num, _) = run(&format!("{name}/asymptote"), &cfg);
        let spec = cfg.initial.motional_spec();
        let dim = cfg.dim_fock;
        let diag = occupations_of(&initial_state_with_budget(&spec, dim, cfg.truncation_budget).unwrap().matrix);
        for (channel, obs) in [
            (ch::MEAN_NUMBER, MotionalObservable::number(dim + 1)),
            (ch::MEAN_POSITION_SQ, MotionalObservable::position_squared(dim + 1)),
            (ch::MEAN_MOMENTUM_SQ, MotionalObservable::momentum_squared(dim + 1)),
            (ch::MEAN_PARITY, MotionalObservable::parity(dim + 1)),
        ] {
            let want = asymptotic_mean(&obs, &diag, 1).unwrap();
            worst = worst.max((last(&num, channel) - want).abs());
        }
        runs.push(LongRun {
            name,
            diag0: diag,
            series: num,
        });
    }
    ((worst <= TOL_ASYMPTOTE, format!("max |mean - asymptote| {worst:.2e}")), runs)
}

fn equipartition(num: &TimeSeries) -> Verdict {
    let r = equipartition_check(num, 0.1).unwrap();
    (
        r.max_deviation < TOL_EQUIPARTITION,
        format!("tail max pairwise deviation {:.2e} hbar*omega over {} samples", r.max_deviation, r.tail_samples),
    )
}

fn variance_adjudication(runs: &[LongRun]) -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for r in runs {
        let rep = asymptotic_position_variance(&r.diag0, 1).unwrap();
        let measured = last(&r.series, ch::POSITION_VARIANCE);
        let d2 = (measured - rep.from_asymptotic_means).abs();
        let ratio = rep.prefactor_four / measured;
        ok &= d2 <= TOL_VARIANCE
            && (rep.prefactor_four - measured).abs() > TOL_VARIANCE
            && (ratio - 2.0).abs() <= TOL_FACTOR_FOUR_RATIO;
        parts.push(format!("{}: var {measured:.6}, factor-2 dev {d2:.1e}, factor-4/var {ratio:.4}", r.name));
    }
    (ok, parts.join("; "))
}

fn heisenberg() -> Verdict {
    UNCERTAINTY.with(|u| {
        let u = u.borrow();
        let (label, min) = u
            .iter()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .cloned()
            .unwrap_or(("none".into(), f64::NAN));
        (
            !u.is_empty() && u.iter().all(|(_, m)| *m >= HEISENBERG_FLOOR),
            format!("min dx*dp {min:.12} ({label}) over {} runs", u.len()),
        )
    })
}

fn random_state(dim: usize, seed: u64) -> VibronicDensityMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 2 * dim;
    let g = DMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let mut m = &g * g.adjoint();
    let tr = m.trace();
    m /= tr;
    m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    VibronicDensityMatrix::new(dim, m).unwrap()
}

/// Dense Lindblad generator in the laser-rotating frame.
/// Column stacking: vec(AXB) = (Bᵀ ⊗ A) vec(X).
fn superoperator(p: &TrapParams, dim: usize, full: bool) -> DMatrix<C64> {
    let n = 2 * dim;
    let k = p.k_sideband;
    let mut h = DMatrix::<C64>::zeros(n, n);
    for i in 0..dim {
        h[(i, i)] = C64::new(p.omega * i as f64, 0.0);
        h[(dim + i, dim + i)] = C64::new(p.omega * (i as f64 - k as f64), 0.0);
    }
    if full {
        let c = coupling_matrix(p, dim).unwrap();
        for a in 0..dim {
            for b in 0..dim {
                h[(a, dim + b)] = C64::new(0.5 * c[(a, b)], 0.0);
                h[(dim + b, a)] = C64::new(0.5 * c[(a, b)], 0.0);
            }
        }
    } else {
        let table = rabi_table(p, dim - 1).unwrap();
        for a in 0..dim - k {
            h[(a, dim + a + k)] = C64::new(0.5 * table.values[a], 0.0);
            h[(dim + a + k, a)] = C64::new(0.5 * table.values[a], 0.0);
        }
    }
    let mut proj = DMatrix::<C64>::zeros(n, n);
    for i in 0..dim {
        proj[(i, i)] = C64::new(1.0, 0.0);
    }
    let id = DMatrix::<C64>::identity(n, n);
    let unitary = (id.kronecker(&h) - h.transpose().kronecker(&id)) * C64::new(0.0, -1.0);
    let measure = id.kronecker(&proj) + proj.transpose().kronecker(&id)
        - proj.transpose().kronecker(&proj) * C64::new(2.0, 0.0);
    unitary - measure * C64::new(0.5 * p.kappa, 0.0)
}

fn superoperator_oracle() -> Verdict {
    let p = TrapParams::node(3.0, 1.0, 0.3).with_kappa(0.4).with_phi(-PI / 2.0 + 0.3);
    let dim = 3;
    let rho0 = random_state(dim, 7);
    let omega01 = rabi_table(&p, 2).unwrap().values[0].abs();
    let n = 2 * dim;
    let v0 = DMatrix::from_column_slice(n * n, 1, rho0.entries().as_slice());
    let mut worst = 0.0f64;
    for full in [false, true] {
        let l = superoperator(&p, dim, full);
        let mode = if full {
            DynamicsMode::FullCoupling { sideband_cutoff: 2 }
        } else {
            DynamicsMode::ReducedJcm
        };
        for t in [0.1 / omega01, 1.0 / omega01, 5.0 / omega01] {
            let mut cfg = IntegratorConfig::default().with_times(vec![0.0, t]).with_tolerances(1e-11, 1e-14);
            cfg.truncation_budget = None;
            let traj = integrate(&rho0, &p, mode, &cfg).unwrap();
            let exact = (&l * C64::new(t, 0.0)).exp() * &v0;
            let d = traj
                .final_state
                .entries()
                .iter()
                .zip(exact.iter())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            worst = worst.max(d);
        }
    }
    (worst <= TOL_ORACLE, format!("max element-wise deviation {worst:.2e} (dim 3, reduced and full, 3 times each)"))
}

fn jcm_convergence() -> Verdict {
    let dim = 16;
    let spec = MotionalStateSpec::Coherent(C64::new(1.0, 0.0));
    let rho0 = compose_initial(&initial_state(&spec, dim).unwrap().matrix, dim).unwrap();
    let mut devs = Vec::new();
    for ratio in [0.1, 0.05, 0.025] {
        let p = TrapParams::node(1.0 / ratio, 1.0, 0.2);
        let omega01 = rabi_table(&p, 4).unwrap().values[0].abs();
        // 40 samples per trap period resolve the off-resonant wiggles.
        let t_end = 2.0 * PI / omega01;
        let samples = (40.0 * t_end * p.omega / (2.0 * PI)).ceil() as usize + 1;
        let mut cfg = IntegratorConfig::default().with_times(uniform_grid(t_end, samples));
        cfg.eigen_stride = 0;
        let jcm = integrate(&rho0, &p, DynamicsMode::ReducedJcm, &cfg).unwrap();
        let full = integrate(&rho0, &p, DynamicsMode::FullCoupling { sideband_cutoff: 5 }, &cfg).unwrap();
        log_uncertainty(&format!("jcm/ratio={ratio}"), &jcm.series);
        log_uncertainty(&format!("full/ratio={ratio}"), &full.series);
        devs.push(max_dev(&jcm.series, &full.series, ch::P_DOWN));
    }
    let r = [devs[0] / devs[1], devs[1] / devs[2]];
    (
        r.iter().all(|x| (x - 2.0).abs() < TOL_HALVING),
        format!(
            "deviations {:.3e}, {:.3e}, {:.3e}; successive ratios {:.3}, {:.3}",
            devs[0], devs[1], devs[2], r[0], r[1]
        ),
    )
}

fn headline() -> Verdict {
    let h = headline_numbers();
    let ratio = h.row("ratio").unwrap();
    let tau = h.row("tau=4/kappa").unwrap();
    let ok = (ratio.computed - h.stated_ratio).abs() <= TOL_RATIO_ROUND_TRIP
        && ratio.agrees == Some(true)
        && (tau.computed - 81.6e-6).abs() < 0.05e-6
        && tau.stated == Some(816e-6)
        && tau.agrees == Some(false);
    (
        ok,
        format!(
            "ratio {:.6e} vs {:.1e}; 4/kappa = {:.1} us vs stated {:.0} us flagged",
            ratio.computed,
            h.stated_ratio,
            tau.computed * 1e6,
            tau.stated.unwrap_or(f64::NAN) * 1e6
        ),
    )
}

#[test]
fn acceptance() {
    let mut results: Vec<(usize, &str, Verdict)> = Vec::new();
    results.push((1, "analytic/numeric P_down matrix", matrix_equivalence()));
    let damping = damping_config();
    let (num2, ana2) = run("coherent1/damping", &damping);
    results.push((2, "quantum damping of position", position_damping(&num2, &ana2, &damping)));
    results.push((3, "energy asymptote and heating", energy_asymptote()));
    results.push((4, "k = 0 energy conservation", k0_conservation()));
    results.push((5, "Zeno transition in a kappa sweep", zeno_transition()));
    let (v6, long_runs) = asymptotic_means();
    results.push((6, "long-time means", v6));
    results.push((7, "equipartition", equipartition(&num2)));
    results.push((8, "asymptotic position variance", variance_adjudication(&long_runs)));
    results.push((10, "superoperator oracle", superoperator_oracle()));
    results.push((11, "JCM approximation convergence", jcm_convergence()));
    results.push((12, "headline numbers", headline()));
    results.push((9, "Heisenberg floor", heisenberg()));
    results.sort_by_key(|r| r.0);

    for (i, name, (pass, detail)) in &results {
        println!("[{}] {i:>2} {name}: {detail}", if *pass { "PASS" } else { "FAIL" });
    }
    let failed: Vec<usize> = results.iter().filter(|r| !r.2 .0).map(|r| r.0).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
