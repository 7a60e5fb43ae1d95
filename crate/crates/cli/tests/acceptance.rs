//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//!
//!  1. energy identity residual and its dt-refinement factor
//!  2. temperature decay envelope, tight on the gravest mode
//!  3. velocity decay envelope with θ₀ = 0, κ = 1
//!  4. z-derivative growth stays finite with an affine log envelope
//!  5. velocity-truncation scheme converges to the reference
//!  6. continuous dependence: first-order scaling and Gronwall envelope
//!  7. inequality lab: stability, zero violations, identity residuals
//!  8. structural invariants and bit-identical repeat runs

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use rotconv::diagnostics::{decay_rates, perturbation_study, PerturbationConfig};
use rotconv::dynamics::{simulate, NullSink};
use rotconv::field::SpectralField;
use rotconv::galerkin::{heat_flow_rows, iterate_scheme};
use rotconv::grid::SpectralGrid;
use rotconv::ineq::{run_lab, LabConfig};
use rotconv::random::{random_field, RandomFieldSpec};
use rotconv::state::ModelState;
use rotconv::{Dealias, Params64, Row64, State64};

type Grid = Arc<SpectralGrid<f64>>;

/// Acceptance-run parameter block: box of period L = 1, O(1) decay rates.
fn params(nx: usize, ny: usize, nz: usize, dt: f64, t_final: f64, sample_every: usize) -> Params64 {
    Params64 {
        l: 1.0,
        re: 40.0,
        pe: 40.0,
        gamma: 1.0,
        epsilon: 0.1,
        nx,
        ny,
        nz,
        dt,
        t_final,
        sample_every,
        dealias: Dealias::TwoThirds,
    }
}

fn random_state(g: &Grid, seed: u64, max_mode: i64, amp: f64, fields: [bool; 3]) -> State64 {
    let rf = |stream: u64| {
        random_field(
            g,
            &RandomFieldSpec::new(seed, max_mode, -2.0, true).stream(stream),
        )
        .unwrap()
    };
    let zero = SpectralField::zeros(g);
    let mut state = ModelState::new(
        0.0,
        if fields[0] { rf(1) } else { zero.clone() },
        if fields[1] { rf(2) } else { zero.clone() },
        if fields[2] { rf(3) } else { zero },
    )
    .unwrap();
    let e = state.total_energy().unwrap().sqrt();
    if e > 0.0 {
        for f in [&mut state.w, &mut state.omega, &mut state.theta] {
            f.scale_mut(amp / e);
        }
    }
    state
}

/// Criterion 8's per-run structural invariants plus criterion 2's
/// unconditional θ envelope, asserted on every sampled row of a run.
fn assert_run_invariants(rows: &[Row64], p: &Params64, label: &str) {
    let gamma = p.poincare_gamma();
    let rate = 2.0 / (gamma * p.pe);
    let (t0, theta0) = (rows[0].t, rows[0].theta_l2_sq);
    for row in rows {
        assert!(
            row.hmean_w_rel <= 1e-12,
            "{label}: w mean {:.3e}",
            row.hmean_w_rel
        );
        assert!(
            row.hmean_omega_rel <= 1e-12,
            "{label}: ω mean {:.3e}",
            row.hmean_omega_rel
        );
        assert!(
            row.hmean_theta_rel <= 1e-12,
            "{label}: θ mean {:.3e}",
            row.hmean_theta_rel
        );
        assert!(
            row.div_u_rel <= 1e-13,
            "{label}: div u {:.3e}",
            row.div_u_rel
        );
        assert!(
            row.iden3_residual_rel <= 1e-11,
            "{label}: (ω,φ) vs ‖u‖² {:.3e}",
            row.iden3_residual_rel
        );
        let env = theta0 * (-(rate) * (row.t - t0)).exp();
        assert!(
            row.theta_l2_sq <= env * (1.0 + 1e-10) || (env == 0.0 && row.theta_l2_sq == 0.0),
            "{label}: θ envelope violated at t={}: {} > {}",
            row.t,
            row.theta_l2_sq,
            env
        );
    }
}

// --------------------------------------------------------------- criterion 1

#[test]
fn acceptance_1_energy_identity() {
    let started = Instant::now();
    let (nx, ny, nz) = (32, 32, 16);
    let g = params(nx, ny, nz, 1e-3, 1.0, 1).grid().unwrap();
    let init = random_state(&g, 42, 3, 1.0, [true, true, true]);

    let run = |dt: f64| -> (f64, Vec<Row64>) {
        let p = params(nx, ny, nz, dt, 1.0, 1);
        let (_, rows) = simulate(&init, &p, &mut NullSink).unwrap();
        let e0 = 2.0 * rows[0].half_energy();
        let res = rows
            .iter()
            .map(|r| r.ledger_residual.abs())
            .fold(0.0, f64::max);
        (res / e0, rows)
    };
    let (res_coarse, rows) = run(1e-3);
    let (res_fine, _) = run(5e-4);
    let factor = res_coarse / res_fine;
    let elapsed = started.elapsed().as_secs_f64();

    let pass = res_coarse <= 1e-5 && (3.4..=4.6).contains(&factor) && elapsed <= 120.0;
    println!(
        "ACCEPTANCE 1 energy-identity: {} (normalized residual {res_coarse:.3e} <= 1e-5, \
         halving factor {factor:.3} in [3.4, 4.6], {elapsed:.1}s <= 120s)",
        if pass { "PASS" } else { "FAIL" }
    );
    assert_run_invariants(&rows, &params(nx, ny, nz, 1e-3, 1.0, 1), "criterion 1");
    assert!(res_coarse <= 1e-5, "normalized residual {res_coarse:.3e}");
    assert!((3.4..=4.6).contains(&factor), "refinement factor {factor}");
    assert!(elapsed <= 120.0, "runtime {elapsed:.1}s exceeds 2 min");
}

// --------------------------------------------------------------- criterion 2

#[test]
fn acceptance_2_theta_decay_bound_tight_on_gravest_mode() {
    // pure diffusion: the model reduces to exact per-mode heat flow
    let mut p = params(32, 32, 16, 1e-3, 1.0, 10);
    p.gamma = 0.0;
    let g = p.grid().unwrap();
    let theta0 = SpectralField::cosine_mode(&g, [1, 0, 0], 1.0).unwrap();
    let rows = heat_flow_rows(&theta0, &p).unwrap();
    let report = decay_rates(&rows, &p, 1.0).unwrap();

    let analytic = 2.0 * (4.0 * PI * PI / (p.l * p.l)) / p.pe;
    let rate_err = (report.fitted_theta.rate - analytic).abs() / analytic;
    let pass = report.theta_bound.pass
        && report.theta_bound.margin_max_rel <= 1e-6
        && !report.fitted_theta.flagged
        && rate_err <= 0.01;
    println!(
        "ACCEPTANCE 2 theta-decay: {} (bound holds with margin_min {:.1e}, tight: margin_max \
         {:.3e} <= 1e-6, fitted rate {:.6} vs 2(4π²/L²)/Pe = {:.6}, error {:.2e} <= 1%)",
        if pass { "PASS" } else { "FAIL" },
        report.theta_bound.margin_min_rel,
        report.theta_bound.margin_max_rel,
        report.fitted_theta.rate,
        analytic,
        rate_err
    );
    assert!(report.theta_bound.pass);
    assert!(report.theta_bound.margin_max_rel <= 1e-6);
    assert!(rate_err <= 0.01);
}

// --------------------------------------------------------------- criterion 3

#[test]
fn acceptance_3_velocity_decay_bound() {
    let p = params(24, 24, 12, 2e-3, 5.0, 25);
    let g = p.grid().unwrap();
    let init = random_state(&g, 42, 3, 1.0, [true, true, false]);
    let (_, rows) = simulate(&init, &p, &mut NullSink).unwrap();
    let report = decay_rates(&rows, &p, 1.0).unwrap();

    let pass = report.velocity_bound.checked && report.velocity_bound.pass;
    println!(
        "ACCEPTANCE 3 velocity-decay: {} (θ₀ = 0, κ = 1, T = 5: ‖u‖²+‖w‖² under \
         e^(-t/(γRe)) at every sample, margin_min {:.3e}; fitted rate {:.3} vs bound rate {:.3})",
        if pass { "PASS" } else { "FAIL" },
        report.velocity_bound.margin_min_rel,
        report.fitted_velocity.rate,
        report.velocity_bound_rate
    );
    assert_run_invariants(&rows, &p, "criterion 3");
    assert!(report.velocity_bound.checked);
    assert!(report.velocity_bound.pass);
}

// --------------------------------------------------------------- criterion 4

#[test]
fn acceptance_4_z_derivative_growth_reported() {
    let p = params(24, 24, 12, 2e-3, 10.0, 50);
    let g = p.grid().unwrap();
    let init = random_state(&g, 17, 3, 0.8, [true, true, true]);
    let (_, rows) = simulate(&init, &p, &mut NullSink).unwrap();
    let report = decay_rates(&rows, &p, 1.0).unwrap();

    let pass = report.z_derivative_finite && !report.z_derivative_fit.flagged;
    println!(
        "ACCEPTANCE 4 z-derivative-growth: {} (T = 10: series finite, affine log envelope \
         fitted with slope {:.3} and intercept {:.3}; report only, no constant check)",
        if pass { "PASS" } else { "FAIL" },
        -report.z_derivative_fit.rate,
        report.z_derivative_fit.intercept
    );
    assert_run_invariants(&rows, &p, "criterion 4");
    assert!(report.z_derivative_finite);
    assert!(!report.z_derivative_fit.flagged);
}

// --------------------------------------------------------------- criterion 5

#[test]
fn acceptance_5_galerkin_scheme_convergence() {
    let started = Instant::now();
    let p = params(48, 48, 24, 2.5e-3, 0.25, 10);
    let g = p.grid().unwrap();
    let init = random_state(&g, 42, 3, 1.0, [true, true, true]);
    let outcome = iterate_scheme(&init, &p, &[2, 4, 8, 16]).unwrap();
    let elapsed = started.elapsed().as_secs_f64();

    let r: Vec<f64> = outcome.report.levels.iter().map(|l| l.r_m).collect();
    let ratio = outcome.report.r_last_over_first.unwrap_or(f64::INFINITY);
    let support = outcome.report.levels.iter().all(|l| l.support_ok);
    let pass = outcome.report.r_strictly_decreasing && ratio <= 0.1 && support && elapsed <= 600.0;
    println!(
        "ACCEPTANCE 5 galerkin-convergence: {} (r_m = {:?} strictly decreasing, \
         r_16/r_2 = {ratio:.3e} <= 0.1, support clean, {elapsed:.1}s <= 600s)",
        if pass { "PASS" } else { "FAIL" },
        r
    );
    assert_run_invariants(&outcome.reference_rows, &p, "criterion 5 reference");
    assert!(outcome.report.failed_level.is_none());
    assert!(outcome.report.r_strictly_decreasing, "r_m = {r:?}");
    assert!(ratio <= 0.1, "r_last/r_first = {ratio:.3e}");
    assert!(support);
    assert!(elapsed <= 600.0, "runtime {elapsed:.1}s exceeds 10 min");
}

// --------------------------------------------------------------- criterion 6

#[test]
fn acceptance_6_continuous_dependence() {
    let p = params(24, 24, 12, 2e-3, 1.0, 10);
    let g = p.grid().unwrap();
    let init = random_state(&g, 7, 3, 1.0, [true, true, true]);
    let norm = init.total_energy().unwrap().sqrt();
    let cfg = PerturbationConfig {
        deltas: vec![1e-2 * norm, 5e-3 * norm, 2.5e-3 * norm],
        direction_seed: 99,
        direction_max_mode: 3,
        direction_slope: -2.0,
    };
    let (report, base_rows) = perturbation_study(&init, &p, &cfg).unwrap();

    let smallest_pair = report.consecutive_ratios.last().copied().flatten();
    let ratio_ok = smallest_pair
        .map(|r| (0.4..=0.6).contains(&r))
        .unwrap_or(false);
    let envelope_ok = report
        .entries
        .iter()
        .all(|e| e.within_gronwall_envelope == Some(true));
    let pass = ratio_ok && envelope_ok && !report.partial;
    println!(
        "ACCEPTANCE 6 continuous-dependence: {} (diff ratios {:?} with smallest pair in \
         [0.4, 0.6]; diff(T) <= e^K(T)·diff(0) with K(T) = {:.3})",
        if pass { "PASS" } else { "FAIL" },
        report.consecutive_ratios,
        report.k_final
    );
    assert_run_invariants(&base_rows, &p, "criterion 6 base");
    assert!(ratio_ok, "ratios {:?}", report.consecutive_ratios);
    assert!(envelope_ok);
    assert!(!report.partial);
}

// --------------------------------------------------------------- criterion 7

#[test]
fn acceptance_7_inequality_lab() {
    let started = Instant::now();
    let cfg = LabConfig::default(); // 1000 samples per lemma, 500 identity triples
    assert_eq!(cfg.samples_per_lemma, 1000);
    assert_eq!(cfg.identity_samples, 500);
    let report = run_lab::<f64>(&cfg).unwrap();
    let elapsed = started.elapsed().as_secs_f64();

    let stable = report
        .doubling_factors
        .iter()
        .all(|(_, f)| *f <= 2.0 && *f >= 0.5);
    let violations: usize = report
        .base
        .iter()
        .chain(report.doubled.iter())
        .filter(|s| matches!(s.lemma, rotconv::ineq::LemmaId::UniformGronwall))
        .map(|s| s.violations)
        .sum();
    let identities_ok = report.identities.max_rel_residual <= 1e-11;
    let pass = report.hard_failures.is_empty()
        && stable
        && violations == 0
        && identities_ok
        && elapsed <= 180.0;
    println!(
        "ACCEPTANCE 7 inequality-lab: {} (doubling factors {:?} within 2x, uniform-Gronwall \
         violations {violations} = 0, identity residual {:.3e} <= 1e-11, {elapsed:.1}s <= 180s)",
        if pass { "PASS" } else { "FAIL" },
        report
            .doubling_factors
            .iter()
            .map(|(l, f)| format!("{l:?}:{f:.2}"))
            .collect::<Vec<_>>(),
        report.identities.max_rel_residual
    );
    assert!(
        report.hard_failures.is_empty(),
        "{:?}",
        report.hard_failures
    );
    assert!(stable);
    assert_eq!(violations, 0);
    assert!(identities_ok);
    assert!(elapsed <= 180.0, "runtime {elapsed:.1}s exceeds 3 min");
}

// --------------------------------------------------------------- criterion 8

#[test]
fn acceptance_8_structural_invariants_and_determinism() {
    // structural invariants on a generic run
    let p = params(16, 16, 8, 2e-3, 0.2, 5);
    let g = p.grid().unwrap();
    let init = random_state(&g, 23, 3, 1.0, [true, true, true]);
    let (_, rows) = simulate(&init, &p, &mut NullSink).unwrap();
    assert_run_invariants(&rows, &p, "criterion 8");
    let worst_curl = rows.iter().map(|r| r.curl_residual_rel).fold(0.0, f64::max);

    // byte-identical repeat runs through the full artifact-writing path
    let config = rotconv_cli::parse_config(
        r#"{
            "kind": "simulate",
            "params": {
                "l": 1.0, "re": 40.0, "pe": 40.0, "gamma": 1.0, "epsilon": 0.1,
                "nx": 16, "ny": 16, "nz": 8,
                "dt": 0.002, "t_final": 0.1, "sample_every": 5
            },
            "init": { "kind": "random", "max_mode": 3, "amplitude": 1.0 },
            "seed": 23
        }"#,
        &[],
    )
    .unwrap();
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    rotconv_cli::run(&config, d1.path()).unwrap();
    rotconv_cli::run(&config, d2.path()).unwrap();
    let a = std::fs::read(d1.path().join("diagnostics.csv")).unwrap();
    let b = std::fs::read(d2.path().join("diagnostics.csv")).unwrap();
    let identical = a == b;

    let pass = identical;
    println!(
        "ACCEPTANCE 8 structural-invariants: {} (horizontal means <= 1e-12, div u <= 1e-13, \
         (ω,φ) = ‖u‖² within 1e-11, curl residual {worst_curl:.3e}, repeat runs byte-identical: \
         {identical})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(identical, "repeat runs differ");
}
