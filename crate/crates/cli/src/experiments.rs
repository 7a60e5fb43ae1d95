//! Experiment orchestration: build the initial state, dispatch to the solver
//! or lab, write diagnostics CSV / report JSON / snapshots, and assemble the
//! manifest with its pass/fail summary.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use rotconv::diagnostics::{decay_rates, perturbation_study, PerturbationConfig};
use rotconv::dynamics::{simulate, SimulationSink};
use rotconv::field::SpectralField;
use rotconv::galerkin::{heat_flow_rows, iterate_scheme};
use rotconv::ineq::run_lab;
use rotconv::params::explicit_coupling_dt_max;
use rotconv::random::{random_field, RandomFieldSpec};
use rotconv::snapshot::write_field;
use rotconv::{Error as CoreError, ModelState, Params64, Row64, State64};

use crate::config::{DecayIntegrator, ExperimentKind, FieldName, InitSpec, RunConfig};
use crate::manifest::{
    file_entry, now_unix_ms, write_manifest, CheckEntry, FileEntry, RunManifest,
};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Core(#[from] CoreError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Other(String),
}

/// What `run` leaves behind besides files on disk.
pub struct RunSummary {
    pub checks: Vec<CheckEntry>,
    pub all_pass: bool,
    pub manifest_path: PathBuf,
}

const STRUCT_MEAN_TOL: f64 = 1e-12;
const STRUCT_DIV_TOL: f64 = 1e-13;
const STRUCT_CURL_TOL: f64 = 1e-12;
const STRUCT_IDEN3_TOL: f64 = 1e-11;
const THETA_BOUND_SLACK: f64 = 1e-10;

/// Materialize the configured initial condition on the run grid. Random
/// fields draw from streams split off the run seed; everything is projected
/// to zero horizontal mean by construction.
pub fn build_initial_state(config: &RunConfig) -> Result<State64, CoreError> {
    let grid = config.params.grid()?;
    let mut state = ModelState::zeros(&grid);
    match &config.init {
        InitSpec::Zero => {}
        InitSpec::SingleMode {
            field,
            mode,
            amplitude,
        } => {
            let f = SpectralField::cosine_mode(&grid, *mode, *amplitude)?;
            match field {
                FieldName::W => state.w = f,
                FieldName::Omega => state.omega = f,
                FieldName::Theta => state.theta = f,
            }
        }
        InitSpec::Random {
            fields,
            max_mode,
            slope,
            amplitude,
        } => {
            for (stream, field) in fields.iter().enumerate() {
                let spec = RandomFieldSpec::new(config.seed, *max_mode, *slope, true)
                    .stream(1 + stream as u64);
                let f = random_field(&grid, &spec)?;
                match field {
                    FieldName::W => state.w = f,
                    FieldName::Omega => state.omega = f,
                    FieldName::Theta => state.theta = f,
                }
            }
            let energy = state.total_energy()?.sqrt();
            if energy > 0.0 {
                let scale = amplitude / energy;
                for f in [&mut state.w, &mut state.omega, &mut state.theta] {
                    f.scale_mut(scale);
                }
            }
        }
    }
    Ok(state)
}

fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// Diagnostics CSV: one header row naming every field, one row per sample,
/// full double precision.
pub fn write_rows_csv(path: &Path, rows: &[Row64]) -> std::io::Result<()> {
    let mut out = String::new();
    out.push_str(&Row64::CSV_COLUMNS.join(","));
    out.push('\n');
    for row in rows {
        let mut first = true;
        for v in row.csv_values() {
            if !first {
                out.push(',');
            }
            let _ = write!(out, "{}", format_value(v));
            first = false;
        }
        out.push('\n');
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(out.as_bytes())
}

/// Same schema with a leading `level` column.
pub fn write_level_rows_csv(path: &Path, level_rows: &[(i64, Vec<Row64>)]) -> std::io::Result<()> {
    let mut out = String::new();
    out.push_str("level,");
    out.push_str(&Row64::CSV_COLUMNS.join(","));
    out.push('\n');
    for (level, rows) in level_rows {
        for row in rows {
            let _ = write!(out, "{level}");
            for v in row.csv_values() {
                let _ = write!(out, ",{}", format_value(v));
            }
            out.push('\n');
        }
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(out.as_bytes())
}

fn write_report<T: Serialize>(path: &Path, report: &T) -> Result<(), RunError> {
    let text = serde_json::to_string_pretty(report)
        .map_err(|e| RunError::Other(format!("report encode: {e}")))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// Structural invariants every run must satisfy at every sample, plus the
/// unconditional temperature decay envelope.
fn structural_checks(rows: &[Row64], params: &Params64) -> Vec<CheckEntry> {
    let mut worst_mean = 0.0f64;
    let mut worst_div = 0.0f64;
    let mut worst_curl = 0.0f64;
    let mut worst_iden3 = 0.0f64;
    for row in rows {
        worst_mean = worst_mean
            .max(row.hmean_w_rel)
            .max(row.hmean_omega_rel)
            .max(row.hmean_theta_rel);
        worst_div = worst_div.max(row.div_u_rel);
        worst_curl = worst_curl.max(row.curl_residual_rel);
        worst_iden3 = worst_iden3.max(row.iden3_residual_rel);
    }
    let gamma = params.poincare_gamma();
    let rate = 2.0 / (gamma * params.pe);
    let (t0, theta0) = rows
        .first()
        .map(|r| (r.t, r.theta_l2_sq))
        .unwrap_or((0.0, 0.0));
    let mut theta_margin = f64::INFINITY;
    for row in rows {
        let env = theta0 * (-(rate) * (row.t - t0)).exp();
        if env > 0.0 {
            theta_margin = theta_margin.min((env - row.theta_l2_sq) / env);
        } else if row.theta_l2_sq > 0.0 {
            theta_margin = theta_margin.min(-1.0);
        }
    }
    if !theta_margin.is_finite() {
        theta_margin = 0.0;
    }
    vec![
        CheckEntry::new(
            "horizontal-means-zero",
            worst_mean <= STRUCT_MEAN_TOL,
            format!("max relative k_h=0 amplitude {worst_mean:.3e} (tol {STRUCT_MEAN_TOL:.0e})"),
        ),
        CheckEntry::new(
            "velocity-divergence-free",
            worst_div <= STRUCT_DIV_TOL,
            format!("max relative divergence {worst_div:.3e} (tol {STRUCT_DIV_TOL:.0e})"),
        ),
        CheckEntry::new(
            "curl-consistency",
            worst_curl <= STRUCT_CURL_TOL,
            format!("max relative curl residual {worst_curl:.3e} (tol {STRUCT_CURL_TOL:.0e})"),
        ),
        CheckEntry::new(
            "vorticity-streamfunction-energy",
            worst_iden3 <= STRUCT_IDEN3_TOL,
            format!("max |(ω,φ)-‖u‖²|/‖u‖² = {worst_iden3:.3e} (tol {STRUCT_IDEN3_TOL:.0e})"),
        ),
        CheckEntry::new(
            "theta-decay-envelope",
            theta_margin >= -THETA_BOUND_SLACK,
            format!("worst relative margin {theta_margin:.3e} (slack {THETA_BOUND_SLACK:.0e})"),
        ),
    ]
}

/// Sink that writes field snapshots every `every` steps (sampled instants
/// only) while collecting rows.
struct SnapshotSink {
    out_dir: PathBuf,
    every: usize,
    dt: f64,
    rows: Vec<Row64>,
    written: Vec<PathBuf>,
}

impl SnapshotSink {
    fn new(out_dir: &Path, every: usize, dt: f64) -> Self {
        Self {
            out_dir: out_dir.to_path_buf(),
            every,
            dt,
            rows: Vec::new(),
            written: Vec::new(),
        }
    }
}

impl SimulationSink<f64> for SnapshotSink {
    fn on_sample(&mut self, state: &State64, row: &Row64) -> Result<(), CoreError> {
        self.rows.push(row.clone());
        if self.every == 0 {
            return Ok(());
        }
        let step = (state.t / self.dt).round() as usize;
        if step % self.every != 0 {
            return Ok(());
        }
        for (name, field) in [
            ("w", &state.w),
            ("omega", &state.omega),
            ("theta", &state.theta),
        ] {
            let rel = PathBuf::from("snapshots").join(format!("{name}_{step:08}.field"));
            write_field(&self.out_dir.join(&rel), name, state.t, field)?;
            self.written.push(rel);
        }
        Ok(())
    }
}

struct Artifacts {
    rows_for_structural: Vec<Row64>,
    checks: Vec<CheckEntry>,
    files: Vec<PathBuf>,
}

fn run_simulate(config: &RunConfig, out_dir: &Path) -> Result<Artifacts, RunError> {
    let init = build_initial_state(config)?;
    if config.snapshot_every > 0 {
        std::fs::create_dir_all(out_dir.join("snapshots"))?;
    }
    let mut sink = SnapshotSink::new(out_dir, config.snapshot_every, config.params.dt);
    let (_final_state, rows) = simulate(&init, &config.params, &mut sink)?;

    let csv = out_dir.join("diagnostics.csv");
    write_rows_csv(&csv, &rows)?;

    #[derive(Serialize)]
    struct SimulateReport<'a> {
        samples: usize,
        final_row: Option<&'a Row64>,
        max_ledger_residual_normalized: f64,
    }
    let e0 = rows.first().map(|r| r.half_energy()).unwrap_or(0.0);
    let max_res = rows
        .iter()
        .map(|r| r.ledger_residual.abs())
        .fold(0.0, f64::max);
    let normalized = if e0 > 0.0 { max_res / e0 } else { max_res };
    write_report(
        &out_dir.join("report.json"),
        &SimulateReport {
            samples: rows.len(),
            final_row: rows.last(),
            max_ledger_residual_normalized: normalized,
        },
    )?;

    let mut checks = structural_checks(&rows, &config.params);
    checks.push(CheckEntry::new(
        "ledger-residual-finite",
        normalized.is_finite(),
        format!("max normalized energy-ledger residual {normalized:.3e}"),
    ));
    let mut files = vec![
        PathBuf::from("diagnostics.csv"),
        PathBuf::from("report.json"),
    ];
    files.extend(sink.written);
    Ok(Artifacts {
        rows_for_structural: rows,
        checks,
        files,
    })
}

fn run_decay_study(config: &RunConfig, out_dir: &Path) -> Result<Artifacts, RunError> {
    let init = build_initial_state(config)?;
    let rows = match config.integrator {
        DecayIntegrator::Cnab2 => {
            let mut sink = rotconv::dynamics::NullSink;
            simulate(&init, &config.params, &mut sink)?.1
        }
        DecayIntegrator::ExactDiffusion => heat_flow_rows(&init.theta, &config.params)?,
    };
    write_rows_csv(&out_dir.join("diagnostics.csv"), &rows)?;

    let report = decay_rates(&rows, &config.params, config.kappa)?;
    write_report(&out_dir.join("report.json"), &report)?;

    let mut checks = structural_checks(&rows, &config.params);
    checks.push(CheckEntry::new(
        "theta-bound",
        report.theta_bound.pass,
        format!(
            "margin_min {:.3e}, margin_max {:.3e}",
            report.theta_bound.margin_min_rel, report.theta_bound.margin_max_rel
        ),
    ));
    checks.push(CheckEntry::new(
        "velocity-bound",
        report.velocity_bound.pass,
        if report.velocity_bound.checked {
            format!("margin_min {:.3e}", report.velocity_bound.margin_min_rel)
        } else {
            "not checked (θ₀ != 0: constant-free form unavailable)".into()
        },
    ));
    checks.push(CheckEntry::new(
        "z-derivative-finite",
        report.z_derivative_finite,
        format!(
            "affine log fit: slope {:.3e}, flagged {}",
            -report.z_derivative_fit.rate, report.z_derivative_fit.flagged
        ),
    ));
    Ok(Artifacts {
        rows_for_structural: rows,
        checks,
        files: vec![
            PathBuf::from("diagnostics.csv"),
            PathBuf::from("report.json"),
        ],
    })
}

fn run_galerkin_study(config: &RunConfig, out_dir: &Path) -> Result<Artifacts, RunError> {
    let init = build_initial_state(config)?;
    let outcome = iterate_scheme(&init, &config.params, &config.m_schedule)?;
    write_rows_csv(&out_dir.join("diagnostics.csv"), &outcome.reference_rows)?;
    write_level_rows_csv(&out_dir.join("levels.csv"), &outcome.level_rows)?;
    write_report(&out_dir.join("report.json"), &outcome.report)?;

    let mut checks = structural_checks(&outcome.reference_rows, &config.params);
    let support_ok = outcome.report.levels.iter().all(|l| l.support_ok);
    checks.push(CheckEntry::new(
        "level-support",
        support_ok,
        "velocity modes stay inside |j| <= m at every sample".to_string(),
    ));
    checks.push(CheckEntry::new(
        "levels-completed",
        outcome.report.failed_level.is_none(),
        match &outcome.report.failure {
            Some(f) => f.clone(),
            None => format!("all {} levels ran", outcome.report.levels.len()),
        },
    ));
    checks.push(CheckEntry::new(
        "reference-distance-decreasing",
        outcome.report.r_strictly_decreasing,
        format!(
            "r_m = {:?}",
            outcome
                .report
                .levels
                .iter()
                .map(|l| l.r_m)
                .collect::<Vec<_>>()
        ),
    ));
    Ok(Artifacts {
        rows_for_structural: outcome.reference_rows,
        checks,
        files: vec![
            PathBuf::from("diagnostics.csv"),
            PathBuf::from("levels.csv"),
            PathBuf::from("report.json"),
        ],
    })
}

fn run_perturb(config: &RunConfig, out_dir: &Path) -> Result<Artifacts, RunError> {
    let init = build_initial_state(config)?;
    let scale = init.total_energy()?.sqrt();
    let deltas: Vec<f64> = config.delta_fractions.iter().map(|f| f * scale).collect();
    let cfg = PerturbationConfig {
        deltas,
        direction_seed: config.seed.wrapping_add(0x5ee_d),
        direction_max_mode: match &config.init {
            InitSpec::Random { max_mode, .. } => *max_mode,
            _ => 3,
        },
        direction_slope: -2.0,
    };
    let (report, base_rows) = perturbation_study(&init, &config.params, &cfg)?;
    write_rows_csv(&out_dir.join("diagnostics.csv"), &base_rows)?;
    write_report(&out_dir.join("report.json"), &report)?;

    let mut checks = structural_checks(&base_rows, &config.params);
    checks.push(CheckEntry::new(
        "no-blow-up",
        !report.partial,
        format!("{} trajectories", report.entries.len()),
    ));
    checks.push(CheckEntry::new(
        "first-order-scaling",
        report.first_order_scaling.unwrap_or(false),
        format!("consecutive diff ratios {:?}", report.consecutive_ratios),
    ));
    let gronwall_ok = report
        .entries
        .iter()
        .all(|e| e.within_gronwall_envelope.unwrap_or(false));
    checks.push(CheckEntry::new(
        "gronwall-envelope",
        gronwall_ok,
        format!("K(T) = {:.6e}", report.k_final),
    ));
    Ok(Artifacts {
        rows_for_structural: base_rows,
        checks,
        files: vec![
            PathBuf::from("diagnostics.csv"),
            PathBuf::from("report.json"),
        ],
    })
}

fn run_ineq_lab(config: &RunConfig, out_dir: &Path) -> Result<Artifacts, RunError> {
    let report = run_lab::<f64>(&config.lab)?;
    write_report(&out_dir.join("report.json"), &report)?;
    let mut checks = vec![CheckEntry::new(
        "lab-hard-invariants",
        report.hard_failures.is_empty(),
        if report.hard_failures.is_empty() {
            "uniform Gronwall and identity residuals clean".to_string()
        } else {
            report.hard_failures.join("; ")
        },
    )];
    for (lemma, factor) in &report.doubling_factors {
        checks.push(CheckEntry::new(
            format!("best-constant-stability-{lemma:?}").to_lowercase(),
            *factor <= 2.0,
            format!("max-ratio doubling factor {factor:.3}"),
        ));
    }
    Ok(Artifacts {
        rows_for_structural: Vec::new(),
        checks,
        files: vec![PathBuf::from("report.json")],
    })
}

/// Run one experiment end to end: compute, write artifacts, then write the
/// manifest (config echo, checksums, checks). Deterministic for a fixed
/// config and thread count.
pub fn run(config: &RunConfig, out_dir: &Path) -> Result<RunSummary, RunError> {
    let errs = config.validation_errors();
    if !errs.is_empty() {
        return Err(RunError::Other(format!(
            "config failed validation: {}",
            errs.join("; ")
        )));
    }
    std::fs::create_dir_all(out_dir)?;
    let started = now_unix_ms();

    let (dt_max, dt_warn) = if config.kind == ExperimentKind::IneqLab {
        (None, false)
    } else {
        let grid = config.params.grid()?;
        let bound = explicit_coupling_dt_max(grid.as_ref(), config.params.dealias);
        let warn = config.params.dt > bound;
        if warn {
            eprintln!(
                "warning: dt = {} exceeds the explicit-coupling stability bound dt_max = {bound}",
                config.params.dt
            );
        }
        (Some(bound), warn)
    };

    let artifacts = match config.kind {
        ExperimentKind::Simulate => run_simulate(config, out_dir)?,
        ExperimentKind::DecayStudy => run_decay_study(config, out_dir)?,
        ExperimentKind::GalerkinStudy => run_galerkin_study(config, out_dir)?,
        ExperimentKind::Perturb => run_perturb(config, out_dir)?,
        ExperimentKind::IneqLab => run_ineq_lab(config, out_dir)?,
    };
    drop(artifacts.rows_for_structural);

    let mut files: Vec<FileEntry> = Vec::new();
    for rel in &artifacts.files {
        files.push(file_entry(out_dir, rel)?);
    }
    let all_pass = artifacts.checks.iter().all(|c| c.pass);
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        kind: config.kind.to_string(),
        config: config.clone(),
        seed: config.seed,
        threads: config.threads,
        started_unix_ms: started,
        ended_unix_ms: now_unix_ms(),
        explicit_coupling_dt_max: dt_max,
        dt_exceeds_coupling_bound: dt_warn,
        files,
        checks: artifacts.checks.clone(),
        all_checks_pass: all_pass,
    };
    let manifest_path = write_manifest(out_dir, &manifest)?;
    Ok(RunSummary {
        checks: artifacts.checks,
        all_pass,
        manifest_path,
    })
}
