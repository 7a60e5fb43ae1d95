//! Run configuration: JSON document, dotted-path overrides, and validation
//! that reports every violation rather than the first.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rotconv::ineq::LabConfig;
use rotconv::{Dealias, Params64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Simulate,
    DecayStudy,
    GalerkinStudy,
    Perturb,
    IneqLab,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::DecayStudy => "decay-study",
            ExperimentKind::GalerkinStudy => "galerkin-study",
            ExperimentKind::Perturb => "perturb",
            ExperimentKind::IneqLab => "ineq-lab",
        };
        f.write_str(s)
    }
}

/// Which prognostic field a generator targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldName {
    W,
    Omega,
    Theta,
}

/// Built-in initial-condition generators. Every generator produces fields
/// with zero horizontal mean.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitSpec {
    Zero,
    /// One cosine mode in one prognostic field.
    SingleMode {
        field: FieldName,
        mode: [i64; 3],
        amplitude: f64,
    },
    /// Random band-limited fields in the listed prognostics, jointly rescaled
    /// so the state's energy norm √(‖w‖²+‖u‖²+‖θ‖²) equals `amplitude`.
    Random {
        #[serde(default = "default_random_fields")]
        fields: Vec<FieldName>,
        max_mode: i64,
        #[serde(default = "default_slope")]
        slope: f64,
        amplitude: f64,
    },
}

fn default_random_fields() -> Vec<FieldName> {
    vec![FieldName::W, FieldName::Omega, FieldName::Theta]
}

fn default_slope() -> f64 {
    -2.0
}

/// Time integrator of the decay study: the standard CNAB2 solver, or the
/// closed-form per-mode heat propagator (valid only for pure-diffusion
/// configurations: temperature-only initial data with Γ = 0).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DecayIntegrator {
    #[default]
    Cnab2,
    ExactDiffusion,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub struct RunConfig {
    pub kind: ExperimentKind,
    #[serde(default = "default_params")]
    pub params: Params64,
    #[serde(default = "default_init")]
    pub init: InitSpec,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_threads")]
    pub threads: usize,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Snapshot cadence in steps; 0 disables snapshots.
    #[serde(default)]
    pub snapshot_every: usize,
    /// Decay study: rate-tuning parameter κ >= 1 with Pe != 2κRe.
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default)]
    pub integrator: DecayIntegrator,
    /// Velocity-truncation schedule, strictly increasing from >= 2.
    #[serde(default = "default_schedule")]
    pub m_schedule: Vec<i64>,
    /// Perturbation sizes as fractions of the initial energy norm, strictly
    /// decreasing.
    #[serde(default = "default_deltas")]
    pub delta_fractions: Vec<f64>,
    #[serde(default)]
    pub lab: LabConfig,
}

fn default_params() -> Params64 {
    Params64 {
        l: std::f64::consts::TAU,
        re: 1.0,
        pe: 1.0,
        gamma: 1.0,
        epsilon: 0.1,
        nx: 32,
        ny: 32,
        nz: 16,
        dt: 1e-3,
        t_final: 1.0,
        sample_every: 10,
        dealias: Dealias::TwoThirds,
    }
}

fn default_init() -> InitSpec {
    InitSpec::Random {
        fields: default_random_fields(),
        max_mode: 4,
        slope: -2.0,
        amplitude: 1.0,
    }
}

fn default_seed() -> u64 {
    42
}

fn default_threads() -> usize {
    1
}

fn default_kappa() -> f64 {
    1.0
}

fn default_schedule() -> Vec<i64> {
    vec![2, 4, 8, 16]
}

fn default_deltas() -> Vec<f64> {
    vec![1e-2, 5e-3, 2.5e-3]
}

impl RunConfig {
    pub fn minimal(kind: ExperimentKind) -> Self {
        Self {
            kind,
            params: default_params(),
            init: default_init(),
            seed: default_seed(),
            threads: default_threads(),
            out: None,
            snapshot_every: 0,
            kappa: default_kappa(),
            integrator: DecayIntegrator::default(),
            m_schedule: default_schedule(),
            delta_fractions: default_deltas(),
            lab: LabConfig::default(),
        }
    }

    /// Every constraint violation with the offending value.
    pub fn validation_errors(&self) -> Vec<String> {
        let mut errs = self.params.validation_errors();
        if self.threads == 0 {
            errs.push("threads must be >= 1".into());
        }
        match &self.init {
            InitSpec::Zero => {}
            InitSpec::SingleMode {
                mode, amplitude, ..
            } => {
                if mode[0] == 0 && mode[1] == 0 {
                    errs.push(format!(
                        "single-mode init {mode:?} has k_h = 0 and a nonzero horizontal mean"
                    ));
                }
                if !amplitude.is_finite() {
                    errs.push(format!("init amplitude must be finite, got {amplitude}"));
                }
                let half = [
                    self.params.nx as i64 / 2,
                    self.params.ny as i64 / 2,
                    self.params.nz as i64 / 2,
                ];
                for (axis, (&j, h)) in mode.iter().zip(half).enumerate() {
                    if j <= -h || j >= h {
                        errs.push(format!(
                            "single-mode init component {j} (axis {axis}) not resolved: need |j| < N/2"
                        ));
                    }
                }
            }
            InitSpec::Random {
                fields,
                max_mode,
                slope,
                amplitude,
            } => {
                if fields.is_empty() {
                    errs.push("random init must list at least one field".into());
                }
                let limit = (self.params.nx.min(self.params.ny).min(self.params.nz) / 2) as i64 - 1;
                if *max_mode < 1 || *max_mode > limit {
                    errs.push(format!(
                        "random init max_mode must be in [1, {limit}], got {max_mode}"
                    ));
                }
                if !slope.is_finite() {
                    errs.push(format!("random init slope must be finite, got {slope}"));
                }
                if !(amplitude.is_finite() && *amplitude >= 0.0) {
                    errs.push(format!(
                        "random init amplitude must be >= 0 and finite, got {amplitude}"
                    ));
                }
            }
        }
        match self.kind {
            ExperimentKind::DecayStudy => {
                if !(self.kappa >= 1.0) {
                    errs.push(format!("kappa must be >= 1, got {}", self.kappa));
                }
                let two_kappa_re = 2.0 * self.kappa * self.params.re;
                if (self.params.pe - two_kappa_re).abs() <= 1e-12 * self.params.pe.max(two_kappa_re)
                {
                    errs.push(format!(
                        "decay bounds require Pe != 2 κ Re (got Pe = {}, 2 κ Re = {})",
                        self.params.pe, two_kappa_re
                    ));
                }
                if self.integrator == DecayIntegrator::ExactDiffusion {
                    let theta_only = matches!(
                        &self.init,
                        InitSpec::SingleMode {
                            field: FieldName::Theta,
                            ..
                        }
                    ) || matches!(
                        &self.init,
                        InitSpec::Random { fields, .. } if fields == &[FieldName::Theta]
                    );
                    if !theta_only || self.params.gamma != 0.0 {
                        errs.push(
                            "exact-diffusion integrator requires temperature-only initial data \
                             and gamma = 0 (the model then reduces to horizontal heat flow)"
                                .into(),
                        );
                    }
                }
            }
            ExperimentKind::GalerkinStudy => {
                if self.m_schedule.is_empty() {
                    errs.push("m_schedule must be nonempty".into());
                } else {
                    if self.m_schedule[0] < 2 {
                        errs.push(format!(
                            "m_schedule must start at >= 2, got {}",
                            self.m_schedule[0]
                        ));
                    }
                    if self.m_schedule.windows(2).any(|p| p[1] <= p[0]) {
                        errs.push(format!(
                            "m_schedule must be strictly increasing, got {:?}",
                            self.m_schedule
                        ));
                    }
                }
            }
            ExperimentKind::Perturb => {
                if self.delta_fractions.is_empty() {
                    errs.push("delta_fractions must be nonempty".into());
                }
                for d in &self.delta_fractions {
                    if !(d.is_finite() && *d >= 0.0) {
                        errs.push(format!("delta fractions must be >= 0 and finite, got {d}"));
                    }
                }
                if self.delta_fractions.windows(2).any(|p| p[1] >= p[0]) {
                    errs.push(format!(
                        "delta_fractions must be strictly decreasing, got {:?}",
                        self.delta_fractions
                    ));
                }
            }
            ExperimentKind::IneqLab => {
                if self.lab.samples_per_lemma == 0 {
                    errs.push("lab.samples_per_lemma must be >= 1".into());
                }
                for (name, n) in [
                    ("lab.nx", self.lab.nx),
                    ("lab.ny", self.lab.ny),
                    ("lab.nz", self.lab.nz),
                ] {
                    if n < 4 || n % 2 != 0 {
                        errs.push(format!("{name} must be even and >= 4, got {n}"));
                    }
                }
            }
            ExperimentKind::Simulate => {}
        }
        errs
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config is not valid JSON: {0}")]
    Json(String),
    #[error("config failed validation:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),
    #[error("bad --set override '{0}': {1}")]
    BadOverride(String, String),
    #[error("io error reading config: {0}")]
    Io(#[from] std::io::Error),
}

/// Apply one `--set dotted.key=value` override onto the JSON document.
fn apply_override(doc: &mut serde_json::Value, spec: &str) -> Result<(), ConfigError> {
    let (path, raw) = spec.split_once('=').ok_or_else(|| {
        ConfigError::BadOverride(spec.to_string(), "expected dotted.key=value".into())
    })?;
    let value: serde_json::Value =
        serde_json::from_str(raw).unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
    let mut node = doc;
    let segments: Vec<&str> = path.split('.').collect();
    for (i, seg) in segments.iter().enumerate() {
        if seg.is_empty() {
            return Err(ConfigError::BadOverride(
                spec.to_string(),
                "empty path segment".into(),
            ));
        }
        let obj = node.as_object_mut().ok_or_else(|| {
            ConfigError::BadOverride(spec.to_string(), format!("'{seg}' is not an object path"))
        })?;
        if i + 1 == segments.len() {
            obj.insert(seg.to_string(), value);
            return Ok(());
        }
        node = obj
            .entry(seg.to_string())
            .or_insert_with(|| serde_json::Value::Object(Default::default()));
    }
    unreachable!("loop returns on the last segment")
}

/// Parse a config document with overrides applied, then validate it.
/// Unknown keys are rejected; constraint violations are reported all at once.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let mut doc: serde_json::Value =
        serde_json::from_str(text).map_err(|e| ConfigError::Json(e.to_string()))?;
    for spec in overrides {
        apply_override(&mut doc, spec)?;
    }
    let config: RunConfig =
        serde_json::from_value(doc).map_err(|e| ConfigError::Json(e.to_string()))?;
    let errs = config.validation_errors();
    if errs.is_empty() {
        Ok(config)
    } else {
        Err(ConfigError::Invalid(errs))
    }
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text, overrides)
}
