//! Iterative velocity-truncated approximation scheme: a spectrally projected
//! velocity subsystem at level m, coupled to a full-resolution temperature
//! equation, iterated over increasing m with the previous level's temperature
//! feeding the buoyancy term.

use serde::Serialize;

use crate::diagnostics::{DiagnosticsRow, LedgerAccumulator};
use crate::dynamics::Stepper;
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::ops;
use crate::params::{Dealias, Params};
use crate::quad;
use crate::scalar::Scalar;
use crate::state::{velocity_from_vorticity, ModelState};

/// Orthogonal projection onto modes with Euclidean |j| <= m.
pub fn project<T: Scalar>(f: &SpectralField<T>, m: i64) -> SpectralField<T> {
    ops::project_ball(f, m)
}

/// A temperature trajectory sampled at uniform step times.
#[derive(Clone, Debug)]
pub struct ThetaTrajectory<T: Scalar> {
    times: Vec<T>,
    fields: Vec<SpectralField<T>>,
}

impl<T: Scalar> ThetaTrajectory<T> {
    pub fn new(times: Vec<T>, fields: Vec<SpectralField<T>>) -> Result<Self> {
        if times.len() != fields.len() || times.is_empty() {
            return Err(Error::InvalidInput(
                "trajectory needs matching, nonempty times and fields".into(),
            ));
        }
        Ok(Self { times, fields })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn field(&self, n: usize) -> &SpectralField<T> {
        &self.fields[n]
    }

    /// Value at time t: exact sample when t hits a stored instant, linear
    /// interpolation between neighbors otherwise.
    pub fn value_at(&self, t: T) -> Result<SpectralField<T>> {
        let n = self.times.len();
        let t0 = self.times[0];
        let t1 = self.times[n - 1];
        let tol = T::lit(1e-9) * (t1 - t0).max(T::one());
        if t < t0 - tol || t > t1 + tol {
            return Err(Error::InvalidInput(format!(
                "time {t} outside stored trajectory [{t0}, {t1}]"
            )));
        }
        // binary search for the bracketing interval
        let mut lo = 0usize;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.times[mid] <= t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if (t - self.times[lo]).abs() <= tol {
            return Ok(self.fields[lo].clone());
        }
        if (t - self.times[hi]).abs() <= tol {
            return Ok(self.fields[hi].clone());
        }
        let span = self.times[hi] - self.times[lo];
        let alpha = (t - self.times[lo]) / span;
        let mut out = self.fields[lo].scaled(T::one() - alpha);
        out.axpy_mut(alpha, &self.fields[hi])?;
        Ok(out)
    }

    /// ‖a - b‖ over L²(Ω × (0,T)) by trapezoidal quadrature at the common
    /// stored instants.
    pub fn distance_l2(&self, other: &Self) -> Result<T> {
        if self.len() != other.len() {
            return Err(Error::InvalidInput(format!(
                "trajectories of different lengths: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        let sq: Vec<T> = (0..self.len())
            .map(|n| {
                let d = self.fields[n].sub(&other.fields[n])?;
                Ok(quad::l2_norm_sq(&d))
            })
            .collect::<Result<_>>()?;
        let mut acc = T::zero();
        for n in 1..self.len() {
            acc += (sq[n] + sq[n - 1]) * (self.times[n] - self.times[n - 1]) * T::half();
        }
        Ok(acc.sqrt())
    }
}

/// Exact per-mode solution of ∂t θ = (1/Pe) Δ_h θ, sampled at the stepper's
/// instants. The equation is diagonal, so there is no time-stepping error.
pub fn solve_theta1<T: Scalar>(
    theta0: &SpectralField<T>,
    params: &Params<T>,
) -> Result<ThetaTrajectory<T>> {
    params.validate()?;
    let grid = theta0.grid().clone();
    grid.check_same_layout(params.grid()?.as_ref(), "theta0 vs params")?;
    let tol = T::lit(1e-12) * theta0.max_abs_coeff();
    if theta0.mean_line_max_abs() > tol {
        return Err(Error::NonzeroHorizontalMean(format!(
            "theta0 horizontal mean {:.3e} above tolerance",
            theta0.mean_line_max_abs()
        )));
    }
    let mut base = theta0.clone();
    if params.dealias == Dealias::TwoThirds {
        base.apply_dealias_mask_mut();
    }
    base.zero_mean_line_mut();

    let n_steps = params.steps();
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut fields = Vec::with_capacity(n_steps + 1);
    for n in 0..=n_steps {
        let t = T::lit(n as f64) * params.dt;
        let mut f = base.clone();
        let mut i = 0;
        for ix in 0..grid.nx() {
            for iy in 0..grid.ny() {
                let decay = (-grid.kh_sq(ix, iy) * t / params.pe).exp();
                for _ in 0..grid.nz() {
                    f.coeffs_mut()[i] = f.coeffs_mut()[i] * decay;
                    i += 1;
                }
            }
        }
        times.push(t);
        fields.push(f);
    }
    ThetaTrajectory::new(times, fields)
}

/// Closed-form ∫₀ᵗ (1/Pe)‖∇_h θ⁽¹⁾‖₂² ds for the exact heat flow of θ₀:
/// L² Σ_j |θ̂₀(j)|² (1 - e^{-2|k_h|²t/Pe})/2.
pub fn heat_dissipation_integral<T: Scalar>(
    theta0: &SpectralField<T>,
    params: &Params<T>,
    t: T,
) -> T {
    let grid = theta0.grid();
    let mut sum = T::zero();
    let mut i = 0;
    for ix in 0..grid.nx() {
        for iy in 0..grid.ny() {
            let lam2 = T::two() * grid.kh_sq(ix, iy) / params.pe;
            for _ in 0..grid.nz() {
                let a = theta0.coeffs()[i].norm_sqr();
                sum += a * (T::one() - (-lam2 * t).exp()) * T::half();
                i += 1;
            }
        }
    }
    sum * grid.volume()
}

/// Diagnostics rows for the exact heat flow with zero velocity: the pure
/// diffusion configuration, free of time-stepping error.
pub fn heat_flow_rows<T: Scalar>(
    theta0: &SpectralField<T>,
    params: &Params<T>,
) -> Result<Vec<DiagnosticsRow<T>>> {
    let traj = solve_theta1(theta0, params)?;
    let grid = theta0.grid().clone();
    let mut acc = LedgerAccumulator::new(params.clone());
    let mut rows = Vec::new();
    let n_steps = params.steps();
    for n in 0..=n_steps {
        if n % params.sample_every == 0 || n == n_steps {
            let state = ModelState::new(
                traj.times()[n],
                SpectralField::zeros(&grid),
                SpectralField::zeros(&grid),
                traj.field(n).clone(),
            )?;
            rows.push(acc.sample(&state, &state.theta)?);
        }
    }
    Ok(rows)
}

/// One solved level of the scheme.
pub struct LevelRun<T: Scalar> {
    pub m: i64,
    pub rows: Vec<DiagnosticsRow<T>>,
    /// θ^{(m)} at every step, feeding the next level.
    pub theta: ThetaTrajectory<T>,
    /// States at the diagnostics cadence, for distance-to-reference metrics.
    pub sampled_states: Vec<ModelState<T>>,
    pub final_state: ModelState<T>,
    /// Whether w_m and ω_m stayed exactly inside |j| <= m at every sample.
    pub support_ok: bool,
}

/// Advance one level: the velocity pair steps inside |j| <= m (projection
/// applied to every nonlinear term and to the buoyancy source, which is the
/// supplied previous-level temperature), the temperature steps at full
/// resolution driven by the level's own velocity.
pub fn run_level<T: Scalar>(
    theta_prev: &ThetaTrajectory<T>,
    m: i64,
    init: &ModelState<T>,
    params: &Params<T>,
) -> Result<LevelRun<T>> {
    if m < 2 {
        return Err(Error::InvalidInput(format!(
            "level index m must be >= 2, got {m}"
        )));
    }
    params.validate()?;
    init.validate()?;
    let grid = params.grid()?;
    grid.check_same_layout(init.grid(), "level init vs params")?;

    let mut state = init.clone();
    if params.dealias == Dealias::TwoThirds {
        for f in [&mut state.w, &mut state.omega, &mut state.theta] {
            f.apply_dealias_mask_mut();
        }
    }
    state.w = ops::project_ball(&state.w, m);
    state.omega = ops::project_ball(&state.omega, m);
    for f in [&mut state.w, &mut state.omega, &mut state.theta] {
        f.zero_mean_line_mut();
    }

    let n_steps = params.steps();
    let mut stepper = Stepper::new(params, init.grid(), state.t)?.with_projector(m);
    let mut acc = LedgerAccumulator::new(params.clone());
    let mut rows = Vec::new();
    let mut sampled_states = Vec::new();
    let mut support_ok = true;
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut theta_fields = Vec::with_capacity(n_steps + 1);

    let sample = |state: &ModelState<T>,
                  buoy: &SpectralField<T>,
                  acc: &mut LedgerAccumulator<T>,
                  rows: &mut Vec<DiagnosticsRow<T>>,
                  sampled: &mut Vec<ModelState<T>>,
                  support_ok: &mut bool|
     -> Result<()> {
        *support_ok &=
            ops::supported_in_ball(&state.w, m) && ops::supported_in_ball(&state.omega, m);
        rows.push(acc.sample(state, buoy)?);
        sampled.push(state.clone());
        Ok(())
    };

    let buoy0 = ops::project_ball(&theta_prev.value_at(state.t)?, m);
    sample(
        &state,
        &buoy0,
        &mut acc,
        &mut rows,
        &mut sampled_states,
        &mut support_ok,
    )?;
    times.push(state.t);
    theta_fields.push(state.theta.clone());

    for n in 0..n_steps {
        let buoy = theta_prev.value_at(state.t)?;
        state = stepper.advance(&state, &buoy)?;
        times.push(state.t);
        theta_fields.push(state.theta.clone());
        if (n + 1) % params.sample_every == 0 || n + 1 == n_steps {
            let buoy_now = ops::project_ball(&theta_prev.value_at(state.t)?, m);
            sample(
                &state,
                &buoy_now,
                &mut acc,
                &mut rows,
                &mut sampled_states,
                &mut support_ok,
            )?;
        }
    }

    Ok(LevelRun {
        m,
        rows,
        theta: ThetaTrajectory::new(times, theta_fields)?,
        sampled_states,
        final_state: state,
        support_ok,
    })
}

/// Largest between-sample increase of the level energy inequality's
/// non-increasing combination: E_vel(t) + ∫[(1/Re)(‖∇w‖²+‖∇u‖²) + 2ε²‖φ_z‖²]
/// - ReΓ²γ ∫‖θ_b‖², which the Cauchy-Schwarz/Young/Poincaré chain makes
/// monotone. Positive returns mean a violation of that size.
pub fn velocity_energy_inequality_max_increase<T: Scalar>(
    rows: &[DiagnosticsRow<T>],
    params: &Params<T>,
) -> T {
    let c_ledger = params.re * params.gamma * params.gamma * params.poincare_gamma();
    let eps_sq = params.epsilon * params.epsilon;
    let integrand = |r: &DiagnosticsRow<T>| {
        (r.grad_h_w_l2_sq + r.grad_h_u_l2_sq) / params.re + T::two() * eps_sq * r.phi_z_l2_sq
            - c_ledger * r.buoy_theta_l2_sq
    };
    let mut f_prev = None;
    let mut integral = T::zero();
    let mut worst = T::neg_infinity();
    let mut prev_row: Option<&DiagnosticsRow<T>> = None;
    for row in rows {
        if let Some(p) = prev_row {
            integral += (integrand(p) + integrand(row)) * (row.t - p.t) * T::half();
        }
        let f = row.w_l2_sq + row.u_l2_sq + integral;
        if let Some(fp) = f_prev {
            worst = worst.max(f - fp);
        }
        f_prev = Some(f);
        prev_row = Some(row);
    }
    if worst == T::neg_infinity() {
        T::zero()
    } else {
        worst
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(bound = "")]
pub struct LevelSummary<T: Scalar> {
    pub m: i64,
    /// ‖θ^{(m)} - θ^{(m-1)}‖ over L²(Ω × (0,T)) against the previous level in
    /// the schedule (θ⁽¹⁾ for the first entry).
    pub d_m: T,
    /// Distance to the full-resolution reference over L²(Ω × (0,T)) of
    /// (w, u, θ).
    pub r_m: T,
    pub support_ok: bool,
    pub max_theta_ledger_residual: T,
    pub velocity_inequality_max_increase: T,
    pub final_w_l2_sq: T,
    pub final_u_l2_sq: T,
    pub final_theta_l2_sq: T,
}

#[derive(Clone, Debug, Serialize)]
#[serde(bound = "")]
pub struct IterationReport<T: Scalar> {
    pub schedule: Vec<i64>,
    pub levels: Vec<LevelSummary<T>>,
    /// r_m strictly decreasing along the schedule.
    pub r_strictly_decreasing: bool,
    /// r_last / r_first, when both are available.
    pub r_last_over_first: Option<T>,
    /// Set when a level failed; the summaries before it are preserved.
    pub failed_level: Option<i64>,
    pub failure: Option<String>,
}

/// All artifacts of one scheme run that the caller may want to persist.
pub struct SchemeOutcome<T: Scalar> {
    pub report: IterationReport<T>,
    pub level_rows: Vec<(i64, Vec<DiagnosticsRow<T>>)>,
    pub reference_rows: Vec<DiagnosticsRow<T>>,
}

/// Distance of one level's sampled states to the reference run's, over
/// L²(Ω × (0,T)) of (w, u, θ).
fn distance_to_reference<T: Scalar>(
    level: &[ModelState<T>],
    reference: &[ModelState<T>],
) -> Result<T> {
    if level.len() != reference.len() {
        return Err(Error::InvalidInput(format!(
            "level sampled {} states, reference {}",
            level.len(),
            reference.len()
        )));
    }
    let sq: Vec<(T, T)> = level
        .iter()
        .zip(reference)
        .map(|(a, b)| {
            let dw = a.w.sub(&b.w)?;
            let dom = a.omega.sub(&b.omega)?;
            let dth = a.theta.sub(&b.theta)?;
            let (du, dv) = velocity_from_vorticity(&dom)?;
            Ok((
                a.t,
                quad::l2_norm_sq(&dw)
                    + quad::l2_norm_sq(&du)
                    + quad::l2_norm_sq(&dv)
                    + quad::l2_norm_sq(&dth),
            ))
        })
        .collect::<Result<_>>()?;
    let mut acc = T::zero();
    for pair in sq.windows(2) {
        acc += (pair[0].1 + pair[1].1) * (pair[1].0 - pair[0].0) * T::half();
    }
    Ok(acc.sqrt())
}

/// Run the full iteration: θ⁽¹⁾ from the exact heat flow, then one level per
/// schedule entry feeding its temperature forward, plus a full-resolution
/// reference run for the r_m metric. A level failure preserves the partial
/// report.
pub fn iterate_scheme<T: Scalar>(
    init: &ModelState<T>,
    params: &Params<T>,
    schedule: &[i64],
) -> Result<SchemeOutcome<T>> {
    if schedule.is_empty() {
        return Err(Error::InvalidInput("m schedule must be nonempty".into()));
    }
    if schedule[0] < 2 {
        return Err(Error::InvalidInput(format!(
            "m schedule must start at >= 2, got {}",
            schedule[0]
        )));
    }
    if schedule.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::InvalidInput(
            "m schedule must be strictly increasing".into(),
        ));
    }
    params.validate()?;
    init.validate()?;

    // full-resolution reference
    let mut ref_sink = crate::dynamics::CollectSink::keeping_states();
    let (_, reference_rows) = crate::dynamics::simulate(init, params, &mut ref_sink)?;

    let mut prev_traj = solve_theta1(&init.theta, params)?;
    let mut levels = Vec::new();
    let mut level_rows = Vec::new();
    let mut failed_level = None;
    let mut failure = None;

    for &m in schedule {
        match run_level(&prev_traj, m, init, params) {
            Ok(level) => {
                let d_m = level.theta.distance_l2(&prev_traj)?;
                let r_m = distance_to_reference(&level.sampled_states, &ref_sink.states)?;
                let max_theta_res = level
                    .rows
                    .iter()
                    .map(|r| r.theta_ledger_residual.abs())
                    .fold(T::zero(), T::max);
                levels.push(LevelSummary {
                    m,
                    d_m,
                    r_m,
                    support_ok: level.support_ok,
                    max_theta_ledger_residual: max_theta_res,
                    velocity_inequality_max_increase: velocity_energy_inequality_max_increase(
                        &level.rows,
                        params,
                    ),
                    final_w_l2_sq: level.rows.last().map(|r| r.w_l2_sq).unwrap_or(T::zero()),
                    final_u_l2_sq: level.rows.last().map(|r| r.u_l2_sq).unwrap_or(T::zero()),
                    final_theta_l2_sq: level
                        .rows
                        .last()
                        .map(|r| r.theta_l2_sq)
                        .unwrap_or(T::zero()),
                });
                level_rows.push((m, level.rows));
                prev_traj = level.theta;
            }
            Err(e) => {
                failed_level = Some(m);
                failure = Some(e.to_string());
                break;
            }
        }
    }

    let r: Vec<T> = levels.iter().map(|l| l.r_m).collect();
    let r_strictly_decreasing = !r.is_empty() && r.windows(2).all(|p| p[1] < p[0]);
    let r_last_over_first = match (r.first(), r.last()) {
        (Some(&first), Some(&last)) if first > T::zero() && r.len() > 1 => Some(last / first),
        _ => None,
    };

    Ok(SchemeOutcome {
        report: IterationReport {
            schedule: schedule.to_vec(),
            levels,
            r_strictly_decreasing,
            r_last_over_first,
            failed_level,
            failure,
        },
        level_rows,
        reference_rows,
    })
}
