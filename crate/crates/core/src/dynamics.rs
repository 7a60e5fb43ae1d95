//! Tendency evaluation and CNAB2 time stepping for the regularized model:
//!
//!   ∂t w + u·∇_h w - ∂z φ = Γθ + (1/Re) Δ_h w
//!   ∂t ω + u·∇_h ω - ∂z w = (1/Re) Δ_h ω + ε² ∂zz φ
//!   ∂t θ + u·∇_h θ + w·mean(wθ) = (1/Pe) Δ_h θ
//!
//! Horizontal diffusion and the ε² term are diagonal in coefficient space and
//! advance by the trapezoidal rule; advection, buoyancy, the vertical
//! coupling pair and the nonlocal feedback advance by 2nd-order
//! Adams-Bashforth (forward Euler on the first step).

use std::sync::Arc;

use crate::diagnostics::{DiagnosticsRow, LedgerAccumulator};
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::SpectralGrid;
use crate::ops;
use crate::params::{Dealias, Params};
use crate::scalar::Scalar;
use crate::state::ModelState;

pub use crate::state::velocity_from_vorticity;

/// One value per prognostic field.
#[derive(Clone, Debug)]
pub struct FieldTriple<T: Scalar> {
    pub w: SpectralField<T>,
    pub omega: SpectralField<T>,
    pub theta: SpectralField<T>,
}

/// Right-hand side split into the explicitly and implicitly advanced parts;
/// the two sum to the full tendency.
#[derive(Clone, Debug)]
pub struct Tendency<T: Scalar> {
    pub explicit: FieldTriple<T>,
    pub linear: FieldTriple<T>,
}

impl<T: Scalar> Tendency<T> {
    pub fn total(&self) -> Result<FieldTriple<T>> {
        Ok(FieldTriple {
            w: self.explicit.w.add(&self.linear.w)?,
            omega: self.explicit.omega.add(&self.linear.omega)?,
            theta: self.explicit.theta.add(&self.linear.theta)?,
        })
    }
}

/// The temperature equation's nonlocal term w·mean(wθ), where mean(wθ) is the
/// horizontal mean of the dealiased product.
pub fn nonlocal_feedback<T: Scalar>(
    w: &SpectralField<T>,
    theta: &SpectralField<T>,
) -> Result<SpectralField<T>> {
    let wt = ops::multiply_dealiased(w, theta)?;
    let profile = ops::horizontal_mean(&wt);
    ops::multiply_by_profile(w, &profile)
}

fn pointwise_product_field<T: Scalar>(
    grid: &Arc<SpectralGrid<T>>,
    a: &[T],
    b: &[T],
    dealias: Dealias,
) -> Result<SpectralField<T>> {
    let vals: Vec<T> = a.iter().zip(b).map(|(&x, &y)| x * y).collect();
    let mut f = SpectralField::from_values(grid, &vals)?;
    if dealias == Dealias::TwoThirds {
        f.apply_dealias_mask_mut();
    }
    Ok(f)
}

/// Explicit tendency of (w, ω, θ).
///
/// `buoyancy_theta` is the temperature entering the buoyancy term Γθ; the
/// full model passes the state's own θ, the velocity-truncated scheme passes
/// an externally supplied temperature. With `projector = Some(m)` the
/// nonlinear velocity terms and the buoyancy source are projected onto
/// Euclidean |j| <= m; the temperature equation is never projected.
pub(crate) fn explicit_parts<T: Scalar>(
    state: &ModelState<T>,
    buoyancy_theta: &SpectralField<T>,
    projector: Option<i64>,
    params: &Params<T>,
) -> Result<FieldTriple<T>> {
    let grid = state.grid().clone();
    grid.check_same_layout(buoyancy_theta.grid(), "buoyancy temperature")?;
    let dealias = params.dealias;

    let phi = state.phi()?;
    let u = ops::dy(&phi);
    let v = ops::dx(&phi).scaled(-T::one());
    let u_phys = u.values();
    let v_phys = v.values();
    let w_phys = state.w.values();
    let theta_phys = state.theta.values();

    // u·∇_h f with dealiased products
    let advect = |f: &SpectralField<T>| -> Result<SpectralField<T>> {
        let fx = ops::dx(f).values();
        let fy = ops::dy(f).values();
        let vals: Vec<T> = (0..fx.len())
            .map(|i| u_phys[i] * fx[i] + v_phys[i] * fy[i])
            .collect();
        let mut a = SpectralField::from_values(&grid, &vals)?;
        if dealias == Dealias::TwoThirds {
            a.apply_dealias_mask_mut();
        }
        Ok(a)
    };
    let project = |f: SpectralField<T>| -> SpectralField<T> {
        match projector {
            Some(m) => ops::project_ball(&f, m),
            None => f,
        }
    };

    // w equation: -P(u·∇w) + ∂zφ + Γ·P(θ_b)
    let mut ew = ops::vertical_derivative(&phi);
    ew.axpy_mut(params.gamma, &project(buoyancy_theta.clone()))?;
    ew.axpy_mut(-T::one(), &project(advect(&state.w)?))?;

    // ω equation: -P(u·∇ω) + ∂zw
    let mut eom = ops::vertical_derivative(&state.w);
    eom.axpy_mut(-T::one(), &project(advect(&state.omega)?))?;

    // θ equation: -u·∇θ - w·mean(wθ), full resolution
    let wt = pointwise_product_field(&grid, &w_phys, &theta_phys, dealias)?;
    let profile = ops::horizontal_mean(&wt);
    let nz = grid.nz();
    let fb_vals: Vec<T> = w_phys
        .iter()
        .enumerate()
        .map(|(i, &w)| w * profile.values()[i % nz])
        .collect();
    let mut feedback = SpectralField::from_values(&grid, &fb_vals)?;
    if dealias == Dealias::TwoThirds {
        feedback.apply_dealias_mask_mut();
    }
    let mut eth = advect(&state.theta)?.scaled(-T::one());
    eth.axpy_mut(-T::one(), &feedback)?;

    for f in [&mut ew, &mut eom, &mut eth] {
        f.zero_mean_line_mut();
    }
    Ok(FieldTriple {
        w: ew,
        omega: eom,
        theta: eth,
    })
}

/// Per-mode multipliers of the stiff linear part:
/// λ_w = -|k_h|²/Re, λ_θ = -|k_h|²/Pe,
/// λ_ω = -|k_h|²/Re - ε² k_z²/|k_h|² (zero on the k_h = 0 line).
pub(crate) fn linear_multipliers<T: Scalar>(
    grid: &SpectralGrid<T>,
    params: &Params<T>,
) -> (Vec<T>, Vec<T>, Vec<T>) {
    let n = grid.len();
    let mut lam_w = vec![T::zero(); n];
    let mut lam_om = vec![T::zero(); n];
    let mut lam_th = vec![T::zero(); n];
    let eps_sq = params.epsilon * params.epsilon;
    let mut i = 0;
    for ix in 0..grid.nx() {
        for iy in 0..grid.ny() {
            let kh_sq = grid.kh_sq(ix, iy);
            let mean_line = grid.is_mean_line(ix, iy);
            for iz in 0..grid.nz() {
                if !mean_line {
                    let kz = grid.kz(iz);
                    lam_w[i] = -kh_sq / params.re;
                    lam_th[i] = -kh_sq / params.pe;
                    lam_om[i] = -kh_sq / params.re - eps_sq * kz * kz / kh_sq;
                }
                i += 1;
            }
        }
    }
    (lam_w, lam_om, lam_th)
}

/// Full right-hand side of the model at one state, split per the stepping
/// scheme.
pub fn tendency<T: Scalar>(state: &ModelState<T>, params: &Params<T>) -> Result<Tendency<T>> {
    state.validate()?;
    let grid = state.grid().clone();
    let explicit = explicit_parts(state, &state.theta.clone(), None, params)?;
    let (lam_w, lam_om, lam_th) = linear_multipliers(&grid, params);
    let apply = |f: &SpectralField<T>, lam: &[T]| -> SpectralField<T> {
        let mut out = f.clone();
        for (c, &l) in out.coeffs_mut().iter_mut().zip(lam) {
            *c = *c * l;
        }
        out
    };
    Ok(Tendency {
        linear: FieldTriple {
            w: apply(&state.w, &lam_w),
            omega: apply(&state.omega, &lam_om),
            theta: apply(&state.theta, &lam_th),
        },
        explicit,
    })
}

/// CNAB2 integrator with per-grid cached multipliers.
pub struct Stepper<T: Scalar> {
    params: Params<T>,
    grid: Arc<SpectralGrid<T>>,
    lam_w: Vec<T>,
    lam_om: Vec<T>,
    lam_th: Vec<T>,
    projector: Option<i64>,
    history: Option<FieldTriple<T>>,
    steps_taken: usize,
    t0: T,
}

impl<T: Scalar> Stepper<T> {
    pub fn new(params: &Params<T>, grid: &Arc<SpectralGrid<T>>, t0: T) -> Result<Self> {
        params.validate()?;
        let (lam_w, lam_om, lam_th) = linear_multipliers(grid, params);
        Ok(Self {
            params: params.clone(),
            grid: grid.clone(),
            lam_w,
            lam_om,
            lam_th,
            projector: None,
            history: None,
            steps_taken: 0,
            t0,
        })
    }

    /// Restrict the velocity subsystem to Euclidean |j| <= m.
    pub fn with_projector(mut self, m: i64) -> Self {
        self.projector = Some(m);
        self
    }

    /// Seed the Adams-Bashforth history (used when resuming mid-run).
    pub fn with_history(mut self, history: FieldTriple<T>) -> Self {
        self.history = Some(history);
        self
    }

    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    /// Advance one step. `buoyancy_theta` feeds the Γθ term.
    pub fn advance(
        &mut self,
        state: &ModelState<T>,
        buoyancy_theta: &SpectralField<T>,
    ) -> Result<ModelState<T>> {
        self.grid.check_same_layout(state.grid(), "stepper state")?;
        let explicit = explicit_parts(state, buoyancy_theta, self.projector, &self.params)?;
        let three_halves = T::lit(1.5);
        let neg_half = T::lit(-0.5);
        let combined = match &self.history {
            Some(prev) => {
                let mut c = explicit.clone();
                c.w.scale_mut(three_halves);
                c.w.axpy_mut(neg_half, &prev.w)?;
                c.omega.scale_mut(three_halves);
                c.omega.axpy_mut(neg_half, &prev.omega)?;
                c.theta.scale_mut(three_halves);
                c.theta.axpy_mut(neg_half, &prev.theta)?;
                c
            }
            None => explicit.clone(),
        };

        let dt = self.params.dt;
        let half_dt = dt * T::half();
        let cn = |old: &SpectralField<T>, expl: &SpectralField<T>, lam: &[T]| {
            let mut new = old.clone();
            for ((c, e), &l) in new
                .coeffs_mut()
                .iter_mut()
                .zip(expl.coeffs())
                .zip(lam.iter())
            {
                *c = (*c * (T::one() + half_dt * l) + *e * dt) / (T::one() - half_dt * l);
            }
            new
        };
        let mut w = cn(&state.w, &combined.w, &self.lam_w);
        let mut omega = cn(&state.omega, &combined.omega, &self.lam_om);
        let mut theta = cn(&state.theta, &combined.theta, &self.lam_th);
        for f in [&mut w, &mut omega, &mut theta] {
            f.zero_mean_line_mut();
        }

        self.steps_taken += 1;
        for (name, f) in [("w", &w), ("omega", &omega), ("theta", &theta)] {
            if !f.is_finite() {
                return Err(Error::BlowUp {
                    field: name,
                    step: self.steps_taken,
                });
            }
        }
        self.history = Some(explicit);
        let t = self.t0 + T::lit(self.steps_taken as f64) * dt;
        ModelState::new(t, w, omega, theta)
    }
}

/// One CNAB2 step as a standalone operation: returns the new state plus the
/// explicit tendency to feed into the next call as `history`.
pub fn step<T: Scalar>(
    state: &ModelState<T>,
    params: &Params<T>,
    history: Option<&FieldTriple<T>>,
) -> Result<(ModelState<T>, FieldTriple<T>)> {
    let mut stepper = Stepper::new(params, state.grid(), state.t)?;
    if let Some(h) = history {
        stepper = stepper.with_history(h.clone());
    }
    let new_state = stepper.advance(state, &state.theta)?;
    let explicit = stepper
        .history
        .expect("advance stores the explicit tendency");
    Ok((new_state, explicit))
}

/// Observer of sampled states during a run.
pub trait SimulationSink<T: Scalar> {
    fn on_sample(&mut self, state: &ModelState<T>, row: &DiagnosticsRow<T>) -> Result<()>;
}

/// Sink that keeps every sampled row (and optionally the states).
pub struct CollectSink<T: Scalar> {
    pub rows: Vec<DiagnosticsRow<T>>,
    pub keep_states: bool,
    pub states: Vec<ModelState<T>>,
}

impl<T: Scalar> CollectSink<T> {
    pub fn new() -> Self {
        Self {
            rows: Vec::new(),
            keep_states: false,
            states: Vec::new(),
        }
    }

    pub fn keeping_states() -> Self {
        Self {
            rows: Vec::new(),
            keep_states: true,
            states: Vec::new(),
        }
    }
}

impl<T: Scalar> SimulationSink<T> for CollectSink<T> {
    fn on_sample(&mut self, state: &ModelState<T>, row: &DiagnosticsRow<T>) -> Result<()> {
        self.rows.push(row.clone());
        if self.keep_states {
            self.states.push(state.clone());
        }
        Ok(())
    }
}

/// No-op sink.
pub struct NullSink;

impl<T: Scalar> SimulationSink<T> for NullSink {
    fn on_sample(&mut self, _state: &ModelState<T>, _row: &DiagnosticsRow<T>) -> Result<()> {
        Ok(())
    }
}

/// Run the model to t_final, sampling diagnostics every `sample_every` steps
/// (plus the initial and final instants). Deterministic: the same init and
/// params give bit-identical rows.
///
/// On blow-up the error propagates after every completed sample reached the
/// sink.
pub fn simulate<T: Scalar, S: SimulationSink<T>>(
    init: &ModelState<T>,
    params: &Params<T>,
    sink: &mut S,
) -> Result<(ModelState<T>, Vec<DiagnosticsRow<T>>)> {
    params.validate()?;
    let grid = params.grid()?;
    grid.check_same_layout(init.grid(), "initial state vs params")?;
    init.validate()?;

    let mut state = init.clone();
    if params.dealias == Dealias::TwoThirds {
        for f in [&mut state.w, &mut state.omega, &mut state.theta] {
            f.apply_dealias_mask_mut();
        }
    }
    for f in [&mut state.w, &mut state.omega, &mut state.theta] {
        f.zero_mean_line_mut();
    }

    let n_steps = params.steps();
    let mut rows = Vec::new();
    let mut acc = LedgerAccumulator::new(params.clone());
    let row = acc.sample(&state, &state.theta)?;
    sink.on_sample(&state, &row)?;
    rows.push(row);

    let mut stepper = Stepper::new(params, init.grid(), state.t)?;
    for n in 0..n_steps {
        let next = stepper.advance(&state, &state.theta)?;
        state = next;
        if (n + 1) % params.sample_every == 0 || n + 1 == n_steps {
            let row = acc.sample(&state, &state.theta)?;
            sink.on_sample(&state, &row)?;
            rows.push(row);
        }
    }
    Ok((state, rows))
}
