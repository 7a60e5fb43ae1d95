//! Monitored norms, the term-by-term energy ledger, decay-rate fitting, and
//! the perturbation-growth study.

pub mod decay;
pub mod perturb;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::ops;
use crate::params::{Dealias, Params};
use crate::quad;
use crate::scalar::Scalar;
use crate::state::ModelState;

pub use decay::{decay_rates, BoundCheck, DecayReport, RateFit};
pub use perturb::{perturbation_study, DeltaEntry, PerturbationConfig, PerturbationReport};

/// One sampling instant: every monitored norm, the cumulative energy-ledger
/// integrals with their residuals, and the structural-invariant residuals.
#[derive(Clone, Debug, Serialize)]
#[serde(bound = "")]
pub struct DiagnosticsRow<T: Scalar> {
    pub t: T,
    pub w_l2_sq: T,
    pub u_l2_sq: T,
    pub theta_l2_sq: T,
    pub grad_h_w_l2_sq: T,
    pub grad_h_u_l2_sq: T,
    pub grad_h_theta_l2_sq: T,
    pub omega_l2_sq: T,
    pub phi_z_l2_sq: T,
    pub wtheta_mean_l2_sq: T,
    pub dz_w_l2_sq: T,
    pub dz_u_l2_sq: T,
    pub dz_theta_l2_sq: T,
    /// (θ_b, w) with the buoyancy temperature actually driving the run.
    pub theta_w_inner: T,
    /// ‖θ_b‖₂² of that buoyancy temperature.
    pub buoy_theta_l2_sq: T,
    /// Cumulative ∫ ‖mean(wθ)‖₂² ds.
    pub int_feedback: T,
    /// Cumulative ∫ [(1/Re)(‖∇_h w‖² + ‖∇_h u‖²) + (1/Pe)‖∇_h θ‖² + ε²‖φ_z‖²] ds.
    pub int_dissipation: T,
    /// Cumulative Γ ∫ (θ_b, w) ds.
    pub int_buoyancy: T,
    /// Energy-identity residual at this instant.
    pub ledger_residual: T,
    /// Residual of the temperature energy law alone.
    pub theta_ledger_residual: T,
    pub hmean_w_rel: T,
    pub hmean_omega_rel: T,
    pub hmean_theta_rel: T,
    pub div_u_rel: T,
    pub curl_residual_rel: T,
    /// |(ω,φ) - ‖u‖₂²| / ‖u‖₂².
    pub iden3_residual_rel: T,
}

impl<T: Scalar> DiagnosticsRow<T> {
    pub const CSV_COLUMNS: &'static [&'static str] = &[
        "t",
        "w_l2_sq",
        "u_l2_sq",
        "theta_l2_sq",
        "grad_h_w_l2_sq",
        "grad_h_u_l2_sq",
        "grad_h_theta_l2_sq",
        "omega_l2_sq",
        "phi_z_l2_sq",
        "wtheta_mean_l2_sq",
        "dz_w_l2_sq",
        "dz_u_l2_sq",
        "dz_theta_l2_sq",
        "theta_w_inner",
        "buoy_theta_l2_sq",
        "int_feedback",
        "int_dissipation",
        "int_buoyancy",
        "ledger_residual",
        "theta_ledger_residual",
        "hmean_w_rel",
        "hmean_omega_rel",
        "hmean_theta_rel",
        "div_u_rel",
        "curl_residual_rel",
        "iden3_residual_rel",
    ];

    pub fn csv_values(&self) -> Vec<T> {
        vec![
            self.t,
            self.w_l2_sq,
            self.u_l2_sq,
            self.theta_l2_sq,
            self.grad_h_w_l2_sq,
            self.grad_h_u_l2_sq,
            self.grad_h_theta_l2_sq,
            self.omega_l2_sq,
            self.phi_z_l2_sq,
            self.wtheta_mean_l2_sq,
            self.dz_w_l2_sq,
            self.dz_u_l2_sq,
            self.dz_theta_l2_sq,
            self.theta_w_inner,
            self.buoy_theta_l2_sq,
            self.int_feedback,
            self.int_dissipation,
            self.int_buoyancy,
            self.ledger_residual,
            self.theta_ledger_residual,
            self.hmean_w_rel,
            self.hmean_omega_rel,
            self.hmean_theta_rel,
            self.div_u_rel,
            self.curl_residual_rel,
            self.iden3_residual_rel,
        ]
    }

    /// Total energy ½(‖w‖² + ‖u‖² + ‖θ‖²).
    pub fn half_energy(&self) -> T {
        (self.w_l2_sq + self.u_l2_sq + self.theta_l2_sq) * T::half()
    }
}

fn rel<T: Scalar>(value: T, scale: T) -> T {
    if scale == T::zero() {
        if value == T::zero() {
            T::zero()
        } else {
            T::infinity()
        }
    } else {
        value / scale
    }
}

/// Tracks the trapezoidal cumulative integrals between samples and produces
/// rows. Samples must come in increasing time order at whatever cadence the
/// caller uses.
pub struct LedgerAccumulator<T: Scalar> {
    params: Params<T>,
    initial_half_energy: Option<T>,
    initial_half_theta: Option<T>,
    prev: Option<(T, T, T, T, T)>, // (t, feedback, dissipation, buoyancy, theta-part)
    int_feedback: T,
    int_dissipation: T,
    int_buoyancy: T,
    int_theta_part: T,
}

impl<T: Scalar> LedgerAccumulator<T> {
    pub fn new(params: Params<T>) -> Self {
        Self {
            params,
            initial_half_energy: None,
            initial_half_theta: None,
            prev: None,
            int_feedback: T::zero(),
            int_dissipation: T::zero(),
            int_buoyancy: T::zero(),
            int_theta_part: T::zero(),
        }
    }

    /// Compute the row for one state. `buoyancy_theta` is the temperature in
    /// the Γθ source (the state's own θ for a standard run).
    pub fn sample(
        &mut self,
        state: &ModelState<T>,
        buoyancy_theta: &SpectralField<T>,
    ) -> Result<DiagnosticsRow<T>> {
        let p = &self.params;
        let grid = state.grid().clone();
        let phi = state.phi()?;
        let u = ops::dy(&phi);
        let v = ops::dx(&phi).scaled(-T::one());

        let w_l2_sq = quad::l2_norm_sq(&state.w);
        let u_l2_sq = quad::l2_norm_sq(&u) + quad::l2_norm_sq(&v);
        let theta_l2_sq = quad::l2_norm_sq(&state.theta);
        let grad_h_w_l2_sq = quad::grad_h_norm_sq(&state.w);
        let grad_h_u_l2_sq = quad::grad_h_norm_sq(&u) + quad::grad_h_norm_sq(&v);
        let grad_h_theta_l2_sq = quad::grad_h_norm_sq(&state.theta);
        let omega_l2_sq = quad::l2_norm_sq(&state.omega);
        let phi_z_l2_sq = quad::dz_norm_sq(&phi);
        let dz_w_l2_sq = quad::dz_norm_sq(&state.w);
        let dz_u_l2_sq = quad::dz_norm_sq(&u) + quad::dz_norm_sq(&v);
        let dz_theta_l2_sq = quad::dz_norm_sq(&state.theta);
        let theta_w_inner = quad::inner(buoyancy_theta, &state.w)?;
        let buoy_theta_l2_sq = quad::l2_norm_sq(buoyancy_theta);

        // feedback profile, matching the dynamics' product policy
        let wt = {
            let vals: Vec<T> = state
                .w
                .values()
                .iter()
                .zip(state.theta.values().iter())
                .map(|(&a, &b)| a * b)
                .collect();
            let mut f = SpectralField::from_values(&grid, &vals)?;
            if p.dealias == Dealias::TwoThirds {
                f.apply_dealias_mask_mut();
            }
            f
        };
        let wtheta_mean_l2_sq = ops::horizontal_mean(&wt).l2_norm_sq_over_box(&grid);

        // ledger integrands at this instant
        let diss = (grad_h_w_l2_sq + grad_h_u_l2_sq) / p.re
            + grad_h_theta_l2_sq / p.pe
            + p.epsilon * p.epsilon * phi_z_l2_sq;
        let buoy = p.gamma * theta_w_inner;
        let theta_part = grad_h_theta_l2_sq / p.pe + wtheta_mean_l2_sq;

        let half_energy = (w_l2_sq + u_l2_sq + theta_l2_sq) * T::half();
        let half_theta = theta_l2_sq * T::half();
        let initial_half_energy = *self.initial_half_energy.get_or_insert(half_energy);
        let initial_half_theta = *self.initial_half_theta.get_or_insert(half_theta);

        if let Some((t_prev, fb_prev, diss_prev, buoy_prev, th_prev)) = self.prev {
            let dt = state.t - t_prev;
            let half_dt = dt * T::half();
            self.int_feedback += (wtheta_mean_l2_sq + fb_prev) * half_dt;
            self.int_dissipation += (diss + diss_prev) * half_dt;
            self.int_buoyancy += (buoy + buoy_prev) * half_dt;
            self.int_theta_part += (theta_part + th_prev) * half_dt;
        }
        self.prev = Some((state.t, wtheta_mean_l2_sq, diss, buoy, theta_part));

        let ledger_residual = half_energy + self.int_feedback + self.int_dissipation
            - initial_half_energy
            - self.int_buoyancy;
        let theta_ledger_residual = half_theta + self.int_theta_part - initial_half_theta;

        // structural invariants
        let div = ops::dx(&u).add(&ops::dy(&v))?;
        let u_scale = u.max_abs_coeff().max(v.max_abs_coeff());
        let curl = ops::dx(&v).sub(&ops::dy(&u))?.sub(&state.omega)?;

        Ok(DiagnosticsRow {
            t: state.t,
            w_l2_sq,
            u_l2_sq,
            theta_l2_sq,
            grad_h_w_l2_sq,
            grad_h_u_l2_sq,
            grad_h_theta_l2_sq,
            omega_l2_sq,
            phi_z_l2_sq,
            wtheta_mean_l2_sq,
            dz_w_l2_sq,
            dz_u_l2_sq,
            dz_theta_l2_sq,
            theta_w_inner,
            buoy_theta_l2_sq,
            int_feedback: self.int_feedback,
            int_dissipation: self.int_dissipation,
            int_buoyancy: self.int_buoyancy,
            ledger_residual,
            theta_ledger_residual,
            hmean_w_rel: rel(state.w.mean_line_max_abs(), state.w.max_abs_coeff()),
            hmean_omega_rel: rel(state.omega.mean_line_max_abs(), state.omega.max_abs_coeff()),
            hmean_theta_rel: rel(state.theta.mean_line_max_abs(), state.theta.max_abs_coeff()),
            div_u_rel: rel(div.max_abs_coeff(), u_scale),
            curl_residual_rel: rel(curl.max_abs_coeff(), state.omega.max_abs_coeff()),
            iden3_residual_rel: rel((quad::inner(&state.omega, &phi)? - u_l2_sq).abs(), u_l2_sq),
        })
    }
}

/// One reassembled instant of the energy identity.
#[derive(Clone, Copy, Debug, Serialize)]
#[serde(bound = "")]
pub struct LedgerRow<T: Scalar> {
    pub t: T,
    pub lhs: T,
    pub rhs: T,
    pub residual: T,
}

/// Reassemble the energy identity from a sampled trajectory: trapezoidal time
/// integrals of the dissipation, feedback and buoyancy terms against the
/// stored instantaneous norms.
pub fn energy_ledger<T: Scalar>(
    rows: &[DiagnosticsRow<T>],
    params: &Params<T>,
) -> Result<Vec<LedgerRow<T>>> {
    if rows.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "energy ledger needs at least 2 samples, got {}",
            rows.len()
        )));
    }
    let eps_sq = params.epsilon * params.epsilon;
    let integrand = |r: &DiagnosticsRow<T>| {
        let diss = (r.grad_h_w_l2_sq + r.grad_h_u_l2_sq) / params.re
            + r.grad_h_theta_l2_sq / params.pe
            + eps_sq * r.phi_z_l2_sq;
        (r.wtheta_mean_l2_sq + diss, params.gamma * r.theta_w_inner)
    };
    let rhs0 = rows[0].half_energy();
    let mut int_lhs = T::zero();
    let mut int_rhs = T::zero();
    let mut out = Vec::with_capacity(rows.len());
    out.push(LedgerRow {
        t: rows[0].t,
        lhs: rhs0,
        rhs: rhs0,
        residual: T::zero(),
    });
    for pair in rows.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let half_dt = (b.t - a.t) * T::half();
        let (la, ra) = integrand(a);
        let (lb, rb) = integrand(b);
        int_lhs += (la + lb) * half_dt;
        int_rhs += (ra + rb) * half_dt;
        let lhs = b.half_energy() + int_lhs;
        let rhs = rhs0 + int_rhs;
        out.push(LedgerRow {
            t: b.t,
            lhs,
            rhs,
            residual: lhs - rhs,
        });
    }
    Ok(out)
}
