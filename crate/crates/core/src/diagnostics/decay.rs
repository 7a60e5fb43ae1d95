//! Exponential decay-rate fitting and the large-time bound checks.

use serde::Serialize;

use crate::diagnostics::DiagnosticsRow;
use crate::error::{Error, Result};
use crate::params::Params;
use crate::scalar::Scalar;

/// Least-squares fit of log(q) against t.
#[derive(Clone, Copy, Debug, Serialize)]
#[serde(bound = "")]
pub struct RateFit<T: Scalar> {
    /// Decay rate σ in q ~ exp(-σ t); negative values mean growth.
    pub rate: T,
    pub intercept: T,
    /// Set when the series was not strictly positive over the fit window; the
    /// rate is then reported as zero.
    pub flagged: bool,
}

/// Pointwise envelope check q(t) <= envelope(t)·(1 + slack).
#[derive(Clone, Copy, Debug, Serialize)]
#[serde(bound = "")]
pub struct BoundCheck<T: Scalar> {
    pub checked: bool,
    pub pass: bool,
    /// Smallest relative margin (envelope - q)/envelope over the samples;
    /// negative means the bound was violated there.
    pub margin_min_rel: T,
    /// Largest relative margin; small values mean the bound is tight
    /// everywhere.
    pub margin_max_rel: T,
}

impl<T: Scalar> BoundCheck<T> {
    fn unchecked() -> Self {
        Self {
            checked: false,
            pass: true,
            margin_min_rel: T::zero(),
            margin_max_rel: T::zero(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(bound = "")]
pub struct DecayReport<T: Scalar> {
    pub kappa: T,
    /// γ = L²/(4π²).
    pub poincare_gamma: T,
    /// Envelope rate 2/(γ Pe) for ‖θ‖₂².
    pub theta_bound_rate: T,
    /// Envelope rate 1/(κ γ Re) for ‖u‖₂² + ‖w‖₂².
    pub velocity_bound_rate: T,
    /// min(2/(γPe), 1/(κγRe)), the qualitative reference for the gradient
    /// combination.
    pub grad_combo_reference_rate: T,
    pub fitted_theta: RateFit<T>,
    pub fitted_velocity: RateFit<T>,
    pub fitted_grad_combo: RateFit<T>,
    pub theta_bound: BoundCheck<T>,
    /// Checked only when θ₀ = 0 (the constant-free specialization).
    pub velocity_bound: BoundCheck<T>,
    /// Sign-only check on the gradient combination's fitted rate.
    pub grad_combo_rate_nonnegative: bool,
    pub z_derivative_finite: bool,
    /// Affine upper-envelope fit of log(‖∂z u‖² + ‖∂z w‖² + ‖∂z θ‖²).
    pub z_derivative_fit: RateFit<T>,
    /// (t midpoint, d log q / dt) between consecutive samples of the
    /// z-derivative series.
    pub z_derivative_log_slopes: Vec<[T; 2]>,
}

fn fit_log<T: Scalar>(points: &[(T, T)]) -> RateFit<T> {
    if points.len() < 2 || points.iter().any(|&(_, q)| !(q > T::zero())) {
        return RateFit {
            rate: T::zero(),
            intercept: T::zero(),
            flagged: true,
        };
    }
    let n = T::lit(points.len() as f64);
    let mut st = T::zero();
    let mut sy = T::zero();
    let mut stt = T::zero();
    let mut sty = T::zero();
    for &(t, q) in points {
        let y = q.ln();
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
    }
    let denom = n * stt - st * st;
    if denom == T::zero() {
        return RateFit {
            rate: T::zero(),
            intercept: T::zero(),
            flagged: true,
        };
    }
    let slope = (n * sty - st * sy) / denom;
    let intercept = (sy - slope * st) / n;
    RateFit {
        rate: -slope,
        intercept,
        flagged: false,
    }
}

fn envelope_check<T: Scalar>(
    rows: &[DiagnosticsRow<T>],
    q: impl Fn(&DiagnosticsRow<T>) -> T,
    rate: T,
    slack: T,
) -> BoundCheck<T> {
    let t0 = rows[0].t;
    let q0 = q(&rows[0]);
    let mut margin_min = T::infinity();
    let mut margin_max = T::neg_infinity();
    let mut pass = true;
    for row in rows {
        let env = (-(rate) * (row.t - t0)).exp() * q0;
        let value = q(row);
        if env == T::zero() {
            if value > T::zero() {
                pass = false;
                margin_min = margin_min.min(-T::one());
            } else {
                margin_min = margin_min.min(T::zero());
                margin_max = margin_max.max(T::zero());
            }
            continue;
        }
        let margin = (env - value) / env;
        margin_min = margin_min.min(margin);
        margin_max = margin_max.max(margin);
        if margin < -slack {
            pass = false;
        }
    }
    BoundCheck {
        checked: true,
        pass,
        margin_min_rel: margin_min,
        margin_max_rel: margin_max,
    }
}

/// Fit decay rates over the final half of the sampled run and check the
/// large-time envelopes: the θ bound unconditionally, the velocity bound in
/// its constant-free θ₀ = 0 form, and the z-derivative growth as a reported
/// affine fit only.
pub fn decay_rates<T: Scalar>(
    rows: &[DiagnosticsRow<T>],
    params: &Params<T>,
    kappa: T,
) -> Result<DecayReport<T>> {
    if rows.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "decay study needs at least 2 samples, got {}",
            rows.len()
        )));
    }
    if !(kappa >= T::one()) {
        return Err(Error::InvalidParams(format!(
            "kappa must be >= 1, got {kappa}"
        )));
    }
    let two_kappa_re = T::two() * kappa * params.re;
    if (params.pe - two_kappa_re).abs() <= T::lit(1e-12) * params.pe.max(two_kappa_re) {
        return Err(Error::InvalidParams(format!(
            "decay bounds require Pe != 2 κ Re, got Pe = {} and 2 κ Re = {}",
            params.pe, two_kappa_re
        )));
    }

    let gamma = params.poincare_gamma();
    let theta_rate = T::two() / (gamma * params.pe);
    let velocity_rate = T::one() / (kappa * gamma * params.re);

    let window = &rows[rows.len() / 2..];
    let pick = |f: &dyn Fn(&DiagnosticsRow<T>) -> T| -> Vec<(T, T)> {
        window.iter().map(|r| (r.t, f(r))).collect()
    };
    let q_theta = |r: &DiagnosticsRow<T>| r.theta_l2_sq;
    let q_vel = |r: &DiagnosticsRow<T>| r.u_l2_sq + r.w_l2_sq;
    let q_grad = |r: &DiagnosticsRow<T>| r.omega_l2_sq + r.grad_h_w_l2_sq + r.grad_h_theta_l2_sq;
    let q_dz = |r: &DiagnosticsRow<T>| r.dz_u_l2_sq + r.dz_w_l2_sq + r.dz_theta_l2_sq;

    let fitted_theta = fit_log(&pick(&q_theta));
    let fitted_velocity = fit_log(&pick(&q_vel));
    let fitted_grad_combo = fit_log(&pick(&q_grad));
    let z_fit = fit_log(&pick(&q_dz));

    let slack = T::lit(1e-10);
    let theta_bound = envelope_check(rows, q_theta, theta_rate, slack);
    let theta0_zero = rows[0].theta_l2_sq <= T::lit(1e-28);
    let velocity_bound = if theta0_zero {
        envelope_check(rows, q_vel, velocity_rate, slack)
    } else {
        BoundCheck::unchecked()
    };

    let mut log_slopes = Vec::new();
    for pair in rows.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let (qa, qb) = (q_dz(a), q_dz(b));
        if qa > T::zero() && qb > T::zero() && b.t > a.t {
            log_slopes.push([(a.t + b.t) * T::half(), (qb.ln() - qa.ln()) / (b.t - a.t)]);
        }
    }

    Ok(DecayReport {
        kappa,
        poincare_gamma: gamma,
        theta_bound_rate: theta_rate,
        velocity_bound_rate: velocity_rate,
        grad_combo_reference_rate: theta_rate.min(velocity_rate),
        fitted_theta,
        fitted_velocity,
        grad_combo_rate_nonnegative: fitted_grad_combo.flagged
            || fitted_grad_combo.rate >= -T::lit(1e-6),
        fitted_grad_combo,
        theta_bound,
        velocity_bound,
        z_derivative_finite: rows.iter().all(|r| q_dz(r).is_finite()),
        z_derivative_fit: z_fit,
        z_derivative_log_slopes: log_slopes,
    })
}
