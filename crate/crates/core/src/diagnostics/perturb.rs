//! Continuous-dependence experiment: perturb the initial data, measure the
//! difference growth, and compare against the Gronwall envelope.

use serde::Serialize;

use crate::diagnostics::DiagnosticsRow;
use crate::dynamics::{simulate, NullSink};
use crate::error::{Error, Result};
use crate::params::Params;
use crate::quad;
use crate::random::{random_field, RandomFieldSpec};
use crate::scalar::Scalar;
use crate::state::{velocity_from_vorticity, ModelState};

#[derive(Clone, Debug)]
pub struct PerturbationConfig<T: Scalar> {
    /// Absolute perturbation amplitudes, strictly decreasing.
    pub deltas: Vec<T>,
    /// Seed of the shared perturbation direction.
    pub direction_seed: u64,
    pub direction_max_mode: i64,
    pub direction_slope: f64,
}

#[derive(Clone, Debug, Serialize)]
#[serde(bound = "")]
pub struct DeltaEntry<T: Scalar> {
    pub delta: T,
    /// ‖(w,u,θ)_diff(0)‖₂².
    pub diff0_sq: T,
    /// ‖(w,u,θ)_diff(T)‖₂²; absent when the perturbed run blew up.
    pub diff_final_sq: Option<T>,
    /// Step index of a blow-up, when one happened.
    pub blow_up_step: Option<usize>,
    /// diff_final_sq <= e^{K(T)}·diff0_sq.
    pub within_gronwall_envelope: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(bound = "")]
pub struct PerturbationReport<T: Scalar> {
    pub entries: Vec<DeltaEntry<T>>,
    /// Gronwall exponent K(T) by trapezoidal quadrature of the base
    /// trajectory's norms (unit constant in front of the integrand).
    pub k_final: T,
    /// diff(δ_{i+1})/diff(δ_i) at final time (norms, not squares).
    pub consecutive_ratios: Vec<Option<T>>,
    /// Whether the smallest-δ pair ratio sits in [0.4, 0.6].
    pub first_order_scaling: Option<bool>,
    /// Set when any trajectory blew up; the report is then partial.
    pub partial: bool,
}

fn diff_energy_sq<T: Scalar>(a: &ModelState<T>, b: &ModelState<T>) -> Result<T> {
    let dw = a.w.sub(&b.w)?;
    let dom = a.omega.sub(&b.omega)?;
    let dth = a.theta.sub(&b.theta)?;
    let (du, dv) = velocity_from_vorticity(&dom)?;
    Ok(quad::l2_norm_sq(&dw)
        + quad::l2_norm_sq(&du)
        + quad::l2_norm_sq(&dv)
        + quad::l2_norm_sq(&dth))
}

/// K(t) = ∫₀ᵗ [(‖∇_h w‖²+1)(‖w‖²+‖∂z w‖²) + ‖ω‖²(‖u‖²+‖∂z u‖²)
///        + (‖∇_h θ‖²+1)(‖θ‖²+‖∂z θ‖²) + 1] ds over the base trajectory.
pub fn gronwall_exponent<T: Scalar>(rows: &[DiagnosticsRow<T>]) -> T {
    let integrand = |r: &DiagnosticsRow<T>| {
        (r.grad_h_w_l2_sq + T::one()) * (r.w_l2_sq + r.dz_w_l2_sq)
            + r.omega_l2_sq * (r.u_l2_sq + r.dz_u_l2_sq)
            + (r.grad_h_theta_l2_sq + T::one()) * (r.theta_l2_sq + r.dz_theta_l2_sq)
            + T::one()
    };
    let mut k = T::zero();
    for pair in rows.windows(2) {
        k += (integrand(&pair[0]) + integrand(&pair[1])) * (pair[1].t - pair[0].t) * T::half();
    }
    k
}

/// Run the base trajectory plus one perturbed trajectory per δ, all sharing
/// one random perturbation direction of unit energy norm. Returns the report
/// together with the base run's diagnostics rows.
pub fn perturbation_study<T: Scalar>(
    init: &ModelState<T>,
    params: &Params<T>,
    config: &PerturbationConfig<T>,
) -> Result<(PerturbationReport<T>, Vec<DiagnosticsRow<T>>)> {
    if config.deltas.is_empty() {
        return Err(Error::InvalidInput(
            "perturbation study needs at least one delta".into(),
        ));
    }
    for d in &config.deltas {
        if !(*d >= T::zero()) || !d.is_finite() {
            return Err(Error::InvalidInput(format!(
                "deltas must be >= 0 and finite, got {d}"
            )));
        }
    }
    if config.deltas.windows(2).any(|p| p[1] >= p[0]) {
        return Err(Error::InvalidInput(
            "deltas must be strictly decreasing".into(),
        ));
    }

    let grid = init.grid().clone();
    let (base_final, base_rows) = simulate(init, params, &mut NullSink)?;
    let k_final = gronwall_exponent(&base_rows);

    // shared direction with unit energy norm
    let spec = |stream: u64| {
        RandomFieldSpec::new(
            config.direction_seed,
            config.direction_max_mode,
            config.direction_slope,
            true,
        )
        .stream(stream)
    };
    let mut dir_w = random_field(&grid, &spec(0))?;
    let mut dir_omega = random_field(&grid, &spec(1))?;
    let mut dir_theta = random_field(&grid, &spec(2))?;
    let dir_state = ModelState::new(
        T::zero(),
        dir_w.clone(),
        dir_omega.clone(),
        dir_theta.clone(),
    )?;
    let e = dir_state.total_energy()?.sqrt();
    if e > T::zero() {
        for f in [&mut dir_w, &mut dir_omega, &mut dir_theta] {
            f.scale_mut(T::one() / e);
        }
    }

    let mut entries = Vec::new();
    let mut partial = false;
    for &delta in &config.deltas {
        let mut pert = init.clone();
        pert.w.axpy_mut(delta, &dir_w)?;
        pert.omega.axpy_mut(delta, &dir_omega)?;
        pert.theta.axpy_mut(delta, &dir_theta)?;
        let diff0_sq = diff_energy_sq(&pert, init)?;
        match simulate(&pert, params, &mut NullSink) {
            Ok((pert_final, _)) => {
                let diff_final_sq = diff_energy_sq(&pert_final, &base_final)?;
                let envelope = k_final.exp() * diff0_sq;
                entries.push(DeltaEntry {
                    delta,
                    diff0_sq,
                    diff_final_sq: Some(diff_final_sq),
                    blow_up_step: None,
                    within_gronwall_envelope: Some(
                        diff_final_sq <= envelope * (T::one() + T::lit(1e-10)),
                    ),
                });
            }
            Err(Error::BlowUp { step, .. }) => {
                partial = true;
                entries.push(DeltaEntry {
                    delta,
                    diff0_sq,
                    diff_final_sq: None,
                    blow_up_step: Some(step),
                    within_gronwall_envelope: None,
                });
            }
            Err(e) => return Err(e),
        }
    }

    let mut consecutive_ratios = Vec::new();
    for pair in entries.windows(2) {
        let ratio = match (pair[0].diff_final_sq, pair[1].diff_final_sq) {
            (Some(a), Some(b)) if a > T::zero() => Some((b / a).sqrt()),
            _ => None,
        };
        consecutive_ratios.push(ratio);
    }
    let first_order_scaling = consecutive_ratios
        .last()
        .copied()
        .flatten()
        .map(|r| r >= T::lit(0.4) && r <= T::lit(0.6));

    Ok((
        PerturbationReport {
            entries,
            k_final,
            consecutive_ratios,
            first_order_scaling,
            partial,
        },
        base_rows,
    ))
}
