//! Physical and numerical run parameters.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SpectralGrid;
use crate::scalar::Scalar;

/// Dealiasing policy for quadratic products.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Dealias {
    #[default]
    TwoThirds,
    Off,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(bound = "")]
#[serde(deny_unknown_fields)]
pub struct Params<T: Scalar> {
    /// Horizontal period length L.
    pub l: T,
    /// Reynolds number (> 0).
    pub re: T,
    /// Péclet number (> 0).
    pub pe: T,
    /// Buoyancy number Γ.
    pub gamma: T,
    /// Strength ε of the weak vertical dissipation ε² ∂²φ/∂z² (>= 0).
    pub epsilon: T,
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    /// Time step (> 0).
    pub dt: T,
    /// Final time (>= 0).
    pub t_final: T,
    /// Diagnostics cadence in steps.
    pub sample_every: usize,
    #[serde(default)]
    pub dealias: Dealias,
}

impl<T: Scalar> Params<T> {
    /// Poincaré constant γ = L²/(4π²); always derived from L, never stored.
    pub fn poincare_gamma(&self) -> T {
        self.l * self.l / (T::lit(4.0) * T::PI() * T::PI())
    }

    pub fn grid(&self) -> Result<Arc<SpectralGrid<T>>> {
        SpectralGrid::new(self.l, self.nx, self.ny, self.nz)
    }

    /// Every constraint violation, not just the first.
    pub fn validation_errors(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !(self.l > T::zero()) || !self.l.is_finite() {
            errs.push(format!("l must be positive and finite, got {}", self.l));
        }
        if !(self.re > T::zero()) {
            errs.push(format!("re must be positive, got {}", self.re));
        }
        if !(self.pe > T::zero()) {
            errs.push(format!("pe must be positive, got {}", self.pe));
        }
        if !(self.epsilon >= T::zero()) {
            errs.push(format!("epsilon must be >= 0, got {}", self.epsilon));
        }
        if !self.gamma.is_finite() {
            errs.push(format!("gamma must be finite, got {}", self.gamma));
        }
        if !(self.dt > T::zero()) {
            errs.push(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_final >= T::zero()) {
            errs.push(format!("t_final must be >= 0, got {}", self.t_final));
        }
        if self.sample_every == 0 {
            errs.push("sample_every must be >= 1".into());
        }
        for (name, n) in [("nx", self.nx), ("ny", self.ny), ("nz", self.nz)] {
            if n < 4 || n % 2 != 0 {
                errs.push(format!("{name} must be even and >= 4, got {n}"));
            }
        }
        errs
    }

    pub fn validate(&self) -> Result<()> {
        let errs = self.validation_errors();
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(errs.join("; ")))
        }
    }

    pub fn steps(&self) -> usize {
        let ratio = self.t_final / self.dt;
        ratio.round().to_usize().unwrap_or(0)
    }
}

/// Largest stable time step implied by the explicitly integrated vertical
/// coupling pair (∂zφ, ∂zw): those terms oscillate with per-mode frequency
/// |k_z|/|k_h|, so dt_max = 1 / max(|k_z|/|k_h|) over the retained modes.
pub fn explicit_coupling_dt_max<T: Scalar>(grid: &SpectralGrid<T>, dealias: Dealias) -> T {
    let mut max_ratio = T::zero();
    for ix in 0..grid.nx() {
        for iy in 0..grid.ny() {
            if grid.is_mean_line(ix, iy) {
                continue;
            }
            let kh = grid.kh_sq(ix, iy).sqrt();
            for iz in 0..grid.nz() {
                if dealias == Dealias::TwoThirds && !grid.in_dealias_band(ix, iy, iz) {
                    continue;
                }
                let ratio = grid.kz(iz).abs() / kh;
                max_ratio = max_ratio.max(ratio);
            }
        }
    }
    if max_ratio > T::zero() {
        T::one() / max_ratio
    } else {
        T::infinity()
    }
}
