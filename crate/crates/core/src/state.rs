//! Prognostic state (w, ω, θ) and the fields derived from it.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::SpectralGrid;
use crate::ops;
use crate::quad;
use crate::scalar::Scalar;

/// One time instant of the model: vertical velocity w, vertical vorticity ω,
/// temperature fluctuation θ. The stream function φ and horizontal velocity
/// (u, v) = (φ_y, -φ_x) are derived on demand, so incompressibility and curl
/// consistency hold by construction.
#[derive(Clone, Debug)]
pub struct ModelState<T: Scalar> {
    pub t: T,
    pub w: SpectralField<T>,
    pub omega: SpectralField<T>,
    pub theta: SpectralField<T>,
}

impl<T: Scalar> ModelState<T> {
    pub fn new(
        t: T,
        w: SpectralField<T>,
        omega: SpectralField<T>,
        theta: SpectralField<T>,
    ) -> Result<Self> {
        w.grid().check_same_layout(omega.grid(), "state fields")?;
        w.grid().check_same_layout(theta.grid(), "state fields")?;
        Ok(Self { t, w, omega, theta })
    }

    pub fn zeros(grid: &Arc<SpectralGrid<T>>) -> Self {
        Self {
            t: T::zero(),
            w: SpectralField::zeros(grid),
            omega: SpectralField::zeros(grid),
            theta: SpectralField::zeros(grid),
        }
    }

    pub fn grid(&self) -> &Arc<SpectralGrid<T>> {
        self.w.grid()
    }

    pub fn phi(&self) -> Result<SpectralField<T>> {
        ops::invert_horizontal_laplacian(&self.omega)
    }

    pub fn velocity(&self) -> Result<(SpectralField<T>, SpectralField<T>)> {
        velocity_from_vorticity(&self.omega)
    }

    /// ‖w‖₂² + ‖u‖₂² + ‖θ‖₂².
    pub fn total_energy(&self) -> Result<T> {
        let (u, v) = self.velocity()?;
        Ok(quad::l2_norm_sq(&self.w)
            + quad::l2_norm_sq(&u)
            + quad::l2_norm_sq(&v)
            + quad::l2_norm_sq(&self.theta))
    }

    /// Check the state invariants: finite coefficients, Hermitian symmetry,
    /// zero horizontal means of w, θ, ω (each within 1e-12 of max amplitude).
    pub fn validate(&self) -> Result<()> {
        for (name, f) in [
            ("w", &self.w),
            ("omega", &self.omega),
            ("theta", &self.theta),
        ] {
            if !f.is_finite() {
                return Err(Error::InvalidState(format!(
                    "{name} has non-finite coefficients"
                )));
            }
            let scale = f.max_abs_coeff();
            let tol = T::lit(1e-12) * scale;
            if f.mean_line_max_abs() > tol {
                return Err(Error::InvalidState(format!(
                    "{name} has nonzero horizontal mean: {:.3e} vs max amplitude {:.3e}",
                    f.mean_line_max_abs(),
                    scale
                )));
            }
            if f.hermitian_residual() > tol.max(T::lit(1e-13)) {
                return Err(Error::InvalidState(format!(
                    "{name} is not Hermitian-symmetric: residual {:.3e}",
                    f.hermitian_residual()
                )));
            }
        }
        Ok(())
    }
}

/// Recover the horizontal velocity from the vertical vorticity:
/// u = ∂y φ, v = -∂x φ with φ = (-Δ_h)⁻¹ ω.
pub fn velocity_from_vorticity<T: Scalar>(
    omega: &SpectralField<T>,
) -> Result<(SpectralField<T>, SpectralField<T>)> {
    let phi = ops::invert_horizontal_laplacian(omega)?;
    Ok((ops::dy(&phi), ops::dx(&phi).scaled(-T::one())))
}
