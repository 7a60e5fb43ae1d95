//! Norms and inner products by uniform grid quadrature (spectrally accurate
//! for periodic fields).

use crate::error::Result;
use crate::field::SpectralField;
use crate::ops;
use crate::scalar::Scalar;

/// ‖f‖₂² = ∫_Ω f² dV by collocation quadrature.
pub fn l2_norm_sq<T: Scalar>(f: &SpectralField<T>) -> T {
    let cell = f.grid().cell_volume();
    let sum: T = f.values().iter().map(|&v| v * v).sum();
    sum * cell
}

pub fn l2_norm<T: Scalar>(f: &SpectralField<T>) -> T {
    l2_norm_sq(f).sqrt()
}

/// (f, g) = ∫_Ω f g dV.
pub fn inner<T: Scalar>(f: &SpectralField<T>, g: &SpectralField<T>) -> Result<T> {
    f.grid().check_same_layout(g.grid(), "inner product")?;
    let cell = f.grid().cell_volume();
    let sum: T = f
        .values()
        .iter()
        .zip(g.values().iter())
        .map(|(&a, &b)| a * b)
        .sum();
    Ok(sum * cell)
}

/// ‖∇_h f‖₂² = ‖∂x f‖₂² + ‖∂y f‖₂².
pub fn grad_h_norm_sq<T: Scalar>(f: &SpectralField<T>) -> T {
    l2_norm_sq(&ops::dx(f)) + l2_norm_sq(&ops::dy(f))
}

/// ‖∂z f‖₂².
pub fn dz_norm_sq<T: Scalar>(f: &SpectralField<T>) -> T {
    l2_norm_sq(&ops::vertical_derivative(f))
}

/// Parseval sum L² Σ |c_j|²; equals `l2_norm_sq` to roundoff.
pub fn parseval_norm_sq<T: Scalar>(f: &SpectralField<T>) -> T {
    let sum: T = f.coeffs().iter().map(|c| c.norm_sqr()).sum();
    sum * f.grid().volume()
}

/// Max over grid points of |f|.
pub fn max_abs_value<T: Scalar>(f: &SpectralField<T>) -> T {
    f.values().iter().fold(T::zero(), |m, &v| m.max(v.abs()))
}
