//! Exact spectral operators: derivatives, horizontal Laplacian and its
//! inverse, horizontal mean, dealiased products, and band projections.

use std::sync::Arc;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::fft;
use crate::field::{SpectralField, ZProfile};
use crate::grid::SpectralGrid;
use crate::scalar::Scalar;

enum Axis {
    X,
    Y,
    Z,
}

/// First derivative along one axis: multiply by i·k, zero the Nyquist plane
/// (its multiplier i·k has no conjugate partner, so keeping it would break
/// realness).
fn derivative<T: Scalar>(f: &SpectralField<T>, axis: Axis) -> SpectralField<T> {
    let grid = f.grid().clone();
    let (nx, ny, nz) = (grid.nx(), grid.ny(), grid.nz());
    let mut out = f.clone();
    let coeffs = out.coeffs_mut();
    let mut i = 0;
    for ix in 0..nx {
        for iy in 0..ny {
            for iz in 0..nz {
                let (k, nyquist) = match axis {
                    Axis::X => (grid.kx(ix), ix == nx / 2),
                    Axis::Y => (grid.ky(iy), iy == ny / 2),
                    Axis::Z => (grid.kz(iz), iz == nz / 2),
                };
                coeffs[i] = if nyquist {
                    Complex::new(T::zero(), T::zero())
                } else {
                    let c = coeffs[i];
                    Complex::new(-k * c.im, k * c.re)
                };
                i += 1;
            }
        }
    }
    out
}

/// ∂/∂x
pub fn dx<T: Scalar>(f: &SpectralField<T>) -> SpectralField<T> {
    derivative(f, Axis::X)
}

/// ∂/∂y
pub fn dy<T: Scalar>(f: &SpectralField<T>) -> SpectralField<T> {
    derivative(f, Axis::Y)
}

/// Vertical derivative ∂/∂z.
pub fn vertical_derivative<T: Scalar>(f: &SpectralField<T>) -> SpectralField<T> {
    derivative(f, Axis::Z)
}

/// Δ_h = ∂²/∂x² + ∂²/∂y²: multiply each mode by -|k_h|².
pub fn horizontal_laplacian<T: Scalar>(f: &SpectralField<T>) -> SpectralField<T> {
    let grid = f.grid().clone();
    let (nx, ny, nz) = (grid.nx(), grid.ny(), grid.nz());
    let mut out = f.clone();
    let coeffs = out.coeffs_mut();
    let mut i = 0;
    for ix in 0..nx {
        for iy in 0..ny {
            let m = -grid.kh_sq(ix, iy);
            for _ in 0..nz {
                coeffs[i] = coeffs[i] * m;
                i += 1;
            }
        }
    }
    out
}

/// Stream function φ = (-Δ_h)⁻¹ ω with φ̄ = 0.
///
/// Requires ω to have zero horizontal mean: every k_h = 0 coefficient must be
/// below 1e-12 of the field's max amplitude, otherwise the offending modes are
/// reported. The k_h = 0 line of the output is exactly zero.
pub fn invert_horizontal_laplacian<T: Scalar>(f: &SpectralField<T>) -> Result<SpectralField<T>> {
    let grid = f.grid().clone();
    let tol = T::lit(1e-12) * f.max_abs_coeff();
    let mut offending = Vec::new();
    for iz in 0..grid.nz() {
        let c = f.coeffs()[grid.index(0, 0, iz)];
        let mag = c.norm_sqr().sqrt();
        if mag > tol {
            offending.push((grid.jz(iz), mag));
        }
    }
    if !offending.is_empty() {
        let listed: Vec<String> = offending
            .iter()
            .take(8)
            .map(|(j3, mag)| format!("j=(0,0,{j3}) |c|={mag:.3e}"))
            .collect();
        return Err(Error::NonzeroHorizontalMean(format!(
            "{} k_h=0 mode(s) above tolerance: {}",
            offending.len(),
            listed.join(", ")
        )));
    }

    let (nx, ny, nz) = (grid.nx(), grid.ny(), grid.nz());
    let mut out = f.clone();
    let coeffs = out.coeffs_mut();
    let mut i = 0;
    for ix in 0..nx {
        for iy in 0..ny {
            if grid.is_mean_line(ix, iy) {
                for _ in 0..nz {
                    coeffs[i] = Complex::new(T::zero(), T::zero());
                    i += 1;
                }
            } else {
                let inv = T::one() / grid.kh_sq(ix, iy);
                for _ in 0..nz {
                    coeffs[i] = coeffs[i] * inv;
                    i += 1;
                }
            }
        }
    }
    Ok(out)
}

/// Horizontal mean f̄(z) = (1/L²) ∫ f dx dy, assembled from the k_h = 0 line.
pub fn horizontal_mean<T: Scalar>(f: &SpectralField<T>) -> ZProfile<T> {
    let grid = f.grid();
    let line: Vec<Complex<T>> = (0..grid.nz())
        .map(|iz| f.coeffs()[grid.index(0, 0, iz)])
        .collect();
    ZProfile::new(fft::inverse_z_line(grid, &line))
}

/// Pointwise product in physical space with the 2/3-rule mask applied to the
/// result. Exact for band-limited inputs whose product stays in the retained
/// band.
pub fn multiply_dealiased<T: Scalar>(
    f: &SpectralField<T>,
    g: &SpectralField<T>,
) -> Result<SpectralField<T>> {
    f.grid().check_same_layout(g.grid(), "multiply_dealiased")?;
    let fv = f.values();
    let gv = g.values();
    let prod: Vec<T> = fv.iter().zip(&gv).map(|(&a, &b)| a * b).collect();
    let mut out = SpectralField::from_values(f.grid(), &prod)?;
    out.apply_dealias_mask_mut();
    Ok(out)
}

/// Multiply a field by a z-profile in physical space, then re-analyze and
/// dealias the result.
pub fn multiply_by_profile<T: Scalar>(
    f: &SpectralField<T>,
    p: &ZProfile<T>,
) -> Result<SpectralField<T>> {
    let grid = f.grid().clone();
    if p.len() != grid.nz() {
        return Err(Error::DimensionMismatch {
            expected: grid.nz(),
            got: p.len(),
        });
    }
    let mut vals = f.values();
    let nz = grid.nz();
    for (i, v) in vals.iter_mut().enumerate() {
        *v = *v * p.values()[i % nz];
    }
    let mut out = SpectralField::from_values(&grid, &vals)?;
    out.apply_dealias_mask_mut();
    Ok(out)
}

/// Orthogonal projection onto modes with Euclidean |j| <= m; zeroes the rest.
pub fn project_ball<T: Scalar>(f: &SpectralField<T>, m: i64) -> SpectralField<T> {
    let grid = f.grid().clone();
    let m_sq = m.saturating_mul(m);
    let mut out = f.clone();
    let coeffs = out.coeffs_mut();
    let mut i = 0;
    for ix in 0..grid.nx() {
        let jx = grid.jx(ix);
        for iy in 0..grid.ny() {
            let jy = grid.jy(iy);
            for iz in 0..grid.nz() {
                let jz = grid.jz(iz);
                if m < 0 || jx * jx + jy * jy + jz * jz > m_sq {
                    coeffs[i] = Complex::new(T::zero(), T::zero());
                }
                i += 1;
            }
        }
    }
    out
}

/// Whether all coefficients outside |j| <= m vanish exactly.
pub fn supported_in_ball<T: Scalar>(f: &SpectralField<T>, m: i64) -> bool {
    let grid = f.grid();
    let m_sq = m * m;
    let mut i = 0;
    for ix in 0..grid.nx() {
        let jx = grid.jx(ix);
        for iy in 0..grid.ny() {
            let jy = grid.jy(iy);
            for iz in 0..grid.nz() {
                let jz = grid.jz(iz);
                let c = f.coeffs()[i];
                if jx * jx + jy * jy + jz * jz > m_sq && (c.re != T::zero() || c.im != T::zero()) {
                    return false;
                }
                i += 1;
            }
        }
    }
    true
}

/// Zero-pad the spectrum onto a finer grid with the same period lengths.
pub fn refine_to<T: Scalar>(
    f: &SpectralField<T>,
    fine: &Arc<SpectralGrid<T>>,
) -> Result<SpectralField<T>> {
    let coarse = f.grid();
    if fine.l() != coarse.l() {
        return Err(Error::GridMismatch(
            "refine_to requires identical period length".into(),
        ));
    }
    if fine.nx() < coarse.nx() || fine.ny() < coarse.ny() || fine.nz() < coarse.nz() {
        return Err(Error::GridMismatch(
            "refine_to target must be at least as fine in every axis".into(),
        ));
    }
    let mut out = SpectralField::zeros(fine);
    let mut i = 0;
    for ix in 0..coarse.nx() {
        let jx = coarse.jx(ix);
        for iy in 0..coarse.ny() {
            let jy = coarse.jy(iy);
            for iz in 0..coarse.nz() {
                let jz = coarse.jz(iz);
                let c = f.coeffs()[i];
                i += 1;
                if let Some(t) = fine.index_of_wavevector([jx, jy, jz]) {
                    out.coeffs_mut()[t] = c;
                }
            }
        }
    }
    Ok(out)
}

/// Keep only the modes resolved on the coarser grid (adjoint of `refine_to`).
pub fn restrict_to<T: Scalar>(
    f: &SpectralField<T>,
    coarse: &Arc<SpectralGrid<T>>,
) -> Result<SpectralField<T>> {
    let fine = f.grid();
    if fine.l() != coarse.l() {
        return Err(Error::GridMismatch(
            "restrict_to requires identical period length".into(),
        ));
    }
    let mut out = SpectralField::zeros(coarse);
    let mut i = 0;
    for ix in 0..coarse.nx() {
        let jx = coarse.jx(ix);
        for iy in 0..coarse.ny() {
            let jy = coarse.jy(iy);
            for iz in 0..coarse.nz() {
                let jz = coarse.jz(iz);
                if let Some(s) = fine.index_of_wavevector([jx, jy, jz]) {
                    out.coeffs_mut()[i] = f.coeffs()[s];
                }
                i += 1;
            }
        }
    }
    Ok(out)
}
