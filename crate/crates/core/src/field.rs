//! Real periodic scalar fields stored as Hermitian-symmetric mode amplitudes.

use std::sync::Arc;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::SpectralGrid;
use crate::scalar::Scalar;

/// A real scalar field on the periodic box, held in coefficient space.
///
/// Values are immutable through the public operator API: every operator
/// returns a fresh field, so fields can be shared freely across threads.
#[derive(Clone, Debug)]
pub struct SpectralField<T: Scalar> {
    grid: Arc<SpectralGrid<T>>,
    coeffs: Vec<Complex<T>>,
}

impl<T: Scalar> SpectralField<T> {
    pub fn zeros(grid: &Arc<SpectralGrid<T>>) -> Self {
        Self {
            grid: grid.clone(),
            coeffs: vec![Complex::new(T::zero(), T::zero()); grid.len()],
        }
    }

    /// Analyze real grid samples into mode amplitudes.
    pub fn from_values(grid: &Arc<SpectralGrid<T>>, values: &[T]) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self {
            grid: grid.clone(),
            coeffs: fft::forward(grid, values),
        })
    }

    pub fn from_coeffs(grid: &Arc<SpectralGrid<T>>, coeffs: Vec<Complex<T>>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: coeffs.len(),
            });
        }
        Ok(Self {
            grid: grid.clone(),
            coeffs,
        })
    }

    /// Synthesize collocation-grid samples.
    pub fn values(&self) -> Vec<T> {
        fft::inverse(&self.grid, &self.coeffs)
    }

    /// amplitude·cos(k_j · x): coefficients amplitude/2 at ±j.
    pub fn cosine_mode(grid: &Arc<SpectralGrid<T>>, j: [i64; 3], amplitude: T) -> Result<Self> {
        Self::mode_pair(grid, j, Complex::new(amplitude * T::half(), T::zero()))
    }

    /// amplitude·sin(k_j · x): coefficients ∓i·amplitude/2 at ±j.
    pub fn sine_mode(grid: &Arc<SpectralGrid<T>>, j: [i64; 3], amplitude: T) -> Result<Self> {
        Self::mode_pair(grid, j, Complex::new(T::zero(), -(amplitude * T::half())))
    }

    /// Set c(j) = amp and c(-j) = conj(amp); j = 0 stores Re(amp) (constant field).
    pub fn mode_pair(grid: &Arc<SpectralGrid<T>>, j: [i64; 3], amp: Complex<T>) -> Result<Self> {
        let mut field = Self::zeros(grid);
        let idx = grid
            .index_of_wavevector(j)
            .ok_or_else(|| Error::InvalidInput(format!("mode {j:?} not resolved on {grid:?}")))?;
        if j == [0, 0, 0] {
            field.coeffs[idx] = Complex::new(amp.re, T::zero());
            return Ok(field);
        }
        let neg = grid
            .index_of_wavevector([-j[0], -j[1], -j[2]])
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "mode {j:?} has no conjugate partner on {grid:?} (Nyquist index)"
                ))
            })?;
        field.coeffs[idx] = amp;
        field.coeffs[neg] = amp.conj();
        Ok(field)
    }

    pub fn constant(grid: &Arc<SpectralGrid<T>>, value: T) -> Self {
        let mut field = Self::zeros(grid);
        field.coeffs[0] = Complex::new(value, T::zero());
        field
    }

    pub fn grid(&self) -> &Arc<SpectralGrid<T>> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.coeffs
    }

    pub fn coeff_at(&self, j: [i64; 3]) -> Option<Complex<T>> {
        self.grid.index_of_wavevector(j).map(|i| self.coeffs[i])
    }

    pub fn max_abs_coeff(&self) -> T {
        self.coeffs
            .iter()
            .map(|c| c.norm_sqr())
            .fold(T::zero(), T::max)
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Max |c(j) - conj(c(-j))| over all modes; zero for a real field.
    pub fn hermitian_residual(&self) -> T {
        let g = &self.grid;
        let (nx, ny, nz) = (g.nx(), g.ny(), g.nz());
        let mut worst = T::zero();
        for ix in 0..nx {
            let mx = (nx - ix) % nx;
            for iy in 0..ny {
                let my = (ny - iy) % ny;
                for iz in 0..nz {
                    let mz = (nz - iz) % nz;
                    let a = self.coeffs[g.index(ix, iy, iz)];
                    let b = self.coeffs[g.index(mx, my, mz)].conj();
                    worst = worst.max((a - b).norm_sqr());
                }
            }
        }
        worst.sqrt()
    }

    /// Largest |coefficient| on the k_h = 0 line.
    pub fn mean_line_max_abs(&self) -> T {
        let g = &self.grid;
        (0..g.nz())
            .map(|iz| self.coeffs[g.index(0, 0, iz)].norm_sqr())
            .fold(T::zero(), T::max)
            .sqrt()
    }

    pub fn zero_mean_line_mut(&mut self) {
        let g = self.grid.clone();
        for iz in 0..g.nz() {
            self.coeffs[g.index(0, 0, iz)] = Complex::new(T::zero(), T::zero());
        }
    }

    /// Apply the grid's 2/3-rule mask in place.
    pub fn apply_dealias_mask_mut(&mut self) {
        let g = self.grid.clone();
        let mut i = 0;
        for ix in 0..g.nx() {
            for iy in 0..g.ny() {
                for iz in 0..g.nz() {
                    if !g.in_dealias_band(ix, iy, iz) {
                        self.coeffs[i] = Complex::new(T::zero(), T::zero());
                    }
                    i += 1;
                }
            }
        }
    }

    pub fn scaled(&self, factor: T) -> Self {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            *c = *c * factor;
        }
        out
    }

    pub fn scale_mut(&mut self, factor: T) {
        for c in &mut self.coeffs {
            *c = *c * factor;
        }
    }

    /// self += alpha * other
    pub fn axpy_mut(&mut self, alpha: T, other: &Self) -> Result<()> {
        self.grid.check_same_layout(&other.grid, "axpy")?;
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a = *a + *b * alpha;
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.axpy_mut(T::one(), other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.axpy_mut(-T::one(), other)?;
        Ok(out)
    }
}

/// A function of z alone: one real value per vertical collocation point.
#[derive(Clone, Debug, PartialEq)]
pub struct ZProfile<T: Scalar> {
    values: Vec<T>,
}

impl<T: Scalar> ZProfile<T> {
    pub fn new(values: Vec<T>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    /// ∫_Ω p(z)² dV = L² · (1/Nz) Σ p², the L²(Ω) norm of the extended field.
    pub fn l2_norm_sq_over_box(&self, grid: &SpectralGrid<T>) -> T {
        let sum: T = self.values.iter().map(|&v| v * v).sum();
        grid.volume() * sum / T::lit(self.values.len() as f64)
    }
}
