//! Mode grid for real periodic scalar fields on the box [0,L]² × [0,1].
//!
//! Coefficients are indexed by integer wavevectors j = (j1, j2, j3) with
//! j1 ∈ [-Nx/2, Nx/2), stored in FFT order along each axis. The horizontal
//! wavenumber is 2π j_h / L, the vertical one 2π j3 (vertical period 1).

use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// FFT plans for one axis length, built once per grid.
struct AxisPlan<T: Scalar> {
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

pub struct SpectralGrid<T: Scalar> {
    l: T,
    nx: usize,
    ny: usize,
    nz: usize,
    /// Integer wavevector component per storage index, one table per axis.
    jx: Vec<i64>,
    jy: Vec<i64>,
    jz: Vec<i64>,
    /// Wavenumber per storage index: 2π j / L horizontally, 2π j vertically.
    kx: Vec<T>,
    ky: Vec<T>,
    kz: Vec<T>,
    /// Largest retained |j| per axis under the 2/3-rule mask (3K < N, so
    /// quadratic products of retained modes are exactly alias-free).
    kept_x: i64,
    kept_y: i64,
    kept_z: i64,
    plan_x: AxisPlan<T>,
    plan_y: AxisPlan<T>,
    plan_z: AxisPlan<T>,
}

impl<T: Scalar> SpectralGrid<T> {
    pub fn new(l: T, nx: usize, ny: usize, nz: usize) -> Result<Arc<Self>> {
        if !(l > T::zero()) || !l.is_finite() {
            return Err(Error::InvalidParams(format!(
                "period length L must be positive and finite, got {l}"
            )));
        }
        for (name, n) in [("Nx", nx), ("Ny", ny), ("Nz", nz)] {
            if n < 4 || n % 2 != 0 {
                return Err(Error::InvalidParams(format!(
                    "{name} must be even and >= 4, got {n}"
                )));
            }
        }

        let mut planner = FftPlanner::new();
        let mut plan = |n: usize| AxisPlan {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        };
        let plan_x = plan(nx);
        let plan_y = plan(ny);
        let plan_z = plan(nz);

        let j_table = |n: usize| -> Vec<i64> {
            (0..n)
                .map(|i| {
                    if i < n / 2 {
                        i as i64
                    } else {
                        i as i64 - n as i64
                    }
                })
                .collect()
        };
        let jx = j_table(nx);
        let jy = j_table(ny);
        let jz = j_table(nz);
        let two_pi = T::two_pi();
        let kx = jx.iter().map(|&j| two_pi * T::lit(j as f64) / l).collect();
        let ky = jy.iter().map(|&j| two_pi * T::lit(j as f64) / l).collect();
        let kz = jz.iter().map(|&j| two_pi * T::lit(j as f64)).collect();

        Ok(Arc::new(Self {
            l,
            nx,
            ny,
            nz,
            jx,
            jy,
            jz,
            kx,
            ky,
            kz,
            kept_x: ((nx - 1) / 3) as i64,
            kept_y: ((ny - 1) / 3) as i64,
            kept_z: ((nz - 1) / 3) as i64,
            plan_x,
            plan_y,
            plan_z,
        }))
    }

    pub fn l(&self) -> T {
        self.l
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    /// Number of modes (= number of collocation points).
    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Storage index of (ix, iy, iz); iz is the fastest axis.
    #[inline]
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.ny + iy) * self.nz + iz
    }

    /// Storage index of the mode with integer wavevector j, if resolved.
    pub fn index_of_wavevector(&self, j: [i64; 3]) -> Option<usize> {
        let wrap = |j: i64, n: usize| -> Option<usize> {
            let n = n as i64;
            if j < -n / 2 || j >= n / 2 {
                None
            } else {
                Some(((j + n) % n) as usize)
            }
        };
        let ix = wrap(j[0], self.nx)?;
        let iy = wrap(j[1], self.ny)?;
        let iz = wrap(j[2], self.nz)?;
        Some(self.index(ix, iy, iz))
    }

    #[inline]
    pub fn jx(&self, ix: usize) -> i64 {
        self.jx[ix]
    }

    #[inline]
    pub fn jy(&self, iy: usize) -> i64 {
        self.jy[iy]
    }

    #[inline]
    pub fn jz(&self, iz: usize) -> i64 {
        self.jz[iz]
    }

    #[inline]
    pub fn kx(&self, ix: usize) -> T {
        self.kx[ix]
    }

    #[inline]
    pub fn ky(&self, iy: usize) -> T {
        self.ky[iy]
    }

    #[inline]
    pub fn kz(&self, iz: usize) -> T {
        self.kz[iz]
    }

    /// |k_h|² at (ix, iy).
    #[inline]
    pub fn kh_sq(&self, ix: usize, iy: usize) -> T {
        self.kx[ix] * self.kx[ix] + self.ky[iy] * self.ky[iy]
    }

    /// True on the k_h = 0 line (j1 = j2 = 0).
    #[inline]
    pub fn is_mean_line(&self, ix: usize, iy: usize) -> bool {
        ix == 0 && iy == 0
    }

    /// Largest |j| retained per axis by the dealias mask.
    pub fn dealias_bounds(&self) -> (i64, i64, i64) {
        (self.kept_x, self.kept_y, self.kept_z)
    }

    /// Whether the mode at (ix, iy, iz) survives the 2/3-rule mask.
    #[inline]
    pub fn in_dealias_band(&self, ix: usize, iy: usize, iz: usize) -> bool {
        self.jx[ix].abs() <= self.kept_x
            && self.jy[iy].abs() <= self.kept_y
            && self.jz[iz].abs() <= self.kept_z
    }

    /// Quadrature weight of one collocation cell: L²/(Nx Ny Nz).
    pub fn cell_volume(&self) -> T {
        self.l * self.l / T::lit(self.len() as f64)
    }

    /// Volume of the box: L² (vertical extent is 1).
    pub fn volume(&self) -> T {
        self.l * self.l
    }

    /// Grids are interchangeable iff their layout parameters agree.
    pub fn same_layout(&self, other: &Self) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.nz == other.nz && self.l == other.l
    }

    pub fn check_same_layout(&self, other: &Self, what: &str) -> Result<()> {
        if self.same_layout(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{what}: {}x{}x{} (L={}) vs {}x{}x{} (L={})",
                self.nx, self.ny, self.nz, self.l, other.nx, other.ny, other.nz, other.l
            )))
        }
    }

    pub(crate) fn plan_x(&self) -> (&Arc<dyn Fft<T>>, &Arc<dyn Fft<T>>) {
        (&self.plan_x.forward, &self.plan_x.inverse)
    }

    pub(crate) fn plan_y(&self) -> (&Arc<dyn Fft<T>>, &Arc<dyn Fft<T>>) {
        (&self.plan_y.forward, &self.plan_y.inverse)
    }

    pub(crate) fn plan_z(&self) -> (&Arc<dyn Fft<T>>, &Arc<dyn Fft<T>>) {
        (&self.plan_z.forward, &self.plan_z.inverse)
    }
}

impl<T: Scalar> fmt::Debug for SpectralGrid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralGrid")
            .field("l", &self.l)
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .field("nz", &self.nz)
            .finish()
    }
}

impl<T: Scalar> PartialEq for SpectralGrid<T> {
    fn eq(&self, other: &Self) -> bool {
        self.same_layout(other)
    }
}
