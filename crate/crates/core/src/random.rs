//! Seeded band-limited random fields with a prescribed spectrum slope.
//!
//! All draws happen in f64 and convert afterwards, so a spec produces the
//! same field (up to rounding) for every scalar type, and the same bits for
//! a fixed type regardless of how many samples were drawn before it: stream
//! splitting goes through `ChaCha12Rng::set_stream`.

use std::sync::Arc;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::SpectralGrid;
use crate::ops;
use crate::scalar::Scalar;

/// Reproducible description of one random field draw.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct RandomFieldSpec {
    pub seed: u64,
    /// Modes with Euclidean |j| <= max_mode are active.
    pub max_mode: i64,
    /// Amplitude of mode j scales like (1 + |j|²)^(slope/2).
    pub slope: f64,
    /// Zero the k_h = 0 line (field has zero horizontal mean at every z).
    pub zero_horizontal_mean: bool,
}

impl RandomFieldSpec {
    pub fn new(seed: u64, max_mode: i64, slope: f64, zero_horizontal_mean: bool) -> Self {
        Self {
            seed,
            max_mode,
            slope,
            zero_horizontal_mean,
        }
    }

    /// Same spec, different stream; used to derive per-sample generators.
    pub fn stream(mut self, index: u64) -> Self {
        self.seed = self
            .seed
            .wrapping_add(index.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        self
    }
}

fn check_band<T: Scalar>(grid: &SpectralGrid<T>, max_mode: i64) -> Result<()> {
    let limit = (grid.nx().min(grid.ny()).min(grid.nz()) / 2) as i64 - 1;
    if max_mode < 1 || max_mode > limit {
        return Err(Error::InvalidInput(format!(
            "max_mode must be in [1, {limit}] for this grid, got {max_mode}"
        )));
    }
    Ok(())
}

/// Draw a random real band-limited field.
pub fn random_field<T: Scalar>(
    grid: &Arc<SpectralGrid<T>>,
    spec: &RandomFieldSpec,
) -> Result<SpectralField<T>> {
    check_band(grid.as_ref(), spec.max_mode)?;
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let mut field = SpectralField::zeros(grid);
    let m = spec.max_mode;
    for jx in -m..=m {
        for jy in -m..=m {
            for jz in -m..=m {
                let j_sq = jx * jx + jy * jy + jz * jz;
                if j_sq == 0 || j_sq > m * m {
                    continue;
                }
                // visit each ± pair once, at its lexicographically positive member
                if !(jx > 0 || (jx == 0 && (jy > 0 || (jy == 0 && jz > 0)))) {
                    continue;
                }
                if spec.zero_horizontal_mean && jx == 0 && jy == 0 {
                    continue;
                }
                let phase: f64 = rng.random::<f64>() * std::f64::consts::TAU;
                let mag: f64 = 0.5 + rng.random::<f64>();
                let amp = mag * (1.0 + j_sq as f64).powf(spec.slope / 2.0);
                let c = Complex::new(T::lit(amp * phase.cos()), T::lit(amp * phase.sin()));
                let pos = grid.index_of_wavevector([jx, jy, jz]).unwrap();
                let neg = grid.index_of_wavevector([-jx, -jy, -jz]).unwrap();
                field.coeffs_mut()[pos] = c;
                field.coeffs_mut()[neg] = c.conj();
            }
        }
    }
    Ok(field)
}

/// Draw a random zero-mean stream function (a scalar; velocities derive from
/// it exactly divergence-free).
pub fn random_stream_function<T: Scalar>(
    grid: &Arc<SpectralGrid<T>>,
    spec: &RandomFieldSpec,
) -> Result<SpectralField<T>> {
    let mut s = *spec;
    s.zero_horizontal_mean = true;
    random_field(grid, &s)
}

/// Random divergence-free horizontal velocity (u, v) = (ψ_y, -ψ_x).
pub fn random_velocity<T: Scalar>(
    grid: &Arc<SpectralGrid<T>>,
    spec: &RandomFieldSpec,
) -> Result<(SpectralField<T>, SpectralField<T>)> {
    let psi = random_stream_function(grid, spec)?;
    Ok((ops::dy(&psi), ops::dx(&psi).scaled(-T::one())))
}

/// Rescale a field so its L² norm equals `target` (no-op on a zero field).
pub fn normalized_to<T: Scalar>(field: &SpectralField<T>, target: T) -> SpectralField<T> {
    let norm = crate::quad::l2_norm(field);
    if norm == T::zero() {
        field.clone()
    } else {
        field.scaled(target / norm)
    }
}
