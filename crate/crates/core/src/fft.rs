//! 3D complex FFT passes over the mode grid, one axis at a time.
//!
//! Forward normalizes by 1/(Nx Ny Nz) so that coefficients are mode
//! amplitudes: f(x) = Σ_j c_j exp(i k_j · x) on the collocation grid.

use num_complex::Complex;

use crate::grid::SpectralGrid;
use crate::scalar::Scalar;

#[derive(Clone, Copy)]
pub(crate) enum Direction {
    Forward,
    Inverse,
}

/// Run the 1D plan along every line of the given axis, in place.
fn pass_axis<T: Scalar>(
    grid: &SpectralGrid<T>,
    data: &mut [Complex<T>],
    axis: usize,
    dir: Direction,
) {
    let (nx, ny, nz) = (grid.nx(), grid.ny(), grid.nz());
    let plan = match (axis, dir) {
        (0, Direction::Forward) => grid.plan_x().0,
        (0, Direction::Inverse) => grid.plan_x().1,
        (1, Direction::Forward) => grid.plan_y().0,
        (1, Direction::Inverse) => grid.plan_y().1,
        (2, Direction::Forward) => grid.plan_z().0,
        (2, Direction::Inverse) => grid.plan_z().1,
        _ => unreachable!(),
    }
    .clone();
    let mut scratch = vec![Complex::new(T::zero(), T::zero()); plan.get_inplace_scratch_len()];

    match axis {
        // z lines are contiguous
        2 => {
            for chunk in data.chunks_exact_mut(nz) {
                plan.process_with_scratch(chunk, &mut scratch);
            }
        }
        // y lines have stride nz
        1 => {
            let mut line = vec![Complex::new(T::zero(), T::zero()); ny];
            for ix in 0..nx {
                for iz in 0..nz {
                    let base = ix * ny * nz + iz;
                    for iy in 0..ny {
                        line[iy] = data[base + iy * nz];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for iy in 0..ny {
                        data[base + iy * nz] = line[iy];
                    }
                }
            }
        }
        // x lines have stride ny*nz
        0 => {
            let stride = ny * nz;
            let mut line = vec![Complex::new(T::zero(), T::zero()); nx];
            for rem in 0..stride {
                for ix in 0..nx {
                    line[ix] = data[rem + ix * stride];
                }
                plan.process_with_scratch(&mut line, &mut scratch);
                for ix in 0..nx {
                    data[rem + ix * stride] = line[ix];
                }
            }
        }
        _ => unreachable!(),
    }
}

fn pass_all<T: Scalar>(grid: &SpectralGrid<T>, data: &mut [Complex<T>], dir: Direction) {
    pass_axis(grid, data, 2, dir);
    pass_axis(grid, data, 1, dir);
    pass_axis(grid, data, 0, dir);
}

/// Grid samples -> normalized mode amplitudes.
pub(crate) fn forward<T: Scalar>(grid: &SpectralGrid<T>, values: &[T]) -> Vec<Complex<T>> {
    let mut data: Vec<Complex<T>> = values.iter().map(|&v| Complex::new(v, T::zero())).collect();
    pass_all(grid, &mut data, Direction::Forward);
    let scale = T::one() / T::lit(grid.len() as f64);
    for c in &mut data {
        *c = *c * scale;
    }
    data
}

/// Mode amplitudes -> grid samples (real parts of the synthesis).
pub(crate) fn inverse<T: Scalar>(grid: &SpectralGrid<T>, coeffs: &[Complex<T>]) -> Vec<T> {
    let mut data = coeffs.to_vec();
    pass_all(grid, &mut data, Direction::Inverse);
    data.into_iter().map(|c| c.re).collect()
}

/// 1D synthesis along z of a single coefficient line (used for z-profiles).
pub(crate) fn inverse_z_line<T: Scalar>(grid: &SpectralGrid<T>, line: &[Complex<T>]) -> Vec<T> {
    let plan = grid.plan_z().1.clone();
    let mut data = line.to_vec();
    let mut scratch = vec![Complex::new(T::zero(), T::zero()); plan.get_inplace_scratch_len()];
    plan.process_with_scratch(&mut data, &mut scratch);
    data.into_iter().map(|c| c.re).collect()
}
