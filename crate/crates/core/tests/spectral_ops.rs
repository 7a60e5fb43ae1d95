//! Spectral-core operator tests: transform pairs, operator eigenfunctions,
//! the dealiased product against a fine-grid oracle, and the realness,
//! linearity, Parseval, commutation and Poincaré properties.

use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;
use rotconv::field::SpectralField;
use rotconv::grid::SpectralGrid;
use rotconv::random::{random_field, RandomFieldSpec};
use rotconv::{ops, quad, Error};

type Grid = Arc<SpectralGrid<f64>>;
type Field = SpectralField<f64>;

fn grid(l: f64, nx: usize, ny: usize, nz: usize) -> Grid {
    SpectralGrid::new(l, nx, ny, nz).unwrap()
}

fn sample_on_grid(g: &Grid, f: impl Fn(f64, f64, f64) -> f64) -> Vec<f64> {
    let (nx, ny, nz) = (g.nx(), g.ny(), g.nz());
    let l = g.l();
    let mut vals = vec![0.0; g.len()];
    for ix in 0..nx {
        let x = l * ix as f64 / nx as f64;
        for iy in 0..ny {
            let y = l * iy as f64 / ny as f64;
            for iz in 0..nz {
                let z = iz as f64 / nz as f64;
                vals[g.index(ix, iy, iz)] = f(x, y, z);
            }
        }
    }
    vals
}

fn max_coeff_diff(a: &Field, b: &Field) -> f64 {
    a.coeffs()
        .iter()
        .zip(b.coeffs())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn rand_field(g: &Grid, seed: u64, max_mode: i64, zero_mean: bool) -> Field {
    random_field(g, &RandomFieldSpec::new(seed, max_mode, -2.0, zero_mean)).unwrap()
}

// ---------------------------------------------------------------- transforms

#[test]
fn constant_field_has_only_zero_mode() {
    let g = grid(2.0, 8, 8, 8);
    let f = SpectralField::from_values(&g, &vec![1.0; g.len()]).unwrap();
    for (i, c) in f.coeffs().iter().enumerate() {
        if i == 0 {
            assert!((c.re - 1.0).abs() < 1e-14 && c.im.abs() < 1e-14);
        } else {
            assert!(c.norm() < 1e-14, "spurious coefficient {c} at {i}");
        }
    }
}

#[test]
fn cosine_sample_analyzes_to_half_amplitude_pair() {
    let l = 3.0;
    let g = grid(l, 16, 8, 8);
    let vals = sample_on_grid(&g, |x, _, _| (2.0 * PI * x / l).cos());
    let f = SpectralField::from_values(&g, &vals).unwrap();
    let plus = f.coeff_at([1, 0, 0]).unwrap();
    let minus = f.coeff_at([-1, 0, 0]).unwrap();
    assert!((plus.re - 0.5).abs() < 1e-14 && plus.im.abs() < 1e-14);
    assert!((minus.re - 0.5).abs() < 1e-14 && minus.im.abs() < 1e-14);
    let expected = SpectralField::cosine_mode(&g, [1, 0, 0], 1.0).unwrap();
    assert!(max_coeff_diff(&f, &expected) < 1e-14);
}

#[test]
fn round_trip_reproduces_random_samples() {
    let g = grid(1.7, 16, 12, 8);
    let f = rand_field(&g, 11, 3, false);
    let vals = f.values();
    let back = SpectralField::from_values(&g, &vals).unwrap();
    let scale = f.max_abs_coeff();
    assert!(max_coeff_diff(&f, &back) < 1e-13 * scale);

    // and values -> coefficients -> values
    let vals2 = back.values();
    let vmax = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let dmax = vals
        .iter()
        .zip(&vals2)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(dmax < 1e-13 * vmax);
}

#[test]
fn dimension_mismatch_is_an_error() {
    let g = grid(1.0, 8, 8, 8);
    let err = SpectralField::from_values(&g, &vec![0.0; 17]).unwrap_err();
    assert!(matches!(
        err,
        Error::DimensionMismatch {
            expected: 512,
            got: 17
        }
    ));
}

// ---------------------------------------------------------------- laplacian

#[test]
fn laplacian_eigenfunction_cosine() {
    let l = 2.5;
    let g = grid(l, 16, 8, 8);
    let f = SpectralField::cosine_mode(&g, [1, 0, 0], 1.0).unwrap();
    let lap = ops::horizontal_laplacian(&f);
    let expected = f.scaled(-4.0 * PI * PI / (l * l));
    assert!(max_coeff_diff(&lap, &expected) < 1e-14);
}

#[test]
fn laplacian_kills_constants_and_vertical_modes() {
    let g = grid(1.0, 8, 8, 8);
    let one = SpectralField::constant(&g, 1.0);
    assert!(ops::horizontal_laplacian(&one).max_abs_coeff() < 1e-15);
    let vertical = SpectralField::sine_mode(&g, [0, 0, 1], 1.0).unwrap();
    assert!(ops::horizontal_laplacian(&vertical).max_abs_coeff() < 1e-15);
}

// ------------------------------------------------------- vertical derivative

#[test]
fn vertical_derivative_eigenfunction() {
    let g = grid(1.0, 8, 8, 16);
    let f = SpectralField::sine_mode(&g, [0, 0, 1], 1.0).unwrap();
    let dzf = ops::vertical_derivative(&f);
    let expected = SpectralField::cosine_mode(&g, [0, 0, 1], 2.0 * PI).unwrap();
    assert!(max_coeff_diff(&dzf, &expected) < 1e-13);

    let horizontal = SpectralField::cosine_mode(&g, [1, 0, 0], 1.0).unwrap();
    assert!(ops::vertical_derivative(&horizontal).max_abs_coeff() < 1e-15);
}

/// 4th-order centered finite differences along z of the field's samples must
/// approach the spectral derivative at O(h⁴); halving h checks the order.
#[test]
fn vertical_derivative_matches_fd4_at_fourth_order() {
    let l = 1.3;
    let coarse = grid(l, 8, 8, 8);
    let f = rand_field(&coarse, 5, 3, false);

    let fd4_error = |nz: usize| -> f64 {
        let fine = grid(l, 8, 8, nz);
        let refined = ops::refine_to(&f, &fine).unwrap();
        let vals = refined.values();
        let exact = ops::vertical_derivative(&refined).values();
        let h = 1.0 / nz as f64;
        let mut worst = 0.0f64;
        for ix in 0..fine.nx() {
            for iy in 0..fine.ny() {
                for iz in 0..nz {
                    let at = |k: i64| {
                        let idx = ((iz as i64 + k).rem_euclid(nz as i64)) as usize;
                        vals[fine.index(ix, iy, idx)]
                    };
                    let fd = (at(-2) - 8.0 * at(-1) + 8.0 * at(1) - at(2)) / (12.0 * h);
                    worst = worst.max((fd - exact[fine.index(ix, iy, iz)]).abs());
                }
            }
        }
        worst
    };

    let e1 = fd4_error(32);
    let e2 = fd4_error(64);
    let order = (e1 / e2).log2();
    assert!(
        (3.5..=4.5).contains(&order),
        "observed convergence order {order}, errors {e1:.3e} -> {e2:.3e}"
    );
}

// ------------------------------------------------------------- inverse Δ_h

#[test]
fn inversion_of_single_mode() {
    let l = 2.0;
    let g = grid(l, 16, 8, 8);
    let omega = SpectralField::cosine_mode(&g, [1, 0, 0], 1.0).unwrap();
    let phi = ops::invert_horizontal_laplacian(&omega).unwrap();
    let expected = omega.scaled(l * l / (4.0 * PI * PI));
    assert!(max_coeff_diff(&phi, &expected) < 1e-14);
}

#[test]
fn inversion_of_zero_is_zero() {
    let g = grid(1.0, 8, 8, 8);
    let phi = ops::invert_horizontal_laplacian(&SpectralField::zeros(&g)).unwrap();
    assert_eq!(phi.max_abs_coeff(), 0.0);
}

#[test]
fn inversion_round_trip_on_random_zero_mean_field() {
    let g = grid(1.4, 16, 16, 12);
    let omega = rand_field(&g, 23, 4, true);
    let phi = ops::invert_horizontal_laplacian(&omega).unwrap();
    assert_eq!(phi.mean_line_max_abs(), 0.0);
    let back = ops::horizontal_laplacian(&phi).scaled(-1.0);
    assert!(max_coeff_diff(&back, &omega) < 1e-12 * omega.max_abs_coeff());
}

#[test]
fn inversion_rejects_nonzero_mean_and_names_modes() {
    let g = grid(1.0, 8, 8, 8);
    let mut f = rand_field(&g, 3, 2, true);
    let bad = SpectralField::cosine_mode(&g, [0, 0, 2], 0.5).unwrap();
    f.axpy_mut(1.0, &bad).unwrap();
    let err = ops::invert_horizontal_laplacian(&f).unwrap_err();
    match err {
        Error::NonzeroHorizontalMean(msg) => {
            assert!(
                msg.contains("(0,0,2)") || msg.contains("(0,0,-2)"),
                "message: {msg}"
            );
        }
        other => panic!("expected NonzeroHorizontalMean, got {other:?}"),
    }
}

// ------------------------------------------------------------ horizontal mean

#[test]
fn horizontal_mean_of_vertical_mode_is_its_profile() {
    let g = grid(1.0, 8, 8, 16);
    let f = SpectralField::sine_mode(&g, [0, 0, 1], 1.0).unwrap();
    let profile = ops::horizontal_mean(&f);
    for (iz, v) in profile.values().iter().enumerate() {
        let z = iz as f64 / 16.0;
        assert!((v - (2.0 * PI * z).sin()).abs() < 1e-13);
    }
}

#[test]
fn horizontal_mean_of_horizontal_mode_vanishes() {
    let g = grid(1.0, 8, 8, 8);
    let f = SpectralField::cosine_mode(&g, [1, 0, 0], 1.0).unwrap();
    assert!(ops::horizontal_mean(&f).max_abs() < 1e-15);
}

#[test]
fn horizontal_mean_of_squared_cosine_is_half() {
    let l = 1.0;
    let g = grid(l, 8, 8, 8);
    let vals = sample_on_grid(&g, |x, _, _| (2.0 * PI * x / l).cos().powi(2));
    let f = SpectralField::from_values(&g, &vals).unwrap();
    for v in ops::horizontal_mean(&f).values() {
        assert!((v - 0.5).abs() < 1e-14);
    }
}

// -------------------------------------------------------- dealiased product

#[test]
fn product_of_cosines_gives_half_angle_identity() {
    let l = 1.0;
    let g = grid(l, 8, 8, 8);
    let f = SpectralField::cosine_mode(&g, [1, 0, 0], 1.0).unwrap();
    let p = ops::multiply_dealiased(&f, &f).unwrap();
    let mut expected = SpectralField::cosine_mode(&g, [2, 0, 0], 0.5).unwrap();
    expected
        .axpy_mut(1.0, &SpectralField::constant(&g, 0.5))
        .unwrap();
    assert!(max_coeff_diff(&p, &expected) < 1e-14);
}

#[test]
fn product_with_one_is_dealias_truncation() {
    let g = grid(1.0, 12, 12, 12);
    let one = SpectralField::constant(&g, 1.0);

    // band-limited input: identity
    let f = rand_field(&g, 9, 3, false);
    let p = ops::multiply_dealiased(&f, &one).unwrap();
    assert!(max_coeff_diff(&p, &f) < 1e-14 * f.max_abs_coeff());

    // out-of-band content gets truncated
    let wide = SpectralField::cosine_mode(&g, [5, 0, 0], 1.0).unwrap();
    let t = ops::multiply_dealiased(&wide, &one).unwrap();
    assert!(t.max_abs_coeff() < 1e-14);
}

/// Oracle: analyze the product on a doubled grid (alias-free there) and
/// truncate to the retained band.
#[test]
fn product_matches_fine_grid_oracle() {
    let l = 1.9;
    let g = grid(l, 16, 16, 8);
    let fine = grid(l, 32, 32, 16);
    let (kx, _, kz) = g.dealias_bounds();
    assert_eq!((kx, kz), (5, 2));
    let f = rand_field(&g, 31, 2, false);
    let h = rand_field(&g, 37, 2, false);

    let got = ops::multiply_dealiased(&f, &h).unwrap();

    let ff = ops::refine_to(&f, &fine).unwrap().values();
    let hf = ops::refine_to(&h, &fine).unwrap().values();
    let prod: Vec<f64> = ff.iter().zip(&hf).map(|(a, b)| a * b).collect();
    let fine_field = SpectralField::from_values(&fine, &prod).unwrap();
    let mut oracle = ops::restrict_to(&fine_field, &g).unwrap();
    oracle.apply_dealias_mask_mut();

    assert!(max_coeff_diff(&got, &oracle) < 1e-12 * got.max_abs_coeff().max(1e-30));
}

#[test]
fn product_rejects_mismatched_grids() {
    let a = grid(1.0, 8, 8, 8);
    let b = grid(1.0, 16, 8, 8);
    let f = SpectralField::constant(&a, 1.0);
    let h = SpectralField::constant(&b, 1.0);
    assert!(matches!(
        ops::multiply_dealiased(&f, &h),
        Err(Error::GridMismatch(_))
    ));
}

// ------------------------------------------------------------------ properties

#[test]
fn operator_outputs_stay_hermitian() {
    let g = grid(1.1, 12, 12, 8);
    let f = rand_field(&g, 41, 3, false);
    let h = rand_field(&g, 43, 3, true);
    let outputs = vec![
        ops::dx(&f),
        ops::dy(&f),
        ops::vertical_derivative(&f),
        ops::horizontal_laplacian(&f),
        ops::invert_horizontal_laplacian(&h).unwrap(),
        ops::multiply_dealiased(&f, &h).unwrap(),
    ];
    for out in outputs {
        let scale = out.max_abs_coeff().max(f.max_abs_coeff());
        assert!(out.hermitian_residual() <= 1e-14 * scale);
    }
}

#[test]
fn linear_operators_are_linear() {
    let g = grid(1.6, 12, 12, 8);
    let f = rand_field(&g, 51, 3, true);
    let h = rand_field(&g, 53, 3, true);
    let (alpha, beta) = (0.7312, -1.4189);
    let mut combo = f.scaled(alpha);
    combo.axpy_mut(beta, &h).unwrap();

    let check = |op: &dyn Fn(&Field) -> Field| {
        let lhs = op(&combo);
        let mut rhs = op(&f).scaled(alpha);
        rhs.axpy_mut(beta, &op(&h)).unwrap();
        let scale = lhs.max_abs_coeff().max(1e-30);
        assert!(max_coeff_diff(&lhs, &rhs) < 1e-13 * scale);
    };
    check(&|x| ops::horizontal_laplacian(x));
    check(&|x| ops::vertical_derivative(x));
    check(&|x| ops::invert_horizontal_laplacian(x).unwrap());

    // horizontal_mean is linear too
    let lhs = ops::horizontal_mean(&combo);
    let a = ops::horizontal_mean(&f);
    let b = ops::horizontal_mean(&h);
    for i in 0..lhs.len() {
        let rhs = alpha * a.values()[i] + beta * b.values()[i];
        assert!((lhs.values()[i] - rhs).abs() < 1e-13);
    }
}

#[test]
fn parseval_matches_grid_quadrature() {
    let g = grid(2.2, 16, 12, 8);
    for seed in [1u64, 2, 3] {
        let f = rand_field(&g, seed, 3, false);
        let a = quad::parseval_norm_sq(&f);
        let b = quad::l2_norm_sq(&f);
        assert!((a - b).abs() < 1e-12 * b.max(1e-30));
    }
}

#[test]
fn vertical_derivative_commutes_with_laplacian() {
    let g = grid(1.0, 12, 12, 12);
    let f = rand_field(&g, 61, 3, false);
    let a = ops::vertical_derivative(&ops::horizontal_laplacian(&f));
    let b = ops::horizontal_laplacian(&ops::vertical_derivative(&f));
    assert!(max_coeff_diff(&a, &b) < 1e-13 * a.max_abs_coeff().max(1e-30));
}

#[test]
fn poincare_inequality_with_sharp_constant() {
    let l = 1.8;
    let g = grid(l, 8, 8, 8);
    let gamma = l * l / (4.0 * PI * PI);
    for seed in 0..1000u64 {
        let f = rand_field(&g, seed, 3, true);
        let n2 = quad::l2_norm_sq(&f);
        let g2 = quad::grad_h_norm_sq(&f);
        assert!(
            n2 <= gamma * g2 * (1.0 + 1e-12),
            "seed {seed}: {n2} > γ·{g2}"
        );
    }
    // equality is attained by the gravest horizontal mode
    let m = SpectralField::cosine_mode(&g, [1, 0, 0], 1.0).unwrap();
    let n2 = quad::l2_norm_sq(&m);
    let g2 = quad::grad_h_norm_sq(&m);
    assert!((n2 - gamma * g2).abs() <= 1e-10 * n2);
}

// ------------------------------------------------------------ random fields

#[test]
fn random_fields_are_reproducible_per_spec() {
    let g = grid(1.0, 12, 12, 8);
    let spec = RandomFieldSpec::new(77, 3, -2.0, true);
    let a = random_field::<f64>(&g, &spec).unwrap();
    let b = random_field::<f64>(&g, &spec).unwrap();
    assert_eq!(a.coeffs(), b.coeffs());
    let c = random_field::<f64>(&g, &spec.stream(1)).unwrap();
    assert!(max_coeff_diff(&a, &c) > 0.0);
    assert_eq!(a.mean_line_max_abs(), 0.0);
}

// ------------------------------------------------------------- f32 instance

#[test]
fn f32_round_trip_and_eigenvalue() {
    let g = SpectralGrid::<f32>::new(1.0, 8, 8, 8).unwrap();
    let f = random_field(&g, &RandomFieldSpec::new(3, 2, -2.0, false)).unwrap();
    let back = SpectralField::from_values(&g, &f.values()).unwrap();
    let scale = f.max_abs_coeff();
    let diff = f
        .coeffs()
        .iter()
        .zip(back.coeffs())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0f32, f32::max);
    assert!(diff < 1e-5 * scale);

    let c = SpectralField::cosine_mode(&g, [1, 0, 0], 1.0).unwrap();
    let lap = ops::horizontal_laplacian(&c);
    let expected = c.scaled(-4.0 * std::f32::consts::PI * std::f32::consts::PI);
    let d = lap
        .coeffs()
        .iter()
        .zip(expected.coeffs())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0f32, f32::max);
    assert!(d < 1e-5);
}

// ---------------------------------------------------------------- proptest

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn round_trip_and_parseval_hold_for_seeded_fields(seed in 0u64..1u64 << 32, max_mode in 1i64..4) {
        let g = grid(1.0, 12, 12, 8);
        let f = rand_field(&g, seed, max_mode, false);
        let back = SpectralField::from_values(&g, &f.values()).unwrap();
        let scale = f.max_abs_coeff().max(1e-30);
        prop_assert!(max_coeff_diff(&f, &back) < 1e-13 * scale);
        let a = quad::parseval_norm_sq(&f);
        let b = quad::l2_norm_sq(&f);
        prop_assert!((a - b).abs() <= 1e-12 * b.max(1e-30));
    }
}
