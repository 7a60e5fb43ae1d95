//! Property-based numerical checks of the anisotropic Ladyzhenskaya
//! inequality, the Agmon-derived trace inequality, two Gronwall-type lemmas,
//! and the integration-by-parts identities of the model's nonlinearities.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::SpectralGrid;
use crate::ops;
use crate::quad;
use crate::random::{random_field, random_stream_function, RandomFieldSpec};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LemmaId {
    Ladyzhenskaya,
    Agmon,
    GronwallOde,
    UniformGronwall,
}

/// One evaluation of an inequality's two sides.
#[derive(Clone, Copy, Debug, Serialize)]
#[serde(bound = "")]
pub struct InequalitySample<T: Scalar> {
    pub lemma: LemmaId,
    pub lhs: T,
    /// Right-hand side with the unknown constant C stripped.
    pub rhs_sans_c: T,
    pub ratio: T,
}

fn make_sample<T: Scalar>(lemma: LemmaId, lhs: T, rhs: T) -> InequalitySample<T> {
    let ratio = if rhs == T::zero() {
        T::zero()
    } else {
        lhs / rhs
    };
    InequalitySample {
        lemma,
        lhs,
        rhs_sans_c: rhs,
        ratio,
    }
}

/// ∫|fgh| by quadrature on a 2x-refined grid (the triple product of
/// band-limited factors needs the finer grid to stay alias-free).
pub fn triple_abs_integral<T: Scalar>(
    f: &SpectralField<T>,
    g: &SpectralField<T>,
    h: &SpectralField<T>,
    fine: &Arc<SpectralGrid<T>>,
) -> Result<T> {
    let fv = ops::refine_to(f, fine)?.values();
    let gv = ops::refine_to(g, fine)?.values();
    let hv = ops::refine_to(h, fine)?.values();
    let cell = fine.cell_volume();
    let sum: T = (0..fv.len()).map(|i| (fv[i] * gv[i] * hv[i]).abs()).sum();
    Ok(sum * cell)
}

/// Anisotropic Ladyzhenskaya ratio:
/// ∫|fgh| vs (‖f‖+‖∇_h f‖)^½ (‖f‖+‖f_z‖)^½ ‖g‖^½ (‖g‖+‖∇_h g‖)^½ ‖h‖.
pub fn ladyzhenskaya_ratio<T: Scalar>(
    f: &SpectralField<T>,
    g: &SpectralField<T>,
    h: &SpectralField<T>,
    fine: &Arc<SpectralGrid<T>>,
) -> Result<InequalitySample<T>> {
    f.grid()
        .check_same_layout(g.grid(), "ladyzhenskaya inputs")?;
    f.grid()
        .check_same_layout(h.grid(), "ladyzhenskaya inputs")?;
    let lhs = triple_abs_integral(f, g, h, fine)?;
    let fn2 = quad::l2_norm(f);
    let gradf = quad::grad_h_norm_sq(f).sqrt();
    let fz = quad::dz_norm_sq(f).sqrt();
    let gn2 = quad::l2_norm(g);
    let gradg = quad::grad_h_norm_sq(g).sqrt();
    let hn2 = quad::l2_norm(h);
    let rhs = ((fn2 + gradf) * (fn2 + fz)).sqrt() * (gn2 * (gn2 + gradg)).sqrt() * hn2;
    Ok(make_sample(LemmaId::Ladyzhenskaya, lhs, rhs))
}

/// Agmon-derived trace ratio:
/// sup_z ∫_{[0,L]²} f² dx dy vs ‖f‖(‖f‖ + ‖f_z‖).
pub fn agmon_ratio<T: Scalar>(f: &SpectralField<T>) -> InequalitySample<T> {
    let grid = f.grid();
    let (nx, ny, nz) = (grid.nx(), grid.ny(), grid.nz());
    let values = f.values();
    let plane_weight = grid.l() * grid.l() / T::lit((nx * ny) as f64);
    let mut lhs = T::zero();
    for iz in 0..nz {
        let mut plane = T::zero();
        for ix in 0..nx {
            for iy in 0..ny {
                let v = values[grid.index(ix, iy, iz)];
                plane += v * v;
            }
        }
        lhs = lhs.max(plane * plane_weight);
    }
    let n2 = quad::l2_norm(f);
    let fz = quad::dz_norm_sq(f).sqrt();
    make_sample(LemmaId::Agmon, lhs, n2 * (n2 + fz))
}

/// Random smooth scalar function of time: a low-degree trigonometric
/// polynomial, drawn once and evaluable anywhere (stage values of the ODE
/// integrator included).
#[derive(Clone, Debug)]
pub struct RandomTimeFunction<T: Scalar> {
    mean: T,
    period: T,
    terms: Vec<(T, i32, T)>,
}

impl<T: Scalar> RandomTimeFunction<T> {
    fn draw(rng: &mut ChaCha12Rng, period: f64, amplitude: f64, degree: i32) -> Self {
        let mean = amplitude * (rng.random::<f64>() - 0.5);
        let terms = (1..=degree)
            .map(|k| {
                (
                    T::lit(amplitude * (rng.random::<f64>() - 0.5) / k as f64),
                    k,
                    T::lit(rng.random::<f64>() * std::f64::consts::TAU),
                )
            })
            .collect();
        Self {
            mean: T::lit(mean),
            period: T::lit(period),
            terms,
        }
    }

    fn eval(&self, t: T) -> T {
        let mut v = self.mean;
        for &(amp, k, phase) in &self.terms {
            v += amp * (T::two_pi() * T::lit(k as f64) * t / self.period + phase).cos();
        }
        v
    }

    /// Squared evaluation: a smooth nonnegative function.
    fn eval_sq(&self, t: T) -> T {
        let v = self.eval(t);
        v * v
    }

    /// Squashed into [0, 1).
    fn eval_unit(&self, t: T) -> T {
        let v = self.eval_sq(t);
        v / (T::one() + v)
    }
}

/// Outcome of one constructed ODE sample: the hypothesis is enforced by
/// construction, so a discard only happens when the construction itself broke
/// down numerically.
#[derive(Clone, Copy, Debug, Serialize)]
#[serde(bound = "")]
pub enum OdeSampleOutcome<T: Scalar> {
    Sample(InequalitySample<T>),
    Discarded,
}

/// Gronwall-type lemma for η η' + h <= f + g η, with η constructed so the
/// hypothesis holds exactly: integrate η η' = f + g η - h - s, slack
/// s(t) = σ(t)·max(f + gη - h, 0) with σ ∈ [0, 1]. Compares η²(t) + 2∫h
/// against η²(0) + ∫f + (∫g)² and records the worst instant.
pub fn gronwall_check<T: Scalar>(
    f: &dyn Fn(T) -> T,
    g: &dyn Fn(T) -> T,
    h: &dyn Fn(T) -> T,
    sigma: &dyn Fn(T) -> T,
    eta0: T,
    n_steps: usize,
    t_end: T,
) -> OdeSampleOutcome<T> {
    // d(η²)/dt = 2(f + gη - h - s)
    let deriv = |t: T, zeta: T| -> T {
        let eta = zeta.max(T::zero()).sqrt();
        let raw = f(t) + g(t) * eta - h(t);
        let slack = sigma(t) * raw.max(T::zero());
        T::two() * (raw - slack)
    };

    let dt = t_end / T::lit(n_steps as f64);
    let mut zeta = eta0 * eta0;
    let mut t = T::zero();
    let mut int_f = T::zero();
    let mut int_g = T::zero();
    let mut int_h = T::zero();
    let mut worst: Option<(T, T)> = None;
    for _ in 0..n_steps {
        let k1 = deriv(t, zeta);
        let k2 = deriv(t + dt * T::half(), zeta + k1 * dt * T::half());
        let k3 = deriv(t + dt * T::half(), zeta + k2 * dt * T::half());
        let k4 = deriv(t + dt, zeta + k3 * dt);
        let zeta_next = zeta + dt / T::lit(6.0) * (k1 + T::two() * k2 + T::two() * k3 + k4);
        if zeta_next < T::zero() || !zeta_next.is_finite() {
            return OdeSampleOutcome::Discarded;
        }
        let t_next = t + dt;
        let half_dt = dt * T::half();
        int_f += (f(t) + f(t_next)) * half_dt;
        int_g += (g(t) + g(t_next)) * half_dt;
        int_h += (h(t) + h(t_next)) * half_dt;
        zeta = zeta_next;
        t = t_next;
        let lhs = zeta + T::two() * int_h;
        let rhs = eta0 * eta0 + int_f + int_g * int_g;
        let ratio_here = if rhs > T::zero() {
            lhs / rhs
        } else {
            T::zero()
        };
        let better = match worst {
            Some((l, r)) => {
                let prev = if r > T::zero() { l / r } else { T::zero() };
                ratio_here > prev
            }
            None => true,
        };
        if better {
            worst = Some((lhs, rhs));
        }
    }
    let (lhs, rhs) = worst.unwrap_or((T::zero(), eta0 * eta0));
    OdeSampleOutcome::Sample(make_sample(LemmaId::GronwallOde, lhs, rhs))
}

/// Seeded random instance of the Gronwall-type lemma.
pub fn gronwall_ode_sample<T: Scalar>(
    seed: u64,
    n_steps: usize,
    t_end: f64,
) -> OdeSampleOutcome<T> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let f_fn = RandomTimeFunction::<T>::draw(&mut rng, t_end, 1.2, 3);
    let g_fn = RandomTimeFunction::<T>::draw(&mut rng, t_end, 1.0, 3);
    let h_fn = RandomTimeFunction::<T>::draw(&mut rng, t_end, 0.8, 3);
    let sigma = RandomTimeFunction::<T>::draw(&mut rng, t_end, 1.0, 2);
    let eta0 = T::lit(rng.random::<f64>() * 1.5);
    let f_floor = T::lit(0.01);
    gronwall_check(
        &|t| f_fn.eval_sq(t) + f_floor,
        &|t| g_fn.eval_sq(t),
        &|t| h_fn.eval_sq(t),
        &|t| sigma.eval_unit(t),
        eta0,
        n_steps,
        T::lit(t_end),
    )
}

/// Uniform Gronwall lemma: integrate η' = gη + h - s with slack s = σh
/// (σ ∈ [0, 1], so η stays positive and the hypothesis is exact) and compare
/// η(t+1) against e^{∫g} (∫η + ∫h) over the unit window starting at node
/// `window_start`. The constant-free form must hold outright.
pub fn uniform_gronwall_check<T: Scalar>(
    g: &dyn Fn(T) -> T,
    h: &dyn Fn(T) -> T,
    sigma: &dyn Fn(T) -> T,
    eta0: T,
    steps_per_unit: usize,
    units: usize,
    window_start: usize,
) -> OdeSampleOutcome<T> {
    let deriv = |t: T, eta: T| g(t) * eta + h(t) * (T::one() - sigma(t));
    let n_total = steps_per_unit * units;
    let dt = T::one() / T::lit(steps_per_unit as f64);
    let mut eta = vec![T::zero(); n_total + 1];
    eta[0] = eta0;
    let mut t = T::zero();
    for n in 0..n_total {
        let y = eta[n];
        let k1 = deriv(t, y);
        let k2 = deriv(t + dt * T::half(), y + k1 * dt * T::half());
        let k3 = deriv(t + dt * T::half(), y + k2 * dt * T::half());
        let k4 = deriv(t + dt, y + k3 * dt);
        eta[n + 1] = y + dt / T::lit(6.0) * (k1 + T::two() * k2 + T::two() * k3 + k4);
        if !eta[n + 1].is_finite() {
            return OdeSampleOutcome::Discarded;
        }
        t = t + dt;
    }

    let a = window_start.min(n_total.saturating_sub(steps_per_unit));
    let b = a + steps_per_unit;
    let node_t = |n: usize| T::lit(n as f64) * dt;
    let mut int_g = T::zero();
    let mut int_h = T::zero();
    let mut int_eta = T::zero();
    for n in a..b {
        let (t0, t1) = (node_t(n), node_t(n + 1));
        let half_dt = (t1 - t0) * T::half();
        int_g += (g(t0) + g(t1)) * half_dt;
        int_h += (h(t0) + h(t1)) * half_dt;
        int_eta += (eta[n] + eta[n + 1]) * half_dt;
    }
    let rhs = int_g.exp() * (int_eta + int_h);
    OdeSampleOutcome::Sample(make_sample(LemmaId::UniformGronwall, eta[b], rhs))
}

/// Seeded random instance of the uniform Gronwall lemma.
pub fn uniform_gronwall_sample<T: Scalar>(
    seed: u64,
    steps_per_unit: usize,
    units: usize,
) -> OdeSampleOutcome<T> {
    let t_end = units as f64;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let g_fn = RandomTimeFunction::<T>::draw(&mut rng, t_end, 1.0, 3);
    let h_fn = RandomTimeFunction::<T>::draw(&mut rng, t_end, 1.0, 3);
    let sigma = RandomTimeFunction::<T>::draw(&mut rng, t_end, 1.0, 2);
    let eta0 = T::lit(0.5 + 1.5 * rng.random::<f64>());
    let window_start = rng.random_range(0..=(units - 1).max(0) * steps_per_unit);
    uniform_gronwall_check(
        &|t| g_fn.eval_sq(t),
        &|t| h_fn.eval_sq(t),
        &|t| sigma.eval_unit(t),
        eta0,
        steps_per_unit,
        units,
        window_start,
    )
}

/// Residuals of the integration-by-parts identities, each normalized by the
/// magnitude of its largest constituent.
#[derive(Clone, Copy, Debug, Serialize)]
#[serde(bound = "")]
pub struct IdentityReport<T: Scalar> {
    /// (u·∇_h f, g) + (u·∇_h g, f) = 0.
    pub antisymmetry_rel: T,
    /// (u·∇_h f, f) = 0.
    pub self_advection_rel: T,
    /// (u·∇_h f, φ) + (u·∇_h φ, f) = 0.
    pub stream_antisymmetry_rel: T,
    /// (u·∇_h f, φ) = 0.
    pub stream_zero_rel: T,
    /// (ω, φ) = ‖u‖₂².
    pub energy_identity_rel: T,
}

impl<T: Scalar> IdentityReport<T> {
    pub fn max_rel(&self) -> T {
        self.antisymmetry_rel
            .max(self.self_advection_rel)
            .max(self.stream_antisymmetry_rel)
            .max(self.stream_zero_rel)
            .max(self.energy_identity_rel)
    }
}

fn rel_residual<T: Scalar>(value: T, scale: T) -> T {
    if scale == T::zero() {
        if value == T::zero() {
            T::zero()
        } else {
            T::infinity()
        }
    } else {
        value.abs() / scale
    }
}

/// Check the identities on a velocity generated from the stream function ψ
/// (exactly divergence-free), with scalar fields f and g; cubic integrands are
/// evaluated on the 2x-refined grid.
pub fn identity_suite<T: Scalar>(
    psi: &SpectralField<T>,
    f: &SpectralField<T>,
    g: &SpectralField<T>,
    fine: &Arc<SpectralGrid<T>>,
) -> Result<IdentityReport<T>> {
    psi.grid().check_same_layout(f.grid(), "identity inputs")?;
    psi.grid().check_same_layout(g.grid(), "identity inputs")?;
    let u = ops::dy(psi);
    let v = ops::dx(psi).scaled(-T::one());
    let omega = ops::horizontal_laplacian(psi).scaled(-T::one());

    let uf = ops::refine_to(&u, fine)?.values();
    let vf = ops::refine_to(&v, fine)?.values();
    let cell = fine.cell_volume();
    // (u·∇_h a, b) and ∫|u·∇_h a · b| on the fine grid
    let advection_pairing = |a: &SpectralField<T>, b: &SpectralField<T>| -> Result<(T, T)> {
        let ax = ops::refine_to(&ops::dx(a), fine)?.values();
        let ay = ops::refine_to(&ops::dy(a), fine)?.values();
        let bv = ops::refine_to(b, fine)?.values();
        let mut signed = T::zero();
        let mut absolute = T::zero();
        for i in 0..bv.len() {
            let term = (uf[i] * ax[i] + vf[i] * ay[i]) * bv[i];
            signed += term;
            absolute += term.abs();
        }
        Ok((signed * cell, absolute * cell))
    };

    let (t_fg, s_fg) = advection_pairing(f, g)?;
    let (t_gf, s_gf) = advection_pairing(g, f)?;
    let (t_ff, s_ff) = advection_pairing(f, f)?;
    let (t_fp, s_fp) = advection_pairing(f, psi)?;
    let (t_pf, s_pf) = advection_pairing(psi, f)?;

    let u_l2_sq = quad::l2_norm_sq(&u) + quad::l2_norm_sq(&v);
    let omega_phi = quad::inner(&omega, psi)?;

    Ok(IdentityReport {
        antisymmetry_rel: rel_residual(t_fg + t_gf, s_fg.max(s_gf)),
        self_advection_rel: rel_residual(t_ff, s_ff),
        stream_antisymmetry_rel: rel_residual(t_fp + t_pf, s_fp.max(s_pf)),
        stream_zero_rel: rel_residual(t_fp, s_fp),
        energy_identity_rel: rel_residual(omega_phi - u_l2_sq, u_l2_sq),
    })
}

/// Lab configuration; field sampling happens at (nx, ny, nz) and again at the
/// doubled resolution, the ODE lemmas at `ode_steps` and doubled.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(bound = "")]
#[serde(default, deny_unknown_fields)]
pub struct LabConfig {
    pub seed: u64,
    pub samples_per_lemma: usize,
    pub identity_samples: usize,
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub l: f64,
    pub max_mode: i64,
    pub slope: f64,
    pub ode_steps: usize,
    pub ode_t_end: f64,
}

impl Default for LabConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            samples_per_lemma: 1000,
            identity_samples: 500,
            nx: 12,
            ny: 12,
            nz: 12,
            l: 1.0,
            max_mode: 4,
            slope: -2.0,
            ode_steps: 400,
            ode_t_end: 4.0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(bound = "")]
pub struct LemmaSummary {
    pub lemma: LemmaId,
    pub count: usize,
    pub discarded: usize,
    pub max_ratio: f64,
    pub mean_ratio: f64,
    pub histogram_edges: Vec<f64>,
    pub histogram: Vec<usize>,
    /// Ratios above 1 + 1e-8; meaningful for the constant-free uniform
    /// Gronwall form only.
    pub violations: usize,
}

#[derive(Clone, Debug, Serialize)]
#[serde(bound = "")]
pub struct IdentitySummary {
    pub count: usize,
    pub max_rel_residual: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, Serialize)]
#[serde(bound = "")]
pub struct LabReport {
    pub config: LabConfig,
    pub base: Vec<LemmaSummary>,
    pub doubled: Vec<LemmaSummary>,
    /// max ratio at doubled resolution / max ratio at base, per lemma with a
    /// stability requirement.
    pub doubling_factors: Vec<(LemmaId, f64)>,
    pub identities: IdentitySummary,
    pub hard_failures: Vec<String>,
}

fn summarize(lemma: LemmaId, ratios: &[f64], discarded: usize) -> LemmaSummary {
    let max_ratio = ratios.iter().copied().fold(0.0f64, f64::max);
    let mean_ratio = if ratios.is_empty() {
        0.0
    } else {
        ratios.iter().sum::<f64>() / ratios.len() as f64
    };
    let buckets = 16usize;
    let top = if max_ratio > 0.0 { max_ratio } else { 1.0 };
    let edges: Vec<f64> = (0..=buckets)
        .map(|i| top * i as f64 / buckets as f64)
        .collect();
    let mut histogram = vec![0usize; buckets];
    for &r in ratios {
        let idx = ((r / top * buckets as f64) as usize).min(buckets - 1);
        histogram[idx] += 1;
    }
    let violations = ratios.iter().filter(|&&r| r > 1.0 + 1e-8).count();
    LemmaSummary {
        lemma,
        count: ratios.len(),
        discarded,
        max_ratio,
        mean_ratio,
        histogram_edges: edges,
        histogram,
        violations,
    }
}

fn mix(seed: u64, tag: u64, index: u64) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(tag.wrapping_mul(0xbf58_476d_1ce4_e5b9))
        .wrapping_add(index)
}

fn field_lemma_ratios<T: Scalar>(
    cfg: &LabConfig,
    nx: usize,
    ny: usize,
    nz: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let grid = SpectralGrid::<T>::new(T::lit(cfg.l), nx, ny, nz)?;
    let fine = SpectralGrid::<T>::new(T::lit(cfg.l), 2 * nx, 2 * ny, 2 * nz)?;
    let mut lady = Vec::with_capacity(cfg.samples_per_lemma);
    let mut agmon = Vec::with_capacity(cfg.samples_per_lemma);
    for i in 0..cfg.samples_per_lemma {
        let draw = |tag: u64| {
            RandomFieldSpec::new(mix(cfg.seed, tag, i as u64), cfg.max_mode, cfg.slope, false)
        };
        let f = random_field::<T>(&grid, &draw(1))?;
        let g = random_field::<T>(&grid, &draw(2))?;
        let h = random_field::<T>(&grid, &draw(3))?;
        let s = ladyzhenskaya_ratio(&f, &g, &h, &fine)?;
        lady.push(s.ratio.to_f64().unwrap_or(f64::NAN));
        let s = agmon_ratio(&f);
        agmon.push(s.ratio.to_f64().unwrap_or(f64::NAN));
    }
    Ok((lady, agmon))
}

fn ode_lemma_ratios<T: Scalar>(
    cfg: &LabConfig,
    steps: usize,
) -> (Vec<f64>, usize, Vec<f64>, usize) {
    let mut gron = Vec::with_capacity(cfg.samples_per_lemma);
    let mut gron_discard = 0usize;
    let mut unif = Vec::with_capacity(cfg.samples_per_lemma);
    let mut unif_discard = 0usize;
    let units = cfg.ode_t_end.max(2.0) as usize;
    for i in 0..cfg.samples_per_lemma {
        match gronwall_ode_sample::<T>(mix(cfg.seed, 4, i as u64), steps, cfg.ode_t_end) {
            OdeSampleOutcome::Sample(s) => gron.push(s.ratio.to_f64().unwrap_or(f64::NAN)),
            OdeSampleOutcome::Discarded => gron_discard += 1,
        }
        match uniform_gronwall_sample::<T>(mix(cfg.seed, 5, i as u64), steps, units) {
            OdeSampleOutcome::Sample(s) => unif.push(s.ratio.to_f64().unwrap_or(f64::NAN)),
            OdeSampleOutcome::Discarded => unif_discard += 1,
        }
    }
    (gron, gron_discard, unif, unif_discard)
}

/// Run the full lab: per-lemma sampling at base and doubled resolution or
/// time grid, the identity suite, stability factors, and the hard-failure
/// list (uniform Gronwall violations, identity residuals above tolerance).
pub fn run_lab<T: Scalar>(cfg: &LabConfig) -> Result<LabReport> {
    if cfg.samples_per_lemma == 0 {
        return Err(Error::InvalidInput("samples_per_lemma must be >= 1".into()));
    }
    let identity_tolerance = 1e-11;

    let (lady_base, agmon_base) = field_lemma_ratios::<T>(cfg, cfg.nx, cfg.ny, cfg.nz)?;
    let (lady_fine, agmon_fine) = field_lemma_ratios::<T>(cfg, 2 * cfg.nx, 2 * cfg.ny, 2 * cfg.nz)?;
    let (gron_base, gd_base, unif_base, ud_base) = ode_lemma_ratios::<T>(cfg, cfg.ode_steps);
    let (gron_fine, gd_fine, unif_fine, ud_fine) = ode_lemma_ratios::<T>(cfg, 2 * cfg.ode_steps);

    // identity suite at base resolution
    let grid = SpectralGrid::<T>::new(T::lit(cfg.l), cfg.nx, cfg.ny, cfg.nz)?;
    let fine = SpectralGrid::<T>::new(T::lit(cfg.l), 2 * cfg.nx, 2 * cfg.ny, 2 * cfg.nz)?;
    let mut max_identity = 0.0f64;
    for i in 0..cfg.identity_samples {
        let draw = |tag: u64| {
            RandomFieldSpec::new(mix(cfg.seed, tag, i as u64), cfg.max_mode, cfg.slope, false)
        };
        let psi = random_stream_function::<T>(&grid, &draw(6))?;
        let f = random_field::<T>(&grid, &draw(7))?;
        let g = random_field::<T>(&grid, &draw(8))?;
        let rep = identity_suite(&psi, &f, &g, &fine)?;
        max_identity = max_identity.max(rep.max_rel().to_f64().unwrap_or(f64::NAN));
    }

    let base = vec![
        summarize(LemmaId::Ladyzhenskaya, &lady_base, 0),
        summarize(LemmaId::Agmon, &agmon_base, 0),
        summarize(LemmaId::GronwallOde, &gron_base, gd_base),
        summarize(LemmaId::UniformGronwall, &unif_base, ud_base),
    ];
    let doubled = vec![
        summarize(LemmaId::Ladyzhenskaya, &lady_fine, 0),
        summarize(LemmaId::Agmon, &agmon_fine, 0),
        summarize(LemmaId::GronwallOde, &gron_fine, gd_fine),
        summarize(LemmaId::UniformGronwall, &unif_fine, ud_fine),
    ];
    let factor = |a: &LemmaSummary, b: &LemmaSummary| {
        if a.max_ratio > 0.0 {
            b.max_ratio / a.max_ratio
        } else {
            1.0
        }
    };
    let doubling_factors = vec![
        (LemmaId::Ladyzhenskaya, factor(&base[0], &doubled[0])),
        (LemmaId::Agmon, factor(&base[1], &doubled[1])),
        (LemmaId::GronwallOde, factor(&base[2], &doubled[2])),
    ];

    let mut hard_failures = Vec::new();
    for summary in [&base[3], &doubled[3]] {
        if summary.violations > 0 {
            hard_failures.push(format!(
                "uniform Gronwall constant-free form violated {} time(s)",
                summary.violations
            ));
        }
    }
    if max_identity > identity_tolerance {
        hard_failures.push(format!(
            "identity residual {max_identity:.3e} above tolerance {identity_tolerance:.1e}"
        ));
    }
    for s in base.iter().chain(doubled.iter()) {
        if !s.max_ratio.is_finite() {
            hard_failures.push(format!("{:?} produced a non-finite ratio", s.lemma));
        }
    }

    Ok(LabReport {
        config: cfg.clone(),
        base,
        doubled,
        doubling_factors,
        identities: IdentitySummary {
            count: cfg.identity_samples,
            max_rel_residual: max_identity,
            tolerance: identity_tolerance,
        },
        hard_failures,
    })
}
