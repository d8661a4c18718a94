//! Saddle-point machinery for the exact-energy weights.
//!
//! The generating function `F(z) = prod_j (1 - z^j)^(-q_j)` has
//! `w(energy = M)` as its `z^M` coefficient. Substituting `z = e^(-xi)` and
//! integrating over the vertical line `Re xi = b` (the minimax contour; `b`
//! is the equilibrium root) gives
//!
//! ```text
//! w(energy = M) = e^(S(M)) / (2 pi) * int_{-pi}^{pi} e^(S(phi)) dphi
//! ```
//!
//! with the entropy `S(M) = b M + sum_j q_j ln(1/(1 - e^(-bj)))` and the
//! normalized phase `S(phi) = i M phi + sum_j q_j ln[(1 - e^(-bj)) /
//! (1 - e^(-bj - i j phi))]` (principal branch; the argument never crosses
//! the cut for `b > 0`). The identity is exact for any `b > 0`; the
//! equilibrium choice only optimizes conditioning. `e^(S(M))` stays symbolic:
//! only logs and ratios are ever materialized.
//!
//! The integration interval splits into three zones: a central one on the
//! curvature scale where the integrand is essentially Gaussian, an annulus
//! where the quadratic decay still dominates, and the remainder where the
//! integrand is exponentially negligible. Quadrature is adaptive within each
//! zone, so the split only affects efficiency.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::equilibrium::{self, Chi};
use crate::error::{invalid, Error, Result};
use crate::exact::{self, Ensemble, TableMode};
use crate::multiplicity::MultiplicitySpec;
use crate::sums;
use crate::{DEFAULT_ENUM_CAP, SERIES_CUTOFF};

/// Zone-boundary constants. The central zone must hold several standard
/// deviations of the Gaussian factor for its dominance diagnostics to be
/// meaningful, which rules out very small values.
const DELTA_1: f64 = 1.0;
const DELTA_2: f64 = 0.5;

// ---------------------------------------------------------------------------
// Minimal complex arithmetic
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cplx {
    pub re: f64,
    pub im: f64,
}

impl Cplx {
    pub const ZERO: Cplx = Cplx { re: 0.0, im: 0.0 };

    pub fn new(re: f64, im: f64) -> Self {
        Cplx { re, im }
    }

    pub fn conj(self) -> Self {
        Cplx::new(self.re, -self.im)
    }

    pub fn exp(self) -> Self {
        let r = self.re.exp();
        Cplx::new(r * self.im.cos(), r * self.im.sin())
    }

    pub fn abs(self) -> f64 {
        self.re.hypot(self.im)
    }

    fn add(self, rhs: Cplx) -> Cplx {
        Cplx::new(self.re + rhs.re, self.im + rhs.im)
    }

    fn scale(self, s: f64) -> Cplx {
        Cplx::new(self.re * s, self.im * s)
    }

    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

// ---------------------------------------------------------------------------
// Action profile
// ---------------------------------------------------------------------------

/// Entropy and curvature data of a weight at energy `m`.
#[derive(Clone, Copy, Debug)]
pub struct ActionProfile {
    pub m: f64,
    /// Equilibrium root used as the contour abscissa.
    pub b: f64,
    /// `S(M) = b M + sum_j q_j ln(1/(1 - e^(-bj)))`.
    pub s_m: f64,
    /// Second derivative of the phase at 0 (negative).
    pub s2: f64,
    /// Upper envelope for `sup_phi |S'''(phi)|`, by the comparison series
    /// with `|e^(bj + i j phi) - 1| >= e^(bj) - 1`.
    pub s3_bound: f64,
    /// Exponential-moment constant
    /// `K = e^b / 2 * sum_j q_j e^(bj/2) / (e^(bj/2) - 1)^2`.
    pub k: f64,
}

/// `sum_j q_j ln(1/(1 - e^(-bj)))`, truncated at the standard cutoff.
fn entropy_series(spec: &MultiplicitySpec, b: f64) -> f64 {
    let cutoff = (SERIES_CUTOFF / b).ceil() as u64 + 1;
    let mut acc = 0.0;
    for j in (1..=cutoff).rev() {
        let x = (-b * j as f64).exp();
        acc += spec.multiplicity(j) * -(-x).ln_1p();
    }
    acc
}

pub fn action(spec: &MultiplicitySpec, m: f64, tol: f64) -> Result<ActionProfile> {
    let sol = equilibrium::solve_b(spec, m, tol)?;
    let b = sol.b;
    let curv = sums::curvature_sums(spec, b);
    Ok(ActionProfile {
        m,
        b,
        s_m: b * m + entropy_series(spec, b),
        s2: -curv.s2,
        s3_bound: curv.s3,
        k: 0.5 * b.exp() * curv.kdiag,
    })
}

// ---------------------------------------------------------------------------
// Phase function
// ---------------------------------------------------------------------------

/// `S(phi)` with the mean energy at `b` as the linear coefficient, so that
/// `S(0) = 0` and `S'(0) = 0` hold by construction.
pub fn phase(spec: &MultiplicitySpec, b: f64, phi: f64) -> Result<Cplx> {
    if !(b > 0.0) {
        return Err(invalid("phase requires b > 0"));
    }
    let m = equilibrium::mean_energy(spec, b, 1e-12)?;
    Ok(s_phi(spec, b, m, phi))
}

/// The normalized phase with an explicit linear coefficient `m`.
///
/// Real part: `-1/2 sum_j q_j ln(1 + d_j)` with
/// `d_j = 2 e^(-bj) (1 - cos(j phi)) / (1 - e^(-bj))^2` — every term is
/// evaluated without cancellation, which the curvature cross-checks need.
/// Imaginary part: `m phi - sum_j q_j atan2(e^(-bj) sin(j phi),
/// 1 - e^(-bj) cos(j phi))`.
fn s_phi(spec: &MultiplicitySpec, b: f64, m: f64, phi: f64) -> Cplx {
    let cutoff = (SERIES_CUTOFF / b).ceil() as u64 + 1;
    let mut re = 0.0;
    let mut im_sum = 0.0;
    for j in (1..=cutoff).rev() {
        let q = spec.multiplicity(j);
        let jf = j as f64;
        let x = (-b * jf).exp();
        let one_minus = -(-b * jf).exp_m1(); // 1 - e^(-bj)
        let s_half = (0.5 * jf * phi).sin();
        let delta = 2.0 * x * (2.0 * s_half * s_half) / (one_minus * one_minus);
        re -= 0.5 * q * delta.ln_1p();
        im_sum += q * (x * (jf * phi).sin()).atan2(1.0 - x * (jf * phi).cos());
    }
    Cplx::new(re, m * phi - im_sum)
}

// ---------------------------------------------------------------------------
// Contour evaluation of the weight
// ---------------------------------------------------------------------------

/// Result of the contour integral, all weight-scale factors in logs.
#[derive(Clone, Copy, Debug)]
pub struct ContourWeight {
    /// `ln w(energy = m)` as computed by the contour integral.
    pub ln_weight: f64,
    /// Entropy `S(M)` at the contour abscissa.
    pub s_m: f64,
    /// Real part of the full integral `int e^(S(phi)) dphi`.
    pub integral_re: f64,
    /// Real-part contributions of the three zones (central, annulus, rest).
    pub zone_re: [f64; 3],
    /// `|Im integral| / Re integral` — a quadrature diagnostic; the exact
    /// integral is real.
    pub imag_rel: f64,
}

/// Evaluates `w(energy = m)` as `e^(S(M)) / (2 pi) int_{-pi}^{pi} e^(S(phi))
/// dphi` by zone-split adaptive quadrature.
pub fn contour_weight(spec: &MultiplicitySpec, m: u64, tol: f64) -> Result<ContourWeight> {
    if m == 0 {
        // Empty product: w = 1 exactly.
        return Ok(ContourWeight {
            ln_weight: 0.0,
            s_m: 0.0,
            integral_re: 2.0 * core::f64::consts::PI,
            zone_re: [2.0 * core::f64::consts::PI, 0.0, 0.0],
            imag_rel: 0.0,
        });
    }
    let mf = m as f64;
    let sol = equilibrium::solve_b(spec, mf, tol.min(1e-10))?;
    let b = sol.b;
    let d = spec.dimension();
    let s_m = b * mf + entropy_series(spec, b);
    let curv = sums::curvature_sums(spec, b);

    let pi = core::f64::consts::PI;
    let a1 = (DELTA_1 * b.powf(1.0 + d / 3.0)).min(pi);
    let a2 = (DELTA_2 * b).clamp(a1, pi);

    // Scale for the absolute quadrature tolerance: the Gaussian estimate of
    // the whole integral.
    let gauss = (2.0 * pi / curv.s2).sqrt();
    let rel = tol.clamp(1e-13, 1e-8);
    let piece_tol = gauss * rel / 6.0;

    let f = |phi: f64| s_phi(spec, b, mf, phi).exp();
    let mut budget = 20_000_000u64;
    let d1 = integrate_cplx(&f, -a1, a1, piece_tol, &mut budget)?;
    let mut d2 = Cplx::ZERO;
    let mut d3 = Cplx::ZERO;
    if a2 > a1 {
        d2 = integrate_cplx(&f, a1, a2, piece_tol, &mut budget)?
            .add(integrate_cplx(&f, -a2, -a1, piece_tol, &mut budget)?);
    }
    if pi > a2 {
        d3 = integrate_cplx(&f, a2, pi, piece_tol, &mut budget)?
            .add(integrate_cplx(&f, -pi, -a2, piece_tol, &mut budget)?);
    }
    let total = d1.add(d2).add(d3);
    if !(total.re > 0.0) {
        return Err(Error::Quadrature("contour integral is not positive"));
    }
    Ok(ContourWeight {
        ln_weight: s_m + (total.re / (2.0 * pi)).ln(),
        s_m,
        integral_re: total.re,
        zone_re: [d1.re, d2.re, d3.re],
        imag_rel: total.im.abs() / total.re,
    })
}

fn integrate_cplx<F: Fn(f64) -> Cplx>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    budget: &mut u64,
) -> Result<Cplx> {
    if a == b {
        return Ok(Cplx::ZERO);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    if !(fa.is_finite() && fb.is_finite() && fm.is_finite()) {
        return Err(Error::Quadrature("non-finite integrand value"));
    }
    let whole = fa.add(fm.scale(4.0)).add(fb).scale((b - a) / 6.0);
    simpson_cplx(f, a, fa, m, fm, b, fb, whole, tol, 60, budget)
}

#[allow(clippy::too_many_arguments)]
fn simpson_cplx<F: Fn(f64) -> Cplx>(
    f: &F,
    a: f64,
    fa: Cplx,
    m: f64,
    fm: Cplx,
    b: f64,
    fb: Cplx,
    whole: Cplx,
    tol: f64,
    depth: u32,
    budget: &mut u64,
) -> Result<Cplx> {
    if *budget < 2 {
        return Err(Error::Quadrature("evaluation budget exhausted"));
    }
    *budget -= 2;
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    if !(flm.is_finite() && frm.is_finite()) {
        return Err(Error::Quadrature("non-finite integrand value"));
    }
    let left = fa.add(flm.scale(4.0)).add(fm).scale((m - a) / 6.0);
    let right = fm.add(frm.scale(4.0)).add(fb).scale((b - m) / 6.0);
    let delta = left.add(right).add(whole.scale(-1.0));
    if delta.abs() <= 15.0 * tol {
        return Ok(left.add(right).add(delta.scale(1.0 / 15.0)));
    }
    if depth == 0 {
        return Err(Error::Quadrature("subdivision limit reached"));
    }
    let half = 0.5 * tol;
    let l = simpson_cplx(f, a, fa, lm, flm, m, fm, left, half, depth - 1, budget)?;
    let r = simpson_cplx(f, m, fm, rm, frm, b, fb, right, half, depth - 1, budget)?;
    Ok(l.add(r))
}

// ---------------------------------------------------------------------------
// The pointwise contour inequality
// ---------------------------------------------------------------------------

/// Both sides of the pointwise inequality
/// `Re Phi(Re xi) - Re Phi(xi) >= 1/5 sum_j q_j e^(-j Re xi) (1 - cos(j Im xi))`
/// (the energy term cancels). The left side is evaluated in the same
/// cancellation-free form as the phase.
#[derive(Clone, Copy, Debug)]
pub struct ContourInequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

pub fn verify_contour_inequality(spec: &MultiplicitySpec, xi_re: f64, xi_im: f64) -> Result<ContourInequalityCheck> {
    if !(xi_re > 0.0) {
        return Err(invalid("verify_contour_inequality requires Re xi > 0"));
    }
    let cutoff = (SERIES_CUTOFF / xi_re).ceil() as u64 + 1;
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for j in (1..=cutoff).rev() {
        let q = spec.multiplicity(j);
        let jf = j as f64;
        let x = (-xi_re * jf).exp();
        let one_minus = -(-xi_re * jf).exp_m1();
        let s_half = (0.5 * jf * xi_im).sin();
        let one_minus_cos = 2.0 * s_half * s_half;
        lhs += 0.5 * q * (2.0 * x * one_minus_cos / (one_minus * one_minus)).ln_1p();
        rhs += 0.2 * q * x * one_minus_cos;
    }
    Ok(ContourInequalityCheck {
        lhs,
        rhs,
        ok: lhs >= rhs - 1e-12,
    })
}

// ---------------------------------------------------------------------------
// Bound checks against exact weights
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
pub struct TiltBoundCheck {
    /// Tilt parameter `c in [0, b/2]`.
    pub c: f64,
    /// `ln w({sum_j (N_j - Nbar_j) > Delta})`, or `-inf` for an empty set.
    pub ln_lhs: f64,
    /// `S(M) - c Delta + c^2 K`.
    pub ln_rhs: f64,
    pub ok: bool,
}

#[derive(Clone, Debug)]
pub struct BoundsEntry {
    pub m: u64,
    pub b: f64,
    /// `w(energy <= m) e^(-S(M)) b^(-d/2 - 1)` — bounded below by a positive
    /// constant along any energy grid.
    pub scaled_cumulative: f64,
    /// Deviation radius used for the tail set.
    pub delta: f64,
    pub tilt: Vec<TiltBoundCheck>,
}

#[derive(Clone, Debug)]
pub struct BoundsReport {
    pub entries: Vec<BoundsEntry>,
    pub scaled_min: f64,
    pub scaled_max: f64,
    pub all_tilt_ok: bool,
}

/// For each grid energy: computes the scale-normalized cumulative weight and
/// checks the exponential-tilt upper bound on the weight of the upward
/// deviation set `{sum_j (N_j - Nbar_j) > Delta}` (coefficients all one) at
/// `c = b/4` and `c = b/2`. The set's weight is exact: exhaustive below the
/// enumeration cap, and from the joint (energy, particles) table above it.
pub fn check_bounds(spec: &MultiplicitySpec, m_grid: &[u64], tol: f64) -> Result<BoundsReport> {
    let mut entries = Vec::with_capacity(m_grid.len());
    for &m in m_grid {
        let profile = action(spec, m as f64, tol)?;
        let sol = equilibrium::solve_b(spec, m as f64, tol)?;
        let d = spec.dimension();
        let ln_w_cum = exact::weight_cumulative(spec, m)?.ln();
        let scaled_cumulative = (ln_w_cum - profile.s_m - (d / 2.0 + 1.0) * sol.b.ln()).exp();
        let delta = equilibrium::deviation_radius(sol.nbar, d, Chi::LogLog)?.delta;

        let ln_lhs = ln_upward_tail_weight(spec, m, sol.nbar + delta)?;
        let mut tilt = Vec::new();
        for c in [sol.b / 4.0, sol.b / 2.0] {
            let ln_rhs = profile.s_m - c * delta + c * c * profile.k;
            tilt.push(TiltBoundCheck {
                c,
                ln_lhs,
                ln_rhs,
                ok: ln_lhs <= ln_rhs + 1e-9,
            });
        }
        entries.push(BoundsEntry {
            m,
            b: sol.b,
            scaled_cumulative,
            delta,
            tilt,
        });
    }
    let scaled_min = entries.iter().map(|e| e.scaled_cumulative).fold(f64::INFINITY, f64::min);
    let scaled_max = entries.iter().map(|e| e.scaled_cumulative).fold(f64::NEG_INFINITY, f64::max);
    let all_tilt_ok = entries.iter().all(|e| e.tilt.iter().all(|c| c.ok));
    Ok(BoundsReport {
        entries,
        scaled_min,
        scaled_max,
        all_tilt_ok,
    })
}

/// `ln` of the total weight of configurations (levels >= 1, energy <= m)
/// with more than `particle_bar` particles.
fn ln_upward_tail_weight(spec: &MultiplicitySpec, m: u64, particle_bar: f64) -> Result<f64> {
    if m <= DEFAULT_ENUM_CAP {
        let configs = exact::enumerate(spec, m, Ensemble::VariableN, None)?;
        let mut acc = crate::math::LogSum::new();
        for (c, w) in &configs {
            if c.particles() as f64 > particle_bar {
                acc.add(w.ln());
            }
        }
        Ok(acc.value())
    } else {
        let table = exact::build_table(
            spec,
            m,
            TableMode::Fixed { n_max: m },
            None,
            exact::Arithmetic::Auto,
            None,
        )?;
        let mut acc = crate::math::LogSum::new();
        let mut n = particle_bar.floor() as u64 + 1;
        if particle_bar < 0.0 {
            n = 0;
        }
        while n <= m {
            acc.add(table.particle_marginal(n)?.ln());
            n += 1;
        }
        Ok(acc.value())
    }
}
