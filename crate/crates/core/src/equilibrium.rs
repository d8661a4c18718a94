//! Equilibrium parameters, occupation profiles, condensation thresholds, and
//! deviation radii.
//!
//! For a multiplicity spec and a total energy `M > 0`, the mean-energy
//! equation `sum_j j q_j / (e^(bj) - 1) = M` has a unique root `b > 0` (its
//! left side decreases monotonically from infinity to zero), and the
//! equilibrium occupation of level `j` is `Nbar_j = q_j / (e^(bj) - 1)`. The
//! total `Nbar = sum_j Nbar_j` is the condensation threshold of the
//! fixed-particle-number system: below it a grand-canonical pair
//! `(beta, mu > 0)` matches both constraints, above it the surplus
//! `N - Nbar` sits on level 0 while levels `j >= 1` keep the variable-number
//! profile.

use alloc::format;
use alloc::string::String;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::multiplicity::MultiplicitySpec;
use crate::statistic::FChoice;
use crate::sums;
use crate::SERIES_CUTOFF;

/// Root of the mean-energy equation with diagnostics.
#[derive(Clone, Debug)]
pub struct EquilibriumSolution {
    /// Total energy the equation was solved for.
    pub m: f64,
    /// Unique positive root `b`.
    pub b: f64,
    /// Total equilibrium occupation `sum_j q_j / (e^(bj) - 1)` at the root.
    pub nbar: f64,
    /// Left side of the energy equation minus `m`, at the returned `b`.
    pub residual: f64,
    /// Truncation level used for the final series evaluation.
    pub j_cut: u64,
}

/// Evaluates `sum_{j >= l} j^power q_j / (e^(bj + mu) - 1)`, extending the
/// cutoff until the comparison-integral tail bound drops below `tol_abs`.
fn level_sum(
    spec: &MultiplicitySpec,
    b: f64,
    mu: f64,
    l: u64,
    power: u32,
    tol_abs: f64,
) -> Result<(f64, u64)> {
    debug_assert!(b > 0.0 && mu >= 0.0 && l >= 1);
    let s_env = power as f64 + spec.dimension() - 1.0;
    let mut x_cut = SERIES_CUTOFF;
    let cutoff = loop {
        let cutoff = (((x_cut - mu).max(x_cut / 10.0) / b).ceil())
            .max((s_env + 2.0) / b + 2.0) as u64;
        let cutoff = cutoff.max(l);
        let geo = 1.0 / -(-(b * cutoff as f64 + mu)).exp_m1();
        let tail = spec.tail_coefficient(cutoff + 1)
            * geo
            * (-mu).exp()
            * sums::power_exp_tail(s_env, b, cutoff + 1);
        if tail <= tol_abs {
            break cutoff;
        }
        x_cut += 25.0;
        if x_cut > 700.0 {
            return Err(Error::Nonconvergence(
                "series tail bound does not reach tolerance",
            ));
        }
    };
    let mut sum = 0.0;
    // Small terms first.
    for j in (l..=cutoff).rev() {
        let jf = j as f64;
        let denom = (b * jf + mu).exp_m1();
        sum += jf.powi(power as i32) * spec.multiplicity(j) / denom;
    }
    Ok((sum, cutoff))
}

/// Solves `sum_j j q_j / (e^(bj) - 1) = m` for the unique `b > 0` by
/// bisection, bracketing around the closed-form asymptotic
/// `b* = (Q Gamma(d+1) zeta(d+1) / m)^(1/(d+1))`.
pub fn solve_b(spec: &MultiplicitySpec, m: f64, tol: f64) -> Result<EquilibriumSolution> {
    if !(m > 0.0) || !m.is_finite() {
        return Err(invalid(format!("total energy M = {m} must be positive")));
    }
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    let d = spec.dimension();
    let tail_tol = tol * m / 10.0;
    let energy = |b: f64| -> Result<(f64, u64)> { level_sum(spec, b, 0.0, 1, 1, tail_tol) };

    let b_star =
        (spec.leading_coefficient() * sums::gamma_zeta(d + 1.0)? / m).powf(1.0 / (d + 1.0));
    let mut lo = b_star / 8.0;
    let mut hi = b_star * 8.0;
    for _ in 0..80 {
        if energy(lo)?.0 > m {
            break;
        }
        lo /= 4.0;
    }
    for _ in 0..80 {
        if energy(hi)?.0 < m {
            break;
        }
        hi *= 4.0;
    }

    let target = 0.1 * tol * m.max(1.0);
    let mut best = (lo, f64::INFINITY, 0u64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (val, j_cut) = energy(mid)?;
        let res = val - m;
        if res.abs() < best.1.abs() {
            best = (mid, res, j_cut);
        }
        if res.abs() <= target || (hi - lo) <= 1e-16 * mid {
            break;
        }
        if res > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (b, residual, j_cut) = best;
    if residual.abs() > tol * m.max(1.0) {
        return Err(Error::Nonconvergence("bisection for b stalled above tolerance"));
    }
    let (nbar, _) = level_sum(spec, b, 0.0, 1, 0, tol)?;
    Ok(EquilibriumSolution {
        m,
        b,
        nbar,
        residual,
        j_cut,
    })
}

/// Left side of the mean-energy equation, `sum_j j q_j / (e^(bj) - 1)`.
pub fn mean_energy(spec: &MultiplicitySpec, b: f64, tol: f64) -> Result<f64> {
    Ok(level_sum(spec, b, 0.0, 1, 1, tol)?.0)
}

/// Equilibrium occupation `Nbar_j = q_j / (e^(bj) - 1)` of level `j >= 1`.
pub fn occupation(spec: &MultiplicitySpec, b: f64, j: u64) -> f64 {
    debug_assert!(b > 0.0 && j >= 1);
    spec.multiplicity(j) / (b * j as f64).exp_m1()
}

/// Converged total `sum_{j>=1} Nbar_j` with tail bound below `tol`.
pub fn total_occupation(spec: &MultiplicitySpec, b: f64, tol: f64) -> Result<f64> {
    Ok(level_sum(spec, b, 0.0, 1, 0, tol)?.0)
}

/// Converged tail `sum_{j>=l} Nbar_j` with tail bound below `tol`.
pub fn cumulative_tail(spec: &MultiplicitySpec, b: f64, l: u64, tol: f64) -> Result<f64> {
    if l < 1 {
        return Err(invalid("cumulative_tail requires l >= 1"));
    }
    Ok(level_sum(spec, b, 0.0, l, 0, tol)?.0)
}

// ---------------------------------------------------------------------------
// Deviation radius
// ---------------------------------------------------------------------------

/// A slowly growing factor in the deviation radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Chi {
    /// `chi(x) = 1 + ln(1 + ln(1 + x))`: tends to infinity, but about as
    /// slowly as anything worth computing with.
    LogLog,
    /// A constant. Outside the growth hypothesis of the concentration
    /// bounds; allowed for experiments and flagged as such.
    Const(f64),
}

impl Chi {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Chi::LogLog => 1.0 + (1.0 + (1.0 + x).ln()).ln(),
            Chi::Const(c) => *c,
        }
    }

    /// Whether this choice tends to infinity, as the concentration bounds
    /// require.
    pub fn satisfies_growth_hypothesis(&self) -> bool {
        matches!(self, Chi::LogLog)
    }

    pub fn label(&self) -> String {
        match self {
            Chi::LogLog => String::from("loglog"),
            Chi::Const(c) => format!("const:{c}"),
        }
    }
}

/// The deviation radius: `(Nbar ln Nbar)^(1/2) chi(Nbar)` for `d > 2`,
/// `Nbar^(1/d) ln(Nbar) chi(Nbar)` for `1 < d <= 2`.
#[derive(Clone, Copy, Debug)]
pub struct DeltaSpec {
    pub chi: Chi,
    pub delta: f64,
}

pub fn deviation_radius(nbar: f64, d: f64, chi: Chi) -> Result<DeltaSpec> {
    if !(d > 1.0) {
        return Err(invalid("deviation_radius requires d > 1"));
    }
    if !(nbar > core::f64::consts::E) {
        return Err(invalid(format!(
            "deviation_radius requires Nbar > e, got {nbar}"
        )));
    }
    if let Chi::Const(c) = chi {
        if !(c > 0.0) {
            return Err(invalid("constant chi must be positive"));
        }
    }
    let ln_n = nbar.ln();
    let delta = if d > 2.0 {
        (nbar * ln_n).sqrt() * chi.eval(nbar)
    } else {
        nbar.powf(1.0 / d) * ln_n * chi.eval(nbar)
    };
    Ok(DeltaSpec { chi, delta })
}

// ---------------------------------------------------------------------------
// Thresholds and regimes
// ---------------------------------------------------------------------------

/// Condensation threshold `Nbar(M)`: the total equilibrium occupation at the
/// root of the mean-energy equation.
pub fn threshold(spec: &MultiplicitySpec, m: f64, tol: f64) -> Result<f64> {
    Ok(solve_b(spec, m, tol)?.nbar)
}

/// Threshold after painting balls in `k` colors, i.e. with every `q_j`
/// (j >= 1) multiplied by `k`.
pub fn coloring_threshold(spec: &MultiplicitySpec, m: f64, k: u32, tol: f64) -> Result<f64> {
    threshold(&spec.scaled_levels(k)?, m, tol)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegimeKind {
    /// `N <= Nbar(M)`: grand-canonical profile, no condensate.
    Normal,
    /// `N > Nbar(M)`: the surplus `N - Nbar` occupies level 0.
    Condensed,
}

#[derive(Clone, Copy, Debug)]
pub struct Regime {
    pub kind: RegimeKind,
    pub threshold: f64,
    pub n: f64,
}

/// Classifies `(M, N)`; the boundary `N = Nbar(M)` counts as normal.
pub fn classify(spec: &MultiplicitySpec, m: f64, n: f64, tol: f64) -> Result<Regime> {
    if !(n > 0.0) {
        return Err(invalid("particle number N must be positive"));
    }
    let t = threshold(spec, m, tol)?;
    Ok(Regime {
        kind: if n > t {
            RegimeKind::Condensed
        } else {
            RegimeKind::Normal
        },
        threshold: t,
        n,
    })
}

// ---------------------------------------------------------------------------
// Grand-canonical system (normal regime)
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
pub struct GrandCanonicalSolution {
    pub beta: f64,
    pub mu: f64,
    /// Defect of the particle-number equation at the returned pair.
    pub residual_n: f64,
    /// Defect of the energy equation at the returned pair.
    pub residual_m: f64,
}

fn gc_particles(spec: &MultiplicitySpec, beta: f64, mu: f64, tol: f64) -> Result<f64> {
    let ground = spec.q0() / mu.exp_m1();
    Ok(ground + level_sum(spec, beta, mu, 1, 0, tol)?.0)
}

fn gc_energy(spec: &MultiplicitySpec, beta: f64, mu: f64, tol: f64) -> Result<f64> {
    Ok(level_sum(spec, beta, mu, 1, 1, tol)?.0)
}

/// Solves the particle-number equation for `mu` at fixed `beta` by bisection
/// in `ln mu`; the left side decreases monotonically in `mu` from infinity
/// (the `q_0` term) to zero.
fn solve_mu(spec: &MultiplicitySpec, beta: f64, n: f64, tol: f64) -> Result<f64> {
    let tail_tol = 0.01 * tol * n.max(1.0);
    let mut lo = 1e-18_f64;
    for _ in 0..40 {
        if gc_particles(spec, beta, lo, tail_tol)? > n {
            break;
        }
        lo *= 1e-4;
    }
    let mut hi = 1.0_f64;
    for _ in 0..80 {
        if gc_particles(spec, beta, hi, tail_tol)? < n {
            break;
        }
        hi *= 2.0;
    }
    let target = 0.1 * tol * n.max(1.0);
    let (mut ln_lo, mut ln_hi) = (lo.ln(), hi.ln());
    let mut best = lo;
    let mut best_res = f64::INFINITY;
    for _ in 0..200 {
        let mid = (0.5 * (ln_lo + ln_hi)).exp();
        let res = gc_particles(spec, beta, mid, tail_tol)? - n;
        if res.abs() < best_res.abs() {
            best = mid;
            best_res = res;
        }
        if res.abs() <= target || (ln_hi - ln_lo) < 1e-15 {
            break;
        }
        if res > 0.0 {
            ln_lo = mid.ln();
        } else {
            ln_hi = mid.ln();
        }
    }
    Ok(best)
}

/// Solves the two-equation grand-canonical system for `(beta, mu)` in the
/// normal regime by nested bisection: the inner loop matches the particle
/// count by choosing `mu(beta)`, the outer loop matches the energy, which is
/// monotone in `beta` along the inner solution.
pub fn solve_beta_mu(
    spec: &MultiplicitySpec,
    m: f64,
    n: f64,
    tol: f64,
) -> Result<GrandCanonicalSolution> {
    let regime = classify(spec, m, n, tol)?;
    if regime.kind == RegimeKind::Condensed {
        return Err(Error::Regime(format!(
            "N = {n} exceeds the threshold {}; the grand-canonical system has no mu > 0 solution \
             (use the condensed profile)",
            regime.threshold
        )));
    }
    let tail_tol = 0.01 * tol * m.max(1.0);
    let b_root = solve_b(spec, m, tol)?.b;

    let energy_at = |beta: f64| -> Result<(f64, f64)> {
        let mu = solve_mu(spec, beta, n, tol)?;
        Ok((gc_energy(spec, beta, mu, tail_tol)?, mu))
    };

    // At beta = b_root the inner mu is > 0, so the energy falls short of m;
    // shrinking beta raises it.
    let hi0 = b_root;
    let mut lo = b_root;
    let mut hi = hi0;
    for _ in 0..80 {
        lo *= 0.5;
        if energy_at(lo)?.0 > m {
            break;
        }
        hi = lo;
    }
    let target = 0.1 * tol * m.max(1.0);
    let mut best = (hi0, f64::INFINITY, 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (energy, mu) = energy_at(mid)?;
        let res = energy - m;
        if res.abs() < best.1.abs() {
            best = (mid, res, mu);
        }
        if res.abs() <= target || (hi - lo) <= 1e-16 * mid {
            break;
        }
        if res > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (beta, residual_m, mu) = best;
    let residual_n = gc_particles(spec, beta, mu, tail_tol)? - n;
    if residual_m.abs() > tol * m.max(1.0) || residual_n.abs() > tol * n.max(1.0) {
        return Err(Error::Nonconvergence("grand-canonical bisection stalled"));
    }
    Ok(GrandCanonicalSolution {
        beta,
        mu,
        residual_n,
        residual_m,
    })
}

// ---------------------------------------------------------------------------
// Condensed regime
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
pub struct CondensedProfile {
    /// Mean condensate size `N - Nbar(M)`.
    pub n0bar: f64,
    /// Equilibrium parameter for levels `j >= 1`; independent of `N`.
    pub b: f64,
    /// Threshold `Nbar(M)`.
    pub nbar: f64,
}

/// Limit profile for `N > Nbar(M)`: levels `j >= 1` keep the variable-number
/// occupations and the surplus sits on level 0.
pub fn condensed_profile(
    spec: &MultiplicitySpec,
    m: f64,
    n: f64,
    tol: f64,
) -> Result<CondensedProfile> {
    let sol = solve_b(spec, m, tol)?;
    if !(n > sol.nbar) {
        return Err(Error::Regime(format!(
            "N = {n} does not exceed the threshold {}; the system is in the normal regime",
            sol.nbar
        )));
    }
    Ok(CondensedProfile {
        n0bar: n - sol.nbar,
        b: sol.b,
        nbar: sol.nbar,
    })
}

// ---------------------------------------------------------------------------
// Occupation profiles as reference points for statistics
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
enum ProfileKind {
    Variable { b: f64 },
    GrandCanonical { beta: f64, mu: f64 },
    Condensed { b: f64, n0: f64 },
}

/// A reference occupation profile `{Nbar_j}`, usable to center linear
/// statistics of sampled configurations.
#[derive(Clone, Debug)]
pub struct OccupationProfile {
    spec: MultiplicitySpec,
    kind: ProfileKind,
}

impl OccupationProfile {
    pub fn variable(spec: MultiplicitySpec, b: f64) -> Self {
        OccupationProfile {
            spec,
            kind: ProfileKind::Variable { b },
        }
    }

    pub fn grand_canonical(spec: MultiplicitySpec, beta: f64, mu: f64) -> Self {
        OccupationProfile {
            spec,
            kind: ProfileKind::GrandCanonical { beta, mu },
        }
    }

    pub fn condensed(spec: MultiplicitySpec, b: f64, n0: f64) -> Self {
        OccupationProfile {
            spec,
            kind: ProfileKind::Condensed { b, n0 },
        }
    }

    pub fn spec(&self) -> &MultiplicitySpec {
        &self.spec
    }

    /// `Nbar_j`, including the level-0 entry of the fixed-number profiles.
    pub fn occupation(&self, j: u64) -> f64 {
        match (&self.kind, j) {
            (ProfileKind::Variable { .. }, 0) => 0.0,
            (ProfileKind::GrandCanonical { mu, .. }, 0) => self.spec.q0() / mu.exp_m1(),
            (ProfileKind::Condensed { n0, .. }, 0) => *n0,
            (ProfileKind::Variable { b } | ProfileKind::Condensed { b, .. }, j) => {
                occupation(&self.spec, *b, j)
            }
            (ProfileKind::GrandCanonical { beta, mu }, j) => {
                self.spec.multiplicity(j) / (beta * j as f64 + mu).exp_m1()
            }
        }
    }

    /// `sum_j f_j Nbar_j`, truncated at the standard series cutoff.
    pub fn weighted_sum(&self, f: &FChoice) -> f64 {
        let rate = match &self.kind {
            ProfileKind::Variable { b } | ProfileKind::Condensed { b, .. } => *b,
            ProfileKind::GrandCanonical { beta, .. } => *beta,
        };
        let cutoff = (SERIES_CUTOFF / rate).ceil() as u64 + 1;
        let mut acc = f.eval(0) * self.occupation(0);
        for j in (1..=cutoff).rev() {
            let fj = f.eval(j.min(u32::MAX as u64) as u32);
            if fj != 0.0 {
                acc += fj * self.occupation(j);
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::DEFAULT_TOL;

    fn power(d: f64, q: f64) -> MultiplicitySpec {
        MultiplicitySpec::power_law(d, q).unwrap()
    }

    #[test]
    fn residual_contract_and_bracketing() {
        for &m in &[10.0, 100.0, 1e4, 1e6] {
            let spec = power(3.0, 1.0);
            let sol = solve_b(&spec, m, DEFAULT_TOL).unwrap();
            assert!(sol.residual.abs() <= DEFAULT_TOL * m.max(1.0));
            // lhs evaluated at b -/+ 10 tol brackets m (lhs decreasing in b).
            let lhs = |b: f64| level_sum(&spec, b, 0.0, 1, 1, 1e-12 * m).unwrap().0;
            assert!(lhs(sol.b - 10.0 * DEFAULT_TOL) > m);
            assert!(lhs(sol.b + 10.0 * DEFAULT_TOL) < m);
        }
    }

    #[test]
    fn b_decreases_with_energy() {
        let spec = power(3.0, 1.0);
        let b100 = solve_b(&spec, 100.0, DEFAULT_TOL).unwrap().b;
        let b1000 = solve_b(&spec, 1000.0, DEFAULT_TOL).unwrap().b;
        assert!(b100 > b1000);
    }

    #[test]
    fn closed_form_asymptotics() {
        // b^(d+1) M / (Q G(d+1) z(d+1)) and b^d Nbar / (Q G(d) z(d)) -> 1,
        // inside [0.99, 1.01] at M = 1e8 for d = 3, deviations shrinking in M.
        let spec = power(3.0, 1.0);
        let gz4 = sums::gamma_zeta(4.0).unwrap();
        let gz3 = sums::gamma_zeta(3.0).unwrap();
        let mut prev_dev = f64::INFINITY;
        for &m in &[1e5, 1e6, 1e7, 1e8] {
            let sol = solve_b(&spec, m, DEFAULT_TOL).unwrap();
            let r1 = sol.b.powf(4.0) * m / gz4;
            let r2 = sol.b.powf(3.0) * sol.nbar / gz3;
            let dev = (r1 - 1.0).abs().max((r2 - 1.0).abs());
            assert!(dev < prev_dev, "M={m}: {dev} vs {prev_dev}");
            prev_dev = dev;
            if m == 1e8 {
                assert!(r1 > 0.99 && r1 < 1.01, "r1 = {r1}");
                assert!(r2 > 0.99 && r2 < 1.01, "r2 = {r2}");
            }
        }
    }

    #[test]
    fn asymptotic_ratio_band_for_other_dimensions() {
        for &d in &[2.5, 3.0, 4.0] {
            let spec = power(d, 1.0);
            let gz_hi = sums::gamma_zeta(d + 1.0).unwrap();
            let gz_lo = sums::gamma_zeta(d).unwrap();
            let mut prev_dev = f64::INFINITY;
            for &m in &[1e5, 1e6, 1e7, 1e8] {
                let sol = solve_b(&spec, m, DEFAULT_TOL).unwrap();
                let r1 = sol.b.powf(d + 1.0) * m / gz_hi;
                let r2 = sol.b.powf(d) * sol.nbar / gz_lo;
                let dev = (r1 - 1.0).abs().max((r2 - 1.0).abs());
                assert!(dev < prev_dev, "d={d} M={m}: deviation not shrinking");
                prev_dev = dev;
                if m >= 1e7 {
                    assert!(r1 > 0.95 && r1 < 1.05, "d={d} M={m} r1={r1}");
                    assert!(r2 > 0.95 && r2 < 1.05, "d={d} M={m} r2={r2}");
                }
            }
        }
    }

    #[test]
    fn occupation_values() {
        let spec = power(2.0, 1.0); // q_j = j
        let b = core::f64::consts::LN_2;
        assert!((occupation(&spec, b, 1) - 1.0).abs() < 1e-14);
        assert!((occupation(&spec, b, 2) - 2.0 / 3.0).abs() < 1e-14);
        // strictly decreasing in b
        assert!(occupation(&spec, 0.5, 3) > occupation(&spec, 0.6, 3));
    }

    #[test]
    fn total_occupation_consistency() {
        let spec = power(3.0, 1.0);
        let sol = solve_b(&spec, 1e4, DEFAULT_TOL).unwrap();
        let total = total_occupation(&spec, sol.b, DEFAULT_TOL).unwrap();
        assert!((total - sol.nbar).abs() <= 1e-9 * sol.nbar);
        assert!(total >= occupation(&spec, sol.b, 1));
    }

    #[test]
    fn total_occupation_asymptotics() {
        let spec = power(3.0, 1.0);
        let sol = solve_b(&spec, 1e8, DEFAULT_TOL).unwrap();
        let total = total_occupation(&spec, sol.b, DEFAULT_TOL).unwrap();
        let ratio = total * sol.b.powi(3) / sums::gamma_zeta(3.0).unwrap();
        assert!((ratio - 1.0).abs() < 0.02, "ratio {ratio}");
    }

    #[test]
    fn cumulative_tail_values() {
        let spec = power(2.0, 1.0); // q_j = j
        // l = 1 reduces to the total.
        let t1 = cumulative_tail(&spec, 1.0, 1, 1e-12).unwrap();
        let tot = total_occupation(&spec, 1.0, 1e-12).unwrap();
        assert!((t1 - tot).abs() < 1e-13);
        // Frozen from machine-converged direct summation.
        assert!((t1 - 1.186_600_733_514_893).abs() < 1e-12);
        let t3 = cumulative_tail(&spec, 1.0, 3, 1e-12).unwrap();
        assert!((t3 - 0.291_588_741_146_235_1).abs() < 1e-12);
        // tail is monotone in l
        let t4 = cumulative_tail(&spec, 1.0, 4, 1e-12).unwrap();
        assert!(t3 >= t4);
    }

    #[test]
    fn cumulative_tail_matches_bose_integral_for_small_b() {
        let spec = power(2.0, 1.0);
        for &b in &[0.05, 0.02] {
            let l = (1.0 / b).ceil() as u64;
            let tail = cumulative_tail(&spec, b, l, 1e-12).unwrap();
            let approx = b.powi(-2) * sums::bose_integral(2.0, b * l as f64).unwrap();
            assert!(
                (tail / approx - 1.0).abs() < 0.05,
                "b={b}: {tail} vs {approx}"
            );
        }
    }

    #[test]
    fn deviation_radius_cases() {
        let e = core::f64::consts::E;
        let d = deviation_radius(e * e, 3.0, Chi::Const(1.0)).unwrap();
        assert!((d.delta - e * 2.0_f64.sqrt()).abs() < 1e-12);
        let d = deviation_radius(e * e, 2.0, Chi::Const(1.0)).unwrap();
        assert!((d.delta - 2.0 * e).abs() < 1e-12);
        // case boundary: d = 2 uses the second branch, d = 2.0001 the first
        let lo = deviation_radius(100.0, 2.0, Chi::Const(1.0)).unwrap().delta;
        let hi = deviation_radius(100.0, 2.0001, Chi::Const(1.0)).unwrap().delta;
        assert!((lo - 10.0 * 100.0f64.ln()).abs() < 1e-9);
        assert!((hi - (100.0f64 * 100.0f64.ln()).sqrt()).abs() < 0.01);
        assert!(deviation_radius(2.0, 3.0, Chi::LogLog).is_err());
        assert!(!Chi::Const(2.0).satisfies_growth_hypothesis());
        assert!(Chi::LogLog.satisfies_growth_hypothesis());
    }

    #[test]
    fn threshold_closed_form() {
        // threshold / (C(d) M^(d/(d+1))) -> 1 with
        // C(d) = G(d) z(d) / (G(d+1) z(d+1))^(d/(d+1)).
        let spec = power(3.0, 1.0);
        let m = 1e8;
        let t = threshold(&spec, m, DEFAULT_TOL).unwrap();
        let c3 = sums::gamma_zeta(3.0).unwrap() / sums::gamma_zeta(4.0).unwrap().powf(0.75);
        assert!((c3 - 0.5910).abs() < 1e-4);
        let ratio = t / (c3 * m.powf(0.75));
        assert!(ratio > 0.98 && ratio < 1.02, "ratio {ratio}");
    }

    #[test]
    fn threshold_monotonicity() {
        let spec = power(3.0, 1.0);
        let mut prev = 0.0;
        for &m in &[100.0, 1000.0, 10000.0] {
            let t = threshold(&spec, m, DEFAULT_TOL).unwrap();
            assert!(t > prev);
            prev = t;
        }
        // increasing in Q at fixed M, d
        let mut prev = 0.0;
        for &q in &[0.5, 1.0, 2.0, 4.0] {
            let t = threshold(&power(3.0, q), 1e4, DEFAULT_TOL).unwrap();
            assert!(t > prev, "Q={q}");
            prev = t;
        }
    }

    #[test]
    fn classification_boundary() {
        let spec = power(3.0, 1.0);
        let m = 1e4;
        let t = threshold(&spec, m, DEFAULT_TOL).unwrap();
        assert_eq!(
            classify(&spec, m, t / 2.0, DEFAULT_TOL).unwrap().kind,
            RegimeKind::Normal
        );
        assert_eq!(
            classify(&spec, m, 2.0 * t, DEFAULT_TOL).unwrap().kind,
            RegimeKind::Condensed
        );
        // the boundary itself is normal
        assert_eq!(
            classify(&spec, m, t, DEFAULT_TOL).unwrap().kind,
            RegimeKind::Normal
        );
    }

    #[test]
    fn grand_canonical_solution() {
        let spec = power(3.0, 1.0); // q0 defaults to 1
        let m = 1e6;
        let sol_b = solve_b(&spec, m, DEFAULT_TOL).unwrap();
        // N = Nbar/2: mu strictly positive, residuals within contract.
        let gc = solve_beta_mu(&spec, m, sol_b.nbar / 2.0, DEFAULT_TOL).unwrap();
        assert!(gc.mu > 0.0);
        assert!(gc.residual_m.abs() <= DEFAULT_TOL * m);
        assert!(gc.residual_n.abs() <= DEFAULT_TOL * (sol_b.nbar / 2.0).max(1.0));
        // As N -> Nbar, mu -> 0+ and beta -> b.
        let gc = solve_beta_mu(&spec, m, 0.999 * sol_b.nbar, DEFAULT_TOL).unwrap();
        assert!(gc.mu > 0.0);
        assert!(
            (gc.beta - sol_b.b).abs() / sol_b.b <= 0.05,
            "beta {} vs b {}",
            gc.beta,
            sol_b.b
        );
    }

    #[test]
    fn grand_canonical_limit_along_a_grid() {
        // As N climbs toward the threshold, mu falls monotonically to 0 and
        // beta rises toward the equilibrium root.
        let spec = power(3.0, 1.0);
        let m = 1e5;
        let sol = solve_b(&spec, m, DEFAULT_TOL).unwrap();
        let mut prev_mu = f64::INFINITY;
        let mut prev_beta = 0.0;
        for frac in [0.5, 0.9, 0.99, 0.999] {
            let gc = solve_beta_mu(&spec, m, frac * sol.nbar, DEFAULT_TOL).unwrap();
            assert!(gc.mu > 0.0 && gc.mu < prev_mu, "frac {frac}: mu {}", gc.mu);
            assert!(gc.beta > prev_beta && gc.beta < sol.b, "frac {frac}");
            prev_mu = gc.mu;
            prev_beta = gc.beta;
        }
        assert!((prev_beta - sol.b).abs() / sol.b <= 0.05);
    }

    #[test]
    fn condensed_profile_properties() {
        let spec = power(3.0, 1.0);
        let m = 1e4;
        let sol = solve_b(&spec, m, DEFAULT_TOL).unwrap();
        let n = sol.nbar + 100.0;
        let prof = condensed_profile(&spec, m, n, DEFAULT_TOL).unwrap();
        assert!((prof.n0bar - 100.0).abs() < 1e-6);
        // conservation: N0 + sum_{j>=1} Nbar_j = N
        let total = prof.n0bar + total_occupation(&spec, prof.b, DEFAULT_TOL).unwrap();
        assert!((total - n).abs() < 1e-6);
        // b does not depend on N in this regime
        let prof2 = condensed_profile(&spec, m, 10.0 * sol.nbar, DEFAULT_TOL).unwrap();
        assert_eq!(prof.b, prof2.b);
        // normal regime is rejected
        assert!(condensed_profile(&spec, m, sol.nbar / 2.0, DEFAULT_TOL).is_err());
    }

    #[test]
    fn regimes_partition_the_plane() {
        // Exactly one of solve_beta_mu / condensed_profile succeeds off the
        // boundary.
        let spec = power(3.0, 1.0);
        let m = 1e4;
        let t = threshold(&spec, m, DEFAULT_TOL).unwrap();
        for &n in &[t / 4.0, t / 2.0, 0.99 * t, 1.01 * t, 2.0 * t, 10.0 * t] {
            let gc = solve_beta_mu(&spec, m, n, DEFAULT_TOL);
            let cp = condensed_profile(&spec, m, n, DEFAULT_TOL);
            assert!(
                gc.is_ok() != cp.is_ok(),
                "N = {n}: gc {:?} cp {:?}",
                gc.is_ok(),
                cp.is_ok()
            );
        }
    }

    #[test]
    fn coloring_threshold_scaling() {
        let spec = power(3.0, 1.0);
        let m = 1e8;
        let base = threshold(&spec, m, DEFAULT_TOL).unwrap();
        assert_eq!(coloring_threshold(&spec, m, 1, DEFAULT_TOL).unwrap(), base);
        // ratio approaches K^(1/(d+1)); within 2% at K = 16, d = 3.
        let r16 = coloring_threshold(&spec, m, 16, DEFAULT_TOL).unwrap() / base;
        assert!((r16 / 2.0 - 1.0).abs() < 0.02, "ratio {r16}");
        // monotone in K
        let mut prev = 1.0;
        for &k in &[2u32, 4, 8, 16] {
            let r = coloring_threshold(&spec, m, k, DEFAULT_TOL).unwrap() / base;
            assert!(r > prev);
            prev = r;
        }
        assert!(coloring_threshold(&spec, m, 0, DEFAULT_TOL).is_err());
    }

    #[test]
    fn profile_weighted_sums() {
        let spec = power(3.0, 1.0);
        let sol = solve_b(&spec, 1e4, DEFAULT_TOL).unwrap();
        let prof = OccupationProfile::variable(spec.clone(), sol.b);
        let all = prof.weighted_sum(&FChoice::AllOnes);
        assert!((all - sol.nbar).abs() < 1e-8 * sol.nbar);
        let tail = prof.weighted_sum(&FChoice::TailFrom(5));
        let direct = cumulative_tail(&spec, sol.b, 5, DEFAULT_TOL).unwrap();
        assert!((tail - direct).abs() < 1e-8 * direct);
        // condensed profile exposes the level-0 mean
        let cond = OccupationProfile::condensed(spec.clone(), sol.b, 42.0);
        assert_eq!(cond.occupation(0), 42.0);
        let with0 = cond.weighted_sum(&FChoice::TailFrom(0));
        let without0 = cond.weighted_sum(&FChoice::AllOnes);
        assert!((with0 - without0 - 42.0).abs() < 1e-12);
    }
}
