//! Exact sequential sampling driven by the suffix weight tables, a Boltzmann
//! importance sampler for scales beyond the DP budget, and empirical tail
//! estimation.
//!
//! Reproducibility contract: every sample's randomness comes from its own
//! RNG stream, seeded by a counter derivation from `(batch seed, index)`.
//! Batch contents are therefore independent of how samples are partitioned
//! across tasks, and a longer batch extends a shorter one with the same seed.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand_core::SeedableRng;
use rand_pcg::Pcg64;

use crate::equilibrium::OccupationProfile;
use crate::error::{invalid, Error, Result};
use crate::exact::{Configuration, TableMode, WeightTable};
use crate::math::{stream_seed, uniform_f64};
use crate::multiplicity::MultiplicitySpec;
use crate::statistic::FChoice;
use crate::sums;
use crate::SERIES_CUTOFF;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    /// Exact draws from the normalized weights, level by level.
    ExactSequential,
    /// Independent-level proposals with importance weights.
    BoltzmannImportance,
}

/// A batch of sampled configurations.
///
/// Weights are identically 1 for exact sampling. For the importance sampler
/// they are `e^(b (energy - M))` (a constant rescaling of `e^(b energy)`,
/// irrelevant to self-normalized estimates but safe against overflow).
#[derive(Clone, Debug)]
pub struct SampleBatch {
    pub configurations: Vec<Configuration>,
    pub weights: Vec<f64>,
    pub seed: u64,
    pub scheme: Scheme,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.configurations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configurations.is_empty()
    }

    /// Self-normalized mean and standard error of `g` over the batch.
    pub fn weighted_mean<G: Fn(&Configuration) -> f64>(&self, g: G) -> (f64, f64) {
        let wsum: f64 = self.weights.iter().sum();
        let mean = self
            .configurations
            .iter()
            .zip(&self.weights)
            .map(|(c, w)| w * g(c))
            .sum::<f64>()
            / wsum;
        let var = self
            .configurations
            .iter()
            .zip(&self.weights)
            .map(|(c, w)| {
                let dev = g(c) - mean;
                w * w * dev * dev
            })
            .sum::<f64>();
        (mean, var.sqrt() / wsum)
    }
}

// ---------------------------------------------------------------------------
// Exact sequential sampling
// ---------------------------------------------------------------------------

/// Cumulative sums of `exp(ln_w - max)`, with total, for marginal draws.
struct LnCdf {
    cum: Vec<f64>,
}

impl LnCdf {
    fn new(ln_weights: &[f64]) -> Self {
        let max = ln_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut cum = Vec::with_capacity(ln_weights.len());
        let mut acc = 0.0;
        for &lw in ln_weights {
            if lw > f64::NEG_INFINITY {
                acc += (lw - max).exp();
            }
            cum.push(acc);
        }
        LnCdf { cum }
    }

    fn draw(&self, u: f64) -> usize {
        let total = *self.cum.last().expect("nonempty");
        let target = u * total;
        // first index with cum > target
        let mut i = match self
            .cum
            .binary_search_by(|c| c.partial_cmp(&target).expect("finite"))
        {
            Ok(i) | Err(i) => i.min(self.cum.len() - 1),
        };
        while self.cum[i] <= target && i + 1 < self.cum.len() {
            i += 1;
        }
        // rounding can park the target on a zero-mass cell; back off to the
        // nearest cell with mass
        while i > 0 && self.cum[i] == self.cum[i - 1] {
            i -= 1;
        }
        i
    }
}

/// Draws one level occupation from logits `ln C(q,k) + next[m - jk]`.
#[allow(clippy::too_many_arguments)]
fn draw_level(
    rng: &mut Pcg64,
    q: f64,
    j: usize,
    m_rem: usize,
    n_rem: Option<usize>,
    n_width: usize,
    next: &[f64],
    scratch: &mut Vec<f64>,
) -> usize {
    let k_cap = match n_rem {
        Some(n) => (m_rem / j).min(n),
        None => m_rem / j,
    };
    scratch.clear();
    let mut ln_c = 0.0;
    for k in 0..=k_cap {
        let rest = m_rem - j * k;
        let idx = match n_rem {
            Some(n) => rest * n_width + (n - k),
            None => rest,
        };
        scratch.push(ln_c + next[idx]);
        let kf = k as f64;
        ln_c += ((q + kf) / (1.0 + kf)).ln();
    }
    LnCdf::new(scratch).draw(uniform_f64(rng))
}

/// Exact draws from the variable-particle-number family, one suffix-table
/// conditional per level. Configurations are generated in one sweep over
/// checkpoint blocks so each stored row is rebuilt once per batch.
pub fn sample_variable(table: &WeightTable, seed: u64, count: usize) -> Result<SampleBatch> {
    if table.mode() != TableMode::Variable {
        return Err(invalid("sample_variable needs a variable-mode table"));
    }
    let root = table.ln_root_row();
    let energy_cdf = LnCdf::new(&root);

    let mut rngs: Vec<Pcg64> = (0..count)
        .map(|i| Pcg64::seed_from_u64(stream_seed(seed, i as u64)))
        .collect();
    let mut m_rem: Vec<usize> = rngs
        .iter_mut()
        .map(|rng| energy_cdf.draw(uniform_f64(rng)))
        .collect();
    let mut occs: Vec<Vec<(u32, u32)>> = vec![Vec::new(); count];

    let mut scratch = Vec::new();
    'blocks: for k in 0..table.block_count() {
        if m_rem.iter().all(|&m| m == 0) {
            break 'blocks;
        }
        let rows = table.block_ln_next_rows(k);
        let (lo, hi) = table.block_levels(k);
        for i in 0..count {
            if m_rem[i] == 0 {
                continue;
            }
            for j in lo..=hi {
                if m_rem[i] == 0 {
                    break;
                }
                let q = table.spec().multiplicity(j as u64);
                let n = draw_level(
                    &mut rngs[i],
                    q,
                    j,
                    m_rem[i],
                    None,
                    1,
                    &rows[j - lo],
                    &mut scratch,
                );
                if n > 0 {
                    occs[i].push((j as u32, n as u32));
                    m_rem[i] -= j * n;
                }
            }
        }
    }
    debug_assert!(m_rem.iter().all(|&m| m == 0));

    let configurations = occs
        .into_iter()
        .map(|pairs| Configuration::from_pairs(pairs).expect("distinct levels"))
        .collect::<Vec<_>>();
    Ok(SampleBatch {
        weights: vec![1.0; configurations.len()],
        configurations,
        seed,
        scheme: Scheme::ExactSequential,
    })
}

/// Exact draws from the two-constraint family with exactly `n` particles:
/// the joint (energy, above-ground particles) marginal folds in the
/// ground-level weight, then levels are sampled sequentially and level 0
/// absorbs the remainder.
pub fn sample_fixed(table: &WeightTable, n: u64, seed: u64, count: usize) -> Result<SampleBatch> {
    let n_max = match table.mode() {
        TableMode::Fixed { n_max } => n_max,
        TableMode::Variable => return Err(invalid("sample_fixed needs a fixed-mode table")),
    };
    let reachable = n.min(table.m_max());
    if n_max < reachable {
        return Err(invalid("table n_max too small: needs at least min(N, m_max)"));
    }
    if n > u64::from(u32::MAX) {
        return Err(invalid("particle count too large"));
    }
    let q0 = table.spec().q0();
    let root = table.ln_root_row();
    let m_count = table.m_max() as usize + 1;
    let n_width = n_max as usize + 1;

    // Joint logits over (m, k): ln C(n-k + q0 - 1, n-k) + ln G_1[m][k].
    let mut ln_q0 = Vec::with_capacity(reachable as usize + 1);
    for k in 0..=reachable {
        ln_q0.push(crate::exact::ln_gen_binomial(q0, (n - k) as u32));
    }
    let mut joint = vec![f64::NEG_INFINITY; m_count * (reachable as usize + 1)];
    for m in 0..m_count {
        for k in 0..=reachable as usize {
            joint[m * (reachable as usize + 1) + k] = ln_q0[k] + root[m * n_width + k];
        }
    }
    let joint_cdf = LnCdf::new(&joint);

    let mut rngs: Vec<Pcg64> = (0..count)
        .map(|i| Pcg64::seed_from_u64(stream_seed(seed, i as u64)))
        .collect();
    let mut m_rem: Vec<usize> = Vec::with_capacity(count);
    let mut n_rem: Vec<usize> = Vec::with_capacity(count);
    let mut occs: Vec<Vec<(u32, u32)>> = Vec::with_capacity(count);
    for rng in rngs.iter_mut() {
        let flat = joint_cdf.draw(uniform_f64(rng));
        let m = flat / (reachable as usize + 1);
        let k = flat % (reachable as usize + 1);
        m_rem.push(m);
        n_rem.push(k);
        let ground = n - k as u64;
        let mut pairs = Vec::new();
        if ground > 0 {
            pairs.push((0u32, ground as u32));
        }
        occs.push(pairs);
    }

    let mut scratch = Vec::new();
    'blocks: for blk in 0..table.block_count() {
        if m_rem.iter().all(|&m| m == 0) {
            break 'blocks;
        }
        let rows = table.block_ln_next_rows(blk);
        let (lo, hi) = table.block_levels(blk);
        for i in 0..count {
            if m_rem[i] == 0 {
                continue;
            }
            for j in lo..=hi {
                if m_rem[i] == 0 {
                    break;
                }
                let q = table.spec().multiplicity(j as u64);
                let k = draw_level(
                    &mut rngs[i],
                    q,
                    j,
                    m_rem[i],
                    Some(n_rem[i]),
                    n_width,
                    &rows[j - lo],
                    &mut scratch,
                );
                if k > 0 {
                    occs[i].push((j as u32, k as u32));
                    m_rem[i] -= j * k;
                    n_rem[i] -= k;
                }
            }
        }
    }
    debug_assert!(m_rem.iter().all(|&m| m == 0));
    debug_assert!(n_rem.iter().all(|&n| n == 0));

    let configurations = occs
        .into_iter()
        .map(|pairs| Configuration::from_pairs(pairs).expect("distinct levels"))
        .collect::<Vec<_>>();
    Ok(SampleBatch {
        weights: vec![1.0; configurations.len()],
        configurations,
        seed,
        scheme: Scheme::ExactSequential,
    })
}

// ---------------------------------------------------------------------------
// Boltzmann importance sampling
// ---------------------------------------------------------------------------

/// Minimum acceptance rate before the sampler refuses to continue.
const MIN_ACCEPTANCE: f64 = 1e-4;
/// Proposals drawn before the acceptance rate is enforced.
const CALIBRATION_PROPOSALS: usize = 10_000;

/// Independent-level proposals `P(N_j = k) ~ C(k + q_j - 1, k) e^(-b j k)`
/// (negative-binomial type, drawn by inversion on the ratio recurrence),
/// rejecting configurations with energy above `m`. Accepted configurations
/// carry importance weight `e^(b (energy - m))`; self-normalized estimates of
/// bounded statistics are consistent for the normalized-weight expectations.
///
/// Levels beyond the point where the expected proposal occupancy falls under
/// `1e-12` are never proposed; the neglected configurations carry comparable
/// probability mass, far below Monte Carlo resolution.
pub fn sample_boltzmann(
    spec: &MultiplicitySpec,
    b: f64,
    m: u64,
    seed: u64,
    count: usize,
) -> Result<SampleBatch> {
    if !(b > 0.0) {
        return Err(invalid("sample_boltzmann requires b > 0"));
    }
    // Level cap: expected occupancy above j_hi under the proposal (equally,
    // under the target) is below 1e-12.
    let d = spec.dimension();
    let mut j_hi = (SERIES_CUTOFF / b).ceil() as u64;
    loop {
        let geo = 1.0 / -(-b * j_hi as f64).exp_m1();
        let tail =
            spec.tail_coefficient(j_hi + 1) * geo * sums::power_exp_tail(d - 1.0, b, j_hi + 1);
        if tail <= 1e-12 {
            break;
        }
        j_hi += (10.0 / b).ceil() as u64;
    }
    let j_hi = j_hi.min(m.max(1));

    let mut configurations = Vec::new();
    let mut weights = Vec::new();
    let mut proposals = 0usize;
    for i in 0..count {
        let mut rng = Pcg64::seed_from_u64(stream_seed(seed, i as u64));
        proposals += 1;
        let mut pairs: Vec<(u32, u32)> = Vec::new();
        let mut energy = 0u64;
        let mut rejected = false;
        for j in 1..=j_hi {
            let k = draw_negative_binomial(&mut rng, spec.multiplicity(j), b * j as f64);
            if k > 0 {
                energy += j * u64::from(k);
                if energy > m {
                    rejected = true;
                    break;
                }
                pairs.push((j as u32, k));
            }
        }
        if rejected {
            continue;
        }
        configurations.push(Configuration::from_pairs(pairs).expect("distinct levels"));
        weights.push((b * (energy as f64 - m as f64)).exp());
        if proposals == CALIBRATION_PROPOSALS {
            let acceptance = configurations.len() as f64 / proposals as f64;
            if acceptance < MIN_ACCEPTANCE {
                return Err(Error::Efficiency { acceptance });
            }
        }
    }
    if configurations.is_empty() {
        return Err(Error::Efficiency { acceptance: 0.0 });
    }
    Ok(SampleBatch {
        configurations,
        weights,
        seed,
        scheme: Scheme::BoltzmannImportance,
    })
}

/// Inversion sampling of `P(k) ~ C(k + q - 1, k) x^k`, `x = e^(-bj)`, via
/// the ratio recurrence `P(k+1)/P(k) = x (q + k) / (k + 1)`; the walk stops
/// once the remaining mass is below 1e-15.
fn draw_negative_binomial(rng: &mut Pcg64, q: f64, bj: f64) -> u32 {
    let x = (-bj).exp();
    let mut p = (q * (-x).ln_1p()).exp(); // (1 - x)^q
    let mut cdf = p;
    let mut k = 0u32;
    let u = uniform_f64(rng);
    while u > cdf {
        p *= x * (q + f64::from(k)) / f64::from(k + 1);
        k += 1;
        cdf += p;
        if p < 1e-18 || k > 100_000_000 {
            break;
        }
    }
    k
}

// ---------------------------------------------------------------------------
// Empirical tails
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
pub struct TailEstimate {
    /// Importance-weighted frequency of `|sum_j f_j (N_j - Nbar_j)| > delta`.
    pub frequency: f64,
    /// Standard error of the frequency (delta-method for weighted batches,
    /// binomial for exact ones).
    pub stderr: f64,
}

pub fn empirical_tail(
    batch: &SampleBatch,
    f: &FChoice,
    reference: &OccupationProfile,
    delta: f64,
) -> Result<TailEstimate> {
    f.validate()?;
    if batch.is_empty() {
        return Err(invalid("empty sample batch"));
    }
    let center = reference.weighted_sum(f);
    let (frequency, stderr) = batch.weighted_mean(|c| {
        if (c.linear_sum(f) - center).abs() > delta {
            1.0
        } else {
            0.0
        }
    });
    Ok(TailEstimate { frequency, stderr })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{self, enumerate, Ensemble};
    use crate::math::LogSum;
    use crate::DEFAULT_TOL;
    use alloc::collections::BTreeMap;

    fn qj_is_j() -> MultiplicitySpec {
        MultiplicitySpec::power_law(2.0, 1.0).unwrap()
    }

    #[test]
    fn zero_energy_always_empty() {
        let table = WeightTable::variable(&qj_is_j(), 0).unwrap();
        let batch = sample_variable(&table, 7, 50).unwrap();
        assert!(batch.configurations.iter().all(|c| c == &Configuration::empty()));
        assert!(batch.weights.iter().all(|&w| w == 1.0));
    }

    #[test]
    fn zero_particles_always_empty() {
        let spec = qj_is_j();
        let table = WeightTable::fixed(&spec, 4, 0).unwrap();
        let batch = sample_fixed(&table, 0, 3, 20).unwrap();
        assert!(batch.configurations.iter().all(|c| c == &Configuration::empty()));
    }

    #[test]
    fn seeded_replay_and_prefix_property() {
        let spec = qj_is_j();
        let table = WeightTable::variable(&spec, 12).unwrap();
        let a = sample_variable(&table, 42, 10).unwrap();
        let b = sample_variable(&table, 42, 10).unwrap();
        assert_eq!(a.configurations, b.configurations);
        // counter-based streams: a longer batch extends a shorter one
        let c = sample_variable(&table, 42, 25).unwrap();
        assert_eq!(&c.configurations[..10], &a.configurations[..]);
        // different seed differs somewhere
        let d = sample_variable(&table, 43, 10).unwrap();
        assert_ne!(a.configurations, d.configurations);
    }

    #[test]
    fn particle_conservation_in_fixed_sampler() {
        let spec = qj_is_j().with_q0(2.0).unwrap();
        let table = WeightTable::fixed(&spec, 8, 5).unwrap();
        let batch = sample_fixed(&table, 5, 11, 300).unwrap();
        for c in &batch.configurations {
            assert_eq!(c.particles(), 5);
            assert!(c.energy() <= 8);
        }
    }

    #[test]
    fn energy_marginal_matches_exact() {
        let spec = qj_is_j();
        let m = 6u64;
        let table = WeightTable::variable(&spec, m).unwrap();
        let count = 40_000;
        let batch = sample_variable(&table, 2024, count).unwrap();
        let w_exact = table.exact_energy_weight(m).unwrap().ln();
        let w_total = table.cumulative_weight(m).unwrap().ln();
        let p = (w_exact - w_total).exp();
        let hits = batch
            .configurations
            .iter()
            .filter(|c| c.energy() == m)
            .count() as f64;
        let freq = hits / count as f64;
        let se = (p * (1.0 - p) / count as f64).sqrt();
        assert!(
            (freq - p).abs() <= 3.0 * se,
            "freq {freq} vs p {p} (se {se})"
        );
    }

    #[test]
    fn fixed_frequencies_match_weights() {
        // M=2, N=1, q_j=j, q0=1: three configurations with probabilities
        // 1/4, 1/4, 2/4.
        let spec = qj_is_j();
        let table = WeightTable::fixed(&spec, 2, 1).unwrap();
        let count = 40_000;
        let batch = sample_fixed(&table, 1, 5, count).unwrap();
        let mut freq: BTreeMap<Configuration, usize> = BTreeMap::new();
        for c in &batch.configurations {
            *freq.entry(c.clone()).or_default() += 1;
        }
        assert_eq!(freq.len(), 3);
        let expect = [
            (Configuration::from_pairs([(0, 1)]).unwrap(), 0.25),
            (Configuration::from_pairs([(1, 1)]).unwrap(), 0.25),
            (Configuration::from_pairs([(2, 1)]).unwrap(), 0.50),
        ];
        for (config, p) in expect {
            let f = *freq.get(&config).unwrap() as f64 / count as f64;
            let se = (p * (1.0 - p) / count as f64).sqrt();
            assert!((f - p).abs() <= 3.0 * se, "{config:?}: {f} vs {p}");
        }
    }

    /// Pearson goodness-of-fit p-value; cells with expectation under 5 are
    /// pooled so the asymptotic chi-square law applies.
    fn chi_square_p_value(
        counts: &BTreeMap<Configuration, usize>,
        exact: &[(Configuration, f64)],
        total_draws: usize,
    ) -> f64 {
        let mut cells: Vec<(f64, f64)> = exact
            .iter()
            .map(|(config, p)| {
                let expected = p * total_draws as f64;
                let observed = counts.get(config).copied().unwrap_or(0) as f64;
                (expected, observed)
            })
            .collect();
        cells.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut pooled: Vec<(f64, f64)> = Vec::new();
        let mut acc = (0.0, 0.0);
        for (e, o) in cells {
            acc.0 += e;
            acc.1 += o;
            if acc.0 >= 5.0 {
                pooled.push(acc);
                acc = (0.0, 0.0);
            }
        }
        if acc.0 > 0.0 {
            match pooled.last_mut() {
                Some(last) => {
                    last.0 += acc.0;
                    last.1 += acc.1;
                }
                None => pooled.push(acc),
            }
        }
        let chi2: f64 = pooled
            .iter()
            .map(|(e, o)| (o - e) * (o - e) / e)
            .sum();
        let dof = (pooled.len() - 1).max(1) as f64;
        sums::gamma_q(dof / 2.0, chi2 / 2.0)
    }

    fn exact_distribution(
        spec: &MultiplicitySpec,
        m: u64,
        ensemble: Ensemble,
    ) -> Vec<(Configuration, f64)> {
        let configs = enumerate(spec, m, ensemble, None).unwrap();
        let mut acc = LogSum::new();
        for (_, w) in &configs {
            acc.add(w.ln());
        }
        let ln_total = acc.value();
        configs
            .into_iter()
            .map(|(c, w)| {
                let p = (w.ln() - ln_total).exp();
                (c, p)
            })
            .collect()
    }

    fn spec_matrix() -> Vec<(&'static str, MultiplicitySpec)> {
        alloc::vec![
            (
                "q_j=1",
                MultiplicitySpec::power_law(2.0, 1.0)
                    .unwrap()
                    .with_prefix(alloc::vec![1.0; 16])
                    .unwrap(),
            ),
            ("q_j=j", qj_is_j()),
            ("osc d=3", MultiplicitySpec::oscillator(3).unwrap()),
            ("q_j=1.5j", MultiplicitySpec::power_law(2.0, 1.5).unwrap()),
        ]
    }

    #[test]
    fn exactness_chi_square_variable() {
        for (name, spec) in spec_matrix() {
            let exact = exact_distribution(&spec, 8, Ensemble::VariableN);
            let table = WeightTable::variable(&spec, 8).unwrap();
            let count = 100_000;
            let batch = sample_variable(&table, 31415, count).unwrap();
            let mut counts: BTreeMap<Configuration, usize> = BTreeMap::new();
            for c in batch.configurations {
                *counts.entry(c).or_default() += 1;
            }
            let p = chi_square_p_value(&counts, &exact, count);
            assert!(p > 0.001, "{name}: chi-square p = {p}");
        }
    }

    #[test]
    fn exactness_chi_square_fixed() {
        for (name, spec) in spec_matrix() {
            let exact = exact_distribution(&spec, 8, Ensemble::FixedN { n: 4 });
            let table = WeightTable::fixed(&spec, 8, 4).unwrap();
            let count = 100_000;
            let batch = sample_fixed(&table, 4, 27182, count).unwrap();
            let mut counts: BTreeMap<Configuration, usize> = BTreeMap::new();
            for c in batch.configurations {
                *counts.entry(c).or_default() += 1;
            }
            let p = chi_square_p_value(&counts, &exact, count);
            assert!(p > 0.001, "{name}: chi-square p = {p}");
        }
    }

    #[test]
    fn boltzmann_proposal_mean_is_equilibrium_occupation() {
        // Mean of the level-j proposal equals q_j/(e^(bj)-1): check the
        // inversion sampler against the analytic mean at a few levels.
        let spec = qj_is_j();
        let b = 0.7;
        for j in [1u64, 2, 4] {
            let mut rng = Pcg64::seed_from_u64(9 + j);
            let n = 200_000;
            let mut acc = 0.0;
            let mut acc2 = 0.0;
            for _ in 0..n {
                let k = f64::from(draw_negative_binomial(&mut rng, spec.multiplicity(j), b * j as f64));
                acc += k;
                acc2 += k * k;
            }
            let mean = acc / n as f64;
            let var = acc2 / n as f64 - mean * mean;
            let expect = crate::equilibrium::occupation(&spec, b, j);
            let se = (var / n as f64).sqrt();
            assert!(
                (mean - expect).abs() <= 4.0 * se + 1e-9,
                "j={j}: {mean} vs {expect}"
            );
        }
    }

    #[test]
    fn boltzmann_consistency_with_exact_oracle() {
        let spec = qj_is_j();
        let m = 20u64;
        let exact = exact_distribution(&spec, m, Ensemble::VariableN);
        let oracle_particles: f64 = exact
            .iter()
            .map(|(c, p)| c.particles() as f64 * p)
            .sum();
        let b = crate::equilibrium::solve_b(&spec, m as f64, DEFAULT_TOL)
            .unwrap()
            .b;
        let batch = sample_boltzmann(&spec, b, m, 777, 100_000).unwrap();
        let (mean, se) = batch.weighted_mean(|c| c.particles() as f64);
        assert!(
            (mean - oracle_particles).abs() <= 3.0 * se,
            "{mean} vs {oracle_particles} (se {se})"
        );
        let oracle_n1: f64 = exact.iter().map(|(c, p)| f64::from(c.count(1)) * p).sum();
        let (mean_n1, se_n1) = batch.weighted_mean(|c| f64::from(c.count(1)));
        assert!(
            (mean_n1 - oracle_n1).abs() <= 3.0 * se_n1,
            "{mean_n1} vs {oracle_n1} (se {se_n1})"
        );
        // A mis-set b (2x too large) is still consistent, just noisier.
        let batch = sample_boltzmann(&spec, 2.0 * b, m, 778, 100_000).unwrap();
        let (mean, se) = batch.weighted_mean(|c| c.particles() as f64);
        assert!(
            (mean - oracle_particles).abs() <= 5.0 * se,
            "{mean} vs {oracle_particles} (se {se})"
        );
    }

    #[test]
    fn boltzmann_error_shrinks_with_proposals() {
        let spec = qj_is_j();
        let m = 20u64;
        let exact = exact_distribution(&spec, m, Ensemble::VariableN);
        let oracle: f64 = exact.iter().map(|(c, p)| c.energy() as f64 * p).sum();
        let b = crate::equilibrium::solve_b(&spec, m as f64, DEFAULT_TOL)
            .unwrap()
            .b;
        let mut errors = Vec::new();
        let mut stderrs = Vec::new();
        for &count in &[1_000usize, 10_000, 100_000] {
            let batch = sample_boltzmann(&spec, b, m, 4242, count).unwrap();
            let (mean, se) = batch.weighted_mean(|c| c.energy() as f64);
            errors.push((mean - oracle).abs());
            stderrs.push(se);
        }
        // errors shrink along the prefix chain, within sampling noise
        assert!(errors[2] < errors[0], "{errors:?}");
        for i in 0..3 {
            assert!(
                errors[i] <= 3.0 * stderrs[i],
                "stage {i}: {errors:?} vs {stderrs:?}"
            );
        }
        assert!(errors[1] <= errors[0] + 2.0 * (stderrs[0] + stderrs[1]), "{errors:?}");
    }

    #[test]
    fn empirical_tail_basics() {
        let spec = qj_is_j();
        let m = 8u64;
        let sol = crate::equilibrium::solve_b(&spec, m as f64, DEFAULT_TOL).unwrap();
        let profile = OccupationProfile::variable(spec.clone(), sol.b);
        let table = WeightTable::variable(&spec, m).unwrap();
        let batch = sample_variable(&table, 99, 20_000).unwrap();

        // f = 0 with delta = 0: the statistic is identically zero and the
        // event is strict, so the frequency vanishes.
        let zero = FChoice::Custom(vec![]);
        let t = empirical_tail(&batch, &zero, &profile, 0.0).unwrap();
        assert_eq!(t.frequency, 0.0);
        // delta = infinity: nothing exceeds it.
        let t = empirical_tail(&batch, &FChoice::AllOnes, &profile, f64::INFINITY).unwrap();
        assert_eq!(t.frequency, 0.0);

        // Matches the exact tail of the enumerated law within 3 stderr.
        let stat =
            exact::exact_linear_statistic(&spec, m, &FChoice::AllOnes, Ensemble::VariableN, None)
                .unwrap();
        for delta in [0.5, 1.0, 2.0] {
            let t = empirical_tail(&batch, &FChoice::AllOnes, &profile, delta).unwrap();
            let exact_tail = stat.tail_abs(delta);
            assert!(
                (t.frequency - exact_tail).abs() <= 3.0 * t.stderr.max(1e-4),
                "delta {delta}: {} vs {exact_tail}",
                t.frequency
            );
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let spec = qj_is_j();
        let table = WeightTable::variable(&spec, 5).unwrap();
        assert!(sample_fixed(&table, 2, 1, 5).is_err());
        let fixed = WeightTable::fixed(&spec, 5, 2).unwrap();
        assert!(sample_variable(&fixed, 1, 5).is_err());
        assert!(sample_boltzmann(&spec, 0.0, 5, 1, 5).is_err());
        let batch = sample_variable(&table, 1, 5).unwrap();
        let profile = OccupationProfile::variable(spec.clone(), 1.0);
        assert!(
            empirical_tail(&batch, &FChoice::Custom(vec![2.0]), &profile, 1.0).is_err()
        );
    }
}
