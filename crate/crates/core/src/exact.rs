//! Exact weight computation: configurations, suffix dynamic programming over
//! levels, generating-function coefficients, exhaustive enumeration, and
//! exact distributions of linear statistics.
//!
//! The central object is the suffix table `G_j[m]` (variable particle
//! number) or `G_j[m][n]` (fixed): the total weight of configurations
//! supported on levels `>= j` with energy exactly `m` (and `n` particles),
//! satisfying
//!
//! ```text
//! G_j[m] = sum_k C(k + q_j - 1, k) * G_{j+1}[m - j k]
//! ```
//!
//! with base `G_{L+1}[m] = [m == 0]`. Row `G_1` answers every weight query;
//! the sampler consumes the same tables as conditional distributions.
//!
//! Arithmetic is exact (big integers) when every multiplicity in play is an
//! integer and the energy bound is small, and log-scale floating point
//! otherwise; weights grow like `e^S(M)` and overflow any fixed-width
//! format. Tables store only every `stride`-th row and rebuild the rest on
//! demand, keeping memory at `O(M^(3/2))` values for the default stride.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

pub use num_bigint::BigUint;
#[allow(unused_imports)]
use num_traits::Float;
use num_traits::{One, ToPrimitive, Zero};

use crate::equilibrium::{self, OccupationProfile, RegimeKind};
use crate::error::{invalid, Error, Result};
use crate::math::LogSum;
use crate::multiplicity::MultiplicitySpec;
use crate::statistic::FChoice;
use crate::{DEFAULT_ENUM_CAP, DEFAULT_TOL};

/// Default memory budget for weight tables (2 GiB).
pub const DEFAULT_TABLE_BUDGET: u64 = 2 * 1024 * 1024 * 1024;

/// Largest energy bound for which exact integer arithmetic is picked
/// automatically.
const EXACT_AUTO_LIMIT: u64 = 500;
/// Hard cap on forced exact arithmetic.
const EXACT_HARD_LIMIT: u64 = 2000;

// ---------------------------------------------------------------------------
// Configurations and weights
// ---------------------------------------------------------------------------

/// A finitely supported occupation sequence with cached totals.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Configuration {
    occ: BTreeMap<u32, u32>,
    energy: u64,
    particles: u64,
}

impl Configuration {
    pub fn empty() -> Self {
        Configuration {
            occ: BTreeMap::new(),
            energy: 0,
            particles: 0,
        }
    }

    pub fn from_pairs<I: IntoIterator<Item = (u32, u32)>>(pairs: I) -> Result<Self> {
        let mut c = Configuration::empty();
        for (j, n) in pairs {
            if n == 0 {
                continue;
            }
            if c.occ.insert(j, n).is_some() {
                return Err(invalid("duplicate level in configuration"));
            }
            c.energy += u64::from(j) * u64::from(n);
            c.particles += u64::from(n);
        }
        Ok(c)
    }

    /// Occupation of level `j` (zero off the support).
    pub fn count(&self, j: u32) -> u32 {
        self.occ.get(&j).copied().unwrap_or(0)
    }

    /// `sum_j j N_j`.
    pub fn energy(&self) -> u64 {
        self.energy
    }

    /// `sum_j N_j`, including level 0.
    pub fn particles(&self) -> u64 {
        self.particles
    }

    /// The nonzero `(level, count)` pairs in increasing level order.
    pub fn support(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.occ.iter().map(|(&j, &n)| (j, n))
    }

    /// `sum_j f_j N_j` over the support.
    pub fn linear_sum(&self, f: &FChoice) -> f64 {
        self.support()
            .map(|(j, n)| f.eval(j) * f64::from(n))
            .sum()
    }
}

/// A nonnegative weight, exact when the arithmetic allowed it.
#[derive(Clone, Debug)]
pub enum Weight {
    Exact(BigUint),
    Ln(f64),
}

impl Weight {
    /// Natural log of the weight; `-inf` for zero.
    pub fn ln(&self) -> f64 {
        match self {
            Weight::Exact(x) => ln_biguint(x),
            Weight::Ln(v) => *v,
        }
    }

    /// The weight as `f64` (may be infinite for huge exact values).
    pub fn to_f64(&self) -> f64 {
        match self {
            Weight::Exact(x) => x.to_f64().unwrap_or(f64::INFINITY),
            Weight::Ln(v) => v.exp(),
        }
    }

    pub fn as_exact(&self) -> Option<&BigUint> {
        match self {
            Weight::Exact(x) => Some(x),
            Weight::Ln(_) => None,
        }
    }
}

pub(crate) fn ln_biguint(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 53 {
        (x.to_u64().expect("fits") as f64).ln()
    } else {
        let shift = bits - 53;
        let top = (x >> shift).to_u64().expect("53 bits") as f64;
        top.ln() + shift as f64 * core::f64::consts::LN_2
    }
}

/// `ln C(n + q - 1, n)` for real `q > 0`, as the left-to-right product
/// `prod_{i<n} (q + i) / (1 + i)`.
pub(crate) fn ln_gen_binomial(q: f64, n: u32) -> f64 {
    let mut acc = 0.0;
    for i in 0..n {
        let i = f64::from(i);
        acc += ((q + i) / (1.0 + i)).ln();
    }
    acc
}

/// Exact `C(n + q - 1, n)` for integer `q >= 1`.
pub(crate) fn exact_gen_binomial(q: u64, n: u32) -> BigUint {
    let mut acc = BigUint::one();
    for i in 0..u64::from(n) {
        acc = acc * (q + i) / (i + 1);
    }
    acc
}

/// Product of per-level generalized binomials; level 0 weighted by `q_0`.
/// Exact when every multiplicity in the support (and `q_0`, if level 0 is
/// occupied) is an integer.
pub fn config_weight(spec: &MultiplicitySpec, config: &Configuration) -> Weight {
    let mut exact = Some(BigUint::one());
    for (j, n) in config.support() {
        let q_int = if j == 0 {
            spec.q0_integer()
        } else {
            integer_q(spec.multiplicity(u64::from(j)))
        };
        match (exact.as_mut(), q_int) {
            (Some(acc), Some(qi)) => *acc *= exact_gen_binomial(qi, n),
            _ => {
                exact = None;
                break;
            }
        }
    }
    if let Some(acc) = exact {
        return Weight::Exact(acc);
    }
    let mut ln = 0.0;
    for (j, n) in config.support() {
        let q = if j == 0 {
            spec.q0()
        } else {
            spec.multiplicity(u64::from(j))
        };
        ln += ln_gen_binomial(q, n);
    }
    Weight::Ln(ln)
}

fn integer_q(q: f64) -> Option<u64> {
    let r = q.round();
    if (1.0..=9.0e15).contains(&r) && (q - r).abs() <= 1e-9 * r.max(1.0) {
        Some(r as u64)
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// Weight tables
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableMode {
    /// `G_j[m]`: energy only.
    Variable,
    /// `G_j[m][n]`: energy and particle count on levels `>= 1`,
    /// `n <= n_max`. Level 0 is folded in at query/sampling time.
    Fixed { n_max: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arithmetic {
    /// Exact integers when the spec allows it and the table is small.
    Auto,
    /// Force exact integers (error for non-integer multiplicities).
    Exact,
    /// Force log-scale reals.
    LogScale,
}

#[derive(Debug)]
enum TableData {
    Ln(Vec<Vec<f64>>),
    Exact(Vec<Vec<BigUint>>),
}

/// Checkpointed suffix-weight table.
#[derive(Debug)]
pub struct WeightTable {
    spec: MultiplicitySpec,
    m_max: usize,
    mode: TableMode,
    stride: usize,
    /// Rows for levels `1 + k * stride`, `k = 0, 1, ...`.
    checkpoints: TableData,
    /// Integer multiplicities when the table is exact.
    exact_q: Option<Vec<u64>>,
}

impl WeightTable {
    pub fn spec(&self) -> &MultiplicitySpec {
        &self.spec
    }

    pub fn m_max(&self) -> u64 {
        self.m_max as u64
    }

    pub fn mode(&self) -> TableMode {
        self.mode
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn is_exact(&self) -> bool {
        self.exact_q.is_some()
    }

    /// Number of levels the recurrence runs over.
    pub(crate) fn levels(&self) -> usize {
        self.m_max.max(1)
    }

    fn n_width(&self) -> usize {
        match self.mode {
            TableMode::Variable => 1,
            TableMode::Fixed { n_max } => n_max as usize + 1,
        }
    }

    fn row_width(&self) -> usize {
        (self.m_max + 1) * self.n_width()
    }

    fn check_m(&self, m: u64) -> Result<usize> {
        if m > self.m_max as u64 {
            return Err(invalid("energy exceeds the table bound"));
        }
        Ok(m as usize)
    }

    /// `w(energy = m)` on levels >= 1 (variable mode).
    pub fn exact_energy_weight(&self, m: u64) -> Result<Weight> {
        if self.mode != TableMode::Variable {
            return Err(invalid("exact_energy_weight needs a variable-mode table"));
        }
        let m = self.check_m(m)?;
        Ok(match &self.checkpoints {
            TableData::Ln(rows) => Weight::Ln(rows[0][m]),
            TableData::Exact(rows) => Weight::Exact(rows[0][m].clone()),
        })
    }

    /// `w(energy <= m)` on levels >= 1 (variable mode).
    pub fn cumulative_weight(&self, m: u64) -> Result<Weight> {
        if self.mode != TableMode::Variable {
            return Err(invalid("cumulative_weight needs a variable-mode table"));
        }
        let m = self.check_m(m)?;
        Ok(match &self.checkpoints {
            TableData::Ln(rows) => {
                let mut acc = LogSum::new();
                for v in &rows[0][..=m] {
                    acc.add(*v);
                }
                Weight::Ln(acc.value())
            }
            TableData::Exact(rows) => {
                let mut acc = BigUint::zero();
                for v in &rows[0][..=m] {
                    acc += v;
                }
                Weight::Exact(acc)
            }
        })
    }

    /// `G_1[m][n]` (fixed mode): weight with energy exactly `m` and `n`
    /// particles on levels >= 1.
    pub fn joint_weight(&self, m: u64, n: u64) -> Result<Weight> {
        let n_max = match self.mode {
            TableMode::Fixed { n_max } => n_max,
            TableMode::Variable => {
                return Err(invalid("joint_weight needs a fixed-mode table"))
            }
        };
        let m = self.check_m(m)?;
        if n > n_max {
            return Err(invalid("particle count exceeds the table bound"));
        }
        let idx = m * self.n_width() + n as usize;
        Ok(match &self.checkpoints {
            TableData::Ln(rows) => Weight::Ln(rows[0][idx]),
            TableData::Exact(rows) => Weight::Exact(rows[0][idx].clone()),
        })
    }

    /// `sum_{m <= m_max} G_1[m][n]` (fixed mode).
    pub fn particle_marginal(&self, n: u64) -> Result<Weight> {
        let n_max = match self.mode {
            TableMode::Fixed { n_max } => n_max,
            TableMode::Variable => {
                return Err(invalid("particle_marginal needs a fixed-mode table"))
            }
        };
        if n > n_max {
            return Err(invalid("particle count exceeds the table bound"));
        }
        let nw = self.n_width();
        Ok(match &self.checkpoints {
            TableData::Ln(rows) => {
                let mut acc = LogSum::new();
                for m in 0..=self.m_max {
                    acc.add(rows[0][m * nw + n as usize]);
                }
                Weight::Ln(acc.value())
            }
            TableData::Exact(rows) => {
                let mut acc = BigUint::zero();
                for m in 0..=self.m_max {
                    acc += &rows[0][m * nw + n as usize];
                }
                Weight::Exact(acc)
            }
        })
    }

    /// Total weight of the two-constraint family: energy at most `m_max`,
    /// exactly `n_total` particles counting level 0, whose multiplicity
    /// `q_0` weights the surplus `n_total - n`.
    pub fn fixed_weight(&self, n_total: u64) -> Result<Weight> {
        let n_max = match self.mode {
            TableMode::Fixed { n_max } => n_max,
            TableMode::Variable => return Err(invalid("fixed_weight needs a fixed-mode table")),
        };
        let reachable = n_total.min(self.m_max as u64);
        if n_max < reachable {
            return Err(invalid(
                "table n_max too small: needs at least min(N, m_max)",
            ));
        }
        let q0 = self.spec.q0();
        let exact_ok = self.is_exact() && self.spec.q0_integer().is_some();
        if exact_ok {
            let q0i = self.spec.q0_integer().expect("checked");
            let mut acc = BigUint::zero();
            for k in 0..=reachable {
                let marge = match self.particle_marginal(k)? {
                    Weight::Exact(x) => x,
                    Weight::Ln(_) => unreachable!("exact table"),
                };
                let n0 = (n_total - k)
                    .to_u32()
                    .ok_or_else(|| invalid("ground-level count too large"))?;
                acc += marge * exact_gen_binomial(q0i, n0);
            }
            Ok(Weight::Exact(acc))
        } else {
            let mut acc = LogSum::new();
            for k in 0..=reachable {
                let n0 = (n_total - k)
                    .to_u32()
                    .ok_or_else(|| invalid("ground-level count too large"))?;
                acc.add(self.particle_marginal(k)?.ln() + ln_gen_binomial(q0, n0));
            }
            Ok(Weight::Ln(acc.value()))
        }
    }

    // -- rows for the sampler -------------------------------------------------

    /// Log-scale projection of the level-1 row.
    pub(crate) fn ln_root_row(&self) -> Vec<f64> {
        match &self.checkpoints {
            TableData::Ln(rows) => rows[0].clone(),
            TableData::Exact(rows) => rows[0].iter().map(ln_biguint).collect(),
        }
    }

    fn ln_checkpoint(&self, k: usize) -> Vec<f64> {
        match &self.checkpoints {
            TableData::Ln(rows) => rows[k].clone(),
            TableData::Exact(rows) => rows[k].iter().map(ln_biguint).collect(),
        }
    }

    fn ln_base_row(&self) -> Vec<f64> {
        let mut row = vec![f64::NEG_INFINITY; self.row_width()];
        row[0] = 0.0;
        row
    }

    pub(crate) fn block_count(&self) -> usize {
        self.levels().div_ceil(self.stride)
    }

    /// Levels covered by block `k`: `[1 + k s, min((k+1) s, L)]`.
    pub(crate) fn block_levels(&self, k: usize) -> (usize, usize) {
        let lo = 1 + k * self.stride;
        let hi = ((k + 1) * self.stride).min(self.levels());
        (lo, hi)
    }

    /// Log-scale rows `G_{j+1}` for every level `j` in block `k`, indexed by
    /// `j - lo`: entry `i` is the row of level `lo + i + 1`.
    pub(crate) fn block_ln_next_rows(&self, k: usize) -> Vec<Vec<f64>> {
        let (lo, hi) = self.block_levels(k);
        let top = hi + 1; // need rows for levels lo+1 ..= hi+1
        let top_row = if top > self.levels() {
            self.ln_base_row()
        } else {
            // top is the next checkpoint: top = 1 + (k+1) stride <= L
            self.ln_checkpoint(checkpoint_index_of_level(top, self.stride))
        };
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(hi - lo + 1);
        rows.push(top_row);
        // Step downward from level `top` to `lo + 1`.
        for level in (lo + 1..top).rev() {
            let next = rows.last().expect("nonempty");
            let row = match self.mode {
                TableMode::Variable => {
                    step_var_ln(self.spec.multiplicity(level as u64), level, self.m_max, next)
                }
                TableMode::Fixed { .. } => step_fixed_ln(
                    self.spec.multiplicity(level as u64),
                    level,
                    self.m_max,
                    self.n_width() - 1,
                    next,
                ),
            };
            rows.push(row);
        }
        rows.reverse();
        rows
    }
}

fn checkpoint_index_of_level(level: usize, stride: usize) -> usize {
    debug_assert_eq!((level - 1) % stride, 0);
    (level - 1) / stride
}

// -- level steps -------------------------------------------------------------

fn step_var_ln(q: f64, j: usize, m_max: usize, next: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(m_max + 1);
    out.extend_from_slice(&next[..j.min(m_max + 1)]);
    for m in j..=m_max {
        let mut acc = LogSum::new();
        let mut ln_c = 0.0;
        let mut k = 0usize;
        loop {
            let rest = m - j * k;
            acc.add(ln_c + next[rest]);
            k += 1;
            if j * k > m {
                break;
            }
            let kf = (k - 1) as f64;
            ln_c += ((q + kf) / (1.0 + kf)).ln();
        }
        out.push(acc.value());
    }
    out
}

fn step_var_exact(q: u64, j: usize, m_max: usize, next: &[BigUint]) -> Vec<BigUint> {
    let mut out = Vec::with_capacity(m_max + 1);
    out.extend_from_slice(&next[..j.min(m_max + 1)]);
    for m in j..=m_max {
        let mut acc = BigUint::zero();
        let mut c = BigUint::one();
        let mut k = 0u64;
        loop {
            let rest = m - j * k as usize;
            acc += &c * &next[rest];
            k += 1;
            if j * k as usize > m {
                break;
            }
            c = c * (q + k - 1) / k;
        }
        out.push(acc);
    }
    out
}

fn step_fixed_ln(q: f64, j: usize, m_max: usize, n_max: usize, next: &[f64]) -> Vec<f64> {
    let nw = n_max + 1;
    let mut out = Vec::with_capacity((m_max + 1) * nw);
    let copy_to = j.min(m_max + 1);
    out.extend_from_slice(&next[..copy_to * nw]);
    for m in j..=m_max {
        for n in 0..=n_max {
            // n particles on levels >= j carry energy >= n j.
            if n * j > m {
                out.push(f64::NEG_INFINITY);
                continue;
            }
            let mut acc = LogSum::new();
            let mut ln_c = 0.0;
            let mut k = 0usize;
            loop {
                let rest = m - j * k;
                acc.add(ln_c + next[rest * nw + (n - k)]);
                k += 1;
                if k > n || j * k > m {
                    break;
                }
                let kf = (k - 1) as f64;
                ln_c += ((q + kf) / (1.0 + kf)).ln();
            }
            out.push(acc.value());
        }
    }
    out
}

fn step_fixed_exact(q: u64, j: usize, m_max: usize, n_max: usize, next: &[BigUint]) -> Vec<BigUint> {
    let nw = n_max + 1;
    let mut out = Vec::with_capacity((m_max + 1) * nw);
    let copy_to = j.min(m_max + 1);
    out.extend_from_slice(&next[..copy_to * nw]);
    for m in j..=m_max {
        for n in 0..=n_max {
            if n * j > m {
                out.push(BigUint::zero());
                continue;
            }
            let mut acc = BigUint::zero();
            let mut c = BigUint::one();
            let mut k = 0usize;
            loop {
                let rest = m - j * k;
                acc += &c * &next[rest * nw + (n - k)];
                k += 1;
                if k > n || j * k > m {
                    break;
                }
                c = c * (q + k as u64 - 1) / (k as u64);
            }
            out.push(acc);
        }
    }
    out
}

// -- construction ------------------------------------------------------------

/// Builds the checkpointed suffix table up to energy `m_max`.
///
/// `stride` defaults to `ceil(sqrt(m_max + 1))`; storage plus the sampler's
/// block cache must fit in `budget_bytes` (default 2 GiB) for log-scale
/// tables, otherwise a capacity error reports a workable stride.
pub fn build_table(
    spec: &MultiplicitySpec,
    m_max: u64,
    mode: TableMode,
    stride: Option<usize>,
    arithmetic: Arithmetic,
    budget_bytes: Option<u64>,
) -> Result<WeightTable> {
    let m_us = m_max
        .to_usize()
        .ok_or_else(|| invalid("m_max too large"))?;
    if let TableMode::Fixed { n_max } = mode {
        if n_max > m_max.max(1) {
            // n > m is unreachable on levels >= 1; a wider table is waste.
            return Err(invalid("fixed-mode n_max may not exceed m_max"));
        }
    }
    let levels = m_us.max(1);
    let stride = stride
        .unwrap_or_else(|| ((levels as f64).sqrt().ceil() as usize).max(1))
        .max(1);

    let exact_q = match arithmetic {
        Arithmetic::LogScale => None,
        Arithmetic::Auto => {
            if m_max <= EXACT_AUTO_LIMIT {
                spec.integer_multiplicities(levels as u64)
            } else {
                None
            }
        }
        Arithmetic::Exact => {
            if m_max > EXACT_HARD_LIMIT {
                return Err(invalid("exact arithmetic is capped at m_max = 2000"));
            }
            Some(spec.integer_multiplicities(levels as u64).ok_or_else(|| {
                invalid("exact arithmetic requires integer multiplicities")
            })?)
        }
    };

    let n_width = match mode {
        TableMode::Variable => 1,
        TableMode::Fixed { n_max } => n_max as usize + 1,
    };
    let row_width = (m_us + 1) * n_width;
    if exact_q.is_none() {
        let budget = budget_bytes.unwrap_or(DEFAULT_TABLE_BUDGET);
        let rows_stored = levels.div_ceil(stride) + 2 + stride;
        let required = rows_stored as u64 * row_width as u64 * 8;
        if required > budget {
            let suggested = ((2 * levels * row_width * 8) as u64 / budget.max(1))
                .to_usize()
                .unwrap_or(usize::MAX)
                .max(stride + 1);
            return Err(Error::Capacity {
                required_bytes: required,
                budget_bytes: budget,
                suggested_stride: suggested,
            });
        }
    }

    let n_checkpoints = levels.div_ceil(stride);
    let checkpoints = match &exact_q {
        Some(qs) => {
            let mut base = vec![BigUint::zero(); row_width];
            base[0] = BigUint::one();
            let mut rows: Vec<Vec<BigUint>> = vec![Vec::new(); n_checkpoints];
            let mut cur = base;
            for level in (1..=levels).rev() {
                cur = match mode {
                    TableMode::Variable => step_var_exact(qs[level - 1], level, m_us, &cur),
                    TableMode::Fixed { .. } => {
                        step_fixed_exact(qs[level - 1], level, m_us, n_width - 1, &cur)
                    }
                };
                if (level - 1) % stride == 0 {
                    rows[checkpoint_index_of_level(level, stride)] = cur.clone();
                }
            }
            TableData::Exact(rows)
        }
        None => {
            let mut base = vec![f64::NEG_INFINITY; row_width];
            base[0] = 0.0;
            let mut rows: Vec<Vec<f64>> = vec![Vec::new(); n_checkpoints];
            let mut cur = base;
            for level in (1..=levels).rev() {
                let q = spec.multiplicity(level as u64);
                cur = match mode {
                    TableMode::Variable => step_var_ln(q, level, m_us, &cur),
                    TableMode::Fixed { .. } => step_fixed_ln(q, level, m_us, n_width - 1, &cur),
                };
                if (level - 1) % stride == 0 {
                    rows[checkpoint_index_of_level(level, stride)] = cur.clone();
                }
            }
            TableData::Ln(rows)
        }
    };

    Ok(WeightTable {
        spec: spec.clone(),
        m_max: m_us,
        mode,
        stride,
        checkpoints,
        exact_q,
    })
}

impl WeightTable {
    /// Variable-mode table with default stride, arithmetic, and budget.
    pub fn variable(spec: &MultiplicitySpec, m_max: u64) -> Result<Self> {
        build_table(spec, m_max, TableMode::Variable, None, Arithmetic::Auto, None)
    }

    /// Fixed-mode table sized for exactly-`n` sampling and queries.
    pub fn fixed(spec: &MultiplicitySpec, m_max: u64, n: u64) -> Result<Self> {
        let n_max = n.min(m_max.max(1));
        build_table(
            spec,
            m_max,
            TableMode::Fixed { n_max },
            None,
            Arithmetic::Auto,
            None,
        )
    }
}

// ---------------------------------------------------------------------------
// Convenience weights
// ---------------------------------------------------------------------------

/// `w(energy = m)`: total weight of configurations on levels >= 1 with
/// energy exactly `m`.
pub fn weight_exact_energy(spec: &MultiplicitySpec, m: u64) -> Result<Weight> {
    WeightTable::variable(spec, m)?.exact_energy_weight(m)
}

/// `w(energy <= m)`.
pub fn weight_cumulative(spec: &MultiplicitySpec, m: u64) -> Result<Weight> {
    WeightTable::variable(spec, m)?.cumulative_weight(m)
}

/// Total weight with exactly `n` particles (level 0 included) and energy at
/// most `m`.
pub fn weight_fixed(spec: &MultiplicitySpec, m: u64, n: u64) -> Result<Weight> {
    WeightTable::fixed(spec, m, n)?.fixed_weight(n)
}

/// Coefficients of `prod_{j<=m_max} (1 - z^j)^(-q_j)` through `z^m_max`,
/// by truncated power-series products (ascending in `j`, unlike the suffix
/// DP). Exact under the same rule as the tables.
pub fn gen_function_coeffs(spec: &MultiplicitySpec, m_max: u64) -> Result<Vec<Weight>> {
    let m = m_max
        .to_usize()
        .ok_or_else(|| invalid("m_max too large"))?;
    let exact_q = if m_max <= EXACT_AUTO_LIMIT {
        spec.integer_multiplicities(m_max.max(1))
    } else {
        None
    };
    match exact_q {
        Some(qs) if m >= 1 => {
            let mut coeffs = vec![BigUint::zero(); m + 1];
            coeffs[0] = BigUint::one();
            for j in 1..=m {
                let q = qs[j - 1];
                let mut next = vec![BigUint::zero(); m + 1];
                for (start, c_start) in coeffs.iter().enumerate() {
                    if c_start.is_zero() {
                        continue;
                    }
                    let mut c = BigUint::one();
                    let mut k = 0u64;
                    loop {
                        let pos = start + j * k as usize;
                        if pos > m {
                            break;
                        }
                        next[pos] += &c * c_start;
                        k += 1;
                        c = c * (q + k - 1) / k;
                    }
                }
                coeffs = next;
            }
            Ok(coeffs.into_iter().map(Weight::Exact).collect())
        }
        Some(_) => Ok(vec![Weight::Exact(BigUint::one())]),
        None => {
            let mut coeffs = vec![f64::NEG_INFINITY; m + 1];
            coeffs[0] = 0.0;
            for j in 1..=m {
                let q = spec.multiplicity(j as u64);
                let mut next = vec![LogSum::new(); m + 1];
                for (start, &c_start) in coeffs.iter().enumerate() {
                    if c_start == f64::NEG_INFINITY {
                        continue;
                    }
                    let mut ln_c = 0.0;
                    let mut k = 0usize;
                    loop {
                        let pos = start + j * k;
                        if pos > m {
                            break;
                        }
                        next[pos].add(ln_c + c_start);
                        let kf = k as f64;
                        ln_c += ((q + kf) / (1.0 + kf)).ln();
                        k += 1;
                    }
                }
                coeffs = next.into_iter().map(|s| s.value()).collect();
            }
            Ok(coeffs.into_iter().map(Weight::Ln).collect())
        }
    }
}

// ---------------------------------------------------------------------------
// Enumeration
// ---------------------------------------------------------------------------

/// Which family of configurations an operation ranges over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ensemble {
    /// Energy at most `m`, any particle number, levels >= 1.
    VariableN,
    /// Energy at most `m`, exactly `n` particles counting level 0.
    FixedN { n: u64 },
}

/// Every configuration of the family, exactly once, with its weight.
pub fn enumerate(
    spec: &MultiplicitySpec,
    m: u64,
    ensemble: Ensemble,
    cap: Option<u64>,
) -> Result<Vec<(Configuration, Weight)>> {
    let cap = cap.unwrap_or(DEFAULT_ENUM_CAP);
    if m > cap {
        return Err(Error::EnumerationCap {
            cap,
            requested: m,
        });
    }
    let mut out = Vec::new();
    let mut stack: Vec<(u32, u32)> = Vec::new();
    match ensemble {
        Ensemble::VariableN => {
            recurse_var(spec, m, m, &mut stack, &mut out)?;
        }
        Ensemble::FixedN { n } => {
            let n32 = n
                .to_u32()
                .ok_or_else(|| invalid("particle count too large for enumeration"))?;
            recurse_fixed(spec, m, m, n32, &mut stack, &mut out)?;
        }
    }
    Ok(out)
}

fn emit(
    spec: &MultiplicitySpec,
    stack: &[(u32, u32)],
    out: &mut Vec<(Configuration, Weight)>,
) -> Result<()> {
    let config = Configuration::from_pairs(stack.iter().copied())?;
    let w = config_weight(spec, &config);
    out.push((config, w));
    Ok(())
}

fn recurse_var(
    spec: &MultiplicitySpec,
    j: u64,
    rem: u64,
    stack: &mut Vec<(u32, u32)>,
    out: &mut Vec<(Configuration, Weight)>,
) -> Result<()> {
    if j == 0 {
        return emit(spec, stack, out);
    }
    let max_k = rem / j;
    for k in 0..=max_k {
        if k > 0 {
            stack.push((j as u32, k as u32));
        }
        recurse_var(spec, j - 1, rem - j * k, stack, out)?;
        if k > 0 {
            stack.pop();
        }
    }
    Ok(())
}

fn recurse_fixed(
    spec: &MultiplicitySpec,
    j: u64,
    rem_m: u64,
    rem_n: u32,
    stack: &mut Vec<(u32, u32)>,
    out: &mut Vec<(Configuration, Weight)>,
) -> Result<()> {
    if j == 0 {
        if rem_n > 0 {
            stack.push((0, rem_n));
        }
        emit(spec, stack, out)?;
        if rem_n > 0 {
            stack.pop();
        }
        return Ok(());
    }
    let max_k = (rem_m / j).min(u64::from(rem_n));
    for k in 0..=max_k {
        if k > 0 {
            stack.push((j as u32, k as u32));
        }
        recurse_fixed(spec, j - 1, rem_m - j * k, rem_n - k as u32, stack, out)?;
        if k > 0 {
            stack.pop();
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Exact linear statistics
// ---------------------------------------------------------------------------

/// Exact distribution of `sum_j f_j (N_j - Nbar_j)` under the normalized
/// weights of a small instance.
#[derive(Clone, Debug)]
pub struct ExactStatistic {
    /// Exact mean of the centered statistic.
    pub mean: f64,
    /// `(value, probability)` atoms, ascending in value.
    atoms: Vec<(f64, f64)>,
}

impl ExactStatistic {
    /// `P(statistic > delta)`.
    pub fn tail(&self, delta: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|(v, _)| *v > delta)
            .map(|(_, p)| p)
            .sum()
    }

    /// `P(|statistic| > delta)`.
    pub fn tail_abs(&self, delta: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|(v, _)| v.abs() > delta)
            .map(|(_, p)| p)
            .sum()
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }
}

/// Enumerates the instance and evaluates the exact law of the centered
/// linear statistic; the centering profile is the equilibrium (variable),
/// grand-canonical (fixed, normal), or condensed (fixed, condensed) one.
pub fn exact_linear_statistic(
    spec: &MultiplicitySpec,
    m: u64,
    f: &FChoice,
    ensemble: Ensemble,
    cap: Option<u64>,
) -> Result<ExactStatistic> {
    f.validate()?;
    let configs = enumerate(spec, m, ensemble, cap)?;
    let profile = reference_profile(spec, m, ensemble)?;
    let center = profile.weighted_sum(f);

    let mut total = LogSum::new();
    for (_, w) in &configs {
        total.add(w.ln());
    }
    let ln_total = total.value();

    let mut atoms: Vec<(f64, f64)> = configs
        .iter()
        .map(|(c, w)| (c.linear_sum(f) - center, (w.ln() - ln_total).exp()))
        .collect();
    atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));
    let mean = atoms.iter().map(|(v, p)| v * p).sum();
    Ok(ExactStatistic { mean, atoms })
}

/// The reference occupation profile of an instance.
pub fn reference_profile(
    spec: &MultiplicitySpec,
    m: u64,
    ensemble: Ensemble,
) -> Result<OccupationProfile> {
    match ensemble {
        Ensemble::VariableN => {
            let sol = equilibrium::solve_b(spec, m as f64, DEFAULT_TOL)?;
            Ok(OccupationProfile::variable(spec.clone(), sol.b))
        }
        Ensemble::FixedN { n } => {
            let regime = equilibrium::classify(spec, m as f64, n as f64, DEFAULT_TOL)?;
            if regime.kind == RegimeKind::Condensed {
                let prof = equilibrium::condensed_profile(spec, m as f64, n as f64, DEFAULT_TOL)?;
                Ok(OccupationProfile::condensed(spec.clone(), prof.b, prof.n0bar))
            } else {
                let gc = equilibrium::solve_beta_mu(spec, m as f64, n as f64, DEFAULT_TOL)?;
                Ok(OccupationProfile::grand_canonical(spec.clone(), gc.beta, gc.mu))
            }
        }
    }
}
