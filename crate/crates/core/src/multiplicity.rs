//! Multiplicity sequences `q_j` and their power-law growth envelope.
//!
//! All level series downstream assume `q_j = Q j^(d-1) (1 + o(1))` for some
//! dimension `d > 1`; construction rejects anything else. Multiplicities are
//! positive reals; integrality is detected where exact arithmetic wants it.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::sums;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum TailRule {
    /// `q_j = Q j^(d-1)` exactly.
    PowerLaw,
    /// `q_j = C(j + d - 1, j)` for integer `d >= 2`; leading coefficient `1/Gamma(d)`.
    Oscillator,
}

/// A rule producing the level multiplicities `q_j` (j >= 1) together with the
/// ground-level multiplicity `q_0` used by the fixed-particle-number system.
///
/// Immutable after construction; reads are freely shareable across threads.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiplicitySpec {
    rule: TailRule,
    d: f64,
    /// Leading coefficient of the tail rule (`Q`; `1/Gamma(d)` for the oscillator).
    q_coef: f64,
    q0: f64,
    /// Explicit values overriding the rule for `j = 1..=table.len()`.
    table: Vec<f64>,
    /// Uniform factor on all `q_j`, `j >= 1` (coloring).
    scale: f64,
}

impl MultiplicitySpec {
    /// `q_j = Q j^(d-1)` with `d > 1`, `Q > 0`.
    pub fn power_law(d: f64, q: f64) -> Result<Self> {
        if !(d > 1.0) || !d.is_finite() {
            return Err(invalid(format!("dimension d = {d} must satisfy d > 1")));
        }
        if !(q > 0.0) || !q.is_finite() {
            return Err(invalid(format!("leading coefficient Q = {q} must be positive")));
        }
        Ok(MultiplicitySpec {
            rule: TailRule::PowerLaw,
            d,
            q_coef: q,
            q0: 1.0,
            table: Vec::new(),
            scale: 1.0,
        })
    }

    /// Level degeneracies of the `d`-dimensional harmonic oscillator,
    /// `q_j = C(j + d - 1, j)`, for integer `d >= 2`.
    pub fn oscillator(d: u32) -> Result<Self> {
        if d < 2 {
            return Err(invalid(format!("oscillator dimension d = {d} must be >= 2")));
        }
        let df = f64::from(d);
        Ok(MultiplicitySpec {
            rule: TailRule::Oscillator,
            d: df,
            q_coef: 1.0 / sums::gamma(df),
            q0: 1.0,
            table: Vec::new(),
            scale: 1.0,
        })
    }

    /// Sets the ground-level multiplicity `q_0 >= 1`.
    pub fn with_q0(mut self, q0: f64) -> Result<Self> {
        if !(q0 >= 1.0) || !q0.is_finite() {
            return Err(invalid(format!("q0 = {q0} must satisfy q0 >= 1")));
        }
        self.q0 = q0;
        Ok(self)
    }

    /// Overrides `q_1..q_J` with explicit positive values; the tail rule
    /// still applies for `j > J`.
    pub fn with_prefix(mut self, table: Vec<f64>) -> Result<Self> {
        if table.iter().any(|&q| !(q > 0.0) || !q.is_finite()) {
            return Err(invalid("prefix table entries must be positive reals"));
        }
        self.table = table;
        Ok(self)
    }

    /// The multiplicity `q_j` of level `j >= 1`.
    pub fn multiplicity(&self, j: u64) -> f64 {
        debug_assert!(j >= 1);
        let base = if let Some(&q) = self.table.get((j - 1) as usize) {
            q
        } else {
            match self.rule {
                TailRule::PowerLaw => self.q_coef * (j as f64).powf(self.d - 1.0),
                TailRule::Oscillator => {
                    // C(j + d - 1, j) = prod_{i=1}^{d-1} (j + i) / i
                    let mut acc = 1.0;
                    for i in 1..self.d as u64 {
                        acc *= (j + i) as f64 / i as f64;
                    }
                    acc
                }
            }
        };
        self.scale * base
    }

    /// Ground-level multiplicity `q_0` (not affected by coloring).
    pub fn q0(&self) -> f64 {
        self.q0
    }

    /// Dimension parameter `d`.
    pub fn dimension(&self) -> f64 {
        self.d
    }

    /// Leading coefficient of `q_j ~ Q j^(d-1)`, including the coloring factor.
    pub fn leading_coefficient(&self) -> f64 {
        self.scale * self.q_coef
    }

    /// An upper envelope coefficient: `q_j <= tail_coefficient(j0) * j^(d-1)`
    /// for every `j >= max(j0, J + 1)` where `J` is the prefix length.
    pub(crate) fn tail_coefficient(&self, j_from: u64) -> f64 {
        let j0 = j_from.max(self.table.len() as u64 + 1).max(1);
        match self.rule {
            TailRule::PowerLaw => self.scale * self.q_coef,
            // q_j / j^(d-1) = prod (1 + i/j) / Gamma(d) decreases in j.
            TailRule::Oscillator => self.multiplicity(j0) / (j0 as f64).powf(self.d - 1.0),
        }
    }

    /// The spec with every `q_j` (j >= 1) multiplied by `k` — the effect of
    /// painting balls in `k` distinguishable colors.
    pub fn scaled_levels(&self, k: u32) -> Result<Self> {
        if k < 1 {
            return Err(invalid("color count K must be >= 1"));
        }
        let mut out = self.clone();
        out.scale = self.scale * f64::from(k);
        Ok(out)
    }

    /// Checks `B1 j^(d-1) <= q_j <= B2 j^(d-1)` for all `1 <= j <= j_max`.
    pub fn verify_envelope(&self, b1: f64, b2: f64, j_max: u64) -> bool {
        const SLACK: f64 = 1e-12;
        if !(b1 > 0.0 && b2 >= b1 && j_max >= 1) {
            return false;
        }
        (1..=j_max).all(|j| {
            let v = (j as f64).powf(self.d - 1.0);
            let q = self.multiplicity(j);
            b1 * v <= q * (1.0 + SLACK) && q <= b2 * v * (1.0 + SLACK)
        })
    }

    /// All `q_j` for `j <= j_max` as exact integers, when they are integers.
    pub(crate) fn integer_multiplicities(&self, j_max: u64) -> Option<Vec<u64>> {
        let mut out = Vec::with_capacity(j_max as usize);
        for j in 1..=j_max {
            out.push(as_integer(self.multiplicity(j))?);
        }
        Some(out)
    }

    pub(crate) fn q0_integer(&self) -> Option<u64> {
        as_integer(self.q0)
    }

    /// Canonical textual form, parseable by [`MultiplicitySpec::parse`].
    pub fn to_spec_string(&self) -> String {
        let mut s = String::new();
        if !self.table.is_empty() {
            s.push_str("table:[");
            for (i, q) in self.table.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                s.push_str(&format!("{q}"));
            }
            s.push_str("];");
        }
        match self.rule {
            TailRule::PowerLaw => s.push_str(&format!("power:d={},Q={}", self.d, self.q_coef)),
            TailRule::Oscillator => s.push_str(&format!("osc:d={}", self.d)),
        }
        if self.q0 != 1.0 {
            s.push_str(&format!(",q0={}", self.q0));
        }
        if self.scale != 1.0 {
            s.push_str(&format!(",scale={}", self.scale));
        }
        s
    }

    /// Parses the textual spec syntax used by the CLI, e.g.
    /// `"power:d=3,Q=1,q0=1"`, `"osc:d=3,q0=1"`,
    /// `"table:[1.5,2,3];power:d=2,Q=1"`.
    pub fn parse(input: &str) -> Result<Self> {
        let input = input.trim();
        let (table, rule_part) = match input.strip_prefix("table:") {
            Some(rest) => {
                let open = rest
                    .find('[')
                    .ok_or_else(|| Error::Parse("expected '[' after table:".to_string()))?;
                let close = rest
                    .find(']')
                    .ok_or_else(|| Error::Parse("expected ']' closing the table".to_string()))?;
                let entries: Vec<f64> = rest[open + 1..close]
                    .split(',')
                    .filter(|t| !t.trim().is_empty())
                    .map(|t| {
                        t.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::Parse(format!("bad table entry '{t}'")))
                    })
                    .collect::<Result<_>>()?;
                let rest = rest[close + 1..]
                    .strip_prefix(';')
                    .ok_or_else(|| Error::Parse("expected ';' after table".to_string()))?;
                (entries, rest)
            }
            None => (Vec::new(), input),
        };

        let (head, args) = rule_part
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("expected 'power:' or 'osc:' in '{rule_part}'")))?;
        let mut d = None;
        let mut q = None;
        let mut q0 = None;
        let mut scale = None;
        for kv in args.split(',').filter(|t| !t.trim().is_empty()) {
            let (key, val) = kv
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got '{kv}'")))?;
            let val: f64 = val
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad number '{val}'")))?;
            match key.trim() {
                "d" => d = Some(val),
                "Q" | "q" => q = Some(val),
                "q0" => q0 = Some(val),
                "scale" => scale = Some(val),
                other => return Err(Error::Parse(format!("unknown key '{other}'"))),
            }
        }
        let d = d.ok_or_else(|| Error::Parse("missing d".to_string()))?;
        let mut spec = match head.trim() {
            "power" => Self::power_law(d, q.unwrap_or(1.0)).map_err(lift)?,
            "osc" => {
                if d.fract() != 0.0 || !(2.0..=64.0).contains(&d) {
                    return Err(Error::Parse(format!("oscillator needs integer d >= 2, got {d}")));
                }
                Self::oscillator(d as u32).map_err(lift)?
            }
            other => return Err(Error::Parse(format!("unknown rule '{other}'"))),
        };
        if !table.is_empty() {
            spec = spec.with_prefix(table).map_err(lift)?;
        }
        if let Some(q0) = q0 {
            spec = spec.with_q0(q0).map_err(lift)?;
        }
        if let Some(s) = scale {
            if !(s > 0.0) {
                return Err(Error::Parse("scale must be positive".to_string()));
            }
            spec.scale = s;
        }
        Ok(spec)
    }
}

fn lift(e: Error) -> Error {
    match e {
        Error::InvalidParameter(m) => Error::Parse(m),
        other => other,
    }
}

fn as_integer(x: f64) -> Option<u64> {
    let r = x.round();
    if (1.0..=9.0e15).contains(&r) && (x - r).abs() <= 1e-9 * r.max(1.0) {
        Some(r as u64)
    } else {
        None
    }
}

impl FromStr for MultiplicitySpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        MultiplicitySpec::parse(s)
    }
}

impl fmt::Display for MultiplicitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_spec_string())
    }
}
