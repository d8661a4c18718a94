//! Bounded coefficient sequences `{f_j}` for linear statistics
//! `sum_j f_j (N_j - Nbar_j)`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{invalid, Result};

/// A sequence of reals with `|f_j| <= 1`, indexed by level `j >= 0`.
///
/// Level 0 only participates in the fixed-particle-number system; the named
/// variants put `f_0 = 0` so the same choice works in both ensembles.
#[derive(Clone, Debug, PartialEq)]
pub enum FChoice {
    /// `f_j = 1` for `j >= 1` (total occupation above the ground level).
    AllOnes,
    /// `f_j = 1` for `j >= l`, else 0.
    TailFrom(u32),
    /// `f_j = +1` for odd `j`, `-1` for even `j >= 2`, `f_0 = 0`.
    Alternating,
    /// Explicit values, `custom[j]` for level `j`; zero beyond the end.
    Custom(Vec<f64>),
}

impl FChoice {
    pub fn eval(&self, j: u32) -> f64 {
        match self {
            FChoice::AllOnes => {
                if j >= 1 {
                    1.0
                } else {
                    0.0
                }
            }
            FChoice::TailFrom(l) => {
                if j >= *l {
                    1.0
                } else {
                    0.0
                }
            }
            FChoice::Alternating => {
                if j == 0 {
                    0.0
                } else if j % 2 == 1 {
                    1.0
                } else {
                    -1.0
                }
            }
            FChoice::Custom(v) => v.get(j as usize).copied().unwrap_or(0.0),
        }
    }

    /// Rejects sequences violating `|f_j| <= 1`.
    pub fn validate(&self) -> Result<()> {
        if let FChoice::Custom(v) = self {
            if v.iter().any(|&x| !(x.abs() <= 1.0)) {
                return Err(invalid("coefficient sequence must satisfy |f_j| <= 1"));
            }
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        match self {
            FChoice::AllOnes => String::from("all_ones"),
            FChoice::TailFrom(l) => format!("tail_from_{l}"),
            FChoice::Alternating => String::from("alternating"),
            FChoice::Custom(v) => format!("custom[{}]", v.len()),
        }
    }
}
