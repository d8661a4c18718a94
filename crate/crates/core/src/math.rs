//! Small numeric helpers: streaming log-sum-exp and seed derivation.

#[allow(unused_imports)]
use num_traits::Float;

/// Streaming log-sum-exp accumulator over nonnegative terms given as natural
/// logs. `NEG_INFINITY` encodes zero. Terms more than `SKIP` below the
/// running maximum are dropped; `exp(-45)` is below 3e-20, so the relative
/// error stays under 1e-15 even after ~1e4 additions.
#[derive(Clone, Copy, Debug)]
pub(crate) struct LogSum {
    max: f64,
    sum: f64,
}

const SKIP: f64 = 45.0;

impl LogSum {
    pub fn new() -> Self {
        LogSum {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    #[inline]
    pub fn add(&mut self, ln_term: f64) {
        if ln_term == f64::NEG_INFINITY {
            return;
        }
        if self.max == f64::NEG_INFINITY {
            self.max = ln_term;
            self.sum = 1.0;
        } else if ln_term <= self.max {
            if ln_term > self.max - SKIP {
                self.sum += (ln_term - self.max).exp();
            }
        } else {
            self.sum = self.sum * (self.max - ln_term).exp() + 1.0;
            self.max = ln_term;
        }
    }

    #[inline]
    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

/// SplitMix64 output function.
pub(crate) fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the RNG seed of stream `idx` from a batch seed. Counter-based, so
/// stream contents are independent of how a batch is partitioned into tasks.
pub(crate) fn stream_seed(seed: u64, idx: u64) -> u64 {
    splitmix64(seed ^ splitmix64(idx.wrapping_add(1)))
}

/// Uniform draw in `[0, 1)` from 53 random bits.
#[inline]
pub(crate) fn uniform_f64<R: rand_core::RngCore>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
}
