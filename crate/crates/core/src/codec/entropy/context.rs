//! Adaptive binary probability models.

use std::sync::OnceLock;

pub(crate) const PROB_BITS: u32 = 15;
const ONE: u32 = 1 << PROB_BITS;
const FAST_SHIFT: u32 = 4;
const SLOW_SHIFT: u32 = 7;
const COST_BUCKETS: usize = 1024;

/// Pair of shift-based estimators of P(bit = 0), one fast and one slow,
/// averaged when coding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinContext {
    fast: u16,
    slow: u16,
}

impl Default for BinContext {
    fn default() -> Self {
        BinContext::new()
    }
}

impl BinContext {
    pub const fn new() -> Self {
        BinContext { fast: (ONE / 2) as u16, slow: (ONE / 2) as u16 }
    }

    /// P(bit = 0) in units of 2^-15, always inside (0, 1).
    #[inline]
    pub fn p0(&self) -> u32 {
        (self.fast as u32 + self.slow as u32 + 1) >> 1
    }

    #[inline]
    pub fn update(&mut self, bit: bool) {
        let (f, s) = (self.fast as u32, self.slow as u32);
        if bit {
            self.fast = (f - (f >> FAST_SHIFT)) as u16;
            self.slow = (s - (s >> SLOW_SHIFT)) as u16;
        } else {
            self.fast = (f + ((ONE - f) >> FAST_SHIFT)) as u16;
            self.slow = (s + ((ONE - s) >> SLOW_SHIFT)) as u16;
        }
    }

    /// Estimated cost in bits of coding `bit` in the current state.
    #[inline]
    pub fn cost(&self, bit: bool) -> f32 {
        let p0 = self.p0();
        let p = if bit { ONE - p0 } else { p0 };
        cost_table()[(p as usize * COST_BUCKETS) >> PROB_BITS]
    }
}

fn cost_table() -> &'static [f32; COST_BUCKETS] {
    static TABLE: OnceLock<[f32; COST_BUCKETS]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [0.0f32; COST_BUCKETS];
        for (i, v) in t.iter_mut().enumerate() {
            *v = -libm::log2((i as f64 + 0.5) / COST_BUCKETS as f64) as f32;
        }
        t
    })
}

pub(crate) const CLASSES: usize = 5;
pub(crate) const BANDS: usize = 4;
pub(crate) const LAST_CTX: usize = 14;
pub(crate) const REM_CTX: usize = 16;
/// Buckets of local activity (sum of the two previous magnitudes).
pub(crate) const ACT: usize = 6;
pub(crate) const SIG_ACT: usize = 5;
pub(crate) const RICE: usize = 6;

pub(crate) const KINDS: usize = 4;

/// Every context used by the block syntax. The second index of the residual
/// contexts is the transform kind of the block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Contexts {
    pub split: [BinContext; CLASSES],
    pub mode: [[BinContext; 8]; CLASSES],
    pub transform: [[BinContext; 3]; CLASSES],
    pub cbf: [[BinContext; KINDS]; CLASSES],
    pub last: [[[BinContext; LAST_CTX]; KINDS]; CLASSES],
    pub last_suffix: [[[BinContext; LAST_CTX]; KINDS]; CLASSES],
    pub sig: [[[[BinContext; SIG_ACT]; BANDS]; KINDS]; CLASSES],
    pub gt1: [[[[BinContext; ACT]; 2]; KINDS]; CLASSES],
    pub gt2: [[[BinContext; ACT]; KINDS]; CLASSES],
    pub rem: [[[BinContext; REM_CTX]; RICE]; KINDS],
}

impl Default for Contexts {
    fn default() -> Self {
        let c = BinContext::new();
        Contexts {
            split: [c; CLASSES],
            mode: [[c; 8]; CLASSES],
            transform: [[c; 3]; CLASSES],
            cbf: [[c; KINDS]; CLASSES],
            last: [[[c; LAST_CTX]; KINDS]; CLASSES],
            last_suffix: [[[c; LAST_CTX]; KINDS]; CLASSES],
            sig: [[[[c; SIG_ACT]; BANDS]; KINDS]; CLASSES],
            gt1: [[[[c; ACT]; 2]; KINDS]; CLASSES],
            gt2: [[[c; ACT]; KINDS]; CLASSES],
            rem: [[[c; REM_CTX]; RICE]; KINDS],
        }
    }
}
