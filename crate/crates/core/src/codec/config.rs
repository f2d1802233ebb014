use serde::{Deserialize, Serialize};

use super::quant::MAX_QP;
use crate::error::{Error, Result};

pub const MAX_FRAME_SIDE: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodecConfig {
    pub ctu_size: usize,
    pub min_block: usize,
    pub qp: u8,
    pub enable_prediction: bool,
    pub enable_transform: bool,
    pub enable_entropy: bool,
    pub lambda_scale: f32,
}

impl Default for CodecConfig {
    fn default() -> Self {
        CodecConfig {
            ctu_size: 64,
            min_block: 8,
            qp: 24,
            enable_prediction: true,
            enable_transform: true,
            enable_entropy: true,
            lambda_scale: 4.0,
        }
    }
}

/// Codec stage combination, in ablation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StageSet {
    /// Fixed 8-bit codes, no codec.
    Baseline,
    Entropy,
    EntropyTransform,
    Full,
}

impl StageSet {
    pub const ABLATION: [StageSet; 4] = [StageSet::Baseline, StageSet::Entropy, StageSet::EntropyTransform, StageSet::Full];

    pub fn name(self) -> &'static str {
        match self {
            StageSet::Baseline => "baseline",
            StageSet::Entropy => "entropy",
            StageSet::EntropyTransform => "entropy+transform",
            StageSet::Full => "entropy+transform+prediction",
        }
    }

    pub fn apply(self, cfg: &CodecConfig) -> CodecConfig {
        let (p, t, e) = match self {
            StageSet::Baseline => (false, false, false),
            StageSet::Entropy => (false, false, true),
            StageSet::EntropyTransform => (false, true, true),
            StageSet::Full => (true, true, true),
        };
        CodecConfig { enable_prediction: p, enable_transform: t, enable_entropy: e, ..*cfg }
    }
}

impl std::fmt::Display for StageSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for StageSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StageSet::ABLATION
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown stage set {s:?}")))
    }
}

impl CodecConfig {
    pub fn with_qp(self, qp: u8) -> Self {
        CodecConfig { qp, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let pow2 = |v: usize| v.is_power_of_two() && (4..=64).contains(&v);
        if !pow2(self.ctu_size) || !pow2(self.min_block) {
            return Err(Error::invalid(format!(
                "ctu_size {} and min_block {} must be powers of two in [4, 64]",
                self.ctu_size, self.min_block
            )));
        }
        if self.min_block > self.ctu_size {
            return Err(Error::invalid(format!("min_block {} exceeds ctu_size {}", self.min_block, self.ctu_size)));
        }
        if self.qp > MAX_QP {
            return Err(Error::invalid(format!("qp {} outside [0, {MAX_QP}]", self.qp)));
        }
        if !(self.lambda_scale > 0.0 && self.lambda_scale.is_finite()) {
            return Err(Error::invalid(format!("lambda_scale {} must be positive", self.lambda_scale)));
        }
        Ok(())
    }

    /// Lagrange multiplier `lambda_scale · 0.57 · 2^((qp − 12)/3)`.
    pub fn lambda(&self) -> f64 {
        self.lambda_scale as f64 * 0.57 * libm::exp2((self.qp as f64 - 12.0) / 3.0)
    }

    pub(crate) fn toggle_bits(&self) -> u8 {
        self.enable_prediction as u8 | (self.enable_transform as u8) << 1 | (self.enable_entropy as u8) << 2
    }

    pub(crate) fn set_toggles(&mut self, bits: u8) -> Result<()> {
        if bits & !0b111 != 0 {
            return Err(Error::corrupt(format!("unknown stage toggle bits {bits:#04x}")));
        }
        self.enable_prediction = bits & 1 != 0;
        self.enable_transform = bits & 2 != 0;
        self.enable_entropy = bits & 4 != 0;
        Ok(())
    }
}

/// A luma-only 8-bit picture.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub width: usize,
    pub height: usize,
    pub samples: Vec<u8>,
}

impl Frame {
    pub fn new(width: usize, height: usize, samples: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || width > MAX_FRAME_SIDE || height > MAX_FRAME_SIDE {
            return Err(Error::invalid(format!("frame {width}×{height} outside 1..={MAX_FRAME_SIDE} per side")));
        }
        if samples.len() != width * height {
            return Err(Error::LengthMismatch { expected: width * height, found: samples.len() });
        }
        Ok(Frame { width, height, samples })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Frame::new(width, height, vec![value; width * height])
    }

    pub fn at(&self, x: usize, y: usize) -> u8 {
        self.samples[y * self.width + x]
    }

    /// Mean squared error in sample units.
    pub fn mse(&self, other: &Frame) -> Result<f64> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::ShapeMismatch(format!(
                "{}×{} vs {}×{}",
                self.width, self.height, other.width, other.height
            )));
        }
        let sse: u64 = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(&a, &b)| {
                let d = a as i64 - b as i64;
                (d * d) as u64
            })
            .sum();
        Ok(sse as f64 / self.samples.len() as f64)
    }
}
