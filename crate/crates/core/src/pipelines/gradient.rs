//! Residual-compensated gradient compression with a two-phase schedule.

use serde::{Deserialize, Serialize};

use super::runtime::compress_to_bits;
use super::CompressedTensor;
use crate::codec::{Bitstream, CodecConfig, Extension, GradientPhase};
use crate::error::{Error, Result};
use crate::prequant::{rtn_quantize, QuantScheme};
use crate::tensor::Tensor;

/// Nominal width of the RTN residual arm.
pub const RESIDUAL_RTN_BITS: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientSchedule {
    /// First step of the RTN residual phase.
    pub switch_step: u64,
    pub phase1_residual_bits: f64,
    pub base_bits: f64,
    pub total_steps: u64,
}

impl Default for GradientSchedule {
    fn default() -> Self {
        GradientSchedule { switch_step: 2500, phase1_residual_bits: 3.5, base_bits: 3.5, total_steps: 8000 }
    }
}

impl GradientSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.total_steps == 0 || self.switch_step > self.total_steps {
            return Err(Error::invalid(format!(
                "switch step {} must not exceed total steps {} (> 0)",
                self.switch_step, self.total_steps
            )));
        }
        for (name, b) in [("base", self.base_bits), ("phase-1 residual", self.phase1_residual_bits)] {
            if !(b > 0.0 && b <= 8.0) {
                return Err(Error::invalid(format!("{name} bits {b} outside (0, 8]")));
            }
        }
        Ok(())
    }

    pub fn phase(&self, step: u64) -> GradientPhase {
        if step < self.switch_step {
            GradientPhase::ResidualCodec
        } else {
            GradientPhase::ResidualRtn
        }
    }

    /// Nominal bits per value sent at `step`: base arm plus residual arm.
    pub fn nominal_step_bits(&self, step: u64) -> f64 {
        match self.phase(step) {
            GradientPhase::ResidualRtn => self.base_bits + RESIDUAL_RTN_BITS,
            _ => self.base_bits + self.phase1_residual_bits,
        }
    }

    /// Mean of [`nominal_step_bits`](Self::nominal_step_bits) over all steps,
    /// in closed form.
    pub fn average_bits(&self) -> f64 {
        let s = self.switch_step as f64;
        let total = self.total_steps as f64;
        ((self.base_bits + self.phase1_residual_bits) * s + (self.base_bits + RESIDUAL_RTN_BITS) * (total - s)) / total
    }
}

/// Measured payload sizes of one step, in bits per gradient value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepBits {
    pub base: f64,
    pub residual: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientPayloads {
    pub base: CompressedTensor,
    pub residual: CompressedTensor,
    pub bits: StepBits,
}

/// Sends `Comp(G)` and a compressed residual `Comp₂(G − Comp(G))`. The
/// residual goes through the codec before `switch_step` and as per-channel
/// RTN-8 codes afterwards.
pub fn compress_gradient(
    g: &Tensor,
    step: u64,
    sched: &GradientSchedule,
    template: &CodecConfig,
) -> Result<GradientPayloads> {
    sched.validate()?;
    if !g.role().is_gradient() {
        return Err(Error::invalid(format!("compress_gradient needs a gradient tensor, got {}", g.role())));
    }
    if step >= sched.total_steps {
        return Err(Error::invalid(format!("step {step} outside schedule of {} steps", sched.total_steps)));
    }
    let base_ext = Extension::Gradient { phase: GradientPhase::Base, step };
    let (base, _) = compress_to_bits(g, sched.base_bits, template, base_ext)?;
    let approx = base.decompress()?;
    let residual_values: Vec<f32> = g.values().iter().zip(approx.values()).map(|(a, b)| a - b).collect();
    let residual_t = g.with_values(residual_values)?;
    let phase = sched.phase(step);
    let residual_ext = Extension::Gradient { phase, step };
    let residual = match phase {
        GradientPhase::ResidualRtn => {
            let q = rtn_quantize(&residual_t, &QuantScheme::codec_input())?;
            CompressedTensor::new(Bitstream::raw(&q, residual_ext))
        }
        _ => compress_to_bits(&residual_t, sched.phase1_residual_bits, template, residual_ext)?.0,
    };
    let bits = StepBits {
        base: base.bits_per_value(),
        residual: residual.bits_per_value(),
        total: base.bits_per_value() + residual.bits_per_value(),
    };
    Ok(GradientPayloads { base, residual, bits })
}

/// `Comp(G) + Comp₂(G − Comp(G))`.
pub fn decompress_gradient(p: &GradientPayloads) -> Result<Tensor> {
    let base = p.base.decompress()?;
    let residual = p.residual.decompress()?;
    if base.dims() != residual.dims() {
        return Err(Error::ShapeMismatch(format!("base {:?} vs residual {:?}", base.dims(), residual.dims())));
    }
    let sum = base.values().iter().zip(residual.values()).map(|(a, b)| a + b).collect();
    base.with_values(sum)
}
