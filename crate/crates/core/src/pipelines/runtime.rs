//! One-shot compression of dynamic tensors (KV cache, activations) and the
//! asymmetric RTN comparison arm.

use serde::{Deserialize, Serialize};

use super::CompressedTensor;
use crate::codec::{Bitstream, CodecConfig, Extension};
use crate::error::{Error, Result};
use crate::prequant::{rtn_dequantize, rtn_quantize, Granularity, QuantMode, QuantScheme, QuantizedPlane};
use crate::rate::{codec_plane, QpSearch, RateReport};
use crate::tensor::{error_metrics, Tensor};

/// Width of the uncompressed runtime tensors the ratios refer to.
pub const FP16_BITS: f64 = 16.0;

/// `source_bits / bits`.
pub fn compression_ratio(source_bits: f64, bits: f64) -> Result<f64> {
    if !(bits > 0.0 && source_bits > 0.0 && bits.is_finite() && source_bits.is_finite()) {
        return Err(Error::invalid(format!("bit widths {source_bits} and {bits} must be positive")));
    }
    Ok(source_bits / bits)
}

/// One decimal, truncated: 5.517 → "5.5×", 4.571 → "4.5×".
pub fn format_ratio(ratio: f64) -> String {
    let tenths = (ratio * 10.0 + 1e-9).floor() / 10.0;
    format!("{tenths:.1}×")
}

/// Channel-wise RTN-8, then the codec at the finest qp that fits
/// `target_bits`. No rotation and no calibration data.
pub fn compress_runtime(t: &Tensor, target_bits: f64, template: &CodecConfig) -> Result<(CompressedTensor, RateReport)> {
    if !t.role().is_runtime() {
        return Err(Error::invalid(format!("compress_runtime needs a KV-cache or activation tensor, got {}", t.role())));
    }
    compress_to_bits(t, target_bits, template, Extension::None)
}

pub(crate) fn compress_to_bits(
    t: &Tensor,
    target_bits: f64,
    template: &CodecConfig,
    extension: Extension,
) -> Result<(CompressedTensor, RateReport)> {
    let plane = codec_plane(t)?;
    let mut search = QpSearch::new(&plane, *template, extension, t.len(), |q| {
        Ok(error_metrics(t, &rtn_dequantize(q)?)?.mse)
    })?;
    let out = search.for_bits(target_bits)?;
    Ok((CompressedTensor::new(out.stream), out.report))
}

/// Result of the RTN comparison arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RtnBaseline {
    pub bits: u8,
    /// Packed codes plus per-channel parameters and container header.
    pub wall_bits_per_value: f64,
    pub mse: f64,
}

/// Per-channel asymmetric min-max RTN at `bits` ∈ [2, 8].
pub fn baseline_rtn_runtime(t: &Tensor, bits: u8) -> Result<(QuantizedPlane, RtnBaseline)> {
    if !(2..=8).contains(&bits) {
        return Err(Error::invalid(format!("RTN baseline width {bits} outside [2, 8]")));
    }
    let scheme = QuantScheme::new(QuantMode::AsymmetricMinMax, bits, Granularity::PerChannel)?;
    let q = rtn_quantize(t, &scheme)?;
    let mse = error_metrics(t, &rtn_dequantize(&q)?)?.mse;
    let wall = Bitstream::raw(&q, Extension::None).byte_len();
    let report = RtnBaseline { bits, wall_bits_per_value: 8.0 * wall as f64 / t.len() as f64, mse };
    Ok((q, report))
}
