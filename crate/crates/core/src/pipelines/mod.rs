//! Application compressors: two-stage weight compression, one-shot runtime
//! compression of KV cache and activations, and residual-compensated
//! gradient compression.

mod gradient;
mod runtime;
mod weights;

use crate::codec::{Bitstream, Extension};
use crate::error::{Error, Result};
use crate::prequant::{make_rotation, rtn_dequantize, unrotate_two_sided};
use crate::tensor::{Role, Tensor};

pub use gradient::{
    compress_gradient, decompress_gradient, GradientPayloads, GradientSchedule, StepBits, RESIDUAL_RTN_BITS,
};
pub use runtime::{
    baseline_rtn_runtime, compress_runtime, compression_ratio, format_ratio, RtnBaseline, FP16_BITS,
};
pub(crate) use runtime::compress_to_bits;
pub use weights::{compress_tensor, compress_weights, rotated_size};

/// Quality or size goal for a compressor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    /// End-to-end MSE in the original value space.
    Mse(f64),
    /// Bits per original element, headers included.
    Bits(f64),
}

/// A compressed tensor: one self-contained VCBS bitstream.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedTensor {
    pub stream: Bitstream,
}

impl CompressedTensor {
    pub fn new(stream: Bitstream) -> Self {
        CompressedTensor { stream }
    }

    /// Dims of the tensor that was compressed (before any padding).
    pub fn original_dims(&self) -> Vec<usize> {
        match self.stream.extension {
            Extension::Rotation { rows, cols, .. } => vec![rows as usize, cols as usize],
            _ => self.stream.dims.clone(),
        }
    }

    pub fn role(&self) -> Role {
        self.stream.role
    }

    pub fn element_count(&self) -> usize {
        self.original_dims().iter().product()
    }

    pub fn byte_len(&self) -> usize {
        self.stream.byte_len()
    }

    pub fn bits_per_value(&self) -> f64 {
        8.0 * self.byte_len() as f64 / self.element_count() as f64
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.stream.to_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Ok(CompressedTensor { stream: Bitstream::from_bytes(bytes)? })
    }

    /// Runs every stage backwards, including any rotation.
    pub fn decompress(&self) -> Result<Tensor> {
        let plane = self.stream.decode_plane()?;
        let t = rtn_dequantize(&plane)?;
        match self.stream.extension {
            Extension::Rotation { seed, rows, cols } => undo_rotation(&t, seed, rows as usize, cols as usize),
            _ => Ok(t),
        }
    }
}

pub fn decompress(ct: &CompressedTensor) -> Result<Tensor> {
    ct.decompress()
}

/// Inverts a two-sided rotation of the padded matrix `t` and crops it to
/// `rows × cols`.
pub(crate) fn undo_rotation(t: &Tensor, seed: u64, rows: usize, cols: usize) -> Result<Tensor> {
    let &[pr, pc] = t.dims() else {
        return Err(Error::corrupt(format!("rotated payload must be a matrix, got {:?}", t.dims())));
    };
    if rows == 0 || cols == 0 || rows > pr || cols > pc {
        return Err(Error::corrupt(format!("original size {rows}×{cols} does not fit padded {pr}×{pc}")));
    }
    let p_rows = make_rotation(pr, seed).map_err(|e| Error::corrupt(e.to_string()))?;
    let p_cols = make_rotation(pc, seed.wrapping_add(1)).map_err(|e| Error::corrupt(e.to_string()))?;
    let mut x: Vec<f64> = t.values().iter().map(|&v| v as f64).collect();
    unrotate_two_sided(&mut x, &p_rows, &p_cols);
    let mut out = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        out.extend(x[r * pc..r * pc + cols].iter().map(|&v| v as f32));
    }
    Tensor::new(vec![rows, cols], t.channel_axis(), t.role(), out)
}
