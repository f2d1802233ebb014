//! Two-stage weight compression: optional incoherence rotation, per-channel
//! RTN-8, then the intra codec at a searched qp.

use super::{undo_rotation, CompressedTensor, Target};
use crate::codec::{CodecConfig, Extension};
use crate::error::{Error, Result};
use crate::prequant::{hadamard::next_supported_size, make_rotation, rotate_two_sided, rtn_dequantize};
use crate::rate::{codec_plane, QpSearch, RateReport};
use crate::tensor::{error_metrics, Role, Tensor};

/// Padded size used when rotating a `rows × cols` weight.
pub fn rotated_size(rows: usize, cols: usize) -> (usize, usize) {
    (next_supported_size(rows), next_supported_size(cols))
}

fn rotate(t: &Tensor, seed: u64) -> Result<Tensor> {
    let &[rows, cols] = t.dims() else {
        return Err(Error::ShapeMismatch(format!("rotation needs a matrix, got dims {:?}", t.dims())));
    };
    let (pr, pc) = rotated_size(rows, cols);
    let mut x = vec![0.0f64; pr * pc];
    for r in 0..rows {
        for c in 0..cols {
            x[r * pc + c] = t.values()[r * cols + c] as f64;
        }
    }
    rotate_two_sided(&mut x, &make_rotation(pr, seed)?, &make_rotation(pc, seed.wrapping_add(1))?);
    Tensor::new(vec![pr, pc], t.channel_axis(), t.role(), x.into_iter().map(|v| v as f32).collect())
}

/// Compresses a weight tensor to `target`. With `rotate`, the matrix is
/// zero-padded to Hadamard-compatible sides and rotated as `P_rᵀ · W · P_c`
/// (seeds `rotation_seed` and `rotation_seed + 1`) before quantization; the
/// MSE is always measured against the unrotated input.
pub fn compress_weights(
    t: &Tensor,
    target: Target,
    rotate_first: bool,
    rotation_seed: u64,
    template: &CodecConfig,
) -> Result<(CompressedTensor, RateReport)> {
    if t.role() != Role::Weight {
        return Err(Error::invalid(format!("compress_weights needs a weight tensor, got {}", t.role())));
    }
    compress_tensor(t, target, rotate_first.then_some(rotation_seed), template)
}

/// Same two stages for a tensor of any role, optionally rotated with
/// `rotation` as the seed.
pub fn compress_tensor(
    t: &Tensor,
    target: Target,
    rotation: Option<u64>,
    template: &CodecConfig,
) -> Result<(CompressedTensor, RateReport)> {
    let (coded, extension) = match rotation {
        Some(seed) => {
            let &[rows, cols] = t.dims() else {
                return Err(Error::ShapeMismatch(format!("rotation needs a matrix, got dims {:?}", t.dims())));
            };
            (rotate(t, seed)?, Extension::Rotation { seed, rows: rows as u64, cols: cols as u64 })
        }
        None => (t.clone(), Extension::None),
    };
    let plane = codec_plane(&coded)?;
    let mut search = QpSearch::new(&plane, *template, extension, t.len(), |q| {
        let mut back = rtn_dequantize(q)?;
        if let Extension::Rotation { seed, rows, cols } = extension {
            back = undo_rotation(&back, seed, rows as usize, cols as usize)?;
        }
        Ok(error_metrics(t, &back)?.mse)
    })?;
    let out = match target {
        Target::Mse(m) => search.for_mse(m)?,
        Target::Bits(b) => search.for_bits(b)?,
    };
    Ok((CompressedTensor::new(out.stream), out.report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{gen_synthetic, SynthParams};

    fn weight(rows: usize, cols: usize, seed: u64) -> Tensor {
        gen_synthetic(&SynthParams::new(rows, cols, 0.9, 0.005, 50.0, seed)).unwrap()
    }

    #[test]
    fn padded_sizes() {
        assert_eq!(rotated_size(100, 64), (128, 64));
        assert_eq!(rotated_size(96, 11), (96, 12));
    }

    #[test]
    fn rotated_roundtrip_in_original_basis() {
        let t = weight(100, 72, 1);
        let (ct, report) = compress_weights(&t, Target::Mse(0.01), true, 7, &CodecConfig::default()).unwrap();
        assert_eq!(ct.original_dims(), vec![100, 72]);
        assert_eq!(ct.stream.dims, vec![128, 80]);
        let back = CompressedTensor::from_bytes(&ct.to_bytes()).unwrap().decompress().unwrap();
        assert_eq!(back.dims(), t.dims());
        assert_eq!(back.role(), Role::Weight);
        let mse = error_metrics(&t, &back).unwrap().mse;
        assert!(report.floor_limited || mse <= 0.01, "{mse}");
        assert!((mse - report.achieved_mse).abs() < 1e-12);
        assert!((ct.bits_per_value() - report.bits_per_value).abs() < 1e-12);
    }

    #[test]
    fn plain_roundtrip() {
        let t = weight(64, 64, 2);
        let (ct, report) = compress_weights(&t, Target::Bits(3.0), false, 0, &CodecConfig::default()).unwrap();
        assert!(report.bits_per_value <= 3.0);
        let back = ct.decompress().unwrap();
        assert_eq!(error_metrics(&t, &back).unwrap().mse, report.achieved_mse);
    }

    #[test]
    fn rejects_non_weights_and_tensors_of_other_rank() {
        let a = weight(8, 8, 3).with_role(Role::Activation);
        assert!(compress_weights(&a, Target::Mse(0.01), false, 0, &CodecConfig::default()).is_err());
        let v = Tensor::new(vec![2, 4, 8], 0, Role::Weight, vec![0.5; 64]).unwrap();
        assert!(matches!(
            compress_weights(&v, Target::Mse(0.01), true, 0, &CodecConfig::default()),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn independent_of_previous_calls() {
        let a = weight(64, 64, 4);
        let b = weight(64, 64, 5);
        let cfg = CodecConfig::default();
        let first = compress_weights(&a, Target::Mse(0.01), true, 1, &cfg).unwrap().0.to_bytes();
        compress_weights(&b, Target::Mse(0.01), true, 1, &cfg).unwrap();
        assert_eq!(compress_weights(&a, Target::Mse(0.01), true, 1, &cfg).unwrap().0.to_bytes(), first);
    }
}
