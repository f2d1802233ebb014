//! Round-to-nearest quantizers producing 8-bit code planes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Plane, Role, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantMode {
    /// `Δ = max|w| / 2^(N−1)`, reconstruction `Δ·Round(w/Δ)`.
    SymmetricRtn,
    /// `scale = (max − min) / (2^N − 1)`, `zero_point = Round(−min/scale)`.
    AsymmetricMinMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    PerTensor,
    /// One group per index of the tensor's channel axis.
    PerChannel,
    /// Contiguous runs of `size` values along each row of the 2D view.
    PerGroup(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantScheme {
    pub mode: QuantMode,
    pub bits: u8,
    pub granularity: Granularity,
}

impl QuantScheme {
    pub fn new(mode: QuantMode, bits: u8, granularity: Granularity) -> Result<Self> {
        let s = QuantScheme { mode, bits, granularity };
        s.validate()?;
        Ok(s)
    }

    /// Stage-1 scheme for codec input: per-channel symmetric 8-bit RTN.
    pub fn codec_input() -> Self {
        QuantScheme { mode: QuantMode::SymmetricRtn, bits: 8, granularity: Granularity::PerChannel }
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=8).contains(&self.bits) {
            return Err(Error::invalid(format!("quantization bits {} outside [2, 8]", self.bits)));
        }
        if let Granularity::PerGroup(0) = self.granularity {
            return Err(Error::invalid("group size must be positive"));
        }
        Ok(())
    }

    fn max_code(&self) -> i64 {
        (1i64 << self.bits) - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupParams {
    /// Step between adjacent codes (Δ for symmetric mode). Zero for degenerate groups.
    pub scale: f32,
    pub zero_point: i32,
}

impl GroupParams {
    #[inline]
    pub fn dequantize(&self, code: u8) -> f32 {
        ((code as i64 - self.zero_point as i64) as f64 * self.scale as f64) as f32
    }

    /// Value-space reconstruction for a possibly non-integer code.
    #[inline]
    pub fn dequantize_real(&self, code: f64) -> f32 {
        ((code - self.zero_point as f64) * self.scale as f64) as f32
    }
}

/// Integer codes plus per-group parameters, laid out as the 2D view of the
/// source tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedPlane {
    pub dims: Vec<usize>,
    pub channel_axis: usize,
    pub role: Role,
    pub rows: usize,
    pub cols: usize,
    /// Channel axis of the 2D view (0 = rows, 1 = columns).
    pub plane_axis: usize,
    pub scheme: QuantScheme,
    pub params: Vec<GroupParams>,
    pub codes: Vec<u8>,
}

/// Number of parameter groups `scheme` produces on a `rows × cols` plane.
pub(crate) fn group_count(scheme: &QuantScheme, rows: usize, cols: usize, plane_axis: usize) -> Result<usize> {
    Ok(GroupLayout::new(scheme, rows, cols, plane_axis)?.1)
}

/// Maps plane coordinates to group indices.
#[derive(Debug, Clone, Copy)]
pub(crate) struct GroupLayout {
    granularity: Granularity,
    plane_axis: usize,
    cols: usize,
}

impl GroupLayout {
    pub(crate) fn new(scheme: &QuantScheme, rows: usize, cols: usize, plane_axis: usize) -> Result<(Self, usize)> {
        let count = match scheme.granularity {
            Granularity::PerTensor => 1,
            Granularity::PerChannel => {
                if plane_axis == 0 {
                    rows
                } else {
                    cols
                }
            }
            Granularity::PerGroup(size) => {
                if size == 0 || cols % size != 0 {
                    return Err(Error::invalid(format!("group size {size} does not divide row length {cols}")));
                }
                rows * (cols / size)
            }
        };
        Ok((GroupLayout { granularity: scheme.granularity, plane_axis, cols }, count))
    }

    #[inline]
    pub(crate) fn group(&self, r: usize, c: usize) -> usize {
        match self.granularity {
            Granularity::PerTensor => 0,
            Granularity::PerChannel => {
                if self.plane_axis == 0 {
                    r
                } else {
                    c
                }
            }
            Granularity::PerGroup(size) => r * (self.cols / size) + c / size,
        }
    }
}

/// Round half away from zero.
#[inline]
pub fn round_half_away(x: f64) -> f64 {
    x.round()
}

fn group_params(scheme: &QuantScheme, values: &[f32]) -> GroupParams {
    let half = 1i32 << (scheme.bits - 1);
    match scheme.mode {
        QuantMode::SymmetricRtn => {
            // max-abs element; its sign picks the zero point so that it lands
            // exactly on ±2^(N−1) within the 2^N-code range
            let mut peak = 0.0f32;
            for &v in values {
                if v.abs() > peak.abs() {
                    peak = v;
                }
            }
            if peak == 0.0 {
                return GroupParams { scale: 0.0, zero_point: half };
            }
            let scale = (peak.abs() as f64 / half as f64) as f32;
            let zero_point = if peak > 0.0 { half - 1 } else { half };
            GroupParams { scale, zero_point }
        }
        QuantMode::AsymmetricMinMax => {
            let (mut lo, mut hi) = (f32::INFINITY, f32::NEG_INFINITY);
            for &v in values {
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if hi == lo {
                // constant group: widen to include zero so the constant is a code
                lo = lo.min(0.0);
                hi = hi.max(0.0);
            }
            if hi == lo {
                return GroupParams { scale: 0.0, zero_point: 0 };
            }
            let levels = ((1i64 << scheme.bits) - 1) as f64;
            let scale = ((hi as f64 - lo as f64) / levels) as f32;
            let zero_point = round_half_away(-(lo as f64) / scale as f64) as i32;
            GroupParams { scale, zero_point }
        }
    }
}

#[inline]
fn quantize_value(p: &GroupParams, max_code: i64, v: f32) -> u8 {
    if p.scale == 0.0 {
        return p.zero_point.clamp(0, max_code as i32) as u8;
    }
    let level = round_half_away(v as f64 / p.scale as f64) as i64 + p.zero_point as i64;
    level.clamp(0, max_code) as u8
}

/// Quantizes the 2D view of `t` under `scheme`.
pub fn rtn_quantize(t: &Tensor, scheme: &QuantScheme) -> Result<QuantizedPlane> {
    scheme.validate()?;
    let plane = t.to_plane();
    quantize_plane(&plane, t.dims(), t.channel_axis(), t.role(), scheme)
}

pub(crate) fn quantize_plane(
    plane: &Plane,
    dims: &[usize],
    channel_axis: usize,
    role: Role,
    scheme: &QuantScheme,
) -> Result<QuantizedPlane> {
    let (rows, cols) = (plane.rows, plane.cols);
    let (layout, count) = GroupLayout::new(scheme, rows, cols, plane.channel_axis)?;
    let mut members: Vec<Vec<f32>> = vec![Vec::new(); count];
    for r in 0..rows {
        for c in 0..cols {
            members[layout.group(r, c)].push(plane.at(r, c));
        }
    }
    let params: Vec<GroupParams> = members.iter().map(|m| group_params(scheme, m)).collect();
    let max_code = scheme.max_code();
    let mut codes = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            codes.push(quantize_value(&params[layout.group(r, c)], max_code, plane.at(r, c)));
        }
    }
    Ok(QuantizedPlane {
        dims: dims.to_vec(),
        channel_axis,
        role,
        rows,
        cols,
        plane_axis: plane.channel_axis,
        scheme: *scheme,
        params,
        codes,
    })
}

impl QuantizedPlane {
    pub(crate) fn layout(&self) -> GroupLayout {
        GroupLayout::new(&self.scheme, self.rows, self.cols, self.plane_axis)
            .expect("validated at construction")
            .0
    }

    pub fn group_count(&self) -> usize {
        self.params.len()
    }

    /// Plane of dequantized values for arbitrary (already decoded) codes.
    pub fn dequantize_codes(&self, codes: &[u8]) -> Result<Plane> {
        if codes.len() != self.rows * self.cols {
            return Err(Error::LengthMismatch { expected: self.rows * self.cols, found: codes.len() });
        }
        let layout = self.layout();
        let mut data = Vec::with_capacity(codes.len());
        for r in 0..self.rows {
            for c in 0..self.cols {
                data.push(self.params[layout.group(r, c)].dequantize(codes[r * self.cols + c]));
            }
        }
        Plane::new(self.rows, self.cols, self.plane_axis, data)
    }

    /// Same parameters, different codes (e.g. after a lossy codec pass).
    pub fn with_codes(&self, codes: Vec<u8>) -> Result<QuantizedPlane> {
        if codes.len() != self.codes.len() {
            return Err(Error::LengthMismatch { expected: self.codes.len(), found: codes.len() });
        }
        Ok(QuantizedPlane { codes, ..self.clone() })
    }

    /// Largest per-group code step, in value units.
    pub fn max_scale(&self) -> f32 {
        self.params.iter().map(|p| p.scale).fold(0.0, f32::max)
    }

    /// Size in bits of the stage-1 side information as serialized in a bitstream.
    pub fn param_bits(&self) -> usize {
        self.params.len() * 64
    }
}

pub fn rtn_dequantize(q: &QuantizedPlane) -> Result<Tensor> {
    let plane = q.dequantize_codes(&q.codes)?;
    Tensor::from_plane(&q.dims, q.channel_axis, q.role, &plane)
}
