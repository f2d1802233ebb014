//! Tensor payloads, the `VCTN` container, and error metrics.
//!
//! Container layout (little-endian):
//!
//! | bytes   | field                                   |
//! |---------|-----------------------------------------|
//! | 0..4    | magic `VCTN`                            |
//! | 4..6    | version (u16, = 1)                      |
//! | 6       | dtype code (0 = f32)                    |
//! | 7       | role code                               |
//! | 8       | ndim                                    |
//! | 9       | channel axis                            |
//! | 10..16  | reserved, zero                          |
//! | 16..    | `ndim` × u64 dims, then row-major f32s  |

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TENSOR_MAGIC: [u8; 4] = *b"VCTN";
pub const TENSOR_VERSION: u16 = 1;
const FIXED_HEADER_LEN: usize = 16;
const DTYPE_F32: u8 = 0;

/// Denominator floor for relative errors.
pub const REL_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Weight,
    Activation,
    KvCache,
    WeightGradient,
    ActivationGradient,
}

impl Role {
    pub fn code(self) -> u8 {
        match self {
            Role::Weight => 0,
            Role::Activation => 1,
            Role::KvCache => 2,
            Role::WeightGradient => 3,
            Role::ActivationGradient => 4,
        }
    }

    pub fn from_code(code: u8) -> Option<Role> {
        Some(match code {
            0 => Role::Weight,
            1 => Role::Activation,
            2 => Role::KvCache,
            3 => Role::WeightGradient,
            4 => Role::ActivationGradient,
            _ => return None,
        })
    }

    pub fn is_gradient(self) -> bool {
        matches!(self, Role::WeightGradient | Role::ActivationGradient)
    }

    pub fn is_runtime(self) -> bool {
        matches!(self, Role::Activation | Role::KvCache)
    }

    pub fn name(self) -> &'static str {
        match self {
            Role::Weight => "weight",
            Role::Activation => "activation",
            Role::KvCache => "kv_cache",
            Role::WeightGradient => "weight_gradient",
            Role::ActivationGradient => "activation_gradient",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "weight" => Role::Weight,
            "activation" => Role::Activation,
            "kv_cache" | "kv" => Role::KvCache,
            "weight_gradient" => Role::WeightGradient,
            "activation_gradient" => Role::ActivationGradient,
            other => return Err(Error::invalid(format!("unknown role {other:?}"))),
        })
    }
}

/// An n-dimensional f32 tensor with a declared channel axis and role.
///
/// Values are immutable once constructed; the constructor enforces that
/// `product(dims) == values.len()`, that the channel axis is in range, and
/// that every value is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    channel_axis: usize,
    role: Role,
    values: Vec<f32>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, channel_axis: usize, role: Role, values: Vec<f32>) -> Result<Self> {
        if dims.is_empty() || dims.iter().any(|&d| d == 0) {
            return Err(Error::ShapeMismatch(format!("dims must be non-empty and positive, got {dims:?}")));
        }
        if dims.len() > u8::MAX as usize {
            return Err(Error::ShapeMismatch(format!("rank {} too large", dims.len())));
        }
        if channel_axis >= dims.len() {
            return Err(Error::ShapeMismatch(format!(
                "channel axis {channel_axis} out of range for rank {}",
                dims.len()
            )));
        }
        let count = element_count(&dims)?;
        if count != values.len() {
            return Err(Error::LengthMismatch { expected: count, found: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite value at index {i}")));
        }
        Ok(Tensor { dims, channel_axis, role, values })
    }

    /// A rank-2 tensor whose rows are channels.
    pub fn matrix(rows: usize, cols: usize, role: Role, values: Vec<f32>) -> Result<Self> {
        Tensor::new(vec![rows, cols], 0, role, values)
    }

    pub fn zeros(dims: Vec<usize>, channel_axis: usize, role: Role) -> Result<Self> {
        let n = element_count(&dims)?;
        Tensor::new(dims, channel_axis, role, vec![0.0; n])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn channel_axis(&self) -> usize {
        self.channel_axis
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }

    /// Same dims/axis/role, new values.
    pub fn with_values(&self, values: Vec<f32>) -> Result<Self> {
        Tensor::new(self.dims.clone(), self.channel_axis, self.role, values)
    }

    pub fn mean_square(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>() / self.values.len() as f64
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt()
    }

    /// The 2D frame view consumed by the quantizers and the codec.
    ///
    /// Rank-2 tensors are used as stored. Any other rank is flattened to
    /// `(product of non-channel axes) × (channel axis size)` with the channel
    /// axis becoming the column axis.
    pub fn to_plane(&self) -> Plane {
        if self.dims.len() == 2 {
            return Plane {
                rows: self.dims[0],
                cols: self.dims[1],
                channel_axis: self.channel_axis,
                data: self.values.clone(),
            };
        }
        let ch = self.channel_axis;
        let channels = self.dims[ch];
        let outer: usize = self.dims[..ch].iter().product();
        let inner: usize = self.dims[ch + 1..].iter().product();
        let rows = outer * inner;
        let mut data = vec![0.0f32; self.values.len()];
        // source index = (o * channels + c) * inner + i ; dest row = o * inner + i
        for o in 0..outer {
            for c in 0..channels {
                let src = (o * channels + c) * inner;
                for i in 0..inner {
                    data[(o * inner + i) * channels + c] = self.values[src + i];
                }
            }
        }
        Plane { rows, cols: channels, channel_axis: 1, data }
    }

    /// Inverse of [`Tensor::to_plane`] for a tensor with the given layout.
    pub fn from_plane(dims: &[usize], channel_axis: usize, role: Role, plane: &Plane) -> Result<Self> {
        let count = element_count(dims)?;
        if plane.data.len() != count {
            return Err(Error::ShapeMismatch(format!(
                "plane {}x{} does not hold a tensor of dims {dims:?}",
                plane.rows, plane.cols
            )));
        }
        if dims.len() == 2 {
            if plane.rows != dims[0] || plane.cols != dims[1] {
                return Err(Error::ShapeMismatch(format!(
                    "plane {}x{} vs dims {dims:?}",
                    plane.rows, plane.cols
                )));
            }
            return Tensor::new(dims.to_vec(), channel_axis, role, plane.data.clone());
        }
        if channel_axis >= dims.len() {
            return Err(Error::ShapeMismatch(format!("channel axis {channel_axis} out of range")));
        }
        let channels = dims[channel_axis];
        let outer: usize = dims[..channel_axis].iter().product();
        let inner: usize = dims[channel_axis + 1..].iter().product();
        if plane.cols != channels || plane.rows != outer * inner {
            return Err(Error::ShapeMismatch(format!(
                "plane {}x{} vs flattened dims {dims:?}",
                plane.rows, plane.cols
            )));
        }
        let mut values = vec![0.0f32; count];
        for o in 0..outer {
            for c in 0..channels {
                let dst = (o * channels + c) * inner;
                for i in 0..inner {
                    values[dst + i] = plane.data[(o * inner + i) * channels + c];
                }
            }
        }
        Tensor::new(dims.to_vec(), channel_axis, role, values)
    }

    pub fn header_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(FIXED_HEADER_LEN + 8 * self.dims.len());
        out.extend_from_slice(&TENSOR_MAGIC);
        out.extend_from_slice(&TENSOR_VERSION.to_le_bytes());
        out.push(DTYPE_F32);
        out.push(self.role.code());
        out.push(self.dims.len() as u8);
        out.push(self.channel_axis as u8);
        out.extend_from_slice(&[0u8; 6]);
        for &d in &self.dims {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        out
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.header_bytes();
        out.reserve(4 * self.values.len());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Writes the container and returns the number of bytes written.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<usize> {
        let bytes = self.to_bytes();
        w.write_all(&bytes)?;
        Ok(bytes.len())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<usize> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        let n = self.write_to(&mut w)?;
        w.flush()?;
        Ok(n)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 {
            return Err(Error::Truncated);
        }
        let mut found = [0u8; 4];
        found.copy_from_slice(&bytes[..4]);
        if found != TENSOR_MAGIC {
            return Err(Error::BadMagic { expected: TENSOR_MAGIC, found });
        }
        if bytes.len() < FIXED_HEADER_LEN {
            return Err(Error::Truncated);
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != TENSOR_VERSION {
            return Err(Error::UnsupportedVersion(format!("tensor container version {version}")));
        }
        if bytes[10..16].iter().any(|&b| b != 0) {
            return Err(Error::UnsupportedVersion("non-zero reserved header bytes".into()));
        }
        if bytes[6] != DTYPE_F32 {
            return Err(Error::UnsupportedVersion(format!("dtype code {}", bytes[6])));
        }
        let role = Role::from_code(bytes[7]).ok_or_else(|| Error::corrupt(format!("role code {}", bytes[7])))?;
        let ndim = bytes[8] as usize;
        let channel_axis = bytes[9] as usize;
        let dims_end = FIXED_HEADER_LEN + 8 * ndim;
        if bytes.len() < dims_end {
            return Err(Error::Truncated);
        }
        let dims: Vec<usize> = bytes[FIXED_HEADER_LEN..dims_end]
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()) as usize)
            .collect();
        let count = element_count(&dims)?;
        let payload = &bytes[dims_end..];
        let expected = count
            .checked_mul(4)
            .ok_or_else(|| Error::corrupt("dims overflow"))?;
        if payload.len() != expected {
            return Err(Error::LengthMismatch { expected, found: payload.len() });
        }
        let values = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Tensor::new(dims, channel_axis, role, values).map_err(|e| match e {
            Error::ShapeMismatch(m) | Error::InvalidArgument(m) => Error::Corrupt(m),
            other => other,
        })
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Tensor::from_bytes(&bytes)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Tensor::from_bytes(&std::fs::read(path)?)
    }
}

fn element_count(dims: &[usize]) -> Result<usize> {
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::ShapeMismatch(format!("element count of {dims:?} overflows")))
}

/// Row-major 2D view of a tensor, with the channel axis expressed as
/// 0 (rows are channels) or 1 (columns are channels).
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub rows: usize,
    pub cols: usize,
    pub channel_axis: usize,
    pub data: Vec<f32>,
}

impl Plane {
    pub fn new(rows: usize, cols: usize, channel_axis: usize, data: Vec<f32>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::LengthMismatch { expected: rows * cols, found: data.len() });
        }
        if channel_axis > 1 {
            return Err(Error::invalid("plane channel axis must be 0 or 1"));
        }
        Ok(Plane { rows, cols, channel_axis, data })
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f32 {
        self.data[r * self.cols + c]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    pub mse: f64,
    pub max_abs_err: f64,
    pub frobenius_rel_err: f64,
}

/// Element-wise error of `b` against reference `a`.
pub fn error_metrics(a: &Tensor, b: &Tensor) -> Result<ErrorMetrics> {
    if a.dims() != b.dims() {
        return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", a.dims(), b.dims())));
    }
    Ok(slice_metrics(a.values(), b.values()))
}

pub(crate) fn slice_metrics(a: &[f32], b: &[f32]) -> ErrorMetrics {
    debug_assert_eq!(a.len(), b.len());
    let mut sse = 0.0f64;
    let mut max_abs = 0.0f64;
    let mut ref_sq = 0.0f64;
    for (&x, &y) in a.iter().zip(b) {
        let d = x as f64 - y as f64;
        sse += d * d;
        max_abs = max_abs.max(d.abs());
        ref_sq += (x as f64) * (x as f64);
    }
    let n = a.len().max(1) as f64;
    ErrorMetrics {
        mse: sse / n,
        max_abs_err: max_abs,
        frobenius_rel_err: sse.sqrt() / ref_sq.sqrt().max(REL_EPS),
    }
}
