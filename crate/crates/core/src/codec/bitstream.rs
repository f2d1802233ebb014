//! "VCBS" container: codec configuration, tensor metadata, stage-1
//! parameters and independently decodable frame segments.

use super::config::CodecConfig;
use super::entropy::raw::{BitReader, BitWriter};
use super::tiling::{decode_frames, encode_frames, frames_from_plane, reassemble, TileLayout};
use crate::error::{Error, Result};
use crate::prequant::{GroupParams, Granularity, QuantMode, QuantScheme, QuantizedPlane};
use crate::tensor::Role;

pub const BITSTREAM_MAGIC: [u8; 4] = *b"VCBS";
pub const BITSTREAM_VERSION: u16 = 1;

/// Bytes per stage-1 group: symmetric schemes store only the scale, whose
/// sign bit selects the zero point `2^(N−1) − 1` (set) or `2^(N−1)` (clear).
fn param_width(mode: QuantMode) -> usize {
    match mode {
        QuantMode::SymmetricRtn => 4,
        QuantMode::AsymmetricMinMax => 8,
    }
}

/// Role-specific header data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extension {
    None,
    /// Weight rotated as `P_rᵀ · W · P_c` with seeds `seed` and `seed + 1`.
    /// The plane holds the zero-padded rotated matrix; `rows × cols` is the
    /// original size.
    Rotation { seed: u64, rows: u64, cols: u64 },
    Gradient { phase: GradientPhase, step: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientPhase {
    Base,
    /// Residual coded by the codec.
    ResidualCodec,
    /// Residual sent as raw RTN codes.
    ResidualRtn,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    /// One codec segment per tile of `TileLayout::new(rows, cols, max_side)`.
    Frames { max_side: usize, segments: Vec<Vec<u8>> },
    /// Codes packed at the scheme's bit width, no codec.
    RawCodes(Vec<u8>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bitstream {
    pub config: CodecConfig,
    pub dims: Vec<usize>,
    pub channel_axis: usize,
    pub role: Role,
    pub rows: usize,
    pub cols: usize,
    pub plane_axis: usize,
    pub scheme: QuantScheme,
    pub params: Vec<GroupParams>,
    pub extension: Extension,
    pub payload: Payload,
}

impl Bitstream {
    /// Wraps raw codes of `q` without running the codec.
    pub fn raw(q: &QuantizedPlane, extension: Extension) -> Self {
        let mut w = BitWriter::default();
        for &c in &q.codes {
            w.put(c as u32, q.scheme.bits as u32);
        }
        Bitstream::with_payload(q, CodecConfig::default(), extension, Payload::RawCodes(w.finish()))
    }

    pub fn with_payload(q: &QuantizedPlane, config: CodecConfig, extension: Extension, payload: Payload) -> Self {
        Bitstream {
            config,
            dims: q.dims.clone(),
            channel_axis: q.channel_axis,
            role: q.role,
            rows: q.rows,
            cols: q.cols,
            plane_axis: q.plane_axis,
            scheme: q.scheme,
            params: q.params.clone(),
            extension,
            payload,
        }
    }

    /// Tiles `q` into frames of at most `max_side` and runs the codec on each.
    pub fn encode(q: &QuantizedPlane, config: CodecConfig, extension: Extension, max_side: usize) -> Result<Self> {
        config.validate()?;
        let (frames, layout) = frames_from_plane(q, max_side)?;
        let segments = encode_frames(&frames, &config)?;
        Ok(Bitstream::with_payload(q, config, extension, Payload::Frames { max_side: layout.max_side, segments }))
    }

    pub fn frame_count(&self) -> usize {
        match &self.payload {
            Payload::Frames { segments, .. } => segments.len(),
            Payload::RawCodes(_) => 0,
        }
    }

    /// Decodes the payload back to stage-1 codes and parameters.
    pub fn decode_plane(&self) -> Result<QuantizedPlane> {
        let codes = match &self.payload {
            Payload::Frames { max_side, segments } => {
                let layout = TileLayout::new(self.rows, self.cols, *max_side)?;
                if layout.tiles.len() != segments.len() {
                    return Err(Error::corrupt(format!(
                        "{} segments for {} tiles",
                        segments.len(),
                        layout.tiles.len()
                    )));
                }
                let frames = decode_frames(segments)?;
                reassemble(&frames, &layout).map_err(|e| Error::corrupt(e.to_string()))?
            }
            Payload::RawCodes(bytes) => {
                let mut r = BitReader::new(bytes);
                (0..self.rows * self.cols)
                    .map(|_| r.get(self.scheme.bits as u32).map(|v| v as u8))
                    .collect::<Result<Vec<u8>>>()?
            }
        };
        Ok(QuantizedPlane {
            dims: self.dims.clone(),
            channel_axis: self.channel_axis,
            role: self.role,
            rows: self.rows,
            cols: self.cols,
            plane_axis: self.plane_axis,
            scheme: self.scheme,
            params: self.params.clone(),
            codes,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut b = Vec::new();
        b.extend_from_slice(&BITSTREAM_MAGIC);
        b.extend_from_slice(&BITSTREAM_VERSION.to_le_bytes());
        let c = &self.config;
        b.extend_from_slice(&[c.ctu_size as u8, c.min_block as u8, c.qp, c.toggle_bits()]);
        b.extend_from_slice(&c.lambda_scale.to_le_bytes());
        b.extend_from_slice(&[0; 8]);
        b.extend_from_slice(&[self.role.code(), self.dims.len() as u8, self.channel_axis as u8, self.plane_axis as u8]);
        for &d in &self.dims {
            b.extend_from_slice(&(d as u64).to_le_bytes());
        }
        b.extend_from_slice(&(self.rows as u32).to_le_bytes());
        b.extend_from_slice(&(self.cols as u32).to_le_bytes());
        let (gran, group) = match self.scheme.granularity {
            Granularity::PerTensor => (0u8, 0u32),
            Granularity::PerChannel => (1, 0),
            Granularity::PerGroup(s) => (2, s as u32),
        };
        let mode = match self.scheme.mode {
            QuantMode::SymmetricRtn => 0u8,
            QuantMode::AsymmetricMinMax => 1,
        };
        b.extend_from_slice(&[mode, self.scheme.bits, gran, 0]);
        b.extend_from_slice(&group.to_le_bytes());
        b.extend_from_slice(&(self.params.len() as u32).to_le_bytes());
        let half = 1i32 << (self.scheme.bits - 1);
        for p in &self.params {
            match self.scheme.mode {
                QuantMode::SymmetricRtn => {
                    debug_assert!(p.zero_point == half || p.zero_point == half - 1);
                    let s = if p.zero_point == half - 1 { -p.scale } else { p.scale };
                    b.extend_from_slice(&s.to_le_bytes());
                }
                QuantMode::AsymmetricMinMax => {
                    b.extend_from_slice(&p.scale.to_le_bytes());
                    b.extend_from_slice(&p.zero_point.to_le_bytes());
                }
            }
        }
        match self.extension {
            Extension::None => b.push(0),
            Extension::Rotation { seed, rows, cols } => {
                b.push(1);
                b.extend_from_slice(&seed.to_le_bytes());
                b.extend_from_slice(&rows.to_le_bytes());
                b.extend_from_slice(&cols.to_le_bytes());
            }
            Extension::Gradient { phase, step } => {
                b.push(2);
                b.push(match phase {
                    GradientPhase::Base => 0,
                    GradientPhase::ResidualCodec => 1,
                    GradientPhase::ResidualRtn => 2,
                });
                b.extend_from_slice(&step.to_le_bytes());
            }
        }
        match &self.payload {
            Payload::Frames { max_side, segments } => {
                b.push(0);
                b.extend_from_slice(&(*max_side as u16).to_le_bytes());
                b.extend_from_slice(&(segments.len() as u32).to_le_bytes());
                let mut offset = 0u64;
                for s in segments {
                    b.extend_from_slice(&offset.to_le_bytes());
                    offset += s.len() as u64;
                }
                for s in segments {
                    b.extend_from_slice(s);
                }
            }
            Payload::RawCodes(bytes) => {
                b.push(1);
                b.extend_from_slice(&(bytes.len() as u64).to_le_bytes());
                b.extend_from_slice(bytes);
            }
        }
        b
    }

    /// Serialized size without building the byte vector.
    pub fn byte_len(&self) -> usize {
        let ext = match self.extension {
            Extension::None => 1,
            Extension::Rotation { .. } => 25,
            Extension::Gradient { .. } => 10,
        };
        let payload = match &self.payload {
            Payload::Frames { segments, .. } => 7 + segments.iter().map(|s| 8 + s.len()).sum::<usize>(),
            Payload::RawCodes(bytes) => 9 + bytes.len(),
        };
        22 + 4 + 8 * self.dims.len() + 8 + 8 + 4 + param_width(self.scheme.mode) * self.params.len() + ext + payload
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Cursor { data: bytes, pos: 0 };
        let magic: [u8; 4] = r.take(4)?.try_into().unwrap();
        if magic != BITSTREAM_MAGIC {
            return Err(Error::BadMagic { expected: BITSTREAM_MAGIC, found: magic });
        }
        let version = r.u16()?;
        if version != BITSTREAM_VERSION {
            return Err(Error::UnsupportedVersion(format!("bitstream version {version}")));
        }
        let cfg_bytes = r.take(8)?;
        let mut config = CodecConfig {
            ctu_size: cfg_bytes[0] as usize,
            min_block: cfg_bytes[1] as usize,
            qp: cfg_bytes[2],
            lambda_scale: f32::from_le_bytes(cfg_bytes[4..8].try_into().unwrap()),
            ..CodecConfig::default()
        };
        config.set_toggles(cfg_bytes[3])?;
        config.validate().map_err(|e| Error::corrupt(format!("config: {e}")))?;
        if r.take(8)?.iter().any(|&v| v != 0) {
            return Err(Error::UnsupportedVersion("nonzero reserved config bytes".into()));
        }
        let head = r.take(4)?;
        let role = Role::from_code(head[0]).ok_or_else(|| Error::corrupt(format!("role code {}", head[0])))?;
        let ndim = head[1] as usize;
        let channel_axis = head[2] as usize;
        let plane_axis = head[3] as usize;
        let dims = (0..ndim).map(|_| r.u64().map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
        if ndim == 0 || channel_axis >= ndim || plane_axis > 1 {
            return Err(Error::corrupt(format!("axes {channel_axis}/{plane_axis} for rank {ndim}")));
        }
        let rows = r.u32()? as usize;
        let cols = r.u32()? as usize;
        let elems = dims.iter().try_fold(1usize, |a, &d| a.checked_mul(d));
        if dims.contains(&0) || elems.map_or(true, |e| e > rows.saturating_mul(cols)) {
            return Err(Error::corrupt(format!("plane {rows}×{cols} cannot hold dims {dims:?}")));
        }
        let s = r.take(4)?;
        let mode = match s[0] {
            0 => QuantMode::SymmetricRtn,
            1 => QuantMode::AsymmetricMinMax,
            m => return Err(Error::corrupt(format!("quantization mode {m}"))),
        };
        let group = r.u32()? as usize;
        let granularity = match s[2] {
            0 => Granularity::PerTensor,
            1 => Granularity::PerChannel,
            2 => Granularity::PerGroup(group),
            g => return Err(Error::corrupt(format!("granularity {g}"))),
        };
        let scheme = QuantScheme::new(mode, s[1], granularity).map_err(|e| Error::corrupt(e.to_string()))?;
        let count = r.u32()? as usize;
        if count > bytes.len() / param_width(mode) {
            return Err(Error::Truncated);
        }
        let half = 1i32 << (scheme.bits - 1);
        let params = (0..count)
            .map(|_| {
                let scale = f32::from_le_bytes(r.take(4)?.try_into().unwrap());
                Ok(match mode {
                    QuantMode::SymmetricRtn if scale.is_sign_negative() => {
                        GroupParams { scale: -scale, zero_point: half - 1 }
                    }
                    QuantMode::SymmetricRtn => GroupParams { scale, zero_point: half },
                    QuantMode::AsymmetricMinMax => GroupParams { scale, zero_point: r.i32()? },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if params.iter().any(|p| !(p.scale.is_finite() && p.scale >= 0.0)) {
            return Err(Error::corrupt("non-finite or negative group scale"));
        }
        let expected_groups = crate::prequant::group_count(&scheme, rows, cols, plane_axis)
            .map_err(|e| Error::corrupt(e.to_string()))?;
        if expected_groups != count {
            return Err(Error::corrupt(format!("{count} parameter groups, expected {expected_groups}")));
        }
        let extension = match r.take(1)?[0] {
            0 => Extension::None,
            1 => Extension::Rotation { seed: r.u64()?, rows: r.u64()?, cols: r.u64()? },
            2 => {
                let phase = match r.take(1)?[0] {
                    0 => GradientPhase::Base,
                    1 => GradientPhase::ResidualCodec,
                    2 => GradientPhase::ResidualRtn,
                    p => return Err(Error::corrupt(format!("gradient phase {p}"))),
                };
                Extension::Gradient { phase, step: r.u64()? }
            }
            e => return Err(Error::corrupt(format!("extension tag {e}"))),
        };
        let payload = match r.take(1)?[0] {
            0 => {
                let max_side = r.u16()? as usize;
                let n = r.u32()? as usize;
                if n > bytes.len() / 8 {
                    return Err(Error::Truncated);
                }
                let offsets = (0..n).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
                let body = &bytes[r.pos..];
                let mut segments = Vec::with_capacity(n);
                for i in 0..n {
                    let start = offsets[i] as usize;
                    let end = if i + 1 < n { offsets[i + 1] as usize } else { body.len() };
                    if start > end || end > body.len() {
                        return Err(Error::corrupt(format!("segment {i} offsets {start}..{end}")));
                    }
                    segments.push(body[start..end].to_vec());
                }
                Payload::Frames { max_side, segments }
            }
            1 => {
                let len = r.u64()? as usize;
                let body = &bytes[r.pos..];
                if body.len() != len {
                    return Err(Error::LengthMismatch { expected: len, found: body.len() });
                }
                Payload::RawCodes(body.to_vec())
            }
            k => return Err(Error::corrupt(format!("payload kind {k}"))),
        };
        Ok(Bitstream {
            config,
            dims,
            channel_axis,
            role,
            rows,
            cols,
            plane_axis,
            scheme,
            params,
            extension,
            payload,
        })
    }
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).ok_or(Error::Truncated)?;
        let s = self.data.get(self.pos..end).ok_or(Error::Truncated)?;
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
