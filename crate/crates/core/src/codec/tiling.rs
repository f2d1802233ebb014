//! Splitting code planes into frames and reassembling them.

use rayon::prelude::*;

use super::config::{CodecConfig, Frame};
use super::frame::{decode_frame, encode_frame};
use crate::error::{Error, Result};
use crate::prequant::QuantizedPlane;

pub const MIN_TILE_SIDE: usize = 64;
pub const MAX_TILE_SIDE: usize = 4096;
pub const DEFAULT_FRAME_SIDE: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tile {
    pub row: usize,
    pub col: usize,
    pub rows: usize,
    pub cols: usize,
}

/// Row-major grid of tiles covering a `rows × cols` plane. Interior tiles are
/// `max_side` square; the last row and column of tiles hold the remainder and
/// are padded to the block grid inside the codec.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TileLayout {
    pub rows: usize,
    pub cols: usize,
    pub max_side: usize,
    pub tiles: Vec<Tile>,
}

impl TileLayout {
    pub fn new(rows: usize, cols: usize, max_side: usize) -> Result<Self> {
        if !(MIN_TILE_SIDE..=MAX_TILE_SIDE).contains(&max_side) {
            return Err(Error::invalid(format!(
                "max frame side {max_side} outside [{MIN_TILE_SIDE}, {MAX_TILE_SIDE}]"
            )));
        }
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("cannot tile an empty plane"));
        }
        let mut tiles = Vec::new();
        for row in (0..rows).step_by(max_side) {
            for col in (0..cols).step_by(max_side) {
                tiles.push(Tile { row, col, rows: max_side.min(rows - row), cols: max_side.min(cols - col) });
            }
        }
        Ok(TileLayout { rows, cols, max_side, tiles })
    }

    /// Samples added by padding each tile up to multiples of `block`.
    pub fn padding(&self, block: usize) -> usize {
        self.tiles
            .iter()
            .map(|t| t.rows.div_ceil(block) * block * t.cols.div_ceil(block) * block - t.rows * t.cols)
            .sum()
    }
}

pub fn frames_from_codes(codes: &[u8], layout: &TileLayout) -> Result<Vec<Frame>> {
    if codes.len() != layout.rows * layout.cols {
        return Err(Error::LengthMismatch { expected: layout.rows * layout.cols, found: codes.len() });
    }
    layout
        .tiles
        .iter()
        .map(|t| {
            let mut samples = Vec::with_capacity(t.rows * t.cols);
            for r in t.row..t.row + t.rows {
                samples.extend_from_slice(&codes[r * layout.cols + t.col..][..t.cols]);
            }
            Frame::new(t.cols, t.rows, samples)
        })
        .collect()
}

pub fn frames_from_plane(q: &QuantizedPlane, max_side: usize) -> Result<(Vec<Frame>, TileLayout)> {
    let layout = TileLayout::new(q.rows, q.cols, max_side)?;
    Ok((frames_from_codes(&q.codes, &layout)?, layout))
}

/// Inverse of [`frames_from_codes`].
pub fn reassemble(frames: &[Frame], layout: &TileLayout) -> Result<Vec<u8>> {
    if frames.len() != layout.tiles.len() {
        return Err(Error::ShapeMismatch(format!("{} frames for {} tiles", frames.len(), layout.tiles.len())));
    }
    let mut codes = vec![0u8; layout.rows * layout.cols];
    for (f, t) in frames.iter().zip(&layout.tiles) {
        if f.width != t.cols || f.height != t.rows {
            return Err(Error::ShapeMismatch(format!(
                "frame {}×{} does not match tile {}×{}",
                f.width, f.height, t.cols, t.rows
            )));
        }
        for r in 0..t.rows {
            codes[(t.row + r) * layout.cols + t.col..][..t.cols].copy_from_slice(&f.samples[r * t.cols..][..t.cols]);
        }
    }
    Ok(codes)
}

/// Encodes every frame independently (in parallel).
pub fn encode_frames(frames: &[Frame], cfg: &CodecConfig) -> Result<Vec<Vec<u8>>> {
    frames.par_iter().map(|f| encode_frame(f, cfg)).collect()
}

pub fn decode_frames(segments: &[Vec<u8>]) -> Result<Vec<Frame>> {
    segments.par_iter().map(|s| decode_frame(s)).collect()
}
