//! Intra-only block codec: quad-tree partitioning, intra prediction, block
//! DCT, dead-zone quantization and adaptive binary arithmetic coding.

mod bitstream;
mod config;
pub mod dct;
pub mod entropy;
mod frame;
mod predict;
mod quant;
mod tiling;

pub use config::{CodecConfig, Frame, StageSet, MAX_FRAME_SIDE};
pub use dct::{dct2, idct2, TransformKind, BLOCK_SIDES};
pub use entropy::{entropy_decode, entropy_encode, Symbol};
pub use frame::{decode_frame, encode_frame, segment_info, SEGMENT_HEADER_BYTES};
pub use predict::{predict_block, Neighbors, PredMode, BORDER_FILL};
pub use quant::{dequantize_coeffs, qp_step, quantize_coeffs, MAX_QP};
pub use bitstream::{Bitstream, Extension, GradientPhase, Payload, BITSTREAM_MAGIC, BITSTREAM_VERSION};
pub use tiling::{
    decode_frames, encode_frames, frames_from_codes, frames_from_plane, reassemble, Tile, TileLayout,
    DEFAULT_FRAME_SIDE, MAX_TILE_SIDE, MIN_TILE_SIDE,
};
