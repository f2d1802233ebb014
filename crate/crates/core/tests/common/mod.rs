#![allow(dead_code)]

use std::path::PathBuf;

use vcodec::codec::{Bitstream, CodecConfig, Extension, DEFAULT_FRAME_SIDE};
use vcodec::rate::codec_plane;
use vcodec::synth::{gen_synthetic, SynthParams};
use vcodec::{Role, Tensor};

pub const CORPUS_SIZE: u64 = 20;
pub const CORPUS_SIDE: usize = 512;

/// Corpus member `seed`: 512×512, channel correlation 0.9, 0.5% outliers at
/// `outlier_scale`.
pub fn corpus_tensor(seed: u64, outlier_scale: f64) -> Tensor {
    gen_synthetic(&SynthParams::new(CORPUS_SIDE, CORPUS_SIDE, 0.9, 0.005, outlier_scale, seed)).unwrap()
}

pub fn corpus_tensor_sized(side: usize, seed: u64, outlier_scale: f64, role: Role) -> Tensor {
    gen_synthetic(&SynthParams::new(side, side, 0.9, 0.005, outlier_scale, seed)).unwrap().with_role(role)
}

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden")
}

/// Reference tensor: sides that are not multiples of any block size.
pub fn golden_tensor() -> Tensor {
    gen_synthetic(&SynthParams::new(72, 200, 0.9, 0.005, 20.0, 2024)).unwrap()
}

pub fn golden_config() -> CodecConfig {
    CodecConfig::default().with_qp(18)
}

pub fn golden_stream(t: &Tensor) -> Bitstream {
    let q = codec_plane(t).unwrap();
    Bitstream::encode(&q, golden_config(), Extension::None, DEFAULT_FRAME_SIDE).unwrap()
}
