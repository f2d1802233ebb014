//! Lossy tensor compression built from an intra-only video-codec pipeline:
//! quad-tree partitioning, intra prediction, block DCT, dead-zone
//! quantization and adaptive binary arithmetic coding, fed by 8-bit RTN
//! pre-quantization. Application pipelines for weights, KV cache,
//! activations and gradients sit on top, together with a distributed
//! accounting simulator and an analytical energy model.

pub mod codec;
pub mod dist;
pub mod error;
pub mod hw;
pub mod pipelines;
pub mod prequant;
pub mod rate;
pub mod synth;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{error_metrics, ErrorMetrics, Plane, Role, Tensor};
