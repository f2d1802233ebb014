//! Stage-1 compression: RTN quantizers and randomized Hadamard incoherence processing.

pub mod hadamard;
mod rotation;
mod rtn;

pub use rotation::{
    apply_incoherence_pair, make_rotation, rotate_two_sided, unrotate_two_sided, IncoherenceRotation,
};
pub use rtn::{
    round_half_away, rtn_dequantize, rtn_quantize, GroupParams, Granularity, QuantMode, QuantScheme, QuantizedPlane,
};
pub(crate) use rtn::group_count;
