//! Analytical hardware model: energy per bit of communication against codec
//! work, compression speedup against bandwidth, and parallel-plan inference.

mod model;
mod profile;

pub use model::{
    cluster_energy_factor, codec_vs_comm_ratio, energy_efficiency, infer_parallel_plan, speedup, step_energy,
    step_time, sweep_bandwidth, sweep_model_size, write_sweep_csv, PlanCostModel, SweepPoint, TrainingScenario,
};
pub use profile::{codec_pair, preset, presets, CodecHWProfile, TABLE_THROUGHPUT_MB_S};
