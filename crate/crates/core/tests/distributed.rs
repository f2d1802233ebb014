mod common;

use common::corpus_tensor_sized;
use vcodec::codec::CodecConfig;
use vcodec::dist::{simulate_dp_allreduce, simulate_pipeline, AllReduceCodec, BoundaryCodec};
use vcodec::hw::{codec_pair, step_time, TrainingScenario};
use vcodec::pipelines::GradientSchedule;
use vcodec::synth::gen_gaussian;
use vcodec::{Role, Tensor};

fn activations(n: u64) -> Vec<Tensor> {
    (0..n).map(|s| corpus_tensor_sized(128, s, 20.0, Role::Activation)).collect()
}

#[test]
fn codec_beats_wider_rtn_across_boundaries() {
    let stream = activations(4);
    let codec = simulate_pipeline(&stream, 3, &BoundaryCodec::Codec { bits: 3.5, config: CodecConfig::default() }).unwrap();
    let rtn = simulate_pipeline(&stream, 3, &BoundaryCodec::Rtn { bits: 4 }).unwrap();
    assert!(codec.cumulative_mse < rtn.cumulative_mse, "{} vs {}", codec.cumulative_mse, rtn.cumulative_mse);
    assert!(codec.boundary_bytes.iter().zip(&rtn.boundary_bytes).all(|(c, r)| c < r));
}

#[test]
fn pipeline_trace_is_deterministic_and_leaves_inputs() {
    let stream = activations(3);
    let before = stream.clone();
    let codec = BoundaryCodec::Codec { bits: 3.0, config: CodecConfig::default() };
    let a = simulate_pipeline(&stream, 2, &codec).unwrap();
    let b = simulate_pipeline(&stream, 2, &codec).unwrap();
    assert_eq!(a, b);
    assert_eq!(stream, before);
    let order: Vec<(u64, u32)> = a.records.iter().map(|r| (r.step, r.boundary_id)).collect();
    assert_eq!(order, vec![(0, 1), (0, 2), (1, 1), (1, 2), (2, 1), (2, 2)]);
}

#[test]
fn allreduce_error_falls_with_bits() {
    let cfg = CodecConfig::default();
    let (mut fine, mut coarse) = (0.0, 0.0);
    for corpus in 0..3u64 {
        let shards: Vec<Tensor> = (0..4)
            .map(|i| corpus_tensor_sized(128, 10 * corpus + i, 20.0, Role::WeightGradient))
            .collect();
        fine += simulate_dp_allreduce(&shards, &AllReduceCodec::Bits(2.6), &cfg).unwrap().relative_error;
        coarse += simulate_dp_allreduce(&shards, &AllReduceCodec::Bits(0.8), &cfg).unwrap().relative_error;
    }
    assert!(fine < coarse, "{fine} vs {coarse}");
}

#[test]
fn scheduled_allreduce_uses_both_arms() {
    let shards: Vec<Tensor> = (0..2).map(|s| gen_gaussian(64, 64, 0.01, Role::WeightGradient, s).unwrap()).collect();
    let cfg = CodecConfig::default();
    let sched = GradientSchedule::default();
    let early = simulate_dp_allreduce(&shards, &AllReduceCodec::Scheduled { sched, step: 10 }, &cfg).unwrap();
    let late = simulate_dp_allreduce(&shards, &AllReduceCodec::Scheduled { sched, step: 6000 }, &cfg).unwrap();
    assert!(late.bits_per_value > early.bits_per_value);
    assert!(late.relative_error < early.relative_error);
}

#[test]
fn slow_gpu_engines_lose_to_tensor_codec_at_high_bandwidth() {
    let base = TrainingScenario::data_parallel(7e9, 100.0, 0.0, 5.0).unwrap();
    let (enc, dec) = codec_pair("nv").unwrap();
    let nv = TrainingScenario { enc, dec, ..base.clone() };
    let (enc, dec) = codec_pair("t265").unwrap();
    let t265 = TrainingScenario { enc, dec, ..base };
    assert!(step_time(&nv, true).unwrap() > step_time(&t265, true).unwrap());
}
