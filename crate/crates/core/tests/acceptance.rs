//! Acceptance run: one PASS/FAIL line per criterion, then a non-zero exit if
//! any criterion outside `KNOWN_GAPS` fails.

mod common;

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use common::{corpus_tensor, corpus_tensor_sized, golden_dir, golden_stream, golden_tensor, CORPUS_SIZE};
use vcodec::codec::{dct2, entropy_decode, entropy_encode, Bitstream, CodecConfig, Extension, Symbol, DEFAULT_FRAME_SIDE};
use vcodec::dist::{memory_footprint, simulate_pipeline, BoundaryCodec, ClusterSpec, ModelSpec, ParallelPlan};
use vcodec::hw::{
    codec_vs_comm_ratio, energy_efficiency, preset, speedup, CodecHWProfile, TrainingScenario,
};
use vcodec::pipelines::{
    baseline_rtn_runtime, compress_gradient, compress_runtime, compress_weights, compression_ratio, format_ratio,
    GradientSchedule, Target, FP16_BITS,
};
use vcodec::prequant::{apply_incoherence_pair, make_rotation, rtn_dequantize};
use vcodec::rate::{ablation_report, codec_plane};
use vcodec::synth::gen_gaussian;
use vcodec::{error_metrics, Role, Tensor};

/// Criteria whose targets cannot all be met at once; see the notes printed
/// with their lines.
const KNOWN_GAPS: &[u32] = &[7];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_symbol(rng: &mut ChaCha8Rng) -> Symbol {
    match rng.gen_range(0..5) {
        0 => Symbol::Flag { ctx: rng.gen(), bit: rng.gen_bool(0.2) },
        1 => Symbol::Bypass(rng.gen()),
        2 => Symbol::Split { class: rng.gen_range(0..5), split: rng.gen_bool(0.3) },
        3 => Symbol::Mode { class: rng.gen_range(0..5), mode: rng.gen_range(0..8) },
        _ => {
            let mag = match rng.gen_range(0..10) {
                0..=5 => rng.gen_range(-2..=2),
                6..=8 => rng.gen_range(-300..=300),
                _ => rng.gen_range(-(1 << 30)..=(1 << 30)),
            };
            Symbol::Level { class: rng.gen_range(0..5), value: mag }
        }
    }
}

/// Stream lengths: both ends of [1, 10⁵], the rest log-uniform.
fn stream_length(i: usize, rng: &mut ChaCha8Rng) -> usize {
    match i {
        0 => 1,
        1 => 100_000,
        _ => (10f64.powf(rng.gen_range(0.0..5.0)).round() as usize).clamp(1, 100_000),
    }
}

fn c1_entropy_lossless() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let lengths: Vec<(usize, u64)> = (0..1000).map(|i| (stream_length(i, &mut rng), rng.gen())).collect();
    let failures: usize = lengths
        .par_iter()
        .map(|&(len, seed)| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            let syms: Vec<Symbol> = (0..len).map(|_| random_symbol(&mut r)).collect();
            let bytes = entropy_encode(&syms).unwrap();
            usize::from(entropy_decode(&bytes).ok().as_deref() != Some(&syms[..]))
        })
        .sum();
    let total: usize = lengths.iter().map(|l| l.0).sum();
    let elapsed = start.elapsed();
    outcome(
        failures == 0 && elapsed < Duration::from_secs(30),
        format!("1000 streams, {total} symbols, {failures} mismatches, {:.1}s (limit 30s)", elapsed.as_secs_f64()),
    )
}

fn c2_roundtrip_and_monotonicity() -> Outcome {
    let start = Instant::now();
    const QPS: [u8; 5] = [0, 12, 24, 36, 48];
    let per_tensor: Vec<Result<Vec<(f64, usize)>, String>> = (0..CORPUS_SIZE)
        .map(|seed| {
            let t = corpus_tensor(seed, 20.0);
            let q = codec_plane(&t).map_err(|e| e.to_string())?;
            QPS.iter()
                .map(|&qp| {
                    let cfg = CodecConfig::default().with_qp(qp);
                    let s = Bitstream::encode(&q, cfg, Extension::None, DEFAULT_FRAME_SIDE).map_err(|e| e.to_string())?;
                    let bytes = s.to_bytes();
                    let decoded = Bitstream::from_bytes(&bytes)
                        .and_then(|b| b.decode_plane())
                        .map_err(|e| format!("seed {seed} qp {qp}: {e}"))?;
                    let mse = error_metrics(&t, &rtn_dequantize(&decoded).unwrap()).unwrap().mse;
                    Ok((mse, bytes.len()))
                })
                .collect()
        })
        .collect();
    let mut mean_mse = [0.0; 5];
    let mut mean_bytes = [0.0; 5];
    for r in &per_tensor {
        match r {
            Ok(v) => {
                for (k, &(m, b)) in v.iter().enumerate() {
                    mean_mse[k] += m / CORPUS_SIZE as f64;
                    mean_bytes[k] += b as f64 / CORPUS_SIZE as f64;
                }
            }
            Err(e) => return outcome(false, format!("decode failed: {e}")),
        }
    }
    let mse_mono = mean_mse.windows(2).all(|w| w[1] >= w[0]);
    let size_mono = mean_bytes.windows(2).all(|w| w[1] <= w[0]);

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for i in 0..10_000 {
        let side = [4, 8, 16, 32][i % 4];
        let block: Vec<f64> = (0..side * side).map(|_| rng.gen_range(-128.0..128.0)).collect();
        let c = dct2(&block, side).unwrap();
        let e_in: f64 = block.iter().map(|v| v * v).sum();
        let e_out: f64 = c.iter().map(|v| v * v).sum();
        worst = worst.max(((e_out - e_in) / e_in).abs().sqrt());
    }
    let elapsed = start.elapsed();
    outcome(
        mse_mono && size_mono && worst < 1e-4 && elapsed < Duration::from_secs(300),
        format!(
            "mean mse {:.4?}, mean bytes {:.0?}, worst DCT Frobenius deviation {worst:.1e} (limit 1e-4), {:.0}s (limit 300s)",
            mean_mse,
            mean_bytes,
            elapsed.as_secs_f64()
        ),
    )
}

fn c3_ablation_order() -> Outcome {
    let start = Instant::now();
    let mut mean = [0.0f64; 4];
    for seed in 0..CORPUS_SIZE {
        let rows = ablation_report(&corpus_tensor(seed, 20.0), 0.01, &CodecConfig::default()).unwrap();
        for (k, r) in rows.iter().enumerate() {
            mean[k] += r.bits_per_value / CORPUS_SIZE as f64;
        }
    }
    let elapsed = start.elapsed();
    let ordered = mean.windows(2).all(|w| w[0] > w[1]);
    outcome(
        ordered && mean[3] < 6.0 && elapsed < Duration::from_secs(900),
        format!(
            "baseline {:.4} > entropy {:.4} > +transform {:.4} > +prediction {:.4} (full < 6.0), {:.0}s (limit 900s)",
            mean[0],
            mean[1],
            mean[2],
            mean[3],
            elapsed.as_secs_f64()
        ),
    )
}

fn matmul(a: &[f32], b: &[f32], n: usize) -> Vec<f64> {
    let mut out = vec![0.0f64; n * n];
    for i in 0..n {
        for l in 0..n {
            let x = a[i * n + l] as f64;
            for j in 0..n {
                out[i * n + j] += x * b[l * n + j] as f64;
            }
        }
    }
    out
}

fn c4_incoherence() -> Outcome {
    let cfg = CodecConfig::default();
    // A floor-limited arm never reaches the target, so its bits at the
    // target are unbounded.
    let at_target = |r: &vcodec::rate::RateReport| r.bits_at_target().unwrap_or(f64::INFINITY);
    let (mut with, mut without) = (0.0, 0.0);
    let (mut floor_with, mut floor_without) = (0, 0);
    let mut spent_without = 0.0;
    for seed in 0..10 {
        let t = corpus_tensor(seed, 50.0);
        let r = compress_weights(&t, Target::Mse(0.01), true, seed, &cfg).unwrap().1;
        let p = compress_weights(&t, Target::Mse(0.01), false, 0, &cfg).unwrap().1;
        with += at_target(&r) / 10.0;
        without += at_target(&p) / 10.0;
        floor_with += usize::from(r.floor_limited);
        floor_without += usize::from(p.floor_limited);
        spent_without += p.bits_per_value / 10.0;
    }
    let mut worst = 0.0f64;
    for k in 0..100u64 {
        let a = gen_gaussian(64, 64, 1.0, Role::Weight, 2 * k).unwrap();
        let b = gen_gaussian(64, 64, 1.0, Role::Weight, 2 * k + 1).unwrap();
        let p = make_rotation(64, k).unwrap();
        let (ra, rb) = apply_incoherence_pair(&a, &b, &p).unwrap();
        let plain = matmul(a.values(), b.values(), 64);
        let rotated = matmul(ra.values(), rb.values(), 64);
        worst = plain.iter().zip(&rotated).map(|(x, y)| (x - y).abs()).fold(worst, f64::max);
    }
    outcome(
        with <= without && worst < 1e-4,
        format!(
            "bits at mse 0.01: rotated {with:.4} vs plain {without:.4} (floor-limited seeds: rotated {floor_with}/10, \
             plain {floor_without}/10, plain spends {spent_without:.4} bits at its floor); merged-product max-abs error \
             {worst:.2e} (limit 1e-4)"
        ),
    )
}

fn c5_boundary_propagation() -> Outcome {
    const N: u64 = 10;
    const SIDE: usize = 256;
    let stream: Vec<Tensor> = (0..N).map(|s| corpus_tensor_sized(SIDE, s, 20.0, Role::Activation)).collect();
    let codec = BoundaryCodec::Codec { bits: 3.5, config: CodecConfig::default() };
    let trace = simulate_pipeline(&stream, 3, &codec).unwrap();
    let mut by_boundary = [0.0f64; 3];
    for r in &trace.records {
        by_boundary[r.boundary_id as usize - 1] += r.mse / N as f64;
    }
    let non_decreasing = by_boundary.windows(2).all(|w| w[1] >= w[0]);

    let (mut codec_mse, mut rtn_mse) = (0.0, 0.0);
    for s in 0..N {
        let kv = corpus_tensor_sized(SIDE, 100 + s, 20.0, Role::KvCache);
        let (ct, _) = compress_runtime(&kv, 2.9, &CodecConfig::default()).unwrap();
        codec_mse += error_metrics(&kv, &ct.decompress().unwrap()).unwrap().mse / N as f64;
        rtn_mse += baseline_rtn_runtime(&kv, 3).unwrap().1.mse / N as f64;
    }
    outcome(
        non_decreasing && codec_mse < rtn_mse,
        format!(
            "cumulative mse after 1/2/3 boundaries {:.5?}; KV codec@2.9 {codec_mse:.5} vs RTN@3 {rtn_mse:.5}",
            by_boundary
        ),
    )
}

fn c6_gradient_schedule() -> Outcome {
    let sched = GradientSchedule::default();
    let closed = ((3.5 + 3.5) * 2500.0 + (3.5 + 8.0) * 5500.0) / 8000.0;
    let avg = sched.average_bits();
    let g = corpus_tensor(0, 20.0).with_role(Role::WeightGradient);
    let cfg = CodecConfig::default();
    let b100 = compress_gradient(&g, 100, &sched, &cfg).unwrap().bits.total;
    let b5000 = compress_gradient(&g, 5000, &sched, &cfg).unwrap().bits.total;
    let within = |v: f64, t: f64| (v - t).abs() <= 0.1 * t;
    outcome(
        (avg - 10.1).abs() <= 0.01 && (avg - closed).abs() < 1e-12 && within(b100, 7.0) && within(b5000, 11.5),
        format!("average {avg:.5} (10.1 ± 0.01); step 100 {b100:.3} bits (7.0 ± 10%); step 5000 {b5000:.3} bits (11.5 ± 10%)"),
    )
}

fn c7_memory() -> Outcome {
    let m = ModelSpec::llama_70b();
    let one = ClusterSpec { device_count: 1, ..ClusterSpec::four_by_8gb() };
    let four = ClusterSpec::four_by_8gb();
    let kv16 = memory_footprint(&m, &one, &ParallelPlan::fp16(1)).unwrap().kv_gb;
    let plan = ParallelPlan { weight_bits: 2.88, kv_bits: 2.9, activation_bits: 3.5, ..ParallelPlan::fp16(4) };
    let f = memory_footprint(&m, &four, &plan).unwrap();
    let fp16 = memory_footprint(&m, &four, &ParallelPlan::fp16(4)).unwrap();
    let checks = [
        (kv16 - 40.0).abs() <= 0.1,
        (f.weights_gb - 6.3).abs() <= 0.1,
        (f.kv_gb - 1.8).abs() <= 0.1,
        f.fits(&four, 0.5),
        !fp16.fits(&four, 0.5),
    ];
    let mut detail = format!(
        "fp16 KV {kv16:.3} GB (40 ± 0.1); weights {:.3} GB/device (6.3 ± 0.1); KV {:.3} GB/device (1.8 ± 0.1); \
         compressed total {:.3} GB fits={}; fp16 total {:.1} GB fits={}",
        f.weights_gb,
        f.kv_gb,
        f.total_gb,
        checks[3],
        fp16.total_gb,
        fp16.fits(&four, 0.5)
    );
    if !checks[1] {
        detail.push_str("; note: 70e9·2.88/8/4 bytes is 6.3 decimal GB but 5.87 binary GB, and binary GB is what makes the KV figure 40");
    }
    outcome(checks.iter().all(|&c| c), detail)
}

fn c8_ratio_display() -> Outcome {
    let a = format_ratio(compression_ratio(FP16_BITS, 2.9).unwrap());
    let b = format_ratio(compression_ratio(FP16_BITS, 3.5).unwrap());
    outcome(a == "5.5×" && b == "4.5×", format!("2.9 bits → {a}, 3.5 bits → {b}"))
}

fn c9_energy() -> Outcome {
    let e = energy_efficiency(5120.0, 97.8, 63.5, 5.0).unwrap();
    let r = codec_vs_comm_ratio(5120.0, 97.8, 63.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let engines = ["h264_enc", "h265_enc", "t264_enc", "t265_enc", "nvenc", "h264_dec", "t265_dec", "nvdec"];
    let mut violations = 0;
    for _ in 0..1000 {
        let pick = |rng: &mut ChaCha8Rng| -> CodecHWProfile {
            if rng.gen_bool(0.2) {
                CodecHWProfile::ideal("ideal")
            } else {
                preset(engines[rng.gen_range(0..engines.len())]).unwrap()
            }
        };
        let s = TrainingScenario {
            param_bytes: 10f64.powf(rng.gen_range(6.0..12.0)),
            comm_bytes_per_step: 10f64.powf(rng.gen_range(6.0..12.5)),
            bandwidth_gbit_s: 10f64.powf(rng.gen_range(0.0..3.0)),
            compute_s: if rng.gen_bool(0.1) { 0.0 } else { 10f64.powf(rng.gen_range(-3.0..2.0)) },
            ratio: rng.gen_range(1.0..40.0),
            enc: pick(&mut rng),
            dec: pick(&mut rng),
            comm_pj_per_bit: 5120.0,
            gpu_power_w: 300.0,
        };
        if speedup(&s).unwrap() > s.ratio * (1.0 + 1e-12) {
            violations += 1;
        }
    }
    outcome(
        (e - 4.32).abs() <= 0.01 && (r - 31.7).abs() <= 0.1 && violations == 0,
        format!("efficiency {e:.4} (4.32 ± 0.01); codec vs comm {r:.3} (31.7 ± 0.1); speedup > r in {violations}/1000 scenarios"),
    )
}

fn c10_golden() -> Outcome {
    let dir = golden_dir();
    let (Ok(vctn), Ok(vcbs)) = (std::fs::read(dir.join("reference.vctn")), std::fs::read(dir.join("reference.vcbs"))) else {
        return outcome(false, format!("golden files missing under {}", dir.display()));
    };
    let t = golden_tensor();
    let tensor_eq = vctn == t.to_bytes();
    let stream_eq = vcbs == golden_stream(&t).to_bytes();
    let decodes = Tensor::from_bytes(&vctn).is_ok()
        && Bitstream::from_bytes(&vcbs).and_then(|s| s.decode_plane()).map(|p| p == golden_stream(&t).decode_plane().unwrap()).unwrap_or(false);
    outcome(
        tensor_eq && stream_eq && decodes,
        format!("VCTN bytes equal: {tensor_eq}; VCBS bytes equal: {stream_eq}; stored stream decodes to the reference codes: {decodes}"),
    )
}

fn main() {
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|p| p.trim().parse().ok()).collect());
    let criteria: [(u32, &str, fn() -> Outcome); 10] = [
        (1, "entropy coder losslessness", c1_entropy_lossless),
        (2, "codec roundtrip and rate monotonicity", c2_roundtrip_and_monotonicity),
        (3, "stage ablation ordering", c3_ablation_order),
        (4, "incoherence benefit", c4_incoherence),
        (5, "boundary error propagation", c5_boundary_propagation),
        (6, "gradient schedule accounting", c6_gradient_schedule),
        (7, "memory arithmetic", c7_memory),
        (8, "compression ratio display", c8_ratio_display),
        (9, "energy model", c9_energy),
        (10, "format stability", c10_golden),
    ];
    let mut unexpected = Vec::new();
    for (id, name, run) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let o = run();
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {status}: {name}: {}", o.detail);
        if !o.pass && !KNOWN_GAPS.contains(&id) {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
