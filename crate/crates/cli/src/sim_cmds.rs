use std::path::PathBuf;

use clap::{Args, Subcommand, ValueEnum};
use serde_json::json;
use vcodec::codec::CodecConfig;
use vcodec::dist::{
    comm_report, memory_footprint, simulate_dp_allreduce, simulate_pipeline, AllReduceCodec, BoundaryCodec,
    ClusterSpec, ModelSpec, ParallelPlan, Scenario,
};
use vcodec::hw::{
    codec_pair, codec_vs_comm_ratio, energy_efficiency, infer_parallel_plan, preset, presets, speedup, step_time,
    sweep_bandwidth, sweep_model_size, write_sweep_csv, PlanCostModel, TrainingScenario,
};
use vcodec::pipelines::GradientSchedule;
use vcodec::synth::{gen_gaussian, gen_synthetic, SynthParams};
use vcodec::{Error, Result, Role, Tensor};

use crate::output::{create, ReportArgs, Table};

#[derive(Args, Debug)]
pub struct DistSimArgs {
    #[command(subcommand)]
    action: DistAction,
}

#[derive(Subcommand, Debug)]
enum DistAction {
    /// Per-device memory and boundary traffic of a scenario.
    Memory {
        /// Key-value scenario file; the 70B / 4 × 8 GB setup when omitted.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, default_value_t = 0.5)]
        slack_gb: f64,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Activations through compressed pipeline boundaries.
    Pipeline {
        /// Activation tensors; a seeded stream is generated when omitted.
        #[arg(long = "in", num_args = 1..)]
        input: Vec<PathBuf>,
        #[arg(long, default_value_t = 3)]
        boundaries: u32,
        #[arg(long, default_value_t = 3.5)]
        target_bits: f64,
        /// Use per-channel RTN at this width instead of the codec.
        #[arg(long)]
        rtn_bits: Option<u8>,
        #[arg(long, default_value_t = 4)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Compressed data-parallel all-reduce of seeded gradient shards.
    Allreduce {
        #[arg(long, default_value_t = 4)]
        shards: u64,
        #[arg(long, default_value_t = 256)]
        rows: usize,
        #[arg(long, default_value_t = 256)]
        cols: usize,
        #[arg(long, default_value_t = 2.6)]
        target_bits: f64,
        /// Use residual-compensated compression at this step of the default
        /// schedule instead of a single codec pass.
        #[arg(long)]
        schedule_step: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        report: ReportArgs,
    },
}

fn default_scenario() -> Scenario {
    Scenario {
        model: ModelSpec::llama_70b(),
        cluster: ClusterSpec::four_by_8gb(),
        plan: ParallelPlan { weight_bits: 2.88, kv_bits: 2.9, activation_bits: 3.5, ..ParallelPlan::fp16(4) },
    }
}

pub fn dist_sim(a: DistSimArgs, meta: &[String]) -> Result<()> {
    match a.action {
        DistAction::Memory { scenario, slack_gb, report } => {
            let s = match scenario {
                Some(p) => Scenario::load(p)?,
                None => default_scenario(),
            };
            let f = memory_footprint(&s.model, &s.cluster, &s.plan)?;
            let c = comm_report(&s.model, &s.plan)?;
            let mut t = Table::new(&["quantity", "value"]);
            t.push(vec![json!("weights_gb"), json!(f.weights_gb)]);
            t.push(vec![json!("kv_gb"), json!(f.kv_gb)]);
            t.push(vec![json!("total_gb"), json!(f.total_gb)]);
            t.push(vec![json!("fits"), json!(f.fits(&s.cluster, slack_gb))]);
            t.push(vec![json!("boundaries"), json!(c.boundaries)]);
            t.push(vec![json!("bytes_per_boundary_per_token"), json!(c.bytes_per_boundary_per_token)]);
            t.push(vec![json!("activation_ratio"), json!(c.ratio_display)]);
            report.write_table(&t, meta)
        }
        DistAction::Pipeline { input, boundaries, target_bits, rtn_bits, count, seed, report } => {
            let stream: Vec<Tensor> = if input.is_empty() {
                (0..count)
                    .map(|i| {
                        let p = SynthParams::new(128, 256, 0.9, 0.005, 20.0, seed.wrapping_add(i));
                        Ok(gen_synthetic(&p)?.with_role(Role::Activation))
                    })
                    .collect::<Result<_>>()?
            } else {
                input.iter().map(Tensor::load).collect::<Result<_>>()?
            };
            let codec = match rtn_bits {
                Some(bits) => BoundaryCodec::Rtn { bits },
                None => BoundaryCodec::Codec { bits: target_bits, config: CodecConfig::default() },
            };
            let trace = simulate_pipeline(&stream, boundaries, &codec)?;
            let mut t = Table::new(&["boundary_id", "step", "bytes", "mse"]);
            t.summary("cumulative_mse", trace.cumulative_mse);
            t.summary("relative_error", trace.relative_error);
            for r in &trace.records {
                t.push(vec![json!(r.boundary_id), json!(r.step), json!(r.bytes), json!(r.mse)]);
            }
            report.write_table(&t, meta)
        }
        DistAction::Allreduce { shards, rows, cols, target_bits, schedule_step, seed, report } => {
            let tensors: Vec<Tensor> = (0..shards)
                .map(|i| gen_gaussian(rows, cols, 0.01, Role::WeightGradient, seed.wrapping_add(i)))
                .collect::<Result<_>>()?;
            let codec = match schedule_step {
                Some(step) => AllReduceCodec::Scheduled { sched: GradientSchedule::default(), step },
                None => AllReduceCodec::Bits(target_bits),
            };
            let r = simulate_dp_allreduce(&tensors, &codec, &CodecConfig::default())?;
            let mut t = Table::new(&["quantity", "value"]);
            t.push(vec![json!("bits_per_value"), json!(r.bits_per_value)]);
            t.push(vec![json!("broadcast_bits_per_value"), json!(r.broadcast_bits_per_value)]);
            t.push(vec![json!("relative_error"), json!(r.relative_error)]);
            t.push(vec![json!("max_abs_error"), json!(r.max_abs_error)]);
            report.write_table(&t, meta)
        }
    }
}

#[derive(Args, Debug)]
pub struct HwModelArgs {
    #[command(subcommand)]
    action: HwAction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Axis {
    Bandwidth,
    ModelSize,
}

#[derive(Args, Debug)]
struct ScenarioArgs {
    /// Key-value training scenario; built from the flags below when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value_t = 14e9)]
    param_bytes: f64,
    #[arg(long, default_value_t = 100.0)]
    bandwidth: f64,
    #[arg(long, default_value_t = 0.5)]
    compute_s: f64,
    #[arg(long, default_value_t = 5.0)]
    ratio: f64,
    /// Codec family: h264, h265, t264, t265 or nv.
    #[arg(long, default_value = "t264")]
    codec: String,
}

impl ScenarioArgs {
    fn scenario(&self) -> Result<TrainingScenario> {
        if let Some(p) = &self.scenario {
            return TrainingScenario::parse(&std::fs::read_to_string(p)?);
        }
        let mut s = TrainingScenario::data_parallel(self.param_bytes, self.bandwidth, self.compute_s, self.ratio)?;
        (s.enc, s.dec) = codec_pair(&self.codec)?;
        s.validate()?;
        Ok(s)
    }
}

#[derive(Subcommand, Debug)]
enum HwAction {
    /// Energy-efficiency factor of compressed communication.
    Energy {
        #[arg(long, default_value = "nccl")]
        comm: String,
        #[arg(long, default_value = "t264")]
        codec: String,
        #[arg(long)]
        ratio: f64,
    },
    /// Communication energy per bit over encode plus decode energy per bit.
    CodecRatio {
        #[arg(long, default_value = "nccl")]
        comm: String,
        #[arg(long, default_value = "t264")]
        codec: String,
    },
    /// Step times and speedup of one training scenario.
    Speedup {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Speedup over bandwidth or energy factor over model size.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_enum, default_value = "bandwidth")]
        axis: Axis,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long, default_value_t = 16)]
        points: usize,
        /// CSV path; stdout when omitted.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Pipeline and data-parallel degrees for a model on a GPU cluster.
    Plan {
        #[arg(long)]
        model_bytes: f64,
        #[arg(long)]
        gpu_memory_gb: f64,
        #[arg(long)]
        devices: u32,
        #[arg(long, default_value_t = 1.0)]
        activation_ratio: f64,
    },
    /// Print the built-in hardware profiles.
    Presets,
}

fn geometric(from: f64, to: f64, points: usize) -> Result<Vec<f64>> {
    if !(from > 0.0 && to >= from) || points == 0 {
        return Err(Error::InvalidArgument("sweep needs 0 < from <= to and at least one point".into()));
    }
    if points == 1 {
        return Ok(vec![from]);
    }
    let step = (to / from).ln() / (points - 1) as f64;
    Ok((0..points).map(|i| from * (step * i as f64).exp()).collect())
}

pub fn hw_model(a: HwModelArgs, meta: &[String]) -> Result<()> {
    match a.action {
        HwAction::Energy { comm, codec, ratio } => {
            let (enc, dec) = codec_pair(&codec)?;
            let f = energy_efficiency(preset(&comm)?.energy_pj_per_bit, enc.energy_pj_per_bit, dec.energy_pj_per_bit, ratio)?;
            say!("{f:.2}");
        }
        HwAction::CodecRatio { comm, codec } => {
            let (enc, dec) = codec_pair(&codec)?;
            let r = codec_vs_comm_ratio(preset(&comm)?.energy_pj_per_bit, enc.energy_pj_per_bit, dec.energy_pj_per_bit)?;
            say!("{r:.1}");
        }
        HwAction::Speedup { scenario } => {
            let s = scenario.scenario()?;
            say!(
                "uncompressed_s={:.6} compressed_s={:.6} speedup={:.4}",
                step_time(&s, false)?,
                step_time(&s, true)?,
                speedup(&s)?
            );
        }
        HwAction::Sweep { scenario, axis, from, to, points, report } => {
            let s = scenario.scenario()?;
            let xs = geometric(from, to, points)?;
            let (pts, x, y) = match axis {
                Axis::Bandwidth => (sweep_bandwidth(&s, &xs)?, "bandwidth_gbit_s", "speedup"),
                Axis::ModelSize => (sweep_model_size(&s, &xs)?, "param_bytes", "energy_factor"),
            };
            match report {
                Some(p) => write_sweep_csv(create(&p)?, x, y, &pts, meta)?,
                None => write_sweep_csv(std::io::stdout().lock(), x, y, &pts, meta)?,
            }
        }
        HwAction::Plan { model_bytes, gpu_memory_gb, devices, activation_ratio } => {
            let cost = PlanCostModel { activation_to_model_ratio: activation_ratio };
            let (pp, dp) = infer_parallel_plan(model_bytes, gpu_memory_gb * vcodec::dist::GB, devices, &cost)?;
            say!("pipeline_stages={pp} data_parallel_degree={dp}");
        }
        HwAction::Presets => {
            for (key, p) in presets() {
                say!("# {key}\n{}", p.to_text());
            }
        }
    }
    Ok(())
}
