use std::path::PathBuf;

use clap::{ArgGroup, Args};
use serde_json::json;
use vcodec::codec::CodecConfig;
use vcodec::pipelines::{compress_gradient, compress_tensor, decompress_gradient, CompressedTensor, GradientSchedule, Target};
use vcodec::rate::{ablation_report, codec_plane, stage_label, QpSearch, RateReport, ReportRow};
use vcodec::synth::{gen_gaussian, gen_synthetic, SynthParams};
use vcodec::{error_metrics, Error, Result, Role, Tensor};

use crate::output::{create, ReportArgs, Table};

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse().map_err(|_| Error::InvalidArgument(format!("bad {what} {p:?}"))))
        .collect()
}

/// `--stages entropy,transform,prediction`; `none` disables all three.
fn config_for(stages: &str) -> Result<CodecConfig> {
    let mut cfg = CodecConfig { enable_entropy: false, enable_transform: false, enable_prediction: false, ..CodecConfig::default() };
    for s in stages.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match s {
            "entropy" => cfg.enable_entropy = true,
            "transform" => cfg.enable_transform = true,
            "prediction" => cfg.enable_prediction = true,
            "none" => {}
            other => return Err(Error::InvalidArgument(format!("unknown stage {other:?}"))),
        }
    }
    Ok(cfg)
}

#[derive(Args, Debug)]
pub struct TargetArgs {
    #[arg(long)]
    target_mse: Option<f64>,
    #[arg(long)]
    target_bits: Option<f64>,
}

impl TargetArgs {
    fn target(&self) -> Target {
        match (self.target_mse, self.target_bits) {
            (Some(m), _) => Target::Mse(m),
            (None, Some(b)) => Target::Bits(b),
            (None, None) => unreachable!("clap enforces one target"),
        }
    }
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 512)]
    rows: usize,
    #[arg(long, default_value_t = 512)]
    cols: usize,
    #[arg(long, default_value_t = 0.9)]
    channel_corr: f64,
    #[arg(long, default_value_t = 0.005)]
    outlier_rate: f64,
    #[arg(long, default_value_t = 20.0)]
    outlier_scale: f64,
    /// weight, activation, kv_cache, weight_gradient or activation_gradient.
    #[arg(long, default_value = "weight")]
    role: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

pub fn gen(a: GenArgs) -> Result<()> {
    let role: Role = a.role.parse()?;
    let p = SynthParams::new(a.rows, a.cols, a.channel_corr, a.outlier_rate, a.outlier_scale, a.seed);
    let t = gen_synthetic(&p)?.with_role(role);
    let bytes = t.write_to(create(&a.out)?)?;
    say!("wrote {} ({}x{} {role}, {bytes} bytes)", a.out.display(), a.rows, a.cols);
    Ok(())
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("target").required(true).args(["target_mse", "target_bits"])))]
pub struct CompressArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    target: TargetArgs,
    /// Incoherence rotation before quantization (matrices only).
    #[arg(long)]
    rotate: bool,
    /// Rotation seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "entropy,transform,prediction")]
    stages: String,
    #[command(flatten)]
    report: ReportArgs,
}

fn print_report(r: &RateReport) -> Result<()> {
    say!(
        "qp={} bits_per_value={:.4} mse={:.6e} bytes={} stages={} floor_limited={}",
        r.qp_chosen, r.bits_per_value, r.achieved_mse, r.wall_bytes, r.stage_set, r.floor_limited
    );
    Ok(())
}

pub fn compress(a: CompressArgs, meta: &[String]) -> Result<()> {
    let t = Tensor::load(&a.input)?;
    let cfg = config_for(&a.stages)?;
    let (ct, report) = compress_tensor(&t, a.target.target(), a.rotate.then_some(a.seed), &cfg)?;
    std::fs::write(&a.out, ct.to_bytes()).map_err(|e| Error::InvalidArgument(format!("cannot write {}: {e}", a.out.display())))?;
    print_report(&report)?;
    if a.report.report.is_some() {
        let name = a.input.display().to_string();
        a.report.write_rate_rows(&[ReportRow::from_report(name, &report)], meta)?;
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct DecompressArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Original tensor; prints the reconstruction error against it.
    #[arg(long)]
    reference: Option<PathBuf>,
}

pub fn decompress(a: DecompressArgs) -> Result<()> {
    let bytes = std::fs::read(&a.input)?;
    let t = CompressedTensor::from_bytes(&bytes)?.decompress()?;
    t.write_to(create(&a.out)?)?;
    match a.reference {
        Some(r) => {
            let m = error_metrics(&Tensor::load(r)?, &t)?;
            say!("wrote {} mse={:.6e} max_abs_err={:.6e}", a.out.display(), m.mse, m.max_abs_err);
        }
        None => say!("wrote {} ({:?})", a.out.display(), t.dims()),
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Comma-separated qp values.
    #[arg(long, default_value = "0,12,24,36,48")]
    qps: String,
    #[arg(long, default_value = "entropy,transform,prediction")]
    stages: String,
    #[command(flatten)]
    report: ReportArgs,
}

pub fn sweep(a: SweepArgs, meta: &[String]) -> Result<()> {
    let t = Tensor::load(&a.input)?;
    let cfg = config_for(&a.stages)?;
    let qps: Vec<u8> = parse_list(&a.qps, "qp")?;
    let plane = codec_plane(&t)?;
    let mut search = QpSearch::for_tensor(&t, &plane, cfg)?;
    let name = a.input.display().to_string();
    let mut rows = Vec::with_capacity(qps.len());
    for qp in qps {
        let (bytes, mse) = {
            let tr = search.trial(qp)?;
            (tr.bytes, tr.mse)
        };
        rows.push(ReportRow {
            tensor_id: name.clone(),
            stage_set: stage_label(&cfg),
            qp,
            bits_per_value: 8.0 * bytes as f64 / t.len() as f64,
            mse,
            bytes,
        });
    }
    a.report.write_rate_rows(&rows, meta)
}

#[derive(Args, Debug)]
pub struct AblateArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    target_mse: f64,
    #[command(flatten)]
    report: ReportArgs,
}

pub fn ablate(a: AblateArgs, meta: &[String]) -> Result<()> {
    let t = Tensor::load(&a.input)?;
    let reports = ablation_report(&t, a.target_mse, &CodecConfig::default())?;
    let name = a.input.display().to_string();
    let rows: Vec<ReportRow> = reports.iter().map(|r| ReportRow::from_report(name.clone(), r)).collect();
    a.report.write_rate_rows(&rows, meta)
}

#[derive(Args, Debug)]
pub struct GradSimArgs {
    /// Gradient tensor; a seeded Gaussian gradient is generated when omitted.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 256)]
    rows: usize,
    #[arg(long, default_value_t = 256)]
    cols: usize,
    #[arg(long, default_value_t = 0.01)]
    std: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated steps to simulate.
    #[arg(long, default_value = "100,5000")]
    steps: String,
    #[arg(long, default_value_t = 2500)]
    switch_step: u64,
    #[arg(long, default_value_t = 3.5)]
    base_bits: f64,
    #[arg(long, default_value_t = 3.5)]
    residual_bits: f64,
    #[arg(long, default_value_t = 8000)]
    total_steps: u64,
    #[command(flatten)]
    report: ReportArgs,
}

pub fn grad_sim(a: GradSimArgs, meta: &[String]) -> Result<()> {
    let g = match &a.input {
        Some(p) => Tensor::load(p)?,
        None => gen_gaussian(a.rows, a.cols, a.std, Role::WeightGradient, a.seed)?,
    };
    let sched = GradientSchedule {
        switch_step: a.switch_step,
        phase1_residual_bits: a.residual_bits,
        base_bits: a.base_bits,
        total_steps: a.total_steps,
    };
    sched.validate()?;
    let cfg = CodecConfig::default();
    let mut table =
        Table::new(&["step", "phase", "nominal_bits", "base_bits", "residual_bits", "total_bits", "mse"]);
    table.summary("average_nominal_bits", sched.average_bits());
    for step in parse_list::<u64>(&a.steps, "step")? {
        let p = compress_gradient(&g, step, &sched, &cfg)?;
        let mse = error_metrics(&g, &decompress_gradient(&p)?)?.mse;
        table.push(vec![
            json!(step),
            json!(format!("{:?}", sched.phase(step))),
            json!(sched.nominal_step_bits(step)),
            json!(p.bits.base),
            json!(p.bits.residual),
            json!(p.bits.total),
            json!(mse),
        ]);
    }
    a.report.write_table(&table, meta)
}
