//! Analytical energy and step-time model for compressed communication.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::profile::{preset, CodecHWProfile};
use crate::dist::{parse_kv, to_kv};
use crate::error::{Error, Result};

/// `comm / (comm / r + enc + dec)`, all in pJ per original bit.
pub fn energy_efficiency(comm_pj: f64, enc_pj: f64, dec_pj: f64, r: f64) -> Result<f64> {
    if !(r >= 1.0) {
        return Err(Error::invalid(format!("compression ratio {r} must be >= 1")));
    }
    if !(comm_pj > 0.0 && enc_pj >= 0.0 && dec_pj >= 0.0) {
        return Err(Error::invalid("energies must be non-negative and communication positive"));
    }
    Ok(comm_pj / (comm_pj / r + enc_pj + dec_pj))
}

/// How many times cheaper a bit of encode plus decode is than a bit of
/// communication.
pub fn codec_vs_comm_ratio(comm_pj: f64, enc_pj: f64, dec_pj: f64) -> Result<f64> {
    if !(enc_pj + dec_pj > 0.0) {
        return Err(Error::invalid("codec energy must be positive"));
    }
    Ok(comm_pj / (enc_pj + dec_pj))
}

fn default_comm_pj() -> f64 {
    5120.0
}

fn default_gpu_power() -> f64 {
    300.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingScenario {
    pub param_bytes: f64,
    /// Uncompressed bytes each GPU sends per step.
    pub comm_bytes_per_step: f64,
    pub bandwidth_gbit_s: f64,
    pub compute_s: f64,
    pub ratio: f64,
    pub enc: CodecHWProfile,
    pub dec: CodecHWProfile,
    #[serde(default = "default_comm_pj")]
    pub comm_pj_per_bit: f64,
    #[serde(default = "default_gpu_power")]
    pub gpu_power_w: f64,
}

impl TrainingScenario {
    /// Data-parallel step for a model of `param_bytes` with a ring
    /// all-reduce (twice the gradient bytes on the wire) and T.264 engines.
    pub fn data_parallel(param_bytes: f64, bandwidth_gbit_s: f64, compute_s: f64, ratio: f64) -> Result<Self> {
        Ok(TrainingScenario {
            param_bytes,
            comm_bytes_per_step: 2.0 * param_bytes,
            bandwidth_gbit_s,
            compute_s,
            ratio,
            enc: preset("t264_enc")?,
            dec: preset("t264_dec")?,
            comm_pj_per_bit: default_comm_pj(),
            gpu_power_w: default_gpu_power(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ratio >= 1.0) {
            return Err(Error::invalid(format!("compression ratio {} must be >= 1", self.ratio)));
        }
        if !(self.bandwidth_gbit_s > 0.0) {
            return Err(Error::invalid(format!("bandwidth {} must be positive", self.bandwidth_gbit_s)));
        }
        if !(self.param_bytes >= 0.0 && self.comm_bytes_per_step >= 0.0 && self.compute_s >= 0.0) {
            return Err(Error::invalid("sizes and compute time must be non-negative"));
        }
        if !(self.comm_pj_per_bit >= 0.0 && self.gpu_power_w >= 0.0) {
            return Err(Error::invalid("energy and power must be non-negative"));
        }
        self.enc.validate()?;
        self.dec.validate()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let s: TrainingScenario = parse_kv(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_text(&self) -> String {
        to_kv(self)
    }

    fn bandwidth_bytes_s(&self) -> f64 {
        self.bandwidth_gbit_s * 1e9 / 8.0
    }
}

fn engine_seconds(bytes: f64, p: &CodecHWProfile) -> Result<f64> {
    match p.throughput_mb_s {
        None => Ok(0.0),
        Some(t) if t > 0.0 => Ok(bytes / (t * 1e6)),
        Some(_) => Err(Error::invalid(format!("{} has zero throughput", p.name))),
    }
}

/// Seconds per step. Communication overlaps compute; encode, transfer and
/// decode are serialized.
pub fn step_time(s: &TrainingScenario, compressed: bool) -> Result<f64> {
    s.validate()?;
    let b = s.comm_bytes_per_step;
    let bw = s.bandwidth_bytes_s();
    let comm = if compressed {
        b / (s.ratio * bw) + engine_seconds(b, &s.enc)? + engine_seconds(b / s.ratio, &s.dec)?
    } else {
        b / bw
    };
    Ok(s.compute_s.max(comm))
}

pub fn speedup(s: &TrainingScenario) -> Result<f64> {
    let compressed = step_time(s, true)?;
    let plain = step_time(s, false)?;
    if compressed == 0.0 {
        return Ok(1.0);
    }
    Ok(plain / compressed)
}

/// Joules per step: GPU power over the step plus communication and codec
/// energy.
pub fn step_energy(s: &TrainingScenario, compressed: bool) -> Result<f64> {
    let t = step_time(s, compressed)?;
    let bits = 8.0 * s.comm_bytes_per_step;
    let pj = if compressed {
        bits / s.ratio * s.comm_pj_per_bit + bits * (s.enc.energy_pj_per_bit + s.dec.energy_pj_per_bit)
    } else {
        bits * s.comm_pj_per_bit
    };
    Ok(s.gpu_power_w * t + pj * 1e-12)
}

/// Uncompressed over compressed energy per step.
pub fn cluster_energy_factor(s: &TrainingScenario) -> Result<f64> {
    let compressed = step_energy(s, true)?;
    if compressed == 0.0 {
        return Ok(1.0);
    }
    Ok(step_energy(s, false)? / compressed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub x: f64,
    pub y: f64,
}

/// Speedup as the link bandwidth varies.
pub fn sweep_bandwidth(base: &TrainingScenario, bandwidths_gbit_s: &[f64]) -> Result<Vec<SweepPoint>> {
    bandwidths_gbit_s
        .iter()
        .map(|&bw| {
            let s = TrainingScenario { bandwidth_gbit_s: bw, ..base.clone() };
            Ok(SweepPoint { x: bw, y: speedup(&s)? })
        })
        .collect()
}

/// Energy factor as the model grows; communication scales with the
/// parameter bytes while per-step compute stays fixed.
pub fn sweep_model_size(base: &TrainingScenario, param_bytes: &[f64]) -> Result<Vec<SweepPoint>> {
    let per_param = if base.param_bytes > 0.0 { base.comm_bytes_per_step / base.param_bytes } else { 2.0 };
    param_bytes
        .iter()
        .map(|&p| {
            let s = TrainingScenario { param_bytes: p, comm_bytes_per_step: per_param * p, ..base.clone() };
            Ok(SweepPoint { x: p, y: cluster_energy_factor(&s)? })
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(mut w: W, x_name: &str, y_name: &str, points: &[SweepPoint], meta: &[String]) -> Result<()> {
    for m in meta {
        writeln!(w, "# {m}")?;
    }
    writeln!(w, "{x_name},{y_name}")?;
    for p in points {
        writeln!(w, "{},{}", p.x, p.y)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanCostModel {
    /// Activation bytes crossing one pipeline boundary per step, relative
    /// to the model bytes.
    pub activation_to_model_ratio: f64,
}

impl Default for PlanCostModel {
    fn default() -> Self {
        PlanCostModel { activation_to_model_ratio: 1.0 }
    }
}

impl PlanCostModel {
    /// Cluster-wide bytes per step: every replica sends activations over
    /// `pp − 1` boundaries, and each stage group all-reduces its share of
    /// the gradients across `dp` replicas.
    pub fn step_bytes(&self, model_bytes: f64, pp: u32, dp: u32) -> f64 {
        let activations = ((pp - 1) as f64) * dp as f64 * self.activation_to_model_ratio * model_bytes;
        let gradients = (dp - 1) as f64 * model_bytes;
        activations + gradients
    }
}

/// Picks `(pipeline_stages, data_parallel_degree)` with the least modeled
/// traffic among plans whose model share fits one GPU, preferring fewer
/// stages on ties.
pub fn infer_parallel_plan(model_bytes: f64, gpu_memory_bytes: f64, devices: u32, cost: &PlanCostModel) -> Result<(u32, u32)> {
    if devices == 0 || !(model_bytes > 0.0) || !(gpu_memory_bytes > 0.0) {
        return Err(Error::invalid("model size, GPU memory and device count must be positive"));
    }
    let mut best: Option<(u32, u32, f64)> = None;
    for pp in (1..=devices).filter(|pp| devices % pp == 0) {
        if model_bytes / pp as f64 > gpu_memory_bytes {
            continue;
        }
        let dp = devices / pp;
        let bytes = cost.step_bytes(model_bytes, pp, dp);
        let better = match best {
            None => true,
            Some((_, _, b)) => bytes < b * (1.0 - 1e-12),
        };
        if better {
            best = Some((pp, dp, bytes));
        }
    }
    best.map(|(pp, dp, _)| (pp, dp)).ok_or_else(|| {
        Error::Infeasible(format!(
            "{model_bytes} model bytes do not fit {devices} devices of {gpu_memory_bytes} bytes"
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn efficiency_examples() {
        let e = energy_efficiency(5120.0, 97.8, 63.5, 5.0).unwrap();
        assert!((e - 5120.0 / (1024.0 + 161.3)).abs() < 1e-12);
        assert!((e - 4.32).abs() < 0.01);
        assert!((codec_vs_comm_ratio(5120.0, 97.8, 63.5).unwrap() - 31.7).abs() < 0.1);
        assert_eq!(energy_efficiency(77.0, 0.0, 0.0, 1.0).unwrap(), 1.0);
        assert!(energy_efficiency(5120.0, 1.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn bandwidth_bound_speedup() {
        let mut s = TrainingScenario::data_parallel(1e9, 10.0, 1e-3, 5.0).unwrap();
        s.enc = CodecHWProfile::ideal("enc");
        s.dec = CodecHWProfile::ideal("dec");
        assert!((speedup(&s).unwrap() - 5.0).abs() < 0.05);
        let compute_bound = TrainingScenario { compute_s: 1e4, ..s };
        assert!((speedup(&compute_bound).unwrap() - 1.0).abs() < 0.01);
    }

    #[test]
    fn slow_engines_can_lose() {
        let mut s = TrainingScenario::data_parallel(1e10, 100.0, 0.0, 5.0).unwrap();
        s.enc = preset("nvenc").unwrap();
        s.dec = preset("nvdec").unwrap();
        let nv = step_time(&s, true).unwrap();
        assert!(speedup(&s).unwrap() < 1.0);
        s.enc = preset("t265_enc").unwrap();
        s.dec = preset("t265_dec").unwrap();
        assert!(step_time(&s, true).unwrap() < nv);
    }

    #[test]
    fn zero_throughput_is_an_error() {
        let mut s = TrainingScenario::data_parallel(1e9, 10.0, 0.0, 5.0).unwrap();
        s.enc.throughput_mb_s = Some(0.0);
        assert!(step_time(&s, true).is_err());
        assert!(step_time(&s, false).is_ok());
    }

    #[test]
    fn scenario_text_roundtrip() {
        let s = TrainingScenario::data_parallel(14e9, 100.0, 0.5, 5.0).unwrap();
        assert_eq!(TrainingScenario::parse(&s.to_text()).unwrap(), s);
    }

    #[test]
    fn energy_factor_by_hand() {
        let s = TrainingScenario::data_parallel(1e10, 100.0, 1.0, 5.0).unwrap();
        let bytes = 2e10;
        let bw = 100e9 / 8.0;
        let t_plain = f64::max(1.0, bytes / bw);
        let t_comp = f64::max(1.0, bytes / (5.0 * bw) + bytes / 12.5e9 + bytes / 5.0 / 12.5e9);
        let e_plain = 300.0 * t_plain + 8.0 * bytes * 5120e-12;
        let e_comp = 300.0 * t_comp + 8.0 * bytes * (5120.0 / 5.0 + 97.8 + 63.5) * 1e-12;
        assert!((cluster_energy_factor(&s).unwrap() - e_plain / e_comp).abs() < 1e-9);
        let pts = sweep_model_size(&s, &[1e6, 1e10]).unwrap();
        assert!(pts[0].y < pts[1].y);
        assert_eq!(pts[1].y, cluster_energy_factor(&s).unwrap());
    }

    #[test]
    fn plan_inference() {
        let cost = PlanCostModel::default();
        assert_eq!(infer_parallel_plan(1e9, 8e9, 4, &cost).unwrap(), (1, 4));
        let (pp, dp) = infer_parallel_plan(16e9, 8e9, 4, &cost).unwrap();
        assert!(pp >= 2 && pp * dp == 4);
        assert!(matches!(infer_parallel_plan(80e9, 8e9, 4, &cost), Err(Error::Infeasible(_))));
        let cheap_acts = PlanCostModel { activation_to_model_ratio: 0.01 };
        assert_eq!(infer_parallel_plan(1e9, 8e9, 4, &cheap_acts).unwrap(), (4, 1));
    }
}
