//! Hardware profiles for communication and codec engines.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dist::{parse_kv, to_kv};
use crate::error::{Error, Result};

/// Throughput of the table codecs, 100 Gbit/s in MB/s.
pub const TABLE_THROUGHPUT_MB_S: f64 = 12_500.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodecHWProfile {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_w: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub area_mm2: Option<f64>,
    pub energy_pj_per_bit: f64,
    /// `None` means the engine never limits throughput.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub throughput_mb_s: Option<f64>,
}

impl CodecHWProfile {
    fn table(name: &str, power_w: f64, area_mm2: f64, energy: f64) -> Self {
        CodecHWProfile {
            name: name.to_string(),
            power_w: Some(power_w),
            area_mm2: Some(area_mm2),
            energy_pj_per_bit: energy,
            throughput_mb_s: Some(TABLE_THROUGHPUT_MB_S),
        }
    }

    /// A free engine with unbounded throughput.
    pub fn ideal(name: &str) -> Self {
        CodecHWProfile { name: name.to_string(), power_w: None, area_mm2: None, energy_pj_per_bit: 0.0, throughput_mb_s: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.energy_pj_per_bit >= 0.0 && self.energy_pj_per_bit.is_finite()) {
            return Err(Error::invalid(format!("{}: energy {} pJ/bit must be >= 0", self.name, self.energy_pj_per_bit)));
        }
        if let Some(t) = self.throughput_mb_s {
            if !(t >= 0.0) {
                return Err(Error::invalid(format!("{}: throughput {t} MB/s must be >= 0", self.name)));
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let p: CodecHWProfile = parse_kv(text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_text(&self) -> String {
        to_kv(self)
    }
}

/// Built-in profiles keyed by short name: `nccl`, `{h264,h265,t264,t265}_{enc,dec}`
/// and `nvenc` / `nvdec`.
pub fn presets() -> BTreeMap<&'static str, CodecHWProfile> {
    let mut m = BTreeMap::new();
    m.insert(
        "nccl",
        CodecHWProfile { name: "NCCL end-to-end".into(), power_w: None, area_mm2: None, energy_pj_per_bit: 5120.0, throughput_mb_s: None },
    );
    m.insert("h264_enc", CodecHWProfile::table("H.264 Enc", 1.1, 0.96, 167.8));
    m.insert("h264_dec", CodecHWProfile::table("H.264 Dec", 1.0, 0.97, 154.3));
    m.insert("h265_enc", CodecHWProfile::table("H.265 Enc", 11.0, 11.7, 1707.5));
    m.insert("h265_dec", CodecHWProfile::table("H.265 Dec", 4.3, 2.1, 665.4));
    m.insert("t264_enc", CodecHWProfile::table("T.264 Enc", 0.6, 0.6, 97.8));
    m.insert("t264_dec", CodecHWProfile::table("T.264 Dec", 0.4, 0.4, 63.5));
    m.insert("t265_enc", CodecHWProfile::table("T.265 Enc", 2.3, 2.4, 352.9));
    m.insert("t265_dec", CodecHWProfile::table("T.265 Dec", 0.9, 0.5, 144.4));
    // GPU engines: measured throughput only, energy taken from the H.264 cores.
    m.insert(
        "nvenc",
        CodecHWProfile { name: "NVENC".into(), power_w: None, area_mm2: None, energy_pj_per_bit: 167.8, throughput_mb_s: Some(900.0) },
    );
    m.insert(
        "nvdec",
        CodecHWProfile { name: "NVDEC".into(), power_w: None, area_mm2: None, energy_pj_per_bit: 154.3, throughput_mb_s: Some(1100.0) },
    );
    m
}

pub fn preset(name: &str) -> Result<CodecHWProfile> {
    presets().remove(name).ok_or_else(|| Error::invalid(format!("unknown hardware profile {name:?}")))
}

/// Encoder and decoder presets for a codec family (`h264`, `h265`, `t264`,
/// `t265`, `nv`).
pub fn codec_pair(family: &str) -> Result<(CodecHWProfile, CodecHWProfile)> {
    if family == "nv" {
        return Ok((preset("nvenc")?, preset("nvdec")?));
    }
    Ok((preset(&format!("{family}_enc"))?, preset(&format!("{family}_dec"))?))
}
