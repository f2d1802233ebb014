//! Quality- and size-targeted qp search.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::codec::{Bitstream, CodecConfig, Extension, StageSet, DEFAULT_FRAME_SIDE, MAX_QP};
use crate::error::{Error, Result};
use crate::prequant::{rtn_dequantize, rtn_quantize, QuantScheme, QuantizedPlane};
use crate::tensor::{error_metrics, Tensor};

/// Half-width of the linear scan around the binary-search result.
pub const SCAN_WINDOW: u8 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub bits_per_value: f64,
    /// End-to-end MSE in the original value space.
    pub achieved_mse: f64,
    pub qp_chosen: u8,
    pub stage_set: String,
    pub wall_bytes: usize,
    /// Set when no qp meets an MSE target (stage-1 quantization floor).
    pub floor_limited: bool,
}

impl RateReport {
    /// Bits per value that meet the MSE target, or `None` when the target is
    /// below the stage-1 floor and no rate reaches it.
    pub fn bits_at_target(&self) -> Option<f64> {
        (!self.floor_limited).then_some(self.bits_per_value)
    }
}

/// Name of the stage combination enabled in `cfg`.
pub fn stage_label(cfg: &CodecConfig) -> String {
    let mut parts = Vec::new();
    if cfg.enable_entropy {
        parts.push("entropy");
    }
    if cfg.enable_transform {
        parts.push("transform");
    }
    if cfg.enable_prediction {
        parts.push("prediction");
    }
    if parts.is_empty() {
        "fixed-length".to_string()
    } else {
        parts.join("+")
    }
}

/// One encoded candidate.
#[derive(Debug, Clone)]
pub struct Trial {
    pub qp: u8,
    pub bytes: usize,
    pub mse: f64,
    pub stream: Bitstream,
}

/// Chosen candidate plus its report.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub report: RateReport,
    pub stream: Bitstream,
}

type Measure<'a> = Box<dyn Fn(&QuantizedPlane) -> Result<f64> + Sync + 'a>;

/// Memoized qp search over one stage-1 plane. `measure` maps decoded codes to
/// the end-to-end MSE in the caller's value space, and `element_count` is the
/// denominator for bits per value.
pub struct QpSearch<'a> {
    plane: &'a QuantizedPlane,
    template: CodecConfig,
    extension: Extension,
    max_side: usize,
    element_count: usize,
    measure: Measure<'a>,
    trials: BTreeMap<u8, Trial>,
}

impl<'a> QpSearch<'a> {
    pub fn new(
        plane: &'a QuantizedPlane,
        template: CodecConfig,
        extension: Extension,
        element_count: usize,
        measure: impl Fn(&QuantizedPlane) -> Result<f64> + Sync + 'a,
    ) -> Result<Self> {
        template.validate()?;
        if element_count == 0 {
            return Err(Error::invalid("cannot rate an empty tensor"));
        }
        Ok(QpSearch {
            plane,
            template,
            extension,
            max_side: DEFAULT_FRAME_SIDE,
            element_count,
            measure: Box::new(measure),
            trials: BTreeMap::new(),
        })
    }

    pub fn with_max_side(mut self, max_side: usize) -> Self {
        self.max_side = max_side;
        self
    }

    /// Plain tensor: symmetric per-channel RTN-8 followed by the codec, error
    /// measured against `t`.
    pub fn for_tensor(t: &'a Tensor, plane: &'a QuantizedPlane, template: CodecConfig) -> Result<Self> {
        QpSearch::new(plane, template, Extension::None, t.len(), move |q| {
            Ok(error_metrics(t, &rtn_dequantize(q)?)?.mse)
        })
    }

    /// Encodes at `qp` (cached) and verifies the result with a decode pass.
    pub fn trial(&mut self, qp: u8) -> Result<&Trial> {
        if qp > MAX_QP {
            return Err(Error::invalid(format!("qp {qp} outside [0, {MAX_QP}]")));
        }
        if !self.trials.contains_key(&qp) {
            let stream = Bitstream::encode(self.plane, self.template.with_qp(qp), self.extension, self.max_side)?;
            let mse = (self.measure)(&stream.decode_plane()?)?;
            let bytes = stream.byte_len();
            self.trials.insert(qp, Trial { qp, bytes, mse, stream });
        }
        Ok(&self.trials[&qp])
    }

    pub fn bits(&self, trial: &Trial) -> f64 {
        self.bits_of(trial.bytes)
    }

    fn outcome(&self, qp: u8, floor_limited: bool) -> SearchOutcome {
        let t = &self.trials[&qp];
        SearchOutcome {
            report: RateReport {
                bits_per_value: self.bits(t),
                achieved_mse: t.mse,
                qp_chosen: qp,
                stage_set: stage_label(&self.template),
                wall_bytes: t.bytes,
                floor_limited,
            },
            stream: t.stream.clone(),
        }
    }

    fn scan(&mut self, center: u8) -> Result<()> {
        let lo = center.saturating_sub(SCAN_WINDOW);
        let hi = center.saturating_add(SCAN_WINDOW).min(MAX_QP);
        for qp in lo..=hi {
            self.trial(qp)?;
        }
        Ok(())
    }

    /// Fewest bytes with MSE ≤ `target_mse`; larger qp on ties.
    pub fn for_mse(&mut self, target_mse: f64) -> Result<SearchOutcome> {
        if !(target_mse > 0.0 && target_mse.is_finite()) {
            return Err(Error::invalid(format!("target MSE {target_mse} must be positive")));
        }
        // largest qp with mse ≤ target, assuming monotonicity
        let (mut lo, mut hi) = (0u8, MAX_QP);
        let mut found = None;
        while lo <= hi {
            let mid = lo + (hi - lo) / 2;
            if self.trial(mid)?.mse <= target_mse {
                found = Some(mid);
                lo = mid + 1;
            } else if mid == 0 {
                break;
            } else {
                hi = mid - 1;
            }
        }
        self.scan(found.unwrap_or(0))?;
        let best = self
            .trials
            .values()
            .filter(|t| t.mse <= target_mse)
            .min_by(|a, b| a.bytes.cmp(&b.bytes).then(b.qp.cmp(&a.qp)))
            .map(|t| t.qp);
        Ok(match best {
            Some(qp) => self.outcome(qp, false),
            None => self.outcome(0, true),
        })
    }

    /// Lowest MSE with bits per value ≤ `target_bits`; smaller qp on ties.
    pub fn for_bits(&mut self, target_bits: f64) -> Result<SearchOutcome> {
        if !(target_bits > 0.0 && target_bits.is_finite()) {
            return Err(Error::invalid(format!("target bits {target_bits} must be positive")));
        }
        // smallest qp with bits ≤ target, assuming monotonicity
        let (mut lo, mut hi) = (0u8, MAX_QP);
        let mut found = None;
        while lo <= hi {
            let mid = lo + (hi - lo) / 2;
            let bytes = self.trial(mid)?.bytes;
            if self.bits_of(bytes) <= target_bits {
                found = Some(mid);
                if mid == 0 {
                    break;
                }
                hi = mid - 1;
            } else {
                lo = mid + 1;
            }
        }
        let Some(center) = found else {
            let bytes = self.trial(MAX_QP)?.bytes;
            let min_bits = self.bits_of(bytes);
            return Err(Error::Infeasible(format!(
                "{target_bits} bits per value is below the {min_bits:.3} reached at qp {MAX_QP}"
            )));
        };
        self.scan(center)?;
        let best = self
            .trials
            .values()
            .filter(|t| self.bits(t) <= target_bits)
            .min_by(|a, b| a.mse.total_cmp(&b.mse).then(a.qp.cmp(&b.qp)))
            .map(|t| t.qp)
            .expect("center is feasible");
        Ok(self.outcome(best, false))
    }

    fn bits_of(&self, bytes: usize) -> f64 {
        8.0 * bytes as f64 / self.element_count as f64
    }
}

/// Stage-1 plane used for every codec input: symmetric per-channel RTN-8.
pub fn codec_plane(t: &Tensor) -> Result<QuantizedPlane> {
    rtn_quantize(t, &QuantScheme::codec_input())
}

/// Largest-qp search for an end-to-end MSE target on a plain tensor.
pub fn search_qp_for_mse(t: &Tensor, target_mse: f64, template: &CodecConfig) -> Result<RateReport> {
    let q = codec_plane(t)?;
    let mut search = QpSearch::for_tensor(t, &q, *template)?;
    Ok(search.for_mse(target_mse)?.report)
}

/// Smallest-qp search for a bits-per-value budget on a plain tensor.
pub fn search_qp_for_bits(t: &Tensor, target_bits: f64, template: &CodecConfig) -> Result<RateReport> {
    let q = codec_plane(t)?;
    let mut search = QpSearch::for_tensor(t, &q, *template)?;
    Ok(search.for_bits(target_bits)?.report)
}

/// One report per stage set, in ablation order. The baseline row is the
/// uncoded 8-bit code plane: exactly 8 bits per value at the stage-1 MSE.
pub fn ablation_report(t: &Tensor, target_mse: f64, template: &CodecConfig) -> Result<Vec<RateReport>> {
    let q = codec_plane(t)?;
    let floor = error_metrics(t, &rtn_dequantize(&q)?)?.mse;
    let mut rows = Vec::with_capacity(StageSet::ABLATION.len());
    for st in StageSet::ABLATION {
        if st == StageSet::Baseline {
            rows.push(RateReport {
                bits_per_value: 8.0,
                achieved_mse: floor,
                qp_chosen: 0,
                stage_set: st.name().to_string(),
                wall_bytes: t.len(),
                floor_limited: floor > target_mse,
            });
            continue;
        }
        let mut report = QpSearch::for_tensor(t, &q, st.apply(template))?.for_mse(target_mse)?.report;
        report.stage_set = st.name().to_string();
        rows.push(report);
    }
    Ok(rows)
}
