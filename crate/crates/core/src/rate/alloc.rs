//! Greedy per-tensor bit allocation under a shared budget.

use serde::{Deserialize, Serialize};

use super::search::{codec_plane, QpSearch};
use crate::codec::{CodecConfig, MAX_QP};
use crate::error::{Error, Result};
use crate::prequant::QuantizedPlane;
use crate::tensor::Tensor;

/// Lowest global budget accepted by [`allocate_bits`].
pub const MIN_GLOBAL_BITS: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationPlan {
    /// Per-tensor bits-per-value targets.
    pub targets: Vec<f64>,
    pub global_bits: f64,
    /// Operating point found for each tensor.
    pub qps: Vec<u8>,
    /// Realized bits per value at `qps`.
    pub realized_bits: Vec<f64>,
    /// Realized end-to-end MSE at `qps`.
    pub mse: Vec<f64>,
}

impl AllocationPlan {
    /// Element-weighted mean of `values`.
    pub fn weighted_mean(values: &[f64], sizes: &[usize]) -> f64 {
        let n: usize = sizes.iter().sum();
        values.iter().zip(sizes).map(|(v, &s)| v * s as f64).sum::<f64>() / n.max(1) as f64
    }

    /// Size-weighted total squared error, `Σ nᵢ·mseᵢ`.
    pub fn total_sse(&self, sizes: &[usize]) -> f64 {
        self.mse.iter().zip(sizes).map(|(m, &s)| m * s as f64).sum()
    }
}

struct Member<'a> {
    search: QpSearch<'a>,
    size: usize,
    qp: u8,
}

impl Member<'_> {
    /// (bits spent, squared error) at `qp`, both scaled by element count.
    fn point(&mut self, qp: u8) -> Result<(f64, f64)> {
        let t = self.search.trial(qp)?;
        Ok((8.0 * t.bytes as f64, t.mse * self.size as f64))
    }
}

/// Distributes `global_bits` (element-weighted mean) across `tensors`.
///
/// Every tensor starts at the finest qp whose rate fits the uniform target.
/// Moves of one qp unit are then applied greedily: the step with the largest
/// error reduction per added bit is taken on its own while the budget allows,
/// otherwise it is paired with the cheapest step in the other direction on a
/// different tensor, provided the pair lowers the total error and stays within
/// budget. Returned targets are the realized rates scaled so their weighted
/// mean equals `global_bits` exactly.
pub fn allocate_bits(tensors: &[Tensor], global_bits: f64, template: &CodecConfig) -> Result<AllocationPlan> {
    if tensors.is_empty() {
        return Err(Error::invalid("no tensors to allocate"));
    }
    if !global_bits.is_finite() || global_bits > 8.0 {
        return Err(Error::invalid(format!("global target {global_bits} outside [{MIN_GLOBAL_BITS}, 8]")));
    }
    if global_bits < MIN_GLOBAL_BITS {
        return Err(Error::Infeasible(format!("global target {global_bits} below {MIN_GLOBAL_BITS} bits per value")));
    }
    let planes: Vec<QuantizedPlane> = tensors.iter().map(codec_plane).collect::<Result<_>>()?;
    let mut members = Vec::with_capacity(tensors.len());
    for (t, q) in tensors.iter().zip(&planes) {
        let mut search = QpSearch::for_tensor(t, q, *template)?;
        let qp = match search.for_bits(global_bits) {
            Ok(o) => o.report.qp_chosen,
            Err(Error::Infeasible(_)) => MAX_QP,
            Err(e) => return Err(e),
        };
        members.push(Member { search, size: t.len(), qp });
    }
    let budget = global_bits * members.iter().map(|m| m.size).sum::<usize>() as f64;

    let max_moves = 2 * (MAX_QP as usize + 1) * members.len();
    for _ in 0..max_moves {
        let mut spent = 0.0;
        for m in members.iter_mut() {
            spent += m.point(m.qp)?.0;
        }
        // (tensor, bits added, error removed)
        let mut ups = Vec::new();
        let mut downs = Vec::new();
        for (i, m) in members.iter_mut().enumerate() {
            let (b0, e0) = m.point(m.qp)?;
            if m.qp > 0 {
                let (b1, e1) = m.point(m.qp - 1)?;
                if b1 > b0 && e1 < e0 {
                    ups.push((i, b1 - b0, e0 - e1));
                }
            }
            if m.qp < MAX_QP {
                let (b1, e1) = m.point(m.qp + 1)?;
                if b1 < b0 {
                    downs.push((i, b0 - b1, (e1 - e0).max(0.0)));
                }
            }
        }
        ups.sort_by(|a, b| (b.2 / b.1).total_cmp(&(a.2 / a.1)).then(a.0.cmp(&b.0)));
        downs.sort_by(|a, b| (a.2 / a.1).total_cmp(&(b.2 / b.1)).then(a.0.cmp(&b.0)));
        let mut applied = false;
        'search: for &(j, add, gain) in &ups {
            if spent + add <= budget {
                members[j].qp -= 1;
                applied = true;
                break;
            }
            for &(i, save, loss) in &downs {
                if i != j && spent + add - save <= budget && gain > loss {
                    members[j].qp -= 1;
                    members[i].qp += 1;
                    applied = true;
                    break 'search;
                }
            }
        }
        if !applied {
            break;
        }
    }

    let sizes: Vec<usize> = members.iter().map(|m| m.size).collect();
    let mut qps = Vec::with_capacity(members.len());
    let mut realized = Vec::with_capacity(members.len());
    let mut mse = Vec::with_capacity(members.len());
    for m in members.iter_mut() {
        let qp = m.qp;
        let t = m.search.trial(qp)?;
        let bits = 8.0 * t.bytes as f64 / m.size as f64;
        qps.push(qp);
        mse.push(t.mse);
        realized.push(bits);
    }
    let mean = AllocationPlan::weighted_mean(&realized, &sizes);
    let targets = if mean > 0.0 {
        realized.iter().map(|b| b * global_bits / mean).collect()
    } else {
        vec![global_bits; realized.len()]
    };
    Ok(AllocationPlan { targets, global_bits, qps, realized_bits: realized, mse })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{gen_gaussian, gen_synthetic, SynthParams};
    use crate::tensor::Role;

    #[test]
    fn single_tensor_gets_the_global_target() {
        let t = gen_synthetic(&SynthParams::new(64, 64, 0.9, 0.0, 1.0, 1)).unwrap();
        let plan = allocate_bits(&[t], 3.0, &CodecConfig::default()).unwrap();
        assert!((plan.targets[0] - 3.0).abs() < 1e-9);
        assert!(plan.realized_bits[0] <= 3.0);
    }

    #[test]
    fn constant_tensor_gets_fewer_bits() {
        let flat = gen_gaussian(64, 64, 1e-3, Role::Weight, 4).unwrap();
        let flat = flat.with_values(flat.values().iter().map(|v| v + 1.0).collect()).unwrap();
        let busy = gen_gaussian(64, 64, 1.0, Role::Weight, 5).unwrap();
        let sizes = [flat.len(), busy.len()];
        let plan = allocate_bits(&[flat, busy], 3.0, &CodecConfig::default()).unwrap();
        assert!(plan.targets[0] < plan.targets[1], "{:?}", plan.targets);
        assert!((AllocationPlan::weighted_mean(&plan.targets, &sizes) - 3.0).abs() < 0.01);
    }

    #[test]
    fn never_worse_than_uniform() {
        let a = gen_synthetic(&SynthParams::new(64, 64, 0.9, 0.005, 20.0, 6)).unwrap();
        let b = gen_gaussian(64, 128, 0.5, Role::Weight, 7).unwrap();
        let tensors = [a, b];
        let sizes: Vec<usize> = tensors.iter().map(|t| t.len()).collect();
        let cfg = CodecConfig::default();
        let plan = allocate_bits(&tensors, 3.0, &cfg).unwrap();
        let uniform_sse: f64 = tensors
            .iter()
            .map(|t| crate::rate::search_qp_for_bits(t, 3.0, &cfg).unwrap().achieved_mse * t.len() as f64)
            .sum();
        assert!(plan.total_sse(&sizes) <= uniform_sse);
        assert!(AllocationPlan::weighted_mean(&plan.realized_bits, &sizes) <= 3.0 + 1e-9);
    }

    #[test]
    fn budget_limits() {
        let t = gen_gaussian(16, 16, 1.0, Role::Weight, 1).unwrap();
        let cfg = CodecConfig::default();
        assert!(matches!(allocate_bits(&[t.clone()], 0.05, &cfg), Err(Error::Infeasible(_))));
        assert!(matches!(allocate_bits(&[t], 9.0, &cfg), Err(Error::InvalidArgument(_))));
        assert!(allocate_bits(&[], 3.0, &cfg).is_err());
    }
}
