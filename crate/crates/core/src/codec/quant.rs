//! Dead-zone scalar quantizer for transform coefficients and residuals.

use crate::error::{Error, Result};

pub const MAX_QP: u8 = 51;
const DEAD_ZONE: f64 = 1.0 / 3.0;

/// Step size `2^((qp − 4)/6)`.
pub fn qp_step(qp: u8) -> Result<f64> {
    if qp > MAX_QP {
        return Err(Error::invalid(format!("qp {qp} outside [0, {MAX_QP}]")));
    }
    Ok(step_unchecked(qp))
}

pub(crate) fn step_unchecked(qp: u8) -> f64 {
    libm::exp2((qp as f64 - 4.0) / 6.0)
}

#[inline]
pub(crate) fn quantize_one(c: f64, inv_step: f64) -> i32 {
    let level = (c.abs() * inv_step + DEAD_ZONE).floor() as i32;
    if c < 0.0 {
        -level
    } else {
        level
    }
}

pub fn quantize_coeffs(coeffs: &[f64], qp: u8) -> Result<Vec<i32>> {
    let inv = 1.0 / qp_step(qp)?;
    Ok(coeffs.iter().map(|&c| quantize_one(c, inv)).collect())
}

pub fn dequantize_coeffs(levels: &[i32], qp: u8) -> Result<Vec<f64>> {
    let step = qp_step(qp)?;
    Ok(levels.iter().map(|&l| l as f64 * step).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_step_at_qp4() {
        assert_eq!(qp_step(4).unwrap(), 1.0);
        assert_eq!(quantize_coeffs(&[2.7], 4).unwrap(), vec![3]);
        assert_eq!(dequantize_coeffs(&[3], 4).unwrap(), vec![3.0]);
    }

    #[test]
    fn doubles_every_six() {
        assert_eq!(qp_step(10).unwrap(), 2.0);
        for qp in 0..=45 {
            let r = qp_step(qp + 6).unwrap() / qp_step(qp).unwrap();
            assert!((r - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dead_zone() {
        for qp in [0, 17, 51] {
            let step = qp_step(qp).unwrap();
            let c = [0.66 * step, -0.66 * step, 0.67 * step];
            assert_eq!(quantize_coeffs(&c, qp).unwrap(), vec![0, 0, 1]);
        }
    }

    #[test]
    fn sign_symmetric() {
        let c = [-5.5, 5.5, -0.1, 12.0];
        let l = quantize_coeffs(&c, 9).unwrap();
        assert_eq!(l[0], -l[1]);
        assert_eq!(l[2], 0);
    }

    #[test]
    fn qp_range() {
        assert!(qp_step(52).is_err());
        assert!(quantize_coeffs(&[1.0], 52).is_err());
        assert!(dequantize_coeffs(&[1], 60).is_err());
    }
}
