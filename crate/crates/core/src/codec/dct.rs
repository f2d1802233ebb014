//! Orthonormal 2D DCT-II on square blocks.

use std::sync::OnceLock;

use crate::error::{Error, Result};

pub const BLOCK_SIDES: [usize; 5] = [4, 8, 16, 32, 64];

/// Index of a supported block side (4 → 0, …, 64 → 4).
pub(crate) fn size_class(side: usize) -> Option<usize> {
    BLOCK_SIDES.iter().position(|&s| s == side)
}

/// Row-major basis `B[k][n] = a_k · cos(π(2n+1)k / 2N)`.
pub(crate) fn basis(side: usize) -> &'static [f64] {
    static TABLES: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    let tables = TABLES.get_or_init(|| {
        BLOCK_SIDES
            .iter()
            .map(|&n| {
                let mut b = vec![0.0; n * n];
                for k in 0..n {
                    let a = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
                    for i in 0..n {
                        let angle = std::f64::consts::PI * ((2 * i + 1) * k) as f64 / (2 * n) as f64;
                        b[k * n + i] = a * libm::cos(angle);
                    }
                }
                b
            })
            .collect()
    });
    &tables[size_class(side).expect("supported side")]
}

/// Separable transform applied to a residual block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransformKind {
    /// Residual samples coded directly.
    Identity,
    Dct2d,
    /// 1D DCT along each row only.
    RowDct,
    /// 1D DCT along each column only.
    ColDct,
}

impl TransformKind {
    pub const ALL: [TransformKind; 4] =
        [TransformKind::Identity, TransformKind::Dct2d, TransformKind::RowDct, TransformKind::ColDct];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        TransformKind::ALL.get(i).copied()
    }
}

/// `out[r][v] = Σ_c x[r][c]·B[v][c]`
fn rows_forward(x: &[f64], n: usize, b: &[f64], out: &mut [f64]) {
    for r in 0..n {
        let row = &x[r * n..(r + 1) * n];
        for v in 0..n {
            out[r * n + v] = row.iter().zip(&b[v * n..(v + 1) * n]).map(|(a, c)| a * c).sum();
        }
    }
}

/// `out[r][c] = Σ_v y[r][v]·B[v][c]`
fn rows_inverse(y: &[f64], n: usize, b: &[f64], out: &mut [f64]) {
    out.fill(0.0);
    for r in 0..n {
        let dst = &mut out[r * n..(r + 1) * n];
        for v in 0..n {
            let w = y[r * n + v];
            if w == 0.0 {
                continue;
            }
            for (d, s) in dst.iter_mut().zip(&b[v * n..(v + 1) * n]) {
                *d += w * s;
            }
        }
    }
}

/// `out[u][c] = Σ_r B[u][r]·x[r][c]`
fn cols_forward(x: &[f64], n: usize, b: &[f64], out: &mut [f64]) {
    out.fill(0.0);
    for u in 0..n {
        let dst = &mut out[u * n..(u + 1) * n];
        for (r, &w) in b[u * n..(u + 1) * n].iter().enumerate() {
            for (d, s) in dst.iter_mut().zip(&x[r * n..(r + 1) * n]) {
                *d += w * s;
            }
        }
    }
}

/// `out[r][c] = Σ_u B[u][r]·y[u][c]`
fn cols_inverse(y: &[f64], n: usize, b: &[f64], out: &mut [f64]) {
    out.fill(0.0);
    for u in 0..n {
        let src = &y[u * n..(u + 1) * n];
        if src.iter().all(|&v| v == 0.0) {
            continue;
        }
        for (r, &w) in b[u * n..(u + 1) * n].iter().enumerate() {
            for (d, s) in out[r * n..(r + 1) * n].iter_mut().zip(src) {
                *d += w * s;
            }
        }
    }
}

pub(crate) fn forward_kind(kind: TransformKind, x: &[f64], n: usize, tmp: &mut Vec<f64>, out: &mut Vec<f64>) {
    let b = basis(n);
    out.clear();
    out.resize(n * n, 0.0);
    match kind {
        TransformKind::Identity => out.copy_from_slice(x),
        TransformKind::RowDct => rows_forward(x, n, b, out),
        TransformKind::ColDct => cols_forward(x, n, b, out),
        TransformKind::Dct2d => {
            tmp.clear();
            tmp.resize(n * n, 0.0);
            rows_forward(x, n, b, tmp);
            cols_forward(tmp, n, b, out);
        }
    }
}

pub(crate) fn inverse_kind(kind: TransformKind, y: &[f64], n: usize, tmp: &mut Vec<f64>, out: &mut Vec<f64>) {
    let b = basis(n);
    out.clear();
    out.resize(n * n, 0.0);
    match kind {
        TransformKind::Identity => out.copy_from_slice(y),
        TransformKind::RowDct => rows_inverse(y, n, b, out),
        TransformKind::ColDct => cols_inverse(y, n, b, out),
        TransformKind::Dct2d => {
            tmp.clear();
            tmp.resize(n * n, 0.0);
            cols_inverse(y, n, b, tmp);
            rows_inverse(tmp, n, b, out);
        }
    }
}

fn check_block(len: usize, side: usize) -> Result<()> {
    if side * side != len {
        return Err(Error::ShapeMismatch(format!("block of {len} values is not {side}×{side}")));
    }
    if size_class(side).is_none() {
        return Err(Error::UnsupportedSize(side));
    }
    Ok(())
}

/// Orthonormal 2D DCT-II of a `side × side` row-major block.
pub fn dct2(block: &[f64], side: usize) -> Result<Vec<f64>> {
    check_block(block.len(), side)?;
    let mut out = Vec::new();
    forward_kind(TransformKind::Dct2d, block, side, &mut Vec::new(), &mut out);
    Ok(out)
}

/// Inverse of [`dct2`].
pub fn idct2(coeffs: &[f64], side: usize) -> Result<Vec<f64>> {
    check_block(coeffs.len(), side)?;
    let mut out = Vec::new();
    inverse_kind(TransformKind::Dct2d, coeffs, side, &mut Vec::new(), &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dct(x: &[f64], n: usize) -> Vec<f64> {
        let a = |k: usize| if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
        let c = |k: usize, i: usize| (std::f64::consts::PI * (2 * i + 1) as f64 * k as f64 / (2 * n) as f64).cos();
        let mut y = vec![0.0; n * n];
        for u in 0..n {
            for v in 0..n {
                let mut s = 0.0;
                for r in 0..n {
                    for col in 0..n {
                        s += x[r * n + col] * c(u, r) * c(v, col);
                    }
                }
                y[u * n + v] = a(u) * a(v) * s;
            }
        }
        y
    }

    #[test]
    fn constant_block_is_pure_dc() {
        let y = dct2(&[1.0; 16], 4).unwrap();
        assert!((y[0] - 4.0).abs() < 1e-6);
        assert!(y[1..].iter().all(|v| v.abs() < 1e-6));
    }

    #[test]
    fn single_spike_spreads() {
        let mut x = [0.0; 16];
        x[0] = 128.0;
        let y = dct2(&x, 4).unwrap();
        assert!((y[0] - 32.0).abs() < 1e-9);
        assert!(y.iter().all(|v| v.abs() < 128.0));
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 128.0).abs() < 1e-3);
    }

    #[test]
    fn matches_definition() {
        for n in [4, 8] {
            let x: Vec<f64> = (0..n * n).map(|i| ((i * 37 % 23) as f64) - 11.0).collect();
            let y = dct2(&x, n).unwrap();
            for (a, b) in y.iter().zip(naive_dct(&x, n)) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn roundtrip_all_sizes() {
        for n in BLOCK_SIDES {
            let x: Vec<f64> = (0..n * n).map(|i| ((i * 7919) % 255) as f64).collect();
            let back = idct2(&dct2(&x, n).unwrap(), n).unwrap();
            assert!(x.iter().zip(&back).all(|(a, b)| (a - b).abs() < 1e-4));
        }
    }

    #[test]
    fn one_dimensional_kinds_invert() {
        let n = 8;
        let x: Vec<f64> = (0..n * n).map(|i| ((i * 13) % 17) as f64 - 8.0).collect();
        for kind in TransformKind::ALL {
            let (mut tmp, mut y, mut back) = (Vec::new(), Vec::new(), Vec::new());
            forward_kind(kind, &x, n, &mut tmp, &mut y);
            inverse_kind(kind, &y, n, &mut tmp, &mut back);
            assert!(x.iter().zip(&back).all(|(a, b)| (a - b).abs() < 1e-9), "{kind:?}");
            let e: f64 = y.iter().map(|v| v * v).sum();
            assert!((e - x.iter().map(|v| v * v).sum::<f64>()).abs() < 1e-6);
        }
        // a row-constant block needs only column 0 under the row transform
        let rc: Vec<f64> = (0..n * n).map(|i| (i / n) as f64).collect();
        let mut y = Vec::new();
        forward_kind(TransformKind::RowDct, &rc, n, &mut Vec::new(), &mut y);
        assert!((0..n * n).filter(|i| i % n != 0).all(|i| y[i].abs() < 1e-9));
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(dct2(&[0.0; 12], 4), Err(Error::ShapeMismatch(_))));
        assert!(matches!(dct2(&[0.0; 4], 2), Err(Error::UnsupportedSize(2))));
        assert!(idct2(&[0.0; 9], 3).is_err());
    }
}
