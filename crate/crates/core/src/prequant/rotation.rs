//! Randomized Hadamard rotations for incoherence processing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::hadamard::{core_matrix, factor_size, hadamard_apply, hadamard_matrix};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// `P = diag(d) · H / √n` with random signs `d ∈ {−1, +1}^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct IncoherenceRotation {
    n: usize,
    seed: u64,
    signs: Vec<i8>,
    core: usize,
    core_mat: Vec<i8>,
    core_mat_t: Vec<i8>,
}

pub fn make_rotation(n: usize, seed: u64) -> Result<IncoherenceRotation> {
    let (core, _) = factor_size(n).ok_or(Error::UnsupportedSize(n))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let signs = (0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
    let core_mat = core_matrix(core);
    let mut core_mat_t = core_mat.clone();
    for i in 0..core {
        for j in 0..core {
            core_mat_t[i * core + j] = core_mat[j * core + i];
        }
    }
    Ok(IncoherenceRotation { n, seed, signs, core, core_mat, core_mat_t })
}

impl IncoherenceRotation {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    /// Explicit row-major `n × n` matrix.
    pub fn to_matrix(&self) -> Vec<f64> {
        let h = hadamard_matrix(self.n).expect("size validated");
        let norm = 1.0 / (self.n as f64).sqrt();
        let mut p = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            for j in 0..self.n {
                p[i * self.n + j] = self.signs[i] as f64 * h[i * self.n + j] as f64 * norm;
            }
        }
        p
    }

    /// `x ← P·x`
    pub fn apply(&self, x: &mut [f64]) {
        let mut scratch = Vec::new();
        self.apply_with(x, &mut scratch);
    }

    fn apply_with(&self, x: &mut [f64], scratch: &mut Vec<f64>) {
        debug_assert_eq!(x.len(), self.n);
        hadamard_apply(x, self.core, &self.core_mat, scratch);
        let norm = 1.0 / (self.n as f64).sqrt();
        for (v, &s) in x.iter_mut().zip(&self.signs) {
            *v *= s as f64 * norm;
        }
    }

    /// `x ← Pᵀ·x`
    pub fn apply_transpose(&self, x: &mut [f64]) {
        let mut scratch = Vec::new();
        self.apply_transpose_with(x, &mut scratch);
    }

    fn apply_transpose_with(&self, x: &mut [f64], scratch: &mut Vec<f64>) {
        debug_assert_eq!(x.len(), self.n);
        let norm = 1.0 / (self.n as f64).sqrt();
        for (v, &s) in x.iter_mut().zip(&self.signs) {
            *v *= s as f64 * norm;
        }
        hadamard_apply(x, self.core, &self.core_mat_t, scratch);
    }

    /// Rows of a row-major `rows × n` matrix, each replaced by `row·P`
    /// (`transpose = false`) or `row·Pᵀ` (`transpose = true`).
    pub(crate) fn right_multiply(&self, data: &mut [f64], rows: usize, transpose: bool) {
        let mut scratch = Vec::new();
        for r in 0..rows {
            let row = &mut data[r * self.n..(r + 1) * self.n];
            // row·P = Pᵀ·rowᵀ
            if transpose {
                self.apply_with(row, &mut scratch);
            } else {
                self.apply_transpose_with(row, &mut scratch);
            }
        }
    }

    /// Columns of a row-major `n × cols` matrix, each replaced by `P·col`
    /// (`transpose = false`) or `Pᵀ·col` (`transpose = true`).
    pub(crate) fn left_multiply(&self, data: &mut [f64], cols: usize, transpose: bool) {
        let mut col = vec![0.0; self.n];
        let mut scratch = Vec::new();
        for c in 0..cols {
            for r in 0..self.n {
                col[r] = data[r * cols + c];
            }
            if transpose {
                self.apply_transpose_with(&mut col, &mut scratch);
            } else {
                self.apply_with(&mut col, &mut scratch);
            }
            for r in 0..self.n {
                data[r * cols + c] = col[r];
            }
        }
    }
}

/// `X ← P_rᵀ · X · P_c` for a row-major `P_r.size() × P_c.size()` matrix.
pub fn rotate_two_sided(x: &mut [f64], p_rows: &IncoherenceRotation, p_cols: &IncoherenceRotation) {
    assert_eq!(x.len(), p_rows.size() * p_cols.size(), "matrix does not match rotation sizes");
    p_cols.right_multiply(x, p_rows.size(), false);
    p_rows.left_multiply(x, p_cols.size(), true);
}

/// Inverse of [`rotate_two_sided`]: `X ← P_r · X · P_cᵀ`.
pub fn unrotate_two_sided(x: &mut [f64], p_rows: &IncoherenceRotation, p_cols: &IncoherenceRotation) {
    assert_eq!(x.len(), p_rows.size() * p_cols.size(), "matrix does not match rotation sizes");
    p_cols.right_multiply(x, p_rows.size(), true);
    p_rows.left_multiply(x, p_cols.size(), false);
}

fn matrix_dims(t: &Tensor, name: &str) -> Result<(usize, usize)> {
    match t.dims() {
        &[r, c] => Ok((r, c)),
        d => Err(Error::ShapeMismatch(format!("{name} must be a matrix, got dims {d:?}"))),
    }
}

/// Rotates a consecutive pair of linear maps: returns `(W_out·P, Pᵀ·W_in)`,
/// whose product equals `W_out·W_in`.
pub fn apply_incoherence_pair(w_out: &Tensor, w_in: &Tensor, p: &IncoherenceRotation) -> Result<(Tensor, Tensor)> {
    let (m, n_out) = matrix_dims(w_out, "W_out")?;
    let (n_in, k) = matrix_dims(w_in, "W_in")?;
    if n_out != p.size() || n_in != p.size() {
        return Err(Error::ShapeMismatch(format!(
            "inner dimensions {n_out} and {n_in} must both equal rotation size {}",
            p.size()
        )));
    }
    let mut a: Vec<f64> = w_out.values().iter().map(|&v| v as f64).collect();
    p.right_multiply(&mut a, m, false);
    let mut b: Vec<f64> = w_in.values().iter().map(|&v| v as f64).collect();
    p.left_multiply(&mut b, k, true);
    Ok((
        w_out.with_values(a.into_iter().map(|v| v as f32).collect())?,
        w_in.with_values(b.into_iter().map(|v| v as f32).collect())?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::gen_gaussian;
    use crate::tensor::Role;

    fn matmul(a: &[f64], b: &[f64], m: usize, n: usize, k: usize) -> Vec<f64> {
        let mut out = vec![0.0; m * k];
        for i in 0..m {
            for j in 0..k {
                out[i * k + j] = (0..n).map(|l| a[i * n + l] * b[l * k + j]).sum();
            }
        }
        out
    }

    fn transpose(a: &[f64], n: usize) -> Vec<f64> {
        let mut t = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                t[j * n + i] = a[i * n + j];
            }
        }
        t
    }

    #[test]
    fn orthogonal_for_supported_sizes() {
        for n in [2, 12, 20, 64, 96] {
            let p = make_rotation(n, 5).unwrap().to_matrix();
            let ppt = matmul(&p, &transpose(&p, n), n, n, n);
            for i in 0..n {
                for j in 0..n {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((ppt[i * n + j] - want).abs() < 1e-6, "n={n}");
                }
            }
        }
    }

    #[test]
    fn unsupported_size() {
        assert!(matches!(make_rotation(3, 0), Err(Error::UnsupportedSize(3))));
    }

    #[test]
    fn deterministic_in_seed() {
        assert_eq!(make_rotation(64, 9).unwrap(), make_rotation(64, 9).unwrap());
        assert_ne!(make_rotation(64, 9).unwrap().signs(), make_rotation(64, 10).unwrap().signs());
    }

    #[test]
    fn spreads_single_outlier() {
        let p = make_rotation(64, 1).unwrap().to_matrix();
        let mut v = vec![0.0; 64];
        v[17] = 64.0;
        let y = matmul(&p, &v, 64, 64, 1);
        let peak = y.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(peak <= 8.0 + 1e-4, "{peak}");
    }

    #[test]
    fn fast_apply_matches_explicit_matrix() {
        for n in [16, 24] {
            let rot = make_rotation(n, 3).unwrap();
            let p = rot.to_matrix();
            let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
            let mut y = x.clone();
            rot.apply(&mut y);
            let want = matmul(&p, &x, n, n, 1);
            let mut yt = x.clone();
            rot.apply_transpose(&mut yt);
            let want_t = matmul(&transpose(&p, n), &x, n, n, 1);
            for i in 0..n {
                assert!((y[i] - want[i]).abs() < 1e-9);
                assert!((yt[i] - want_t[i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn identity_pair() {
        let eye = Tensor::matrix(2, 2, Role::Weight, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let p = make_rotation(2, 42).unwrap();
        let (a, b) = apply_incoherence_pair(&eye, &eye, &p).unwrap();
        let av: Vec<f64> = a.values().iter().map(|&v| v as f64).collect();
        let bv: Vec<f64> = b.values().iter().map(|&v| v as f64).collect();
        let prod = matmul(&av, &bv, 2, 2, 2);
        for (i, v) in prod.iter().enumerate() {
            let want = if i % 3 == 0 { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-5);
        }
    }

    #[test]
    fn merged_product_is_invariant() {
        let w_out = gen_gaussian(8, 8, 1.0, Role::Weight, 1).unwrap();
        let w_in = gen_gaussian(8, 8, 1.0, Role::Weight, 2).unwrap();
        let p = make_rotation(8, 3).unwrap();
        let (a, b) = apply_incoherence_pair(&w_out, &w_in, &p).unwrap();
        let f = |t: &Tensor| t.values().iter().map(|&v| v as f64).collect::<Vec<_>>();
        let orig = matmul(&f(&w_out), &f(&w_in), 8, 8, 8);
        let merged = matmul(&f(&a), &f(&b), 8, 8, 8);
        let dev = orig.iter().zip(&merged).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(dev < 1e-4, "{dev}");
    }

    #[test]
    fn two_sided_roundtrip_matches_explicit_product() {
        let (r, c) = (12, 8);
        let pr = make_rotation(r, 1).unwrap();
        let pc = make_rotation(c, 2).unwrap();
        let x: Vec<f64> = (0..r * c).map(|i| ((i * 37 % 17) as f64 - 8.0) / 3.0).collect();
        let mut y = x.clone();
        rotate_two_sided(&mut y, &pr, &pc);
        let want = matmul(&matmul(&transpose(&pr.to_matrix(), r), &x, r, r, c), &pc.to_matrix(), r, c, c);
        for (a, b) in y.iter().zip(&want) {
            assert!((a - b).abs() < 1e-9);
        }
        unrotate_two_sided(&mut y, &pr, &pc);
        for (a, b) in y.iter().zip(&x) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn pair_dimension_mismatch() {
        let a = Tensor::matrix(4, 8, Role::Weight, vec![0.0; 32]).unwrap();
        let p = make_rotation(8, 0).unwrap();
        assert!(matches!(apply_incoherence_pair(&a, &a, &p), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn preserves_frobenius_norm() {
        let w = gen_gaussian(20, 12, 3.0, Role::Weight, 4).unwrap();
        let eye = Tensor::matrix(12, 12, Role::Weight, (0..144).map(|i| if i % 13 == 0 { 1.0 } else { 0.0 }).collect()).unwrap();
        let (a, _) = apply_incoherence_pair(&w, &eye, &make_rotation(12, 8).unwrap()).unwrap();
        let rel = (a.frobenius_norm() - w.frobenius_norm()).abs() / w.frobenius_norm();
        assert!(rel < 1e-4);
    }
}
