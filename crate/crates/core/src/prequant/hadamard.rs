//! Hadamard matrices of order 2^k, 12·2^k and 20·2^k.
//!
//! Powers of two use the Sylvester recursion; the 12 and 20 cores come from
//! the Paley construction over GF(11) and GF(19) (both ≡ 3 mod 4), combined
//! with a power of two by a Kronecker product.

use crate::error::{Error, Result};

/// Splits `n` into `(core, 2^k)` with `core ∈ {1, 12, 20}`.
pub fn factor_size(n: usize) -> Option<(usize, usize)> {
    if n == 0 {
        return None;
    }
    for core in [1usize, 12, 20] {
        if n % core == 0 {
            let pow = n / core;
            if pow.is_power_of_two() {
                return Some((core, pow));
            }
        }
    }
    None
}

pub fn is_supported_size(n: usize) -> bool {
    factor_size(n).is_some()
}

/// Smallest supported size ≥ n.
pub fn next_supported_size(n: usize) -> usize {
    (n.max(1)..).find(|&m| is_supported_size(m)).expect("powers of two are unbounded")
}

/// Paley type-I Hadamard matrix of order q+1 for a prime q ≡ 3 (mod 4).
fn paley(q: usize) -> Vec<i8> {
    let n = q + 1;
    let mut residue = vec![false; q];
    for x in 1..q {
        residue[(x * x) % q] = true;
    }
    let chi = |a: usize| -> i8 {
        if a == 0 {
            0
        } else if residue[a] {
            1
        } else {
            -1
        }
    };
    // S = [[0, 1ᵀ], [−1, Q]], H = I + S
    let mut h = vec![0i8; n * n];
    for i in 0..n {
        for j in 0..n {
            let s = match (i, j) {
                (0, 0) => 0,
                (0, _) => 1,
                (_, 0) => -1,
                _ => chi((j + q - i) % q),
            };
            h[i * n + j] = s + if i == j { 1 } else { 0 };
        }
    }
    h
}

/// Unnormalized ±1 core matrix for `core ∈ {1, 12, 20}`.
pub(crate) fn core_matrix(core: usize) -> Vec<i8> {
    match core {
        1 => vec![1],
        12 => paley(11),
        20 => paley(19),
        _ => unreachable!("unsupported core {core}"),
    }
}

/// Dense ±1 Hadamard matrix of order n (row-major).
pub fn hadamard_matrix(n: usize) -> Result<Vec<i8>> {
    let (core, pow) = factor_size(n).ok_or(Error::UnsupportedSize(n))?;
    let c = core_matrix(core);
    let mut h = vec![0i8; n * n];
    // (C ⊗ S)[i·p + j, i'·p + j'] = C[i, i'] · S[j, j'] with Sylvester S[j, j'] = (−1)^popcount(j & j')
    for i in 0..core {
        for ip in 0..core {
            let cv = c[i * core + ip];
            for j in 0..pow {
                for jp in 0..pow {
                    let s = if (j & jp).count_ones() % 2 == 0 { 1 } else { -1 };
                    h[(i * pow + j) * n + ip * pow + jp] = cv * s;
                }
            }
        }
    }
    Ok(h)
}

/// In-place unnormalized fast Walsh–Hadamard transform (Sylvester order).
pub(crate) fn fwht(x: &mut [f64]) {
    let n = x.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for start in (0..n).step_by(2 * h) {
            for i in start..start + h {
                let (a, b) = (x[i], x[i + h]);
                x[i] = a + b;
                x[i + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// Computes `H·x` (unnormalized) for a supported length using the
/// core ⊗ Sylvester factorization.
pub(crate) fn hadamard_apply(x: &mut [f64], core: usize, core_mat: &[i8], scratch: &mut Vec<f64>) {
    let pow = x.len() / core;
    for block in x.chunks_mut(pow) {
        fwht(block);
    }
    if core == 1 {
        return;
    }
    scratch.clear();
    scratch.extend_from_slice(x);
    for i in 0..core {
        for j in 0..pow {
            let mut acc = 0.0;
            for ip in 0..core {
                acc += core_mat[i * core + ip] as f64 * scratch[ip * pow + j];
            }
            x[i * pow + j] = acc;
        }
    }
}
