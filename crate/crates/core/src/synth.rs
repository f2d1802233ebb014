//! Seeded synthetic tensors with channel-correlated, bell-shaped values.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::{Role, Tensor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    pub rows: usize,
    pub cols: usize,
    /// Share of each value's variance explained by its row (channel) mean.
    pub channel_corr: f64,
    pub outlier_rate: f64,
    pub outlier_scale: f64,
    pub seed: u64,
}

impl SynthParams {
    pub fn new(rows: usize, cols: usize, channel_corr: f64, outlier_rate: f64, outlier_scale: f64, seed: u64) -> Self {
        SynthParams { rows, cols, channel_corr, outlier_rate, outlier_scale, seed }
    }

    fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::invalid("rows and cols must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.channel_corr) {
            return Err(Error::invalid(format!("channel_corr {} outside [0, 1]", self.channel_corr)));
        }
        if !(0.0..=1.0).contains(&self.outlier_rate) {
            return Err(Error::invalid(format!("outlier_rate {} outside [0, 1]", self.outlier_rate)));
        }
        if !(self.outlier_scale >= 1.0 && self.outlier_scale.is_finite()) {
            return Err(Error::invalid(format!("outlier_scale {} must be finite and >= 1", self.outlier_scale)));
        }
        Ok(())
    }
}

/// Standard normal deviates via Box-Muller on a portable RNG. `libm` keeps the
/// transcendental functions bit-identical across platforms.
pub(crate) struct Gaussian {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl Gaussian {
    pub(crate) fn new(seed: u64) -> Self {
        Gaussian { rng: ChaCha8Rng::seed_from_u64(seed), spare: None }
    }

    pub(crate) fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub(crate) fn next(&mut self) -> f64 {
        if let Some(v) = self.spare.take() {
            return v;
        }
        // u1 in (0, 1] so the log is finite
        let u1 = 1.0 - self.rng.gen::<f64>();
        let u2 = self.rng.gen::<f64>();
        let radius = libm::sqrt(-2.0 * libm::log(u1));
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(radius * libm::sin(theta));
        radius * libm::cos(theta)
    }
}

/// Generates a `rows × cols` weight-role tensor whose rows are channels.
///
/// Each value is `corr·μ_row + sqrt(1 − corr²)·z` with `μ_row, z ~ N(0, 1)`,
/// so the non-outlier bulk has unit variance. Exactly
/// `round(outlier_rate · rows · cols)` entries are then multiplied by
/// `outlier_scale`.
pub fn gen_synthetic(p: &SynthParams) -> Result<Tensor> {
    p.validate()?;
    let mut g = Gaussian::new(p.seed);
    let within = (1.0 - p.channel_corr * p.channel_corr).max(0.0).sqrt();
    let n = p.rows * p.cols;
    let mut values = Vec::with_capacity(n);
    for _ in 0..p.rows {
        let mean = p.channel_corr * g.next();
        for _ in 0..p.cols {
            values.push((mean + within * g.next()) as f32);
        }
    }
    let outliers = (p.outlier_rate * n as f64).round() as usize;
    if outliers > 0 {
        let scale = p.outlier_scale as f32;
        for idx in sample(g.rng(), n, outliers.min(n)).into_iter() {
            values[idx] *= scale;
        }
    }
    Tensor::matrix(p.rows, p.cols, Role::Weight, values)
}

/// Zero-mean Gaussian tensor of the given std; used for gradients and noise.
pub fn gen_gaussian(rows: usize, cols: usize, std: f64, role: Role, seed: u64) -> Result<Tensor> {
    if rows == 0 || cols == 0 {
        return Err(Error::invalid("rows and cols must be at least 1"));
    }
    let mut g = Gaussian::new(seed);
    let values = (0..rows * cols).map(|_| (std * g.next()) as f32).collect();
    Tensor::matrix(rows, cols, role, values)
}
