//! Shared numerical helpers: log-sum-exp, seeded PRNG streams, Gaussian
//! log-densities backed by Cholesky factors, and percentile interpolation.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Name of the PRNG recorded in report provenance.
pub const PRNG_NAME: &str = "chacha8";
/// Name of the seed-derivation scheme recorded in report provenance.
pub const SEED_DERIVATION: &str = "splitmix64";

/// Numerically stable log(Σ exp(x_i)).
///
/// Returns -inf for an empty slice or when every entry is -inf.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

/// Derives an independent seed for a sub-stream (restart index, component
/// grid position, candidate index) from a root seed.
///
/// SplitMix64 finalizer over root + stream; stable across platforms so that
/// recorded seeds reproduce runs exactly.
pub fn derive_seed(root: u64, stream: u64) -> u64 {
    let mut z = root
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The project-wide seeded generator.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Log-density evaluator for a single multivariate Gaussian, holding the
/// Cholesky factor of its covariance.
pub struct GaussianLogPdf {
    mean: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    log_norm: f64,
}

impl GaussianLogPdf {
    /// Fails when the covariance is not symmetric positive-definite.
    pub fn new(mean: DVector<f64>, covariance: &DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if covariance.nrows() != d || covariance.ncols() != d {
            return Err(Error::invalid(format!(
                "covariance is {}x{}, expected {d}x{d}",
                covariance.nrows(),
                covariance.ncols()
            )));
        }
        let chol = Cholesky::new(covariance.clone())
            .ok_or_else(|| Error::numerical("covariance is not positive-definite"))?;
        let log_det: f64 = chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>() * 2.0;
        let log_norm = -0.5 * (d as f64 * (2.0 * std::f64::consts::PI).ln() + log_det);
        Ok(Self {
            mean,
            chol,
            log_norm,
        })
    }

    pub fn log_pdf(&self, x: &DVector<f64>) -> f64 {
        let diff = x - &self.mean;
        let solved = self.chol.solve(&diff);
        self.log_norm - 0.5 * diff.dot(&solved)
    }

    pub fn log_det(&self) -> f64 {
        self.chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>() * 2.0
    }
}

/// Percentile by linear interpolation over a sorted copy, matching the
/// conventional `(len-1) * p / 100` rank definition.
pub fn percentile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::invalid("percentile of empty slice"));
    }
    if !(0.0..=100.0).contains(&p) {
        return Err(Error::invalid(format!("percentile {p} outside [0, 100]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let rank = (sorted.len() - 1) as f64 * p / 100.0;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    Ok(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

/// Population (1/n) covariance matrix of row-major observations.
pub fn population_covariance(points: &DMatrix<f64>) -> DMatrix<f64> {
    let n = points.nrows();
    let d = points.ncols();
    let mean = points.row_mean();
    let mut cov = DMatrix::zeros(d, d);
    for i in 0..n {
        for r in 0..d {
            let dr = points[(i, r)] - mean[r];
            for c in r..d {
                cov[(r, c)] += dr * (points[(i, c)] - mean[c]);
            }
        }
    }
    cov /= n as f64;
    for r in 0..d {
        for c in (r + 1)..d {
            cov[(c, r)] = cov[(r, c)];
        }
    }
    cov
}
