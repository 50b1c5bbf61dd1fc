//! Quality measure, synthetic generators, seeded experiment runner and
//! brute-force oracles.

mod oracle;
mod report;
mod runner;
mod suite;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dense::{gaussian_from, singular_values, tail_norm, uniform_from, DenseMatrix, RngSeed};
use crate::error::{Error, Result};

pub use oracle::{ill_posed_fixture, oracle_halfplane_2d, oracle_rank1_grid, rank1_grid_slack};
pub use report::{summarize, write_csv, CheckpointSummary, ConfigSummary, Quantiles, StrategySummary, Summary, NEAR_OPTIMAL_QUALITY};
pub use runner::{run_experiment, ExperimentConfig, ExperimentRecord, Generator, MONOTONE_SLACK};
pub use suite::{parse_suite, preset, Suite, PRESETS};

/// Best rank-`r` error below which the quality ratio is replaced by a sentinel.
pub const DEGENERATE_BEST_RTOL: f64 = 1e-12;
/// Residual regarded as an exact fit when the best error is degenerate.
pub const EXACT_FIT_RTOL: f64 = 1e-10;

/// Distance in percent from the best unconstrained rank-`r` error:
/// `100·(‖M − UV‖_F / ‖M − M_r‖_F − 1)`.
///
/// When `‖M − M_r‖_F ≤ 1e-12·‖M‖_F` (so `rank(M) ≤ r`), the result is `0` for
/// residuals at most `1e-10·‖M‖_F` and `+∞` otherwise.
pub fn quality(m: &DenseMatrix, u: &DenseMatrix, v: &DenseMatrix, r: usize) -> Result<f64> {
    let err = m.residual_norm(u, v)?;
    let best = tail_norm(&singular_values(m)?, r);
    Ok(quality_from_errors(err, best, m.frobenius_norm()))
}

/// [`quality`] from precomputed norms.
pub fn quality_from_errors(err: f64, best: f64, m_norm: f64) -> f64 {
    if best <= DEGENERATE_BEST_RTOL * m_norm {
        if err <= EXACT_FIT_RTOL * m_norm { 0.0 } else { f64::INFINITY }
    } else {
        100.0 * (err / best - 1.0)
    }
}

/// Noise level δ of the noisy generator; `+∞` means a pure Gaussian matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct NoiseSpec {
    pub delta: f64,
}

impl NoiseSpec {
    pub const INFINITE: NoiseSpec = NoiseSpec { delta: f64::INFINITY };

    pub fn new(delta: f64) -> Result<Self> {
        if delta.is_nan() || delta < 0.0 {
            return Err(Error::arg(format!("noise level must be >= 0 or inf, got {delta}")));
        }
        Ok(NoiseSpec { delta })
    }

    pub fn is_infinite(&self) -> bool {
        self.delta.is_infinite()
    }
}

impl fmt::Display for NoiseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() { f.write_str("inf") } else { write!(f, "{}", self.delta) }
    }
}

impl FromStr for NoiseSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        if matches!(t.as_str(), "inf" | "+inf" | "infinity" | "+infinity") {
            return Ok(NoiseSpec::INFINITE);
        }
        let delta: f64 = t.parse().map_err(|_| Error::arg(format!("invalid noise level '{s}'")))?;
        if delta.is_infinite() {
            return Err(Error::arg("write an infinite noise level as 'inf'"));
        }
        NoiseSpec::new(delta)
    }
}

impl From<NoiseSpec> for String {
    fn from(n: NoiseSpec) -> String {
        n.to_string()
    }
}

impl TryFrom<String> for NoiseSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

fn check_dims(m: usize, n: usize) -> Result<()> {
    if m == 0 || n == 0 {
        return Err(Error::arg(format!("generator dimensions must be >= 1, got {m}x{n}")));
    }
    Ok(())
}

/// `rand(m, n)`.
pub fn gen_nonnegative(m: usize, n: usize, seed: RngSeed) -> Result<DenseMatrix> {
    check_dims(m, n)?;
    Ok(DenseMatrix::wrap(uniform_from(&mut seed.rng(), m, n)))
}

/// `randn(m, k) · rand(k, n)`, both factors drawn from one stream.
pub fn gen_semi_nonneg(m: usize, n: usize, k: usize, seed: RngSeed) -> Result<DenseMatrix> {
    check_dims(m, n)?;
    if k == 0 || k > m.min(n) {
        return Err(Error::arg(format!("inner dimension k = {k} must lie in 1..=min(m, n) = {}", m.min(n))));
    }
    let mut rng = seed.rng();
    let u = gaussian_from(&mut rng, m, k);
    let v = uniform_from(&mut rng, k, n);
    Ok(DenseMatrix::wrap(u * v))
}

/// `randn(m, r) · rand(r, n) + δ·x_M·randn(m, n)` with `x_M` the mean absolute
/// entry of the product. `δ = ∞` gives `randn(m, n)`; `δ = 0` draws no noise and
/// matches [`gen_semi_nonneg`] with `k = r`.
pub fn gen_noisy_semi(m: usize, n: usize, r: usize, noise: NoiseSpec, seed: RngSeed) -> Result<DenseMatrix> {
    check_dims(m, n)?;
    NoiseSpec::new(noise.delta)?;
    if noise.is_infinite() {
        return Ok(DenseMatrix::wrap(gaussian_from(&mut seed.rng(), m, n)));
    }
    if r == 0 || r > m.min(n) {
        return Err(Error::arg(format!("inner dimension r = {r} must lie in 1..=min(m, n) = {}", m.min(n))));
    }
    let mut rng = seed.rng();
    let u = gaussian_from(&mut rng, m, r);
    let v = uniform_from(&mut rng, r, n);
    let mut prod = u * v;
    if noise.delta > 0.0 {
        let x_m = prod.iter().map(|x| x.abs()).sum::<f64>() / (m * n) as f64;
        let noise_mat = gaussian_from(&mut rng, m, n);
        prod += noise_mat * (noise.delta * x_m);
    }
    Ok(DenseMatrix::wrap(prod))
}
