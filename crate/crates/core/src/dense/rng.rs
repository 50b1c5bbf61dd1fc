//! Seeded random streams.
//!
//! Every randomized routine draws from a [`SeededRng`]: ChaCha8 keyed through
//! `SeedableRng::seed_from_u64(seed)`. Uniform entries are `rand`'s standard
//! 53-bit `f64` in `[0, 1)`, Gaussian entries use `rand_distr::StandardNormal`
//! (ziggurat). Matrices are filled in column-major order, one draw per entry,
//! so a stream shared between several matrices is consumed left to right.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::DenseMatrix;

pub type SeededRng = ChaCha8Rng;

/// Seed of a reproducible random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn rng(self) -> SeededRng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Child seed for a named sub-stream, mixed with SplitMix64.
    pub fn derive(self, tag: u64) -> RngSeed {
        RngSeed(splitmix64(splitmix64(self.0) ^ tag.wrapping_mul(0xD6E8_FEB8_6659_FD93)))
    }
}

impl From<u64> for RngSeed {
    fn from(seed: u64) -> Self {
        RngSeed(seed)
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub(crate) fn uniform_from(rng: &mut SeededRng, rows: usize, cols: usize) -> DMatrix<f64> {
    let data: Vec<f64> = (0..rows * cols).map(|_| rng.random::<f64>()).collect();
    DMatrix::from_vec(rows, cols, data)
}

pub(crate) fn gaussian_from(rng: &mut SeededRng, rows: usize, cols: usize) -> DMatrix<f64> {
    let data: Vec<f64> = (0..rows * cols)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    DMatrix::from_vec(rows, cols, data)
}

/// `rows×cols` matrix of i.i.d. uniform `[0, 1)` entries.
pub fn random_uniform(rows: usize, cols: usize, seed: RngSeed) -> DenseMatrix {
    DenseMatrix::wrap(uniform_from(&mut seed.rng(), rows, cols))
}

/// `rows×cols` matrix of i.i.d. standard normal entries.
pub fn random_gaussian(rows: usize, cols: usize, seed: RngSeed) -> DenseMatrix {
    DenseMatrix::wrap(gaussian_from(&mut seed.rng(), rows, cols))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_entries_in_unit_interval() {
        let m = random_uniform(2, 2, RngSeed(1));
        assert!(m.as_slice().iter().all(|&x| (0.0..1.0).contains(&x)));
        let big = random_uniform(50, 40, RngSeed(2));
        assert!(big.as_slice().iter().all(|&x| (0.0..1.0).contains(&x)));
    }

    #[test]
    fn gaussian_moments_within_standard_error() {
        // 1000 draws: sd of the mean ~0.032, sd of the variance ~0.045.
        let m = random_gaussian(1000, 1, RngSeed(3));
        let xs = m.as_slice();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        assert!(mean.abs() < 0.1, "mean {mean}");
        assert!((var - 1.0).abs() < 0.15, "variance {var}");
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let a = random_gaussian(7, 5, RngSeed(42));
        let b = random_gaussian(7, 5, RngSeed(42));
        let bits = |m: &DenseMatrix| m.as_slice().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert_ne!(bits(&a), bits(&random_gaussian(7, 5, RngSeed(43))));
        assert_eq!(random_uniform(3, 3, RngSeed(9)), random_uniform(3, 3, RngSeed(9)));
    }

    #[test]
    fn derived_seeds_differ_per_tag() {
        let base = RngSeed(5);
        assert_eq!(base.derive(1), base.derive(1));
        assert_ne!(base.derive(1), base.derive(2));
        assert_ne!(base.derive(1), RngSeed(6).derive(1));
    }
}
