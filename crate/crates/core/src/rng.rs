//! Deterministic seed derivation.
//!
//! Every random draw in the toolkit comes from a ChaCha8 stream whose seed is
//! derived from one master seed through a fixed split tree:
//!
//! ```text
//! child = splitmix64(parent ^ splitmix64(fnv1a(label)) ^ splitmix64(index + 1))
//! ```
//!
//! The labels used by the solver and CLI are `"mask"`, `"noise"`, `"phantom"`,
//! `"coils"`, `"calibration"`, `"init"`, `"probe"` and `"denoiser"`. Probe seeds
//! are split once more by iteration and subband, so any single draw can be
//! regenerated without replaying the ones before it.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SolverRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

/// Node of the seed split tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedTree(u64);

impl SeedTree {
    pub fn new(master: u64) -> Self {
        SeedTree(master)
    }

    pub fn seed(self) -> u64 {
        self.0
    }

    pub fn child(self, label: &str) -> Self {
        self.indexed(label, 0)
    }

    pub fn indexed(self, label: &str, index: u64) -> Self {
        SeedTree(splitmix64(self.0 ^ splitmix64(fnv1a(label)) ^ splitmix64(index.wrapping_add(1))))
    }

    pub fn rng(self) -> SolverRng {
        SolverRng::seed_from_u64(self.0)
    }
}

pub fn rng_from_seed(seed: u64) -> SolverRng {
    SolverRng::seed_from_u64(seed)
}

#[inline]
pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Circularly symmetric complex Gaussian with `E|z|^2 = variance`.
#[inline]
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (0.5 * variance).sqrt();
    Complex64::new(s * normal(rng), s * normal(rng))
}

pub fn complex_normal_vec<R: Rng + ?Sized>(rng: &mut R, n: usize, variance: f64) -> Vec<Complex64> {
    (0..n).map(|_| complex_normal(rng, variance)).collect()
}
