//! Wavelet-domain denoisers `f2` and the external denoiser client.
//!
//! Divergences are per coefficient group and use the complex convention: the
//! real Jacobian trace over (re, im) pairs divided by two, so the identity map
//! has divergence 1.

pub mod external;
pub mod linear;
pub mod noise;
pub mod precision;
pub mod protocol;
pub mod soft;

use crate::error::Result;
use crate::rng::SeedTree;
use crate::transforms::WaveletPyramid;

pub use external::{DenoiserEndpoint, ExternalDenoiser, RawClient};
pub use linear::{Identity, LinearShrinkage};
pub use noise::sample_correlated_noise;
pub use precision::PrecisionVector;
pub use soft::{subband_soft_threshold, SoftThreshold};

#[derive(Debug, Clone, PartialEq)]
pub struct DenoiserResult {
    pub estimate: WaveletPyramid,
    /// `tr(Q_ll) / N_l` per group when the denoiser knows it in closed form.
    pub subband_divergence: Option<Vec<f64>>,
}

/// Estimation function acting on wavelet coefficients with per-group error
/// precisions.
///
/// `seed` feeds any internal randomness (e.g. noise channels). Callers pass
/// the same seed for a base evaluation and its Monte-Carlo probes, so both see
/// identical random draws.
pub trait Denoiser: Send + Sync {
    fn name(&self) -> &str;

    fn denoise(&self, r: &WaveletPyramid, gamma: &PrecisionVector, seed: SeedTree) -> Result<DenoiserResult>;
}
