use super::{Denoiser, DenoiserResult, PrecisionVector};
use crate::error::{Error, Result};
use crate::rng::SeedTree;
use crate::transforms::WaveletPyramid;

/// MMSE denoiser for a zero-mean Gaussian prior with per-coefficient
/// precision `p_i`: `f(r)_i = gamma_i r_i / (gamma_i + p_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearShrinkage {
    prior_precision: Vec<f64>,
}

impl LinearShrinkage {
    pub fn new(prior_precision: Vec<f64>) -> Result<Self> {
        if let Some(p) = prior_precision.iter().find(|p| !(**p >= 0.0 && p.is_finite())) {
            return Err(Error::InvalidInput(format!("prior precision must be nonnegative, got {p}")));
        }
        Ok(LinearShrinkage { prior_precision })
    }

    pub fn prior_precision(&self) -> &[f64] {
        &self.prior_precision
    }
}

impl Denoiser for LinearShrinkage {
    fn name(&self) -> &str {
        "linear_shrinkage"
    }

    fn denoise(&self, r: &WaveletPyramid, gamma: &PrecisionVector, _seed: SeedTree) -> Result<DenoiserResult> {
        if self.prior_precision.len() != r.coeffs().len() {
            return Err(Error::ShapeMismatch(format!(
                "prior has {} precisions, input has {} coefficients",
                self.prior_precision.len(),
                r.coeffs().len()
            )));
        }
        let part = gamma.partition();
        let mut out = r.coeffs().to_vec();
        let mut div = Vec::with_capacity(part.num_groups());
        for (ell, range) in part.ranges().iter().enumerate() {
            let g = gamma.get(ell);
            let mut acc = 0.0;
            for k in range.clone() {
                let s = g / (g + self.prior_precision[k]);
                out[k] *= s;
                acc += s;
            }
            div.push(acc / range.len() as f64);
        }
        Ok(DenoiserResult { estimate: r.with_coeffs(out)?, subband_divergence: Some(div) })
    }
}

/// `f(r) = r`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl Denoiser for Identity {
    fn name(&self) -> &str {
        "identity"
    }

    fn denoise(&self, r: &WaveletPyramid, gamma: &PrecisionVector, _seed: SeedTree) -> Result<DenoiserResult> {
        Ok(DenoiserResult { estimate: r.clone(), subband_divergence: Some(vec![1.0; gamma.num_groups()]) })
    }
}
