use num_complex::Complex64;

use super::{Denoiser, DenoiserResult, PrecisionVector};
use crate::error::{Error, Result};
use crate::rng::SeedTree;
use crate::transforms::WaveletPyramid;

/// Complex soft threshold `r * max(1 - t/|r|, 0)` and its complex-normalized
/// derivative contribution `1 - t/(2|r|)` (0 inside the dead zone).
#[inline]
pub fn soft_threshold(r: Complex64, t: f64) -> (Complex64, f64) {
    let mag = r.norm();
    if mag > t {
        (r * (1.0 - t / mag), 1.0 - t / (2.0 * mag))
    } else {
        (Complex64::new(0.0, 0.0), 0.0)
    }
}

/// Per-group soft thresholding, the prox of `sum_l lambda_l |c_l|_1` at
/// precision `gamma`: threshold `t_l = lambda_l / gamma_l`.
pub fn subband_soft_threshold(r: &WaveletPyramid, gamma: &PrecisionVector, lambda: &[f64]) -> Result<DenoiserResult> {
    let part = gamma.partition();
    if part.total_len() != r.coeffs().len() {
        return Err(Error::ShapeMismatch("precision partition does not cover the pyramid".into()));
    }
    if lambda.len() != part.num_groups() {
        return Err(Error::ShapeMismatch(format!("{} thresholds for {} groups", lambda.len(), part.num_groups())));
    }
    if let Some(l) = lambda.iter().find(|l| !(**l >= 0.0 && l.is_finite())) {
        return Err(Error::InvalidInput(format!("soft-threshold weights must be nonnegative, got {l}")));
    }
    let mut out = vec![Complex64::new(0.0, 0.0); r.coeffs().len()];
    let mut div = Vec::with_capacity(part.num_groups());
    for (ell, range) in part.ranges().iter().enumerate() {
        let t = lambda[ell] / gamma.get(ell);
        let mut acc = 0.0;
        for k in range.clone() {
            let (v, d) = soft_threshold(r.coeffs()[k], t);
            out[k] = v;
            acc += d;
        }
        div.push(acc / range.len() as f64);
    }
    Ok(DenoiserResult { estimate: r.with_coeffs(out)?, subband_divergence: Some(div) })
}

/// Soft threshold with the threshold tied to the predicted noise level:
/// `lambda_l = kappa * sqrt(gamma_l)`, i.e. `t_l = kappa / sqrt(gamma_l)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftThreshold {
    pub kappa: f64,
}

impl SoftThreshold {
    pub fn new(kappa: f64) -> Result<Self> {
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidInput(format!("threshold scale must be nonnegative, got {kappa}")));
        }
        Ok(SoftThreshold { kappa })
    }

    pub fn lambdas(&self, gamma: &PrecisionVector) -> Vec<f64> {
        gamma.gammas().iter().map(|g| self.kappa * g.sqrt()).collect()
    }
}

impl Denoiser for SoftThreshold {
    fn name(&self) -> &str {
        "soft_threshold"
    }

    fn denoise(&self, r: &WaveletPyramid, gamma: &PrecisionVector, _seed: SeedTree) -> Result<DenoiserResult> {
        subband_soft_threshold(r, gamma, &self.lambdas(gamma))
    }
}
