use num_complex::Complex64;

use super::PrecisionVector;
use crate::error::{Error, Result};
use crate::rng::{complex_normal, SeedTree};
use crate::transforms::haar::inverse_in_place;
use crate::transforms::{ComplexImage, SubbandLayout};

/// Draws `Psi^T n` with `n` white within each group, variance `1/gamma_l`.
/// The result is Gaussian with covariance `Psi^T Diag(gamma)^-1 Psi`.
pub fn sample_correlated_noise(
    layout: &SubbandLayout,
    gamma: &PrecisionVector,
    seed: SeedTree,
) -> Result<ComplexImage> {
    if gamma.partition().total_len() != layout.len() {
        return Err(Error::ShapeMismatch("precision partition does not match the wavelet layout".into()));
    }
    let mut rng = seed.rng();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); layout.len()];
    for (ell, range) in gamma.partition().ranges().iter().enumerate() {
        let var = 1.0 / gamma.get(ell);
        for c in &mut coeffs[range.clone()] {
            *c = complex_normal(&mut rng, var);
        }
    }
    let mut pixels = vec![Complex64::new(0.0, 0.0); layout.len()];
    inverse_in_place(layout, &coeffs, &mut pixels);
    ComplexImage::new(layout.height(), layout.width(), pixels)
}
