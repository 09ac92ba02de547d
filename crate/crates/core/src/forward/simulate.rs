use num_complex::Complex64;

use super::coils::CoilMaps;
use super::mask::SamplingMask;
use super::model::ForwardModel;
use crate::error::{Error, Result};
use crate::rng::{complex_normal, SeedTree};
use crate::transforms::{norm_sqr, ComplexImage, SubbandLayout};

/// Stand-in for `gamma_w = inf` in noiseless simulations. Large enough that
/// `gamma_w * B^H B` swamps any realistic prior precision, small enough to
/// keep products with pixel energies finite.
pub const NOISELESS_GAMMA_W: f64 = 1e30;

/// Noisy measurements `y = A x0 + w`.
///
/// Noise is circularly symmetric: real and imaginary parts each have
/// variance `sigma^2 / 2`, so `E|w_i|^2 = sigma^2` and `gamma_w = 1/sigma^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pub y: Vec<Complex64>,
    pub gamma_w: f64,
    pub snr_db: f64,
    pub seed: u64,
}

impl MeasurementSet {
    pub fn new(y: Vec<Complex64>, gamma_w: f64, snr_db: f64, seed: u64) -> Result<Self> {
        if !(gamma_w > 0.0) || gamma_w.is_nan() {
            return Err(Error::InvalidInput(format!("noise precision must be positive, got {gamma_w}")));
        }
        if y.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("measurements"));
        }
        Ok(MeasurementSet { y, gamma_w, snr_db, seed })
    }

    pub fn is_noiseless(&self) -> bool {
        self.snr_db == f64::INFINITY
    }
}

/// Simulates measurements at the requested SNR, `10 log10(|A x0|^2 / E|w|^2)`.
/// `snr_db = +inf` gives noiseless data with [`NOISELESS_GAMMA_W`].
pub fn simulate_measurements(x0: &ComplexImage, fm: &ForwardModel, snr_db: f64, seed: u64) -> Result<MeasurementSet> {
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::InvalidInput(format!("SNR must be finite or +inf, got {snr_db}")));
    }
    let clean = fm.apply_a(x0)?;
    let energy = norm_sqr(&clean);
    if energy == 0.0 {
        return Err(Error::InvalidInput("ground truth has no energy in the measured k-space; SNR is undefined".into()));
    }
    if snr_db == f64::INFINITY {
        return MeasurementSet::new(clean, NOISELESS_GAMMA_W, snr_db, seed);
    }
    let sigma2 = energy / (clean.len() as f64 * 10f64.powf(snr_db / 10.0));
    let mut rng = SeedTree::new(seed).child("noise").rng();
    let y = clean.into_iter().map(|z| z + complex_normal(&mut rng, sigma2)).collect();
    MeasurementSet::new(y, 1.0 / sigma2, snr_db, seed)
}

/// Least-squares image from fully sampled multi-coil k-space. With coil maps
/// normalized to `sum |s_c|^2 in {0, 1}` this is exactly `A_full^H y_full`.
pub fn ground_truth_from_full(y_full: &[Complex64], coils: &CoilMaps) -> Result<ComplexImage> {
    let (h, w) = coils.shape();
    let fm = ForwardModel::new(SamplingMask::full(h, w), coils.clone(), SubbandLayout::new(h, w, 0)?)?;
    fm.apply_ah(y_full)
}
