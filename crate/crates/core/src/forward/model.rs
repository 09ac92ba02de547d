use num_complex::Complex64;

use super::coils::CoilMaps;
use super::mask::SamplingMask;
use crate::error::{Error, Result};
use crate::transforms::dft::{dft2_raw, idft2_raw};
use crate::transforms::haar::{forward_in_place, inverse_in_place};
use crate::transforms::{ComplexImage, SubbandLayout, WaveletPyramid};

/// Multi-coil Cartesian measurement operator.
///
/// `A x` stacks, coil by coil, the sampled DFT bins of `s_c * x`; within a
/// coil the bins follow ascending storage index. `B = A Psi^T` acts on
/// wavelet coefficients.
#[derive(Debug, Clone)]
pub struct ForwardModel {
    mask: SamplingMask,
    coils: CoilMaps,
    layout: SubbandLayout,
    indices: Vec<usize>,
}

impl ForwardModel {
    pub fn new(mask: SamplingMask, coils: CoilMaps, layout: SubbandLayout) -> Result<Self> {
        if mask.shape() != coils.shape() || mask.shape() != layout.shape() {
            return Err(Error::ShapeMismatch(format!(
                "mask {:?}, coils {:?} and wavelet layout {:?} disagree",
                mask.shape(),
                coils.shape(),
                layout.shape()
            )));
        }
        let indices = mask.indices();
        Ok(ForwardModel { mask, coils, layout, indices })
    }

    pub fn mask(&self) -> &SamplingMask {
        &self.mask
    }

    pub fn coils(&self) -> &CoilMaps {
        &self.coils
    }

    pub fn layout(&self) -> &SubbandLayout {
        &self.layout
    }

    pub fn shape(&self) -> (usize, usize) {
        self.layout.shape()
    }

    pub fn num_pixels(&self) -> usize {
        self.layout.len()
    }

    pub fn samples_per_coil(&self) -> usize {
        self.indices.len()
    }

    /// Length of a measurement vector, `C * M`.
    pub fn num_measurements(&self) -> usize {
        self.coils.num_coils() * self.indices.len()
    }

    pub fn support(&self) -> &[bool] {
        self.coils.support()
    }

    fn check_measurements(&self, y: &[Complex64]) -> Result<()> {
        if y.len() != self.num_measurements() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} measurements ({} coils x {} samples), got {}",
                self.num_measurements(),
                self.coils.num_coils(),
                self.indices.len(),
                y.len()
            )));
        }
        Ok(())
    }

    fn check_image(&self, x: &ComplexImage) -> Result<()> {
        if x.shape() != self.shape() {
            return Err(Error::ShapeMismatch(format!("image is {:?}, operator expects {:?}", x.shape(), self.shape())));
        }
        Ok(())
    }

    pub(crate) fn a_raw(&self, x: &[Complex64], out: &mut [Complex64]) {
        let (h, w) = self.shape();
        let m = self.indices.len();
        let mut buf = vec![Complex64::new(0.0, 0.0); h * w];
        for (c, map) in self.coils.maps().iter().enumerate() {
            for ((b, xi), s) in buf.iter_mut().zip(x).zip(map.data()) {
                *b = xi * s;
            }
            dft2_raw(h, w, &mut buf);
            for (o, &k) in out[c * m..(c + 1) * m].iter_mut().zip(&self.indices) {
                *o = buf[k];
            }
        }
    }

    pub(crate) fn ah_raw(&self, y: &[Complex64], out: &mut [Complex64]) {
        let (h, w) = self.shape();
        let m = self.indices.len();
        let mut buf = vec![Complex64::new(0.0, 0.0); h * w];
        out.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for (c, map) in self.coils.maps().iter().enumerate() {
            buf.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            for (&k, v) in self.indices.iter().zip(&y[c * m..(c + 1) * m]) {
                buf[k] = *v;
            }
            idft2_raw(h, w, &mut buf);
            for ((o, b), s) in out.iter_mut().zip(&buf).zip(map.data()) {
                *o += s.conj() * b;
            }
        }
    }

    /// `A^H A x` without forming the measurement vector.
    pub(crate) fn aha_raw(&self, x: &[Complex64], out: &mut [Complex64]) {
        let (h, w) = self.shape();
        let sampled = self.mask.sampled();
        let mut buf = vec![Complex64::new(0.0, 0.0); h * w];
        out.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for map in self.coils.maps() {
            for ((b, xi), s) in buf.iter_mut().zip(x).zip(map.data()) {
                *b = xi * s;
            }
            dft2_raw(h, w, &mut buf);
            for (b, &keep) in buf.iter_mut().zip(sampled) {
                if !keep {
                    *b = Complex64::new(0.0, 0.0);
                }
            }
            idft2_raw(h, w, &mut buf);
            for ((o, b), s) in out.iter_mut().zip(&buf).zip(map.data()) {
                *o += s.conj() * b;
            }
        }
    }

    /// `B^H B c = Psi A^H A Psi^T c`.
    pub(crate) fn bhb_raw(&self, c: &[Complex64], out: &mut [Complex64]) {
        let n = self.num_pixels();
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        inverse_in_place(&self.layout, c, &mut x);
        let mut ax = vec![Complex64::new(0.0, 0.0); n];
        self.aha_raw(&x, &mut ax);
        forward_in_place(&self.layout, &ax, out);
    }

    pub(crate) fn bh_raw(&self, y: &[Complex64], out: &mut [Complex64]) {
        let mut x = vec![Complex64::new(0.0, 0.0); self.num_pixels()];
        self.ah_raw(y, &mut x);
        forward_in_place(&self.layout, &x, out);
    }

    pub fn apply_a(&self, x: &ComplexImage) -> Result<Vec<Complex64>> {
        self.check_image(x)?;
        x.ensure_finite("operator input")?;
        let mut out = vec![Complex64::new(0.0, 0.0); self.num_measurements()];
        self.a_raw(x.data(), &mut out);
        Ok(out)
    }

    pub fn apply_ah(&self, y: &[Complex64]) -> Result<ComplexImage> {
        self.check_measurements(y)?;
        let (h, w) = self.shape();
        let mut out = vec![Complex64::new(0.0, 0.0); h * w];
        self.ah_raw(y, &mut out);
        ComplexImage::new(h, w, out)
    }

    pub fn apply_b(&self, c: &WaveletPyramid) -> Result<Vec<Complex64>> {
        if c.layout() != &self.layout {
            return Err(Error::ShapeMismatch("pyramid layout differs from the operator's".into()));
        }
        let mut x = vec![Complex64::new(0.0, 0.0); self.num_pixels()];
        inverse_in_place(&self.layout, c.coeffs(), &mut x);
        let mut out = vec![Complex64::new(0.0, 0.0); self.num_measurements()];
        self.a_raw(&x, &mut out);
        Ok(out)
    }

    pub fn apply_bh(&self, y: &[Complex64]) -> Result<WaveletPyramid> {
        self.check_measurements(y)?;
        let mut out = vec![Complex64::new(0.0, 0.0); self.num_pixels()];
        self.bh_raw(y, &mut out);
        WaveletPyramid::new(self.layout.clone(), out)
    }

    /// Zeroes pixels in the zero-coil region.
    pub fn restrict_to_support(&self, img: &mut ComplexImage) {
        img.mask_support(self.coils.support());
    }
}
