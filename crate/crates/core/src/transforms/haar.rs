//! Orthonormal 2D Haar DWT.
//!
//! Filters are `(1, 1)/sqrt(2)` and `(1, -1)/sqrt(2)`, so the analysis
//! operator `Psi` satisfies `Psi^T = Psi^{-1}` exactly.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use super::image::{norm_sqr, ComplexImage};
use super::layout::{Orientation, SubbandLayout};
use crate::error::{Error, Result};

/// Wavelet coefficients stored flat in [`SubbandLayout`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletPyramid {
    layout: SubbandLayout,
    coeffs: Vec<Complex64>,
}

impl WaveletPyramid {
    pub fn new(layout: SubbandLayout, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != layout.len() {
            return Err(Error::ShapeMismatch(format!(
                "layout holds {} coefficients, got {}",
                layout.len(),
                coeffs.len()
            )));
        }
        Ok(WaveletPyramid { layout, coeffs })
    }

    pub fn zeros(layout: SubbandLayout) -> Self {
        let n = layout.len();
        WaveletPyramid { layout, coeffs: vec![Complex64::new(0.0, 0.0); n] }
    }

    pub fn layout(&self) -> &SubbandLayout {
        &self.layout
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn subband(&self, ell: usize) -> &[Complex64] {
        &self.coeffs[self.layout.subband(ell).range()]
    }

    pub fn subband_mut(&mut self, ell: usize) -> &mut [Complex64] {
        let r = self.layout.subband(ell).range();
        &mut self.coeffs[r]
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.coeffs)
    }

    /// Same layout, new coefficients.
    pub fn with_coeffs(&self, coeffs: Vec<Complex64>) -> Result<Self> {
        WaveletPyramid::new(self.layout.clone(), coeffs)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

fn analysis_rows(data: &mut [Complex64], stride: usize, rows: usize, cols: usize, tmp: &mut [Complex64]) {
    let half = cols / 2;
    for i in 0..rows {
        let row = &mut data[i * stride..i * stride + cols];
        for k in 0..half {
            let (a, b) = (row[2 * k], row[2 * k + 1]);
            tmp[k] = (a + b) * FRAC_1_SQRT_2;
            tmp[half + k] = (a - b) * FRAC_1_SQRT_2;
        }
        row.copy_from_slice(&tmp[..cols]);
    }
}

fn analysis_cols(data: &mut [Complex64], stride: usize, rows: usize, cols: usize, tmp: &mut [Complex64]) {
    let half = rows / 2;
    for j in 0..cols {
        for k in 0..half {
            let (a, b) = (data[2 * k * stride + j], data[(2 * k + 1) * stride + j]);
            tmp[k] = (a + b) * FRAC_1_SQRT_2;
            tmp[half + k] = (a - b) * FRAC_1_SQRT_2;
        }
        for i in 0..rows {
            data[i * stride + j] = tmp[i];
        }
    }
}

fn synthesis_rows(data: &mut [Complex64], stride: usize, rows: usize, cols: usize, tmp: &mut [Complex64]) {
    let half = cols / 2;
    for i in 0..rows {
        let row = &mut data[i * stride..i * stride + cols];
        for k in 0..half {
            let (s, d) = (row[k], row[half + k]);
            tmp[2 * k] = (s + d) * FRAC_1_SQRT_2;
            tmp[2 * k + 1] = (s - d) * FRAC_1_SQRT_2;
        }
        row.copy_from_slice(&tmp[..cols]);
    }
}

fn synthesis_cols(data: &mut [Complex64], stride: usize, rows: usize, cols: usize, tmp: &mut [Complex64]) {
    let half = rows / 2;
    for j in 0..cols {
        for k in 0..half {
            let (s, d) = (data[k * stride + j], data[(half + k) * stride + j]);
            tmp[2 * k] = (s + d) * FRAC_1_SQRT_2;
            tmp[2 * k + 1] = (s - d) * FRAC_1_SQRT_2;
        }
        for i in 0..rows {
            data[i * stride + j] = tmp[i];
        }
    }
}

/// Top-left corner of a subband inside the in-place (Mallat) arrangement.
fn mallat_origin(layout: &SubbandLayout, ell: usize) -> (usize, usize) {
    let sb = layout.subband(ell);
    match sb.orientation {
        Orientation::LowLow => (0, 0),
        Orientation::LowHigh => (0, sb.cols),
        Orientation::HighLow => (sb.rows, 0),
        Orientation::HighHigh => (sb.rows, sb.cols),
    }
}

pub(crate) fn forward_in_place(layout: &SubbandLayout, pixels: &[Complex64], out: &mut [Complex64]) {
    let (h, w) = layout.shape();
    let mut work = pixels.to_vec();
    let mut tmp = vec![Complex64::new(0.0, 0.0); h.max(w)];
    for level in 0..layout.depth() {
        let (rows, cols) = (h >> level, w >> level);
        analysis_rows(&mut work, w, rows, cols, &mut tmp);
        analysis_cols(&mut work, w, rows, cols, &mut tmp);
    }
    for (ell, sb) in layout.subbands().iter().enumerate() {
        let (r0, c0) = mallat_origin(layout, ell);
        for i in 0..sb.rows {
            let src = (r0 + i) * w + c0;
            let dst = sb.offset + i * sb.cols;
            out[dst..dst + sb.cols].copy_from_slice(&work[src..src + sb.cols]);
        }
    }
}

pub(crate) fn inverse_in_place(layout: &SubbandLayout, coeffs: &[Complex64], out: &mut [Complex64]) {
    let (h, w) = layout.shape();
    for (ell, sb) in layout.subbands().iter().enumerate() {
        let (r0, c0) = mallat_origin(layout, ell);
        for i in 0..sb.rows {
            let dst = (r0 + i) * w + c0;
            let src = sb.offset + i * sb.cols;
            out[dst..dst + sb.cols].copy_from_slice(&coeffs[src..src + sb.cols]);
        }
    }
    let mut tmp = vec![Complex64::new(0.0, 0.0); h.max(w)];
    for level in (0..layout.depth()).rev() {
        let (rows, cols) = (h >> level, w >> level);
        synthesis_cols(out, w, rows, cols, &mut tmp);
        synthesis_rows(out, w, rows, cols, &mut tmp);
    }
}

/// Forward transform `c = Psi x`.
pub fn dwt2_haar(img: &ComplexImage, depth: usize) -> Result<WaveletPyramid> {
    let layout = SubbandLayout::new(img.height(), img.width(), depth)?;
    dwt2_haar_with(img, &layout)
}

/// Forward transform against an existing layout.
pub fn dwt2_haar_with(img: &ComplexImage, layout: &SubbandLayout) -> Result<WaveletPyramid> {
    if img.shape() != layout.shape() {
        return Err(Error::ShapeMismatch(format!("image is {:?}, layout expects {:?}", img.shape(), layout.shape())));
    }
    img.ensure_finite("dwt2 input")?;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); layout.len()];
    forward_in_place(layout, img.data(), &mut coeffs);
    WaveletPyramid::new(layout.clone(), coeffs)
}

/// Inverse transform `x = Psi^T c`.
pub fn idwt2_haar(pyr: &WaveletPyramid) -> Result<ComplexImage> {
    if !pyr.is_finite() {
        return Err(Error::NonFinite("idwt2 input"));
    }
    let layout = pyr.layout();
    let mut pixels = vec![Complex64::new(0.0, 0.0); layout.len()];
    inverse_in_place(layout, pyr.coeffs(), &mut pixels);
    ComplexImage::new(layout.height(), layout.width(), pixels)
}
