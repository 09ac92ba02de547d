//! Synthetic coil-sensitivity maps.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::SeedTree;
use crate::transforms::ComplexImage;

/// Region where the coils see the object. Outside it every map is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoilSupport {
    Full,
    /// Centered ellipse with semi-axes given as fractions of half the
    /// height and width.
    Ellipse {
        ry: f64,
        rx: f64,
    },
}

impl CoilSupport {
    pub fn grid(self, height: usize, width: usize) -> Vec<bool> {
        match self {
            CoilSupport::Full => vec![true; height * width],
            CoilSupport::Ellipse { ry, rx } => {
                let (cy, cx) = ((height as f64 - 1.0) / 2.0, (width as f64 - 1.0) / 2.0);
                let (ay, ax) = (ry * height as f64 / 2.0, rx * width as f64 / 2.0);
                (0..height * width)
                    .map(|k| {
                        let dy = (k / width) as f64 - cy;
                        let dx = (k % width) as f64 - cx;
                        (dy / ay).powi(2) + (dx / ax).powi(2) <= 1.0
                    })
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoilMaps {
    maps: Vec<ComplexImage>,
    support: Vec<bool>,
}

impl CoilMaps {
    /// Validates the normalization `sum_c |s_c|^2 = 1` on the support and
    /// zero off it (to 1e-9).
    pub fn new(maps: Vec<ComplexImage>, support: Vec<bool>) -> Result<Self> {
        let first = maps.first().ok_or_else(|| Error::InvalidInput("at least one coil map is required".into()))?;
        let (h, w) = first.shape();
        if support.len() != h * w {
            return Err(Error::ShapeMismatch("coil support does not match map shape".into()));
        }
        for m in &maps {
            first.ensure_same_shape(m)?;
            m.ensure_finite("coil map")?;
        }
        for (n, &on) in support.iter().enumerate() {
            let s: f64 = maps.iter().map(|m| m.data()[n].norm_sqr()).sum();
            let want = if on { 1.0 } else { 0.0 };
            if (s - want).abs() > 1e-9 {
                return Err(Error::InvalidInput(format!("coil maps not normalized at pixel {n}: sum |s|^2 = {s}")));
            }
        }
        Ok(CoilMaps { maps, support })
    }

    /// Single coil, `s = 1` everywhere.
    pub fn single(height: usize, width: usize) -> Self {
        CoilMaps {
            maps: vec![ComplexImage::from_fn(height, width, |_, _| Complex64::new(1.0, 0.0))],
            support: vec![true; height * width],
        }
    }

    pub fn num_coils(&self) -> usize {
        self.maps.len()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.maps[0].shape()
    }

    pub fn maps(&self) -> &[ComplexImage] {
        &self.maps
    }

    pub fn map(&self, c: usize) -> &ComplexImage {
        &self.maps[c]
    }

    pub fn support(&self) -> &[bool] {
        &self.support
    }
}

/// Smooth Gaussian-bump coils arranged on a ring around the image center.
///
/// `smoothness` is the bump width as a fraction of the image size; larger is
/// smoother. With `num_coils == 1` the map is exactly the support indicator.
pub fn generate_coil_maps(
    shape: (usize, usize),
    num_coils: usize,
    smoothness: f64,
    support: CoilSupport,
    seed: u64,
) -> Result<CoilMaps> {
    let (h, w) = shape;
    if num_coils == 0 {
        return Err(Error::InvalidInput("coil count must be at least 1".into()));
    }
    if h == 0 || w == 0 {
        return Err(Error::InvalidInput("coil map shape must be positive".into()));
    }
    if !(smoothness.is_finite() && smoothness > 0.0) {
        return Err(Error::InvalidInput(format!("coil smoothness must be positive, got {smoothness}")));
    }
    let mask = support.grid(h, w);
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    if num_coils == 1 {
        let map = ComplexImage::new(h, w, mask.iter().map(|&b| if b { one } else { zero }).collect())?;
        return Ok(CoilMaps { maps: vec![map], support: mask });
    }

    let mut rng = SeedTree::new(seed).child("coils").rng();
    let width_px = smoothness * h.max(w) as f64;
    let mut raw = Vec::with_capacity(num_coils);
    for c in 0..num_coils {
        let angle = 2.0 * PI * c as f64 / num_coils as f64 + rng.random_range(-0.2..0.2);
        let cy = h as f64 / 2.0 + 0.6 * h as f64 * angle.sin();
        let cx = w as f64 / 2.0 + 0.6 * w as f64 * angle.cos();
        let phase0 = rng.random_range(-PI..PI);
        let (ky, kx) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        raw.push(ComplexImage::from_fn(h, w, |i, j| {
            let (dy, dx) = (i as f64 - cy, j as f64 - cx);
            let mag = (-(dy * dy + dx * dx) / (2.0 * width_px * width_px)).exp();
            let phase = phase0 + PI * (ky * i as f64 / h as f64 + kx * j as f64 / w as f64);
            Complex64::from_polar(mag.max(1e-6), phase)
        }));
    }
    for n in 0..h * w {
        let norm: f64 = raw.iter().map(|m| m.data()[n].norm_sqr()).sum::<f64>().sqrt();
        for m in &mut raw {
            let z = &mut m.data_mut()[n];
            *z = if mask[n] { *z / norm } else { zero };
        }
    }
    Ok(CoilMaps { maps: raw, support: mask })
}
