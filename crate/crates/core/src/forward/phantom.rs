//! Test images standing in for clinical data.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{complex_normal, SeedTree};
use crate::transforms::{idwt2_haar, ComplexImage, SubbandLayout, WaveletPyramid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhantomKind {
    SheppLogan,
    PiecewiseSmooth,
    /// Random image with the given fraction of nonzero Haar coefficients.
    RandomWaveletSparse {
        sparsity: f64,
    },
}

impl PhantomKind {
    pub fn name(self) -> &'static str {
        match self {
            PhantomKind::SheppLogan => "shepp_logan",
            PhantomKind::PiecewiseSmooth => "piecewise_smooth",
            PhantomKind::RandomWaveletSparse { .. } => "random_wavelet_sparse",
        }
    }

    /// Parses the kind name; `sparsity` only matters for the wavelet kind.
    pub fn parse(name: &str, sparsity: f64) -> Result<Self> {
        match name {
            "shepp_logan" => Ok(PhantomKind::SheppLogan),
            "piecewise_smooth" => Ok(PhantomKind::PiecewiseSmooth),
            "random_wavelet_sparse" => Ok(PhantomKind::RandomWaveletSparse { sparsity }),
            other => Err(Error::Config(format!(
                "unsupported phantom kind '{other}' \
                 (expected shepp_logan, piecewise_smooth or random_wavelet_sparse)"
            ))),
        }
    }
}

/// (value, a, b, x0, y0, theta in degrees), unit-disk coordinates.
const SHEPP_LOGAN: [(f64, f64, f64, f64, f64, f64); 10] = [
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    (-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    (-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    (0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    (0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    (0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    (0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    (0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    (0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
];

struct Ellipse {
    value: f64,
    a: f64,
    b: f64,
    x0: f64,
    y0: f64,
    cos: f64,
    sin: f64,
}

impl Ellipse {
    fn contains(&self, x: f64, y: f64) -> bool {
        let (dx, dy) = (x - self.x0, y - self.y0);
        let u = dx * self.cos + dy * self.sin;
        let v = -dx * self.sin + dy * self.cos;
        (u / self.a).powi(2) + (v / self.b).powi(2) <= 1.0
    }
}

fn unit_coords(i: usize, j: usize, h: usize, w: usize) -> (f64, f64) {
    let x = (2.0 * j as f64 + 1.0) / w as f64 - 1.0;
    let y = 1.0 - (2.0 * i as f64 + 1.0) / h as f64;
    (x, y)
}

fn paint(h: usize, w: usize, ellipses: &[Ellipse]) -> Vec<f64> {
    let mut out = vec![0.0; h * w];
    for i in 0..h {
        for j in 0..w {
            let (x, y) = unit_coords(i, j, h, w);
            out[i * w + j] = ellipses.iter().filter(|e| e.contains(x, y)).map(|e| e.value).sum();
        }
    }
    out
}

fn shepp_logan(h: usize, w: usize) -> Vec<f64> {
    let ellipses: Vec<Ellipse> = SHEPP_LOGAN
        .iter()
        .map(|&(value, a, b, x0, y0, theta)| {
            let t = theta.to_radians();
            Ellipse { value, a, b, x0, y0, cos: t.cos(), sin: t.sin() }
        })
        .collect();
    // the intensity table can go slightly negative at rasterized edges
    paint(h, w, &ellipses).into_iter().map(|v| v.max(0.0)).collect()
}

fn piecewise_smooth<R: Rng>(h: usize, w: usize, rng: &mut R) -> Vec<Complex64> {
    let mut ellipses = vec![Ellipse {
        value: 0.6,
        a: rng.random_range(0.75..0.9),
        b: rng.random_range(0.8..0.95),
        x0: 0.0,
        y0: 0.0,
        cos: 1.0,
        sin: 0.0,
    }];
    for _ in 0..rng.random_range(6..10) {
        let t: f64 = rng.random_range(0.0..std::f64::consts::PI);
        ellipses.push(Ellipse {
            value: rng.random_range(-0.3..0.4),
            a: rng.random_range(0.05..0.35),
            b: rng.random_range(0.05..0.35),
            x0: rng.random_range(-0.45..0.45),
            y0: rng.random_range(-0.45..0.45),
            cos: t.cos(),
            sin: t.sin(),
        });
    }
    let base = paint(h, w, &ellipses);
    let (gx, gy) = (rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3));
    let (px, py) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let mut out = Vec::with_capacity(h * w);
    for i in 0..h {
        for j in 0..w {
            let v = base[i * w + j];
            if v == 0.0 {
                out.push(Complex64::new(0.0, 0.0));
                continue;
            }
            let (x, y) = unit_coords(i, j, h, w);
            // smooth intensity ramp and a slowly varying phase
            let mag = (v * (1.0 + gx * x + gy * y)).abs();
            out.push(Complex64::from_polar(mag, 0.5 * (px * x + py * y)));
        }
    }
    out
}

fn random_wavelet_sparse<R: Rng>(h: usize, w: usize, sparsity: f64, rng: &mut R) -> Result<Vec<Complex64>> {
    if !(0.0..=1.0).contains(&sparsity) {
        return Err(Error::InvalidInput(format!("sparsity must be in [0, 1], got {sparsity}")));
    }
    let depth = (0..=4).rev().find(|&d| h % (1 << d) == 0 && w % (1 << d) == 0).unwrap_or(0).max(1);
    let layout = SubbandLayout::new(h, w, depth)?;
    let mut pyr = WaveletPyramid::zeros(layout);
    for c in pyr.coeffs_mut() {
        if rng.random::<f64>() < sparsity {
            *c = complex_normal(rng, 1.0);
        }
    }
    Ok(idwt2_haar(&pyr)?.into_data())
}

/// Magnitude at the 98th percentile, by linear interpolation between order
/// statistics (numpy's default rule).
pub fn percentile_98(values: &[f64]) -> f64 {
    percentile(values, 98.0)
}

pub fn percentile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return 0.0;
    }
    let pos = p / 100.0 * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

/// Deterministic phantom, scaled so the 98th-percentile magnitude is 1
/// (all-zero images are returned as is).
pub fn generate_phantom(shape: (usize, usize), kind: PhantomKind, seed: u64) -> Result<ComplexImage> {
    let (h, w) = shape;
    if h == 0 || w == 0 {
        return Err(Error::InvalidInput("phantom shape must be positive".into()));
    }
    let mut rng = SeedTree::new(seed).child("phantom").rng();
    let data = match kind {
        PhantomKind::SheppLogan => shepp_logan(h, w).into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
        PhantomKind::PiecewiseSmooth => piecewise_smooth(h, w, &mut rng),
        PhantomKind::RandomWaveletSparse { sparsity } => random_wavelet_sparse(h, w, sparsity, &mut rng)?,
    };
    let mut img = ComplexImage::new(h, w, data)?;
    let p98 = percentile_98(&img.magnitudes());
    if p98 > 0.0 {
        img.scale(1.0 / p98);
    }
    Ok(img)
}
