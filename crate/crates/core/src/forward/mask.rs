//! Variable-density k-space sampling masks.
//!
//! Masks live in DFT storage order (frequency origin at index 0), matching
//! [`crate::transforms::dft2`]. Use [`SamplingMask::centered`] for display.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::SeedTree;
use crate::transforms::{fftshift, signed_frequency};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskKind {
    Point2d,
    Line2d,
}

impl MaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MaskKind::Point2d => "point2d",
            MaskKind::Line2d => "line2d",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            MaskKind::Point2d => 0,
            MaskKind::Line2d => 1,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(MaskKind::Point2d),
            1 => Ok(MaskKind::Line2d),
            c => Err(Error::Format(format!("unknown mask kind code {c}"))),
        }
    }
}

impl std::str::FromStr for MaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "point2d" | "point" => Ok(MaskKind::Point2d),
            "line2d" | "line" => Ok(MaskKind::Line2d),
            other => Err(Error::Config(format!("unknown mask kind '{other}' (expected point2d or line2d)"))),
        }
    }
}

/// Acceleration `R = num / den`, kept rational so sample counts are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Acceleration {
    pub num: u32,
    pub den: u32,
}

impl Acceleration {
    pub fn new(num: u32, den: u32) -> Result<Self> {
        if den == 0 || num < den {
            return Err(Error::InvalidInput(format!("acceleration must satisfy R = {num}/{den} >= 1")));
        }
        Ok(Acceleration { num, den })
    }

    pub fn integer(r: u32) -> Result<Self> {
        Acceleration::new(r, 1)
    }

    /// Parses `"4"`, `"2.5"` or `"5/2"`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((a, b)) = s.split_once('/') {
            let num = a.trim().parse().map_err(|_| Error::Config(format!("bad acceleration '{s}'")))?;
            let den = b.trim().parse().map_err(|_| Error::Config(format!("bad acceleration '{s}'")))?;
            return Acceleration::new(num, den);
        }
        if let Some((int, frac)) = s.split_once('.') {
            let den =
                10u32.checked_pow(frac.len() as u32).ok_or_else(|| Error::Config(format!("bad acceleration '{s}'")))?;
            let digits = format!("{int}{frac}");
            let num = digits.parse().map_err(|_| Error::Config(format!("bad acceleration '{s}'")))?;
            return Acceleration::new(num, den);
        }
        let r = s.parse().map_err(|_| Error::Config(format!("bad acceleration '{s}'")))?;
        Acceleration::integer(r)
    }

    pub fn value(self) -> f64 {
        f64::from(self.num) / f64::from(self.den)
    }

    /// `floor(n / R)`.
    pub fn budget(self, n: usize) -> usize {
        (n as u128 * u128::from(self.den) / u128::from(self.num)) as usize
    }
}

impl fmt::Display for Acceleration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingMask {
    height: usize,
    width: usize,
    kind: MaskKind,
    acceleration: Acceleration,
    /// Side of the central block (point) or width of the central band (line).
    calib: usize,
    sampled: Vec<bool>,
}

impl SamplingMask {
    pub fn from_parts(
        height: usize,
        width: usize,
        kind: MaskKind,
        acceleration: Acceleration,
        calib: usize,
        sampled: Vec<bool>,
    ) -> Result<Self> {
        if sampled.len() != height * width {
            return Err(Error::ShapeMismatch(format!(
                "mask grid has {} cells, expected {height}x{width}",
                sampled.len()
            )));
        }
        if !sampled.iter().any(|&b| b) {
            return Err(Error::InvalidInput("mask samples nothing".into()));
        }
        Ok(SamplingMask { height, width, kind, acceleration, calib, sampled })
    }

    /// Fully sampled mask.
    pub fn full(height: usize, width: usize) -> Self {
        SamplingMask {
            height,
            width,
            kind: MaskKind::Point2d,
            acceleration: Acceleration { num: 1, den: 1 },
            calib: 0,
            sampled: vec![true; height * width],
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn kind(&self) -> MaskKind {
        self.kind
    }

    pub fn acceleration(&self) -> Acceleration {
        self.acceleration
    }

    pub fn calib(&self) -> usize {
        self.calib
    }

    pub fn sampled(&self) -> &[bool] {
        &self.sampled
    }

    pub fn count(&self) -> usize {
        self.sampled.iter().filter(|&&b| b).count()
    }

    /// Storage indices of the sampled locations, ascending.
    pub fn indices(&self) -> Vec<usize> {
        self.sampled.iter().enumerate().filter_map(|(i, &b)| b.then_some(i)).collect()
    }

    /// Grid with the frequency origin moved to the center.
    pub fn centered(&self) -> Vec<bool> {
        fftshift(self.height, self.width, &self.sampled)
    }

    /// Whether storage position `(i, j)` is inside the calibration region.
    pub fn in_calib(&self, i: usize, j: usize) -> bool {
        let in_band = |k: usize, n: usize| band_contains(k, n, self.calib);
        match self.kind {
            MaskKind::Point2d => in_band(i, self.height) && in_band(j, self.width),
            MaskKind::Line2d => in_band(j, self.width),
        }
    }
}

/// Central band of `width` frequencies: signed index in `[-width/2, width - width/2)`.
fn band_contains(k: usize, n: usize, width: usize) -> bool {
    if width == 0 {
        return false;
    }
    let f = signed_frequency(k, n);
    let lo = -((width / 2) as isize);
    let hi = (width - width / 2) as isize;
    f >= lo && f < hi
}

/// Polynomial density `(1 - r)^q` with a small floor so every location stays
/// reachable.
fn density(r: f64, q: f64) -> f64 {
    const FLOOR: f64 = 1e-4;
    (1.0 - r).max(0.0).powf(q).max(FLOOR)
}

/// Picks `k` of the candidates without replacement, with inclusion weights
/// `w` (Efraimidis–Spirakis keys `ln(u) / w`).
fn weighted_choice<R: Rng>(rng: &mut R, candidates: &[(usize, f64)], k: usize) -> Vec<usize> {
    let mut keyed: Vec<(f64, usize)> = candidates
        .iter()
        .map(|&(idx, w)| {
            let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
            (u.ln() / w, idx)
        })
        .collect();
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    keyed.into_iter().take(k).map(|(_, i)| i).collect()
}

fn check_shape(height: usize, width: usize) -> Result<()> {
    if height == 0 || width == 0 {
        return Err(Error::InvalidInput("mask shape must be positive".into()));
    }
    Ok(())
}

/// Variable-density point mask with exactly `floor(N/R)` samples.
pub fn make_point_mask(
    shape: (usize, usize),
    acceleration: Acceleration,
    density_exponent: f64,
    calib_size: usize,
    seed: u64,
) -> Result<SamplingMask> {
    let (h, w) = shape;
    check_shape(h, w)?;
    if calib_size > h.min(w) {
        return Err(Error::InfeasibleMask(format!(
            "{calib_size}x{calib_size} calibration block does not fit in {h}x{w}"
        )));
    }
    let n = h * w;
    let budget = acceleration.budget(n);
    let calib_count = calib_size * calib_size;
    if budget == 0 || calib_count > budget {
        return Err(Error::InfeasibleMask(format!(
            "R = {acceleration} allows {budget} samples but the calibration block needs {calib_count}"
        )));
    }
    let mut mask = SamplingMask {
        height: h,
        width: w,
        kind: MaskKind::Point2d,
        acceleration,
        calib: calib_size,
        sampled: vec![false; n],
    };
    let (hy, hx) = ((h as f64 / 2.0).max(1.0), (w as f64 / 2.0).max(1.0));
    let mut candidates = Vec::with_capacity(n);
    for i in 0..h {
        for j in 0..w {
            if mask.in_calib(i, j) {
                mask.sampled[i * w + j] = true;
                continue;
            }
            let fy = signed_frequency(i, h) as f64 / hy;
            let fx = signed_frequency(j, w) as f64 / hx;
            let r = (fy * fy + fx * fx).sqrt() / std::f64::consts::SQRT_2;
            candidates.push((i * w + j, density(r, density_exponent)));
        }
    }
    let mut rng = SeedTree::new(seed).child("mask").rng();
    for idx in weighted_choice(&mut rng, &candidates, budget - calib_count) {
        mask.sampled[idx] = true;
    }
    Ok(mask)
}

/// Variable-density line mask: `floor(W/R)` full-height columns.
pub fn make_line_mask(
    shape: (usize, usize),
    acceleration: Acceleration,
    density_exponent: f64,
    calib_width: usize,
    seed: u64,
) -> Result<SamplingMask> {
    let (h, w) = shape;
    check_shape(h, w)?;
    let budget = acceleration.budget(w);
    if budget == 0 || calib_width > budget {
        return Err(Error::InfeasibleMask(format!(
            "R = {acceleration} allows {budget} lines but the calibration band needs {calib_width}"
        )));
    }
    let hx = (w as f64 / 2.0).max(1.0);
    let mut columns = vec![false; w];
    let mut candidates = Vec::with_capacity(w);
    for (j, col) in columns.iter_mut().enumerate() {
        if band_contains(j, w, calib_width) {
            *col = true;
        } else {
            let r = (signed_frequency(j, w) as f64 / hx).abs();
            candidates.push((j, density(r, density_exponent)));
        }
    }
    let mut rng = SeedTree::new(seed).child("mask").rng();
    for j in weighted_choice(&mut rng, &candidates, budget - calib_width) {
        columns[j] = true;
    }
    let sampled = (0..h * w).map(|k| columns[k % w]).collect();
    Ok(SamplingMask { height: h, width: w, kind: MaskKind::Line2d, acceleration, calib: calib_width, sampled })
}
