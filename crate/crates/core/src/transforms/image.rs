use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Row-major complex image.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexImage {
    height: usize,
    width: usize,
    data: Vec<Complex64>,
}

impl ComplexImage {
    pub fn new(height: usize, width: usize, data: Vec<Complex64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidInput(format!("image dimensions must be positive, got {height}x{width}")));
        }
        if data.len() != height * width {
            return Err(Error::ShapeMismatch(format!(
                "{height}x{width} image needs {} samples, got {}",
                height * width,
                data.len()
            )));
        }
        Ok(ComplexImage { height, width, data })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        ComplexImage { height, width, data: vec![Complex64::new(0.0, 0.0); height * width] }
    }

    pub fn from_fn<F: FnMut(usize, usize) -> Complex64>(height: usize, width: usize, mut f: F) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for i in 0..height {
            for j in 0..width {
                data.push(f(i, j));
            }
        }
        ComplexImage { height, width, data }
    }

    pub fn from_real(height: usize, width: usize, values: &[f64]) -> Result<Self> {
        Self::new(height, width, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn ensure_finite(&self, what: &'static str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(what))
        }
    }

    pub fn ensure_same_shape(&self, other: &ComplexImage) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} vs {}x{}",
                self.height, self.width, other.height, other.width
            )));
        }
        Ok(())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `<self, other> = sum conj(self) * other`.
    pub fn inner(&self, other: &ComplexImage) -> Complex64 {
        dot(&self.data, &other.data)
    }

    pub fn scale(&mut self, s: f64) {
        for z in &mut self.data {
            *z *= s;
        }
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.norm()).collect()
    }

    /// Sets pixels outside `support` to zero.
    pub fn mask_support(&mut self, support: &[bool]) {
        for (z, &keep) in self.data.iter_mut().zip(support) {
            if !keep {
                *z = Complex64::new(0.0, 0.0);
            }
        }
    }
}

impl Index<(usize, usize)> for ComplexImage {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.width + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexImage {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.width + j]
    }
}

/// Conjugate-linear in the first argument.
pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}
