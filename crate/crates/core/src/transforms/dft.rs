//! Unitary 2D DFT.
//!
//! Storage keeps the frequency origin at index `(0, 0)`; [`fftshift`] and
//! [`ifftshift`] convert to and from the centered layout used for display
//! and for reasoning about k-space distances.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use super::image::ComplexImage;
use crate::error::Result;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft(len, direction))
}

fn fft2_in_place(height: usize, width: usize, data: &mut [Complex64], direction: FftDirection) {
    let row_fft = plan(width, direction);
    let col_fft = plan(height, direction);
    let scratch_len = row_fft.get_inplace_scratch_len().max(col_fft.get_inplace_scratch_len());
    let mut scratch = vec![Complex64::new(0.0, 0.0); scratch_len];

    // rows are contiguous; rustfft processes all of them in one call
    row_fft.process_with_scratch(data, &mut scratch);

    let mut column = vec![Complex64::new(0.0, 0.0); height];
    for j in 0..width {
        for i in 0..height {
            column[i] = data[i * width + j];
        }
        col_fft.process_with_scratch(&mut column, &mut scratch);
        for i in 0..height {
            data[i * width + j] = column[i];
        }
    }

    let s = 1.0 / ((height * width) as f64).sqrt();
    for z in data.iter_mut() {
        *z *= s;
    }
}

/// Unitary forward DFT, `F x` with `F^H F = I`.
pub fn dft2(img: &ComplexImage) -> Result<ComplexImage> {
    img.ensure_finite("dft2 input")?;
    let mut out = img.clone();
    fft2_in_place(img.height(), img.width(), out.data_mut(), FftDirection::Forward);
    Ok(out)
}

/// Unitary inverse DFT, the adjoint of [`dft2`].
pub fn idft2(img: &ComplexImage) -> Result<ComplexImage> {
    img.ensure_finite("idft2 input")?;
    let mut out = img.clone();
    fft2_in_place(img.height(), img.width(), out.data_mut(), FftDirection::Inverse);
    Ok(out)
}

/// In-place variants without the finiteness check, for inner loops.
pub(crate) fn dft2_raw(height: usize, width: usize, data: &mut [Complex64]) {
    fft2_in_place(height, width, data, FftDirection::Forward);
}

pub(crate) fn idft2_raw(height: usize, width: usize, data: &mut [Complex64]) {
    fft2_in_place(height, width, data, FftDirection::Inverse);
}

fn roll<T: Copy>(height: usize, width: usize, data: &[T], dy: usize, dx: usize) -> Vec<T> {
    let mut out = data.to_vec();
    for i in 0..height {
        for j in 0..width {
            out[((i + dy) % height) * width + (j + dx) % width] = data[i * width + j];
        }
    }
    out
}

/// Moves the origin from `(0, 0)` to `(h/2, w/2)`.
pub fn fftshift<T: Copy>(height: usize, width: usize, data: &[T]) -> Vec<T> {
    roll(height, width, data, height / 2, width / 2)
}

/// Inverse of [`fftshift`] (also correct for odd sizes).
pub fn ifftshift<T: Copy>(height: usize, width: usize, data: &[T]) -> Vec<T> {
    roll(height, width, data, height - height / 2, width - width / 2)
}

/// Signed frequency index of storage position `k` along an axis of length `n`.
#[inline]
pub fn signed_frequency(k: usize, n: usize) -> isize {
    if k < n.div_ceil(2) {
        k as isize
    } else {
        k as isize - n as isize
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_normal_vec, rng_from_seed};
    use std::f64::consts::PI;

    fn random_image(h: usize, w: usize, seed: u64) -> ComplexImage {
        let mut rng = rng_from_seed(seed);
        ComplexImage::new(h, w, complex_normal_vec(&mut rng, h * w, 1.0)).unwrap()
    }

    /// O(N^2) oracle straight from the DFT definition.
    fn dense_dft(img: &ComplexImage) -> ComplexImage {
        let (h, w) = img.shape();
        let s = 1.0 / ((h * w) as f64).sqrt();
        ComplexImage::from_fn(h, w, |ky, kx| {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..h {
                for j in 0..w {
                    let phase = -2.0 * PI * ((ky * i) as f64 / h as f64 + (kx * j) as f64 / w as f64);
                    acc += img[(i, j)] * Complex64::from_polar(1.0, phase);
                }
            }
            acc * s
        })
    }

    #[test]
    fn delta_maps_to_constant_quarter() {
        let mut img = ComplexImage::zeros(4, 4);
        img[(0, 0)] = Complex64::new(1.0, 0.0);
        let out = dft2(&img).unwrap();
        for z in out.data() {
            assert!((z - Complex64::new(0.25, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn constant_maps_to_scaled_delta() {
        let c = Complex64::new(0.7, -0.2);
        let img = ComplexImage::from_fn(4, 4, |_, _| c);
        let out = idft2(&img).unwrap();
        assert!((out[(0, 0)] - 4.0 * c).norm() < 1e-14);
        for (k, z) in out.data().iter().enumerate().skip(1) {
            assert!(z.norm() < 1e-14, "bin {k}: {z}");
        }
    }

    #[test]
    fn parseval_and_round_trip() {
        let x = random_image(16, 16, 1);
        let fx = dft2(&x).unwrap();
        assert!((fx.norm() / x.norm() - 1.0).abs() < 1e-12);
        let back = idft2(&fx).unwrap();
        let err = back.data().iter().zip(x.data()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        assert!(err / x.norm() < 1e-12);
    }

    #[test]
    fn matches_dense_dft_matrix() {
        let x = random_image(8, 8, 2);
        let fast = dft2(&x).unwrap();
        let slow = dense_dft(&x);
        let max = fast.data().iter().zip(slow.data()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(max <= 1e-10, "{max}");
        let x = random_image(4, 8, 3);
        let max =
            dft2(&x).unwrap().data().iter().zip(dense_dft(&x).data()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(max <= 1e-10, "non-square {max}");
    }

    #[test]
    fn inverse_is_adjoint() {
        let x = random_image(8, 16, 4);
        let y = random_image(8, 16, 5);
        let lhs = dft2(&x).unwrap().inner(&y);
        let rhs = x.inner(&idft2(&y).unwrap());
        assert!((lhs - rhs).norm() <= 1e-10);
    }

    #[test]
    fn rejects_non_finite() {
        let mut x = ComplexImage::zeros(4, 4);
        x[(1, 2)] = Complex64::new(f64::NAN, 0.0);
        assert!(dft2(&x).is_err());
        assert!(idft2(&x).is_err());
    }

    #[test]
    fn shift_round_trip() {
        let v: Vec<usize> = (0..12).collect();
        let s = fftshift(3, 4, &v);
        assert_eq!(ifftshift(3, 4, &s), v);
        // origin lands at the center
        assert_eq!(s[1 * 4 + 2], 0);
        assert_eq!(signed_frequency(5, 8), -3);
        assert_eq!(signed_frequency(3, 8), 3);
        assert_eq!(signed_frequency(4, 8), -4);
    }
}
