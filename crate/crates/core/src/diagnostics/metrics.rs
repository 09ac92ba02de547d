use crate::error::{Error, Result};
use crate::forward::percentile_98;
use crate::transforms::ComplexImage;

/// Squared-error ratio below which the error is treated as pure roundoff
/// and [`psnr`] reports `+inf` (i.e. PSNR above 260 dB).
pub const PSNR_ROUNDOFF_RATIO: f64 = 1e-26;

/// `10 log10(N max|x0|^2 / |x_hat - x0|^2)`; `+inf` when the error is zero
/// or at double-precision roundoff level.
pub fn psnr(x_hat: &ComplexImage, x0: &ComplexImage) -> Result<f64> {
    x_hat.ensure_same_shape(x0)?;
    x_hat.ensure_finite("estimate")?;
    let peak = x0.data().iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(Error::InvalidInput("PSNR reference image is zero".into()));
    }
    let err: f64 = x_hat.data().iter().zip(x0.data()).map(|(a, b)| (a - b).norm_sqr()).sum();
    let signal = x0.len() as f64 * peak;
    if err <= PSNR_ROUNDOFF_RATIO * signal {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (signal / err).log10())
}

const SSIM_SIGMA: f64 = 1.5;
const SSIM_RADIUS: usize = 5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

fn gaussian_kernel() -> Vec<f64> {
    let r = SSIM_RADIUS as isize;
    let w: Vec<f64> = (-r..=r).map(|x| (-0.5 * (x * x) as f64 / (SSIM_SIGMA * SSIM_SIGMA)).exp()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Half-sample symmetric index (`d c b a | a b c d | d c b a`).
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let mut k = i.rem_euclid(period);
    if k >= n {
        k = period - 1 - k;
    }
    k as usize
}

fn filter_axis(src: &[f64], h: usize, w: usize, kernel: &[f64], along_rows: bool) -> Vec<f64> {
    let r = (kernel.len() / 2) as isize;
    let mut out = vec![0.0; src.len()];
    for i in 0..h {
        for j in 0..w {
            let mut acc = 0.0;
            for (k, wt) in kernel.iter().enumerate() {
                let off = k as isize - r;
                acc += wt
                    * if along_rows {
                        src[reflect(i as isize + off, h) * w + j]
                    } else {
                        src[i * w + reflect(j as isize + off, w)]
                    };
            }
            out[i * w + j] = acc;
        }
    }
    out
}

fn gaussian_filter(src: &[f64], h: usize, w: usize, kernel: &[f64]) -> Vec<f64> {
    let tmp = filter_axis(src, h, w, kernel, true);
    filter_axis(&tmp, h, w, kernel, false)
}

/// Mean SSIM of two real images with an 11x11 Gaussian window
/// (sigma 1.5, reflective borders, population covariances), averaged over
/// the pixels whose window lies inside the image.
pub fn ssim_real(a: &[f64], b: &[f64], h: usize, w: usize, data_range: f64) -> Result<f64> {
    if a.len() != h * w || b.len() != h * w {
        return Err(Error::ShapeMismatch("SSIM inputs must be h*w".into()));
    }
    let win = 2 * SSIM_RADIUS + 1;
    if h < win || w < win {
        return Err(Error::InvalidInput(format!("SSIM needs images of at least {win}x{win}")));
    }
    if !(data_range > 0.0) {
        return Err(Error::InvalidInput("SSIM data range must be positive".into()));
    }
    let k = gaussian_kernel();
    let prod = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).collect::<Vec<_>>();
    let ux = gaussian_filter(a, h, w, &k);
    let uy = gaussian_filter(b, h, w, &k);
    let uxx = gaussian_filter(&prod(a, a), h, w, &k);
    let uyy = gaussian_filter(&prod(b, b), h, w, &k);
    let uxy = gaussian_filter(&prod(a, b), h, w, &k);
    let c1 = (SSIM_K1 * data_range).powi(2);
    let c2 = (SSIM_K2 * data_range).powi(2);
    let pad = SSIM_RADIUS;
    let mut acc = 0.0;
    for i in pad..h - pad {
        for j in pad..w - pad {
            let n = i * w + j;
            let (mx, my) = (ux[n], uy[n]);
            let vx = uxx[n] - mx * mx;
            let vy = uyy[n] - my * my;
            let vxy = uxy[n] - mx * my;
            acc += ((2.0 * mx * my + c1) * (2.0 * vxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
        }
    }
    Ok(acc / ((h - 2 * pad) * (w - 2 * pad)) as f64)
}

/// SSIM of magnitude images, both divided by the 98th-percentile magnitude
/// of `x0`, with unit data range.
pub fn ssim(x_hat: &ComplexImage, x0: &ComplexImage) -> Result<f64> {
    x_hat.ensure_same_shape(x0)?;
    let m0 = x0.magnitudes();
    let scale = percentile_98(&m0);
    if !(scale > 0.0) {
        return Err(Error::InvalidInput("SSIM reference image is zero".into()));
    }
    let a: Vec<f64> = x_hat.magnitudes().iter().map(|v| v / scale).collect();
    let b: Vec<f64> = m0.iter().map(|v| v / scale).collect();
    ssim_real(&a, &b, x0.height(), x0.width(), 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn psnr_hand_value() {
        let x0 = ComplexImage::from_real(2, 2, &[1.0; 4]).unwrap();
        let x = ComplexImage::from_real(2, 2, &[1.0, 1.0, 1.0, 2.0]).unwrap();
        assert!((psnr(&x, &x0).unwrap() - 10.0 * 4f64.log10()).abs() < 1e-12);
        assert_eq!(psnr(&x0, &x0).unwrap(), f64::INFINITY);
        let mut xs = x.clone();
        let mut x0s = x0.clone();
        xs.scale(7.0);
        x0s.scale(7.0);
        assert!((psnr(&xs, &x0s).unwrap() - psnr(&x, &x0).unwrap()).abs() < 1e-12);
        assert!(psnr(&x, &ComplexImage::zeros(2, 2)).is_err());
    }

    #[test]
    fn reflect_matches_half_sample_symmetry() {
        let idx: Vec<usize> = (-4..8).map(|i| reflect(i, 4)).collect();
        assert_eq!(idx, vec![3, 2, 1, 0, 0, 1, 2, 3, 3, 2, 1, 0]);
    }

    #[test]
    fn ssim_identity_and_negation() {
        let img = ComplexImage::from_fn(16, 16, |i, j| Complex64::new(((i * 3 + j * 5) % 7) as f64 / 7.0, 0.0));
        assert!((ssim(&img, &img).unwrap() - 1.0).abs() < 1e-12);
        // Photographic negative.
        let a: Vec<f64> = img.data().iter().map(|z| z.re).collect();
        let b: Vec<f64> = a.iter().map(|v| 1.0 - v).collect();
        assert!(ssim_real(&b, &a, 16, 16, 1.0).unwrap() < 0.0);
    }
}
