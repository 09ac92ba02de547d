use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::transforms::{Orientation, SubbandLayout};

/// The unitary 2-D DFT of an `h x w` image (row-major) as an explicit
/// `hw x hw` matrix, straight from the definition.
pub fn dense_dft_matrix(h: usize, w: usize) -> DMatrix<Complex64> {
    let s = 1.0 / ((h * w) as f64).sqrt();
    DMatrix::from_fn(h * w, h * w, |k, n| {
        let (ky, kx) = (k / w, k % w);
        let (i, j) = (n / w, n % w);
        let phase = -2.0 * PI * ((ky * i) as f64 / h as f64 + (kx * j) as f64 / w as f64);
        Complex64::from_polar(s, phase)
    })
}

/// Haar analysis matrix: one row per coefficient in layout order, each the
/// closed-form atom (a `2^level`-square box with the orientation's sign
/// pattern, amplitude `2^-level`).
pub fn dense_haar_matrix(layout: &SubbandLayout) -> DMatrix<f64> {
    let w = layout.width();
    let mut psi = DMatrix::zeros(layout.len(), layout.len());
    let mut row = 0;
    for sb in layout.subbands() {
        let b = 1usize << sb.level;
        let half = b / 2;
        for i in 0..sb.rows {
            for j in 0..sb.cols {
                for y in 0..b {
                    for x in 0..b {
                        let sign = match sb.orientation {
                            Orientation::LowLow => 1.0,
                            Orientation::LowHigh => {
                                if x < half {
                                    1.0
                                } else {
                                    -1.0
                                }
                            }
                            Orientation::HighLow => {
                                if y < half {
                                    1.0
                                } else {
                                    -1.0
                                }
                            }
                            Orientation::HighHigh => {
                                if (x < half) == (y < half) {
                                    1.0
                                } else {
                                    -1.0
                                }
                            }
                        };
                        psi[(row, (i * b + y) * w + j * b + x)] = sign / b as f64;
                    }
                }
                row += 1;
            }
        }
    }
    psi
}
