//! DFT, Haar DWT and the shared subband layout.

pub mod dft;
pub mod haar;
pub mod image;
pub mod layout;

pub use dft::{dft2, fftshift, idft2, ifftshift, signed_frequency};
pub use haar::{dwt2_haar, dwt2_haar_with, idwt2_haar, WaveletPyramid};
pub use image::{dot, norm_sqr, ComplexImage};
pub use layout::{Orientation, Partition, Subband, SubbandLayout};
