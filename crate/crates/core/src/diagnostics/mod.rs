//! Image-quality metrics and the statistical checks applied to subband errors.

mod metrics;
mod stats;

pub use metrics::{psnr, ssim, ssim_real, PSNR_ROUNDOFF_RATIO};
pub use stats::{
    qq_data, subband_error_report, t_test_zero_mean, whiteness_score, write_qq_csv, SubbandErrorReport, SubbandStats,
};
