//! Reference algorithms: AMP with Onsager correction and its state
//! evolution, plug-and-play proximal gradient, and Peaceman-Rachford ADMM.

mod admm;
mod amp;
mod bg;
mod mri;
mod pgd;
mod se;

pub use admm::{pr_admm_iterate, AdmmState, ProxFn};
pub use amp::{amp_init, amp_iterate, AmpConfig, AmpState, ScalarDenoiser};
pub use bg::BernoulliGaussian;
pub use mri::{run_amp_mri, run_pnp_pgd_mri, run_pr_admm_mri, BaselineRun, MriBaselineConfig};
pub use pgd::{least_squares_gradient, pnp_pgd_iterate, PgdState};
pub use se::{amp_state_evolution, SeTrace};
