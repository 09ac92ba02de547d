//! Dense numerical checks of the EC error recursion and the orthogonal-matrix
//! moment identities behind its Gaussian-error behaviour.
//!
//! Everything here is dense and self-contained; nothing calls the fast
//! operators of the imaging pipeline, so the checks stay independent of it.

mod dense;
mod ec_model;
mod epsilon2;
mod haar;
mod suite;
mod weingarten;

pub use dense::{dense_dft_matrix, dense_haar_matrix};
pub use ec_model::{build_ec_error_model, ec_recursion_equivalence, EcErrorModel, EcSpectrum};
pub use epsilon2::{
    epsilon2_covariance_check, log_spaced_spectrum, offdiagonal_scaling, Epsilon2Report, OffDiagonalScaling,
};
pub use haar::{random_orthogonal, HouseholderOrthogonal};
pub use suite::{run_suite, Check, Suite};
pub use weingarten::{weingarten_moment_check, WeingartenReport};

/// Trials per deterministic work unit. Each chunk draws from its own seed
/// and chunk sums are reduced in index order, so results do not depend on
/// the thread count.
pub(crate) const CHUNK: usize = 1024;

pub(crate) fn chunks(trials: usize) -> impl Iterator<Item = (u64, usize)> {
    (0..trials.div_ceil(CHUNK)).map(move |c| (c as u64, CHUNK.min(trials - c * CHUNK)))
}
