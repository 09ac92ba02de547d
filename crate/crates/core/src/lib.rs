pub mod baselines;
pub mod denoisers;
pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod forward;
pub mod io;
pub mod oracle;
pub mod rng;
pub mod solver;
pub mod transforms;

pub use error::{Error, Result};
