//! EC/VAMP and the wavelet-domain D-GEC engine.

mod cg;
mod config;
mod ec;
mod f1;
mod gec;
mod init;
mod record;
mod trace;

pub use cg::{cg_solve, pcg_solve, CgOutcome};
pub use config::{Grouping, InitMode, ProbeSeedPolicy, SolverConfig, TraceMode};
pub use ec::{ec_iterate, ec_run, EcConfig, EcState, EstimationFn};
pub use f1::{f1_cg, F1Cg};
pub use gec::{damp, dgec_iterate, f1_divergence, run_dgec, run_dgec_observed, GecState, Problem, RunOutput};
pub use init::{calibrate, init_state, partition_for, Calibration};
pub use record::{IterationDiagnostics, IterationRecord};
pub use trace::{gdiag_from_traces, mc_subband_trace, probe_step, subband_probe};
