use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    /// `r1 = B^H y + n`, `n` white per subband with `init_inflation` times
    /// the calibrated error variance.
    BhyPlusNoise,
    /// `r1 = B^H y`.
    BhyPlain,
}

impl std::str::FromStr for InitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bhy_plus_noise" => Ok(InitMode::BhyPlusNoise),
            "bhy_plain" => Ok(InitMode::BhyPlain),
            other => Err(Error::Config(format!("unknown init mode '{other}' (expected bhy_plus_noise or bhy_plain)"))),
        }
    }
}

/// How the `f1` Jacobian traces are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceMode {
    /// One Gaussian probe per group and iteration.
    MonteCarlo,
    /// Probe every basis vector; `N` extra solves, for small problems only.
    Exact,
}

/// Groups sharing one precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grouping {
    /// One precision per wavelet subband (D-GEC).
    Subbands,
    /// A single scalar precision (the EC/VAMP special case).
    Scalar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeSeedPolicy {
    /// New probe for every (iteration, group).
    Fresh,
    /// The same probe for a group at every iteration.
    Fixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub cg_iters: usize,
    /// Relative CG residual at which to stop early; 0 runs all `cg_iters`.
    pub cg_tol: f64,
    pub damping_rho: f64,
    pub depth: usize,
    pub grouping: Grouping,
    pub trace_mode: TraceMode,
    /// Use Monte-Carlo probes for `f2` even when it reports divergences.
    pub force_mc_f2: bool,
    pub probe_seed_policy: ProbeSeedPolicy,
    /// `gamma_new` is clipped to `[lo * eta, hi * eta]`.
    pub gamma_clip_bounds: (f64, f64),
    /// Lower bound on divergences before dividing by them.
    pub divergence_floor: f64,
    pub init_mode: InitMode,
    pub init_inflation: f64,
    /// Stop when `|x_t - x_{t-1}| / |x_t|` falls below this; 0 disables.
    pub tol: f64,
    /// Reserved for precision auto-tuning, which is not implemented.
    pub auto_tune: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 200,
            cg_iters: 10,
            cg_tol: 0.0,
            damping_rho: 0.5,
            depth: 4,
            grouping: Grouping::Subbands,
            trace_mode: TraceMode::MonteCarlo,
            force_mc_f2: false,
            probe_seed_policy: ProbeSeedPolicy::Fresh,
            gamma_clip_bounds: (1e-8, 0.999),
            divergence_floor: 1e-30,
            init_mode: InitMode::BhyPlain,
            init_inflation: 10.0,
            tol: 1e-5,
            auto_tune: false,
        }
    }
}

impl SolverConfig {
    /// Defaults for `C` coils: multicoil runs 20 iterations at damping 0.3,
    /// single-coil up to 200 at 0.5.
    pub fn for_coils(coils: usize) -> Self {
        if coils > 1 {
            SolverConfig { max_iters: 20, damping_rho: 0.3, ..SolverConfig::default() }
        } else {
            SolverConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cg_iters == 0 {
            return Err(Error::Config("cg_iters must be at least 1".into()));
        }
        if !(self.damping_rho > 0.0 && self.damping_rho <= 1.0) {
            return Err(Error::Config(format!("damping_rho must be in (0, 1], got {}", self.damping_rho)));
        }
        if self.depth == 0 {
            return Err(Error::Config("wavelet depth must be at least 1".into()));
        }
        let (lo, hi) = self.gamma_clip_bounds;
        if !(lo > 0.0 && lo < hi && hi < 1.0) {
            return Err(Error::Config(format!("gamma clip bounds must satisfy 0 < lo < hi < 1, got ({lo}, {hi})")));
        }
        if !(self.divergence_floor > 0.0 && self.divergence_floor < 1.0) {
            return Err(Error::Config("divergence_floor must be in (0, 1)".into()));
        }
        if !(self.init_inflation >= 0.0 && self.init_inflation.is_finite()) {
            return Err(Error::Config("init_inflation must be finite and >= 0".into()));
        }
        if !(self.tol >= 0.0) || !(self.cg_tol >= 0.0) {
            return Err(Error::Config("tolerances must be >= 0".into()));
        }
        if self.auto_tune {
            return Err(Error::Config("precision auto-tuning is not implemented".into()));
        }
        Ok(())
    }
}
