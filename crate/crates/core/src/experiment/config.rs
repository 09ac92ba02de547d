use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use serde::Deserialize;

use crate::denoisers::{DenoiserEndpoint, SoftThreshold};
use crate::error::{Error, Result};
use crate::forward::{Acceleration, CoilSupport, PhantomKind};
use crate::solver::{Grouping, InitMode, ProbeSeedPolicy, SolverConfig, TraceMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Dgec,
    Ec,
    Amp,
    PnpPgd,
    PrAdmm,
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dgec" => Ok(Algorithm::Dgec),
            "ec" => Ok(Algorithm::Ec),
            "amp" => Ok(Algorithm::Amp),
            "pnp_pgd" => Ok(Algorithm::PnpPgd),
            "pr_admm" => Ok(Algorithm::PrAdmm),
            other => {
                Err(Error::Config(format!("unknown algorithm '{other}' (expected dgec, ec, amp, pnp_pgd or pr_admm)")))
            }
        }
    }
}

/// One experiment, read from a flat `key = value` file (TOML syntax, no
/// tables). Every key except `seed` has a default.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,

    pub phantom: String,
    /// Fraction of nonzero Haar coefficients for `random_wavelet_sparse`.
    pub sparsity: f64,
    pub height: usize,
    pub width: usize,
    pub coils: usize,
    pub coil_smoothness: f64,
    /// `full` or `ellipse`.
    pub coil_support: String,
    /// `point` or `line`.
    pub mask: String,
    /// Acceleration as `4`, `2.5` or `5/2`.
    pub acceleration: String,
    pub density_exponent: f64,
    pub calib_size: usize,
    /// `inf` for noiseless data.
    pub snr_db: f64,

    pub algorithm: String,
    pub max_iters: Option<usize>,
    pub cg_iters: usize,
    pub cg_tol: f64,
    pub damping_rho: Option<f64>,
    pub depth: usize,
    /// `mc` or `exact`.
    pub trace_mode: String,
    /// `fresh` or `fixed`.
    pub probe_seed_policy: String,
    pub gamma_clip_lo: f64,
    pub gamma_clip_hi: f64,
    pub init_mode: String,
    pub init_inflation: f64,
    /// Phantoms (same kind, independent seeds) for `bhy_plus_noise`.
    pub calibration_images: usize,
    pub tol: f64,
    /// Penalty / denoiser precision of the PnP baselines; defaults to `gamma_w`.
    pub baseline_gamma: Option<f64>,

    /// `soft_threshold` or `external`.
    pub denoiser: String,
    pub kappa: f64,
    pub endpoint: Option<String>,
    pub noise_channels: usize,
    pub timeout_ms: u64,

    /// Directory with `mask.msk`, `coils.csm`, `measurements.ksp` and
    /// optionally `truth.cim` from `simulate`; without it `recover`
    /// simulates the problem in memory.
    pub input_dir: Option<PathBuf>,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let s = SolverConfig::default();
        ExperimentConfig {
            seed: None,
            phantom: "shepp_logan".into(),
            sparsity: 0.1,
            height: 128,
            width: 128,
            coils: 1,
            coil_smoothness: 0.5,
            coil_support: "full".into(),
            mask: "point".into(),
            acceleration: "4".into(),
            density_exponent: 8.0,
            calib_size: 8,
            snr_db: 40.0,
            algorithm: "dgec".into(),
            max_iters: None,
            cg_iters: s.cg_iters,
            cg_tol: s.cg_tol,
            damping_rho: None,
            depth: s.depth,
            trace_mode: "mc".into(),
            probe_seed_policy: "fresh".into(),
            gamma_clip_lo: s.gamma_clip_bounds.0,
            gamma_clip_hi: s.gamma_clip_bounds.1,
            init_mode: "bhy_plain".into(),
            init_inflation: s.init_inflation,
            calibration_images: 5,
            tol: s.tol,
            baseline_gamma: None,
            denoiser: "soft_threshold".into(),
            kappa: 1.0,
            endpoint: None,
            noise_channels: 1,
            timeout_ms: 30_000,
            input_dir: None,
            out_dir: PathBuf::from("out"),
        }
    }
}

/// The denoiser the config asks for, before it is bound to a layout.
#[derive(Debug, Clone, PartialEq)]
pub enum DenoiserSpec {
    SoftThreshold(f64),
    External { endpoint: DenoiserEndpoint, channels: usize, timeout: Duration },
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        Self::parse(&text)
    }

    /// The seed, which must come from the file or the command line.
    pub fn master_seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| Error::Config("no seed given (set `seed` or pass --seed)".into()))
    }

    /// Checks every enumerated value and the solver settings.
    pub fn validate(&self) -> Result<()> {
        self.phantom_kind()?;
        self.coil_support()?;
        self.acceleration()?;
        self.algorithm()?;
        self.solver_config()?.validate()?;
        self.denoiser_spec()?;
        if !matches!(self.mask.as_str(), "point" | "line") {
            return Err(Error::Config(format!("unknown mask kind '{}' (expected point or line)", self.mask)));
        }
        if self.height == 0 || self.width == 0 || self.coils == 0 {
            return Err(Error::Config("height, width and coils must be positive".into()));
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(Error::Config(format!("snr_db must be finite or inf, got {}", self.snr_db)));
        }
        if let Some(g) = self.baseline_gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::Config(format!("baseline_gamma must be positive, got {g}")));
            }
        }
        if self.calibration_images == 0 {
            return Err(Error::Config("calibration_images must be at least 1".into()));
        }
        Ok(())
    }

    pub fn phantom_kind(&self) -> Result<PhantomKind> {
        PhantomKind::parse(&self.phantom, self.sparsity)
    }

    pub fn coil_support(&self) -> Result<CoilSupport> {
        match self.coil_support.as_str() {
            "full" => Ok(CoilSupport::Full),
            "ellipse" => Ok(CoilSupport::Ellipse { ry: 0.9, rx: 0.9 }),
            other => Err(Error::Config(format!("unknown coil support '{other}' (expected full or ellipse)"))),
        }
    }

    pub fn acceleration(&self) -> Result<Acceleration> {
        Acceleration::parse(&self.acceleration).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn algorithm(&self) -> Result<Algorithm> {
        self.algorithm.parse()
    }

    /// Solver settings: coil-count defaults, then the file's overrides.
    pub fn solver_config(&self) -> Result<SolverConfig> {
        let base = SolverConfig::for_coils(self.coils);
        let trace_mode = match self.trace_mode.as_str() {
            "mc" => TraceMode::MonteCarlo,
            "exact" => TraceMode::Exact,
            other => return Err(Error::Config(format!("unknown trace mode '{other}' (expected mc or exact)"))),
        };
        let probe_seed_policy = match self.probe_seed_policy.as_str() {
            "fresh" => ProbeSeedPolicy::Fresh,
            "fixed" => ProbeSeedPolicy::Fixed,
            other => {
                return Err(Error::Config(format!("unknown probe seed policy '{other}' (expected fresh or fixed)")))
            }
        };
        let grouping = if self.algorithm()? == Algorithm::Ec { Grouping::Scalar } else { Grouping::Subbands };
        Ok(SolverConfig {
            max_iters: self.max_iters.unwrap_or(base.max_iters),
            cg_iters: self.cg_iters,
            cg_tol: self.cg_tol,
            damping_rho: self.damping_rho.unwrap_or(base.damping_rho),
            depth: self.depth,
            grouping,
            trace_mode,
            probe_seed_policy,
            gamma_clip_bounds: (self.gamma_clip_lo, self.gamma_clip_hi),
            init_mode: InitMode::from_str(&self.init_mode)?,
            init_inflation: self.init_inflation,
            tol: self.tol,
            ..base
        })
    }

    pub fn denoiser_spec(&self) -> Result<DenoiserSpec> {
        match self.denoiser.as_str() {
            "soft_threshold" => {
                SoftThreshold::new(self.kappa).map_err(|e| Error::Config(e.to_string()))?;
                Ok(DenoiserSpec::SoftThreshold(self.kappa))
            }
            "external" => {
                let ep = self
                    .endpoint
                    .as_deref()
                    .ok_or_else(|| Error::Config("external denoiser needs `endpoint`".into()))?;
                Ok(DenoiserSpec::External {
                    endpoint: ep.parse()?,
                    channels: self.noise_channels,
                    timeout: Duration::from_millis(self.timeout_ms),
                })
            }
            other => Err(Error::Config(format!("unknown denoiser '{other}' (expected soft_threshold or external)"))),
        }
    }
}
