use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::rng::{normal, SeedTree};

/// Denoiser for AMP: acts on a real vector observed in white Gaussian noise
/// of variance `tau`.
pub trait ScalarDenoiser: Sync {
    fn denoise(&self, r: &[f64], tau: f64) -> Result<Vec<f64>>;

    /// `tr(df/dr)` at `r`, when known in closed form. `None` falls back to a
    /// Monte-Carlo probe.
    fn trace_jacobian(&self, _r: &[f64], _tau: f64) -> Option<Result<f64>> {
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmpState {
    /// Residual, length P.
    pub v: Vec<f64>,
    /// Estimate, length N.
    pub x: Vec<f64>,
    pub tau: f64,
    pub beta: f64,
    /// Jacobian trace of the last denoiser call (0 before the first one).
    pub trace: f64,
    pub iteration: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmpConfig {
    /// Overrides `beta = sqrt(N) / |A|_F` (e.g. the shrunken-beta variant
    /// used for MRI). For comparison runs only.
    pub beta: Option<f64>,
    /// `false` drops the Onsager term, which turns AMP into PnP-PGD with
    /// `mu = beta^2`.
    pub onsager: bool,
    pub probe_seed: SeedTree,
}

impl Default for AmpConfig {
    fn default() -> Self {
        AmpConfig { beta: None, onsager: true, probe_seed: SeedTree::new(0) }
    }
}

/// `v = 0`, `x = 0`.
pub fn amp_init(a: &DMatrix<f64>, cfg: &AmpConfig) -> Result<AmpState> {
    let fro = a.norm();
    let beta = match cfg.beta {
        Some(b) if b > 0.0 && b.is_finite() => b,
        Some(b) => return Err(Error::Config(format!("AMP beta must be positive, got {b}"))),
        None if fro > 0.0 => (a.ncols() as f64).sqrt() / fro,
        None => return Err(Error::InvalidInput("AMP needs a nonzero matrix".into())),
    };
    Ok(AmpState { v: vec![0.0; a.nrows()], x: vec![0.0; a.ncols()], tau: 0.0, beta, trace: 0.0, iteration: 0 })
}

/// Single-probe estimate `q^T (f(r + eps q) - f(r)) / eps`.
fn mc_trace(f2: &dyn ScalarDenoiser, r: &[f64], fr: &[f64], tau: f64, seed: SeedTree) -> Result<f64> {
    let n = r.len();
    let scale = (r.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    let eps = 1e-3 * scale.max(1e-12);
    let mut rng = seed.rng();
    let q: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
    let shifted: Vec<f64> = r.iter().zip(&q).map(|(a, b)| a + eps * b).collect();
    let fs = f2.denoise(&shifted, tau)?;
    Ok(q.iter().zip(fs.iter().zip(fr)).map(|(qi, (a, b))| qi * (a - b)).sum::<f64>() / eps)
}

/// One AMP step:
/// `v <- beta (y - A x) + (tr / M) v`, `tau <- |v|^2 / M`,
/// `x <- f2(x + beta A^T v)`. The Onsager term is zero at `t = 0`.
pub fn amp_iterate(
    state: &AmpState,
    y: &[f64],
    a: &DMatrix<f64>,
    f2: &dyn ScalarDenoiser,
    cfg: &AmpConfig,
) -> Result<AmpState> {
    let (m, n) = a.shape();
    if y.len() != m || state.v.len() != m || state.x.len() != n {
        return Err(Error::ShapeMismatch("AMP state does not match the operator".into()));
    }
    let t = state.iteration;
    let x = DVector::from_column_slice(&state.x);
    let ax = a * &x;
    let onsager = if cfg.onsager && t > 0 { state.trace / m as f64 } else { 0.0 };
    let v: Vec<f64> = (0..m).map(|i| state.beta * (y[i] - ax[i]) + onsager * state.v[i]).collect();
    let tau = v.iter().map(|z| z * z).sum::<f64>() / m as f64;
    let atv = a.tr_mul(&DVector::from_column_slice(&v));
    let r: Vec<f64> = (0..n).map(|j| state.x[j] + state.beta * atv[j]).collect();
    let x_new = f2.denoise(&r, tau)?;
    if x_new.len() != n {
        return Err(Error::ShapeMismatch("denoiser changed the vector length".into()));
    }
    let trace = if cfg.onsager {
        match f2.trace_jacobian(&r, tau) {
            Some(tr) => tr?,
            None => mc_trace(f2, &r, &x_new, tau, cfg.probe_seed.indexed("probe", t as u64))?,
        }
    } else {
        0.0
    };
    if !trace.is_finite() {
        return Err(Error::Numerical(format!("AMP divergence estimate is {trace}")).at_iteration(t + 1));
    }
    Ok(AmpState { v, x: x_new, tau, beta: state.beta, trace, iteration: t + 1 })
}
