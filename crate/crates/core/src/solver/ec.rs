//! Scalar-precision EC/VAMP over plain vectors.
//!
//! Written independently of the wavelet-domain engine so that the two can
//! be cross-checked: with a single precision group and exact divergences
//! they must produce the same iterates.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// `(r, gamma) -> (f(r, gamma), tr(df/dr) / N)`.
pub type EstimationFn<'a> = dyn Fn(&[Complex64], f64) -> Result<(Vec<Complex64>, f64)> + Sync + 'a;

#[derive(Debug, Clone, PartialEq)]
pub struct EcState {
    pub r1: Vec<Complex64>,
    pub r2: Vec<Complex64>,
    pub gamma1: f64,
    pub gamma2: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub x1_hat: Vec<Complex64>,
    pub x2_hat: Vec<Complex64>,
    pub iteration: usize,
}

impl EcState {
    pub fn new(r1: Vec<Complex64>, gamma1: f64) -> Self {
        Self::with_precisions(r1, gamma1, gamma1)
    }

    /// Start with a given `gamma2`; used with frozen precisions.
    pub fn with_precisions(r1: Vec<Complex64>, gamma1: f64, gamma2: f64) -> Self {
        EcState {
            r2: r1.clone(),
            x1_hat: r1.clone(),
            x2_hat: r1.clone(),
            r1,
            gamma1,
            gamma2,
            eta1: gamma1 + gamma2,
            eta2: gamma1 + gamma2,
            iteration: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EcConfig {
    pub damping_rho: f64,
    pub gamma_clip_bounds: (f64, f64),
    pub divergence_floor: f64,
    /// Keep `gamma1`, `gamma2` fixed, forcing `eta1 = eta2 = gamma1 + gamma2`.
    pub frozen: bool,
}

impl Default for EcConfig {
    fn default() -> Self {
        EcConfig { damping_rho: 1.0, gamma_clip_bounds: (1e-8, 0.999), divergence_floor: 1e-30, frozen: false }
    }
}

/// `(gamma_out, eta, mix)`; `mix` replaces `eta` in the extrinsic mean when
/// the clip is active, keeping the weights summing to one.
fn precision_step(gamma_in: f64, div: f64, cfg: &EcConfig) -> Result<(f64, f64, f64)> {
    if !div.is_finite() {
        return Err(Error::NonFinite("divergence"));
    }
    let eta = gamma_in / div.max(cfg.divergence_floor);
    let (lo, hi) = cfg.gamma_clip_bounds;
    let raw = eta - gamma_in;
    let out = raw.clamp(lo * eta, hi * eta);
    Ok((out, eta, if out == raw { eta } else { gamma_in + out }))
}

fn combine(x: &[Complex64], r: &[Complex64], eta: f64, g_in: f64, g_out: f64) -> Vec<Complex64> {
    x.iter().zip(r).map(|(a, b)| (a * eta - b * g_in) / g_out).collect()
}

fn blend(new: Vec<Complex64>, old: &[Complex64], g_new: f64, g_old: f64, rho: f64) -> (Vec<Complex64>, f64) {
    if rho == 1.0 {
        return (new, g_new);
    }
    let r = new.iter().zip(old).map(|(a, b)| a * rho + b * (1.0 - rho)).collect();
    (r, (rho * g_new.ln() + (1.0 - rho) * g_old.ln()).exp())
}

/// One pass of lines 4-11 of the EC recursion.
pub fn ec_iterate(state: &EcState, f1: &EstimationFn<'_>, f2: &EstimationFn<'_>, cfg: &EcConfig) -> Result<EcState> {
    let t = state.iteration;
    let step = || -> Result<EcState> {
        let (x1_hat, d1) = f1(&state.r1, state.gamma1)?;
        let (gamma2, eta1, mix1) = if cfg.frozen {
            let e = state.gamma1 + state.gamma2;
            (state.gamma2, e, e)
        } else {
            precision_step(state.gamma1, d1, cfg)?
        };
        let r2 = combine(&x1_hat, &state.r1, mix1, state.gamma1, gamma2);
        let (r2, gamma2) =
            if t > 0 { blend(r2, &state.r2, gamma2, state.gamma2, cfg.damping_rho) } else { (r2, gamma2) };

        let (x2_hat, d2) = f2(&r2, gamma2)?;
        let (gamma1, eta2, mix2) = if cfg.frozen {
            let e = state.gamma1 + gamma2;
            (state.gamma1, e, e)
        } else {
            precision_step(gamma2, d2, cfg)?
        };
        let r1 = combine(&x2_hat, &r2, mix2, gamma2, gamma1);
        let (r1, gamma1) = blend(r1, &state.r1, gamma1, state.gamma1, cfg.damping_rho);
        Ok(EcState { r1, r2, gamma1, gamma2, eta1, eta2, x1_hat, x2_hat, iteration: t + 1 })
    };
    step().map_err(|e| e.at_iteration(t + 1))
}

/// Runs `iters` iterations and returns every iterate, the initial state first.
pub fn ec_run(
    init: EcState,
    f1: &EstimationFn<'_>,
    f2: &EstimationFn<'_>,
    cfg: &EcConfig,
    iters: usize,
) -> Result<Vec<EcState>> {
    let mut out = Vec::with_capacity(iters + 1);
    out.push(init);
    for _ in 0..iters {
        let next = ec_iterate(out.last().expect("non-empty"), f1, f2, cfg)?;
        out.push(next);
    }
    Ok(out)
}
