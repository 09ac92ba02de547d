//! Wavelet-domain GEC with per-subband precisions.

use num_complex::Complex64;
use rayon::prelude::*;

use super::config::{ProbeSeedPolicy, SolverConfig, TraceMode};
use super::f1::F1Cg;
use super::init::{init_state, Calibration};
use super::record::{IterationDiagnostics, IterationRecord};
use super::trace::{mc_subband_trace, subband_probe};
use crate::denoisers::{Denoiser, PrecisionVector};
use crate::diagnostics::psnr;
use crate::error::{Error, Result};
use crate::forward::ForwardModel;
use crate::rng::SeedTree;
use crate::transforms::{dot, dwt2_haar_with, idwt2_haar, norm_sqr, ComplexImage, WaveletPyramid};

/// Full iterate. Before the first iteration `r2`, `gamma2`, the `eta`s and
/// both estimates are placeholders copied from the initialization.
#[derive(Debug, Clone, PartialEq)]
pub struct GecState {
    pub r1: WaveletPyramid,
    pub r2: WaveletPyramid,
    pub gamma1: PrecisionVector,
    pub gamma2: PrecisionVector,
    pub eta1: PrecisionVector,
    pub eta2: PrecisionVector,
    pub c1_hat: WaveletPyramid,
    pub c2_hat: WaveletPyramid,
    pub iteration: usize,
}

impl GecState {
    pub fn initial(r1: WaveletPyramid, gamma1: PrecisionVector) -> Self {
        GecState {
            r2: r1.clone(),
            c1_hat: r1.clone(),
            c2_hat: r1.clone(),
            r1,
            gamma2: gamma1.clone(),
            eta1: gamma1.clone(),
            eta2: gamma1.clone(),
            gamma1,
            iteration: 0,
        }
    }

    /// Current image estimate `Psi^T c2_hat`.
    pub fn x_hat(&self) -> Result<ComplexImage> {
        idwt2_haar(&self.c2_hat)
    }
}

/// Measurements plus the operator that produced them.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub fm: &'a ForwardModel,
    pub y: &'a [Complex64],
    pub gamma_w: f64,
    /// Ground truth, used only for diagnostics.
    pub truth: Option<&'a ComplexImage>,
}

/// `r <- rho r_new + (1 - rho) r_old`, `log gamma <- rho log gamma_new + (1 - rho) log gamma_old`.
fn damp_pair(
    r_new: WaveletPyramid,
    g_new: PrecisionVector,
    r_old: &WaveletPyramid,
    g_old: &PrecisionVector,
    rho: f64,
) -> Result<(WaveletPyramid, PrecisionVector)> {
    if rho == 1.0 {
        return Ok((r_new, g_new));
    }
    let r: Vec<Complex64> = r_new.coeffs().iter().zip(r_old.coeffs()).map(|(a, b)| a * rho + b * (1.0 - rho)).collect();
    let g: Vec<f64> =
        g_new.gammas().iter().zip(g_old.gammas()).map(|(a, b)| (rho * a.ln() + (1.0 - rho) * b.ln()).exp()).collect();
    Ok((r_new.with_coeffs(r)?, g_new.with_gammas(g)?))
}

/// Damps the extrinsic quantities `(r1, r2, gamma1, gamma2)` of `new`
/// towards `old`; everything else is taken from `new`.
pub fn damp(new: &GecState, old: &GecState, rho: f64) -> Result<GecState> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::InvalidInput(format!("damping factor must be in (0, 1], got {rho}")));
    }
    let (r1, gamma1) = damp_pair(new.r1.clone(), new.gamma1.clone(), &old.r1, &old.gamma1, rho)?;
    let (r2, gamma2) = damp_pair(new.r2.clone(), new.gamma2.clone(), &old.r2, &old.gamma2, rho)?;
    Ok(GecState { r1, r2, gamma1, gamma2, ..new.clone() })
}

/// `eta = gamma / d`, `gamma_out = clip(eta - gamma, lo * eta, hi * eta)`.
/// Returns `(gamma_out, eta, mix)` where `mix` is the weight used to form the
/// extrinsic mean: `eta` itself, or `gamma + gamma_out` where the clip was
/// active, so that the weights `mix / gamma_out` and `-gamma / gamma_out`
/// still sum to one and the message stays unbiased.
fn update_precisions(
    gamma: &PrecisionVector,
    d: &[f64],
    config: &SolverConfig,
) -> Result<(PrecisionVector, PrecisionVector, PrecisionVector)> {
    let (lo, hi) = config.gamma_clip_bounds;
    let mut eta = Vec::with_capacity(d.len());
    let mut out = Vec::with_capacity(d.len());
    let mut mix = Vec::with_capacity(d.len());
    for (&g, &di) in gamma.gammas().iter().zip(d) {
        if !di.is_finite() {
            return Err(Error::NonFinite("divergence"));
        }
        let e = g / di.max(config.divergence_floor);
        let raw = e - g;
        let clipped = raw.clamp(lo * e, hi * e);
        eta.push(e);
        out.push(clipped);
        mix.push(if clipped == raw { e } else { g + clipped });
    }
    Ok((gamma.with_gammas(out)?, gamma.with_gammas(eta)?, gamma.with_gammas(mix)?))
}

/// A denoiser divergence is an average over the `N_l` coefficients of a
/// group, and a soft threshold contributes at least 1/2 for each coefficient
/// it keeps; an average of 0 therefore only says `d < 1 / (2 N_l)`. Taking
/// it literally sends `eta2` and `gamma1` to the clip ceiling and the next
/// `r2` becomes a cancellation between huge terms.
fn resolution_floor(mut d: Vec<f64>, gamma: &PrecisionVector) -> Vec<f64> {
    let part = gamma.partition();
    for (ell, v) in d.iter_mut().enumerate() {
        *v = v.max(0.5 / part.group_len(ell) as f64);
    }
    d
}

/// `(eta * c - gamma_in * r) / gamma_out`, per group.
fn extrinsic(
    c: &WaveletPyramid,
    r: &WaveletPyramid,
    eta: &PrecisionVector,
    gamma_in: &PrecisionVector,
    gamma_out: &PrecisionVector,
) -> Result<WaveletPyramid> {
    let mut out = vec![Complex64::new(0.0, 0.0); c.coeffs().len()];
    for (ell, range) in eta.partition().ranges().iter().enumerate() {
        let (e, gi, go) = (eta.get(ell), gamma_in.get(ell), gamma_out.get(ell));
        for k in range.clone() {
            out[k] = (c.coeffs()[k] * e - r.coeffs()[k] * gi) / go;
        }
    }
    c.with_coeffs(out)
}

fn probe_seed(seed: SeedTree, which: &str, ell: usize, iteration: usize, policy: ProbeSeedPolicy) -> SeedTree {
    let t = match policy {
        ProbeSeedPolicy::Fresh => iteration as u64,
        ProbeSeedPolicy::Fixed => 0,
    };
    seed.child("probe").indexed(which, ell as u64).indexed("iter", t)
}

/// Per-group `f1` divergences.
pub fn f1_divergence(
    f1: &F1Cg<'_>,
    gamma: &PrecisionVector,
    config: &SolverConfig,
    seed: SeedTree,
    iteration: usize,
) -> Result<Vec<f64>> {
    let part = gamma.partition();
    match config.trace_mode {
        TraceMode::MonteCarlo => (0..part.num_groups())
            .into_par_iter()
            .map(|ell| {
                let q = subband_probe(part, ell, probe_seed(seed, "f1", ell, iteration, config.probe_seed_policy));
                let z = f1.jacobian_apply(&q, gamma)?;
                // Rayleigh quotient: unbiased since q/|q| is uniform on the
                // sphere, and its spread shrinks with |I - Q| as d -> 1.
                let range = part.range(ell);
                Ok(dot(&q[range.clone()], &z[range.clone()]).re / norm_sqr(&q[range]))
            })
            .collect(),
        TraceMode::Exact => {
            let n = part.total_len();
            let diag: Vec<f64> = (0..n)
                .into_par_iter()
                .map(|i| {
                    let mut e = vec![Complex64::new(0.0, 0.0); n];
                    e[i] = Complex64::new(1.0, 0.0);
                    Ok(f1.jacobian_apply(&e, gamma)?[i].re)
                })
                .collect::<Result<_>>()?;
            Ok(part.ranges().iter().map(|r| diag[r.clone()].iter().sum::<f64>() / r.len() as f64).collect())
        }
    }
}

/// Per-group `f2` divergences by Monte-Carlo probing, reusing the base
/// evaluation `f_r` and the denoiser seed.
fn f2_mc_divergence(
    f2: &dyn Denoiser,
    r: &WaveletPyramid,
    f_r: &WaveletPyramid,
    gamma: &PrecisionVector,
    config: &SolverConfig,
    seed: SeedTree,
    den_seed: SeedTree,
    iteration: usize,
) -> Result<Vec<f64>> {
    let part = gamma.partition();
    (0..part.num_groups())
        .into_par_iter()
        .map(|ell| {
            let f = |v: &[Complex64]| -> Result<Vec<Complex64>> {
                Ok(f2.denoise(&r.with_coeffs(v.to_vec())?, gamma, den_seed)?.estimate.into_coeffs())
            };
            let s = probe_seed(seed, "f2", ell, iteration, config.probe_seed_policy);
            let t = mc_subband_trace(f, r.coeffs(), f_r.coeffs(), gamma, ell, s)?;
            Ok(t / part.group_len(ell) as f64)
        })
        .collect()
}

/// One full iteration: the measurement half (`f1`, precisions, `r2`) then
/// the denoising half (`f2`, precisions, `r1`), each damped.
pub fn dgec_iterate(
    state: &GecState,
    f1: &F1Cg<'_>,
    f2: &dyn Denoiser,
    config: &SolverConfig,
    seed: SeedTree,
) -> Result<GecState> {
    let t = state.iteration;
    let step = || -> Result<GecState> {
        let c1_hat = f1.apply(&state.r1, &state.gamma1)?;
        let d1 = f1_divergence(f1, &state.gamma1, config, seed, t)?;
        let (gamma2, eta1, mix1) = update_precisions(&state.gamma1, &d1, config)?;
        let r2 = extrinsic(&c1_hat, &state.r1, &mix1, &state.gamma1, &gamma2)?;
        let (r2, gamma2) =
            if t > 0 { damp_pair(r2, gamma2, &state.r2, &state.gamma2, config.damping_rho)? } else { (r2, gamma2) };

        let den_seed = seed.child("denoiser").indexed("iter", t as u64);
        let res = f2.denoise(&r2, &gamma2, den_seed)?;
        if !res.estimate.is_finite() {
            return Err(Error::NonFinite("denoiser output"));
        }
        let d2 = match res.subband_divergence {
            Some(d) if !config.force_mc_f2 => d,
            _ => f2_mc_divergence(f2, &r2, &res.estimate, &gamma2, config, seed, den_seed, t)?,
        };
        let c2_hat = res.estimate;
        let d2 = resolution_floor(d2, &gamma2);
        let (gamma1, eta2, mix2) = update_precisions(&gamma2, &d2, config)?;
        let r1 = extrinsic(&c2_hat, &r2, &mix2, &gamma2, &gamma1)?;
        let (r1, gamma1) = damp_pair(r1, gamma1, &state.r1, &state.gamma1, config.damping_rho)?;
        if !r1.is_finite() || !r2.is_finite() {
            return Err(Error::NonFinite("extrinsic messages"));
        }
        Ok(GecState { r1, r2, gamma1, gamma2, eta1, eta2, c1_hat, c2_hat, iteration: t + 1 })
    };
    step().map_err(|e| e.at_iteration(t + 1))
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    /// `Psi^T c2_hat`, zeroed outside the coil support.
    pub image: ComplexImage,
    pub diagnostics: IterationDiagnostics,
    pub state: GecState,
    pub converged: bool,
}

fn record(
    state: &GecState,
    problem: &Problem<'_>,
    truth: Option<&WaveletPyramid>,
    change: f64,
) -> Result<IterationRecord> {
    let mut x = state.x_hat()?;
    problem.fm.restrict_to_support(&mut x);
    let psnr = problem.truth.map(|x0| psnr(&x, x0)).transpose()?;
    let empirical_sd = truth.map(|c0| {
        let layout = problem.fm.layout();
        let coeff_support = layout.coefficient_support(problem.fm.support());
        state
            .gamma2
            .partition()
            .ranges()
            .iter()
            .map(|range| {
                let (mut acc, mut n) = (0.0, 0usize);
                for k in range.clone() {
                    if coeff_support[k] {
                        acc += (state.r2.coeffs()[k] - c0.coeffs()[k]).norm_sqr();
                        n += 1;
                    }
                }
                if n == 0 {
                    f64::NAN
                } else {
                    (acc / n as f64).sqrt()
                }
            })
            .collect()
    });
    Ok(IterationRecord {
        iteration: state.iteration,
        psnr,
        predicted_sd: state.gamma2.std_devs(),
        empirical_sd,
        relative_change: change,
    })
}

/// Initializes and iterates until `max_iters` or until the relative change
/// of the image estimate drops below `tol`. `observer` sees every iterate.
pub fn run_dgec_observed(
    problem: &Problem<'_>,
    f2: &dyn Denoiser,
    config: &SolverConfig,
    calibration: Option<&Calibration>,
    seed: SeedTree,
    observer: &mut dyn FnMut(&GecState),
) -> Result<RunOutput> {
    config.validate()?;
    let fm = problem.fm;
    let f1 = F1Cg::new(fm, problem.y, problem.gamma_w, config.cg_iters, config.cg_tol)?;
    let mut state = init_state(problem.y, fm, config, calibration, seed)?;
    let truth = problem.truth.map(|x0| dwt2_haar_with(x0, fm.layout())).transpose()?;
    let mut diagnostics = IterationDiagnostics::new(fm.layout(), state.gamma1.partition());
    let mut prev = state.x_hat()?;
    let mut converged = false;
    for _ in 0..config.max_iters {
        state = dgec_iterate(&state, &f1, f2, config, seed)?;
        let x = state.x_hat()?;
        let diff: f64 = x.data().iter().zip(prev.data()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let change = if x.norm() > 0.0 { diff / x.norm() } else { diff };
        diagnostics.push(record(&state, problem, truth.as_ref(), change)?);
        observer(&state);
        prev = x;
        if config.tol > 0.0 && change < config.tol {
            converged = true;
            break;
        }
    }
    let mut image = state.x_hat()?;
    fm.restrict_to_support(&mut image);
    Ok(RunOutput { image, diagnostics, state, converged })
}

pub fn run_dgec(
    problem: &Problem<'_>,
    f2: &dyn Denoiser,
    config: &SolverConfig,
    calibration: Option<&Calibration>,
    seed: SeedTree,
) -> Result<RunOutput> {
    run_dgec_observed(problem, f2, config, calibration, seed, &mut |_| {})
}
