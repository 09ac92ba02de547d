//! PR-ADMM and PnP-PGD on the wavelet-domain MRI problem, for comparison
//! with D-GEC. Both use one fixed scalar precision for every subband.

use num_complex::Complex64;

use super::admm::{pr_admm_iterate, AdmmState};
use super::pgd::{pnp_pgd_iterate, PgdState};
use crate::denoisers::{Denoiser, PrecisionVector};
use crate::diagnostics::psnr;
use crate::error::{Error, Result};
use crate::forward::ForwardModel;
use crate::rng::SeedTree;
use crate::solver::F1Cg;
use crate::transforms::{idwt2_haar, ComplexImage, WaveletPyramid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MriBaselineConfig {
    pub iters: usize,
    /// ADMM penalty / denoiser precision handed to `f2`.
    pub gamma: f64,
    /// CG iterations per ADMM data prox.
    pub cg_iters: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineRun {
    pub estimate: ComplexImage,
    /// Per-iteration PSNR when the truth was supplied.
    pub psnr: Vec<f64>,
}

fn image_of(fm: &ForwardModel, c: &WaveletPyramid) -> Result<ComplexImage> {
    let mut x = idwt2_haar(c)?;
    fm.restrict_to_support(&mut x);
    Ok(x)
}

fn denoise_uniform(
    f2: &dyn Denoiser,
    fm: &ForwardModel,
    v: &[Complex64],
    gamma: f64,
    seed: SeedTree,
) -> Result<Vec<Complex64>> {
    let pyr = WaveletPyramid::new(fm.layout().clone(), v.to_vec())?;
    let prec = PrecisionVector::uniform(fm.layout().partition(), gamma)?;
    Ok(f2.denoise(&pyr, &prec, seed)?.estimate.into_coeffs())
}

fn check(cfg: &MriBaselineConfig) -> Result<()> {
    if !(cfg.gamma > 0.0 && cfg.gamma.is_finite()) {
        return Err(Error::Config(format!("baseline gamma must be positive, got {}", cfg.gamma)));
    }
    Ok(())
}

/// PR-ADMM with `g1 = gamma_w/2 |B c - y|^2` (prox by CG) and `f2` standing
/// in for the prox of the regulariser. Starts from `B^H y`.
pub fn run_pr_admm_mri(
    fm: &ForwardModel,
    y: &[Complex64],
    gamma_w: f64,
    f2: &dyn Denoiser,
    cfg: &MriBaselineConfig,
    truth: Option<&ComplexImage>,
    seed: SeedTree,
) -> Result<BaselineRun> {
    check(cfg)?;
    let f1 = F1Cg::new(fm, y, gamma_w, cfg.cg_iters, 0.0)?;
    let prox1 = |v: &[Complex64], g: f64| -> Result<Vec<Complex64>> {
        let prec = PrecisionVector::uniform(fm.layout().partition(), g)?;
        Ok(f1.solve(v, &prec)?.x)
    };
    let mut state = AdmmState::new(fm.apply_bh(y)?.into_coeffs());
    let mut trace = Vec::new();
    for t in 0..cfg.iters {
        let s = seed.indexed("denoiser", t as u64);
        let prox2 = |v: &[Complex64], g: f64| denoise_uniform(f2, fm, v, g, s);
        state = pr_admm_iterate(&state, cfg.gamma, &prox1, &prox2)?;
        if let Some(x0) = truth {
            let c = WaveletPyramid::new(fm.layout().clone(), state.x2.clone())?;
            trace.push(psnr(&image_of(fm, &c)?, x0)?);
        }
    }
    let c = WaveletPyramid::new(fm.layout().clone(), state.x2)?;
    Ok(BaselineRun { estimate: image_of(fm, &c)?, psnr: trace })
}

/// PnP-PGD on `g1 = 1/2 |B c - y|^2` with step `mu = 1` (the Lipschitz
/// constant of the gradient is at most 1 for normalised coils), denoising
/// with `f2` at precision `gamma`. Starts from `B^H y`.
pub fn run_pnp_pgd_mri(
    fm: &ForwardModel,
    y: &[Complex64],
    f2: &dyn Denoiser,
    cfg: &MriBaselineConfig,
    truth: Option<&ComplexImage>,
    seed: SeedTree,
) -> Result<BaselineRun> {
    check(cfg)?;
    let grad = |c: &[Complex64]| -> Result<Vec<Complex64>> {
        let pyr = WaveletPyramid::new(fm.layout().clone(), c.to_vec())?;
        let res: Vec<Complex64> = fm.apply_b(&pyr)?.iter().zip(y).map(|(a, b)| a - b).collect();
        Ok(fm.apply_bh(&res)?.into_coeffs())
    };
    let mut state = PgdState::new(fm.apply_bh(y)?.into_coeffs());
    let mut trace = Vec::new();
    for t in 0..cfg.iters {
        let s = seed.indexed("denoiser", t as u64);
        state = pnp_pgd_iterate(&state, grad, 1.0, |v: &[Complex64], _mu| denoise_uniform(f2, fm, v, cfg.gamma, s))
            .map_err(|e| e.at_iteration(t + 1))?;
        if let Some(x0) = truth {
            let c = WaveletPyramid::new(fm.layout().clone(), state.x2.clone())?;
            trace.push(psnr(&image_of(fm, &c)?, x0)?);
        }
    }
    let c = WaveletPyramid::new(fm.layout().clone(), state.x2)?;
    Ok(BaselineRun { estimate: image_of(fm, &c)?, psnr: trace })
}

/// AMP on the wavelet-domain problem with unit step: `v = y - B c + (N/M)
/// <div> v_prev`, `tau = |v|^2 / M`, `c = f2(c + B^H v, 1 / tau)`. `f2` must
/// report its divergence in closed form (the size-weighted mean over groups
/// is the Onsager coefficient).
pub fn run_amp_mri(
    fm: &ForwardModel,
    y: &[Complex64],
    f2: &dyn Denoiser,
    iters: usize,
    truth: Option<&ComplexImage>,
    seed: SeedTree,
) -> Result<BaselineRun> {
    let layout = fm.layout().clone();
    let (n, m) = (layout.len() as f64, y.len() as f64);
    let mut c = WaveletPyramid::zeros(layout.clone());
    let mut v = y.to_vec();
    let mut onsager = 0.0;
    let mut trace = Vec::new();
    for t in 0..iters {
        let step = || -> Result<(WaveletPyramid, Vec<Complex64>, f64)> {
            let bc = fm.apply_b(&c)?;
            let v_new: Vec<Complex64> = y.iter().zip(&bc).zip(&v).map(|((a, b), p)| a - b + p * onsager).collect();
            let tau = (v_new.iter().map(|z| z.norm_sqr()).sum::<f64>() / m).max(f64::MIN_POSITIVE);
            let bhv = fm.apply_bh(&v_new)?;
            let r: Vec<Complex64> = c.coeffs().iter().zip(bhv.coeffs()).map(|(a, b)| a + b).collect();
            let pyr = WaveletPyramid::new(layout.clone(), r)?;
            let prec = PrecisionVector::uniform(layout.partition(), 1.0 / tau)?;
            let res = f2.denoise(&pyr, &prec, seed.indexed("denoiser", t as u64))?;
            let div = res.subband_divergence.ok_or_else(|| {
                Error::Config(format!("AMP needs a denoiser with closed-form divergence, not {}", f2.name()))
            })?;
            let mean_div = layout.subbands().iter().zip(&div).map(|(sb, d)| d * sb.len() as f64).sum::<f64>() / n;
            if !res.estimate.is_finite() {
                return Err(Error::NonFinite("AMP estimate"));
            }
            Ok((res.estimate, v_new, n / m * mean_div))
        };
        let (c_new, v_new, ons) = step().map_err(|e| e.at_iteration(t + 1))?;
        c = c_new;
        v = v_new;
        onsager = ons;
        if let Some(x0) = truth {
            trace.push(psnr(&image_of(fm, &c)?, x0)?);
        }
    }
    Ok(BaselineRun { estimate: image_of(fm, &c)?, psnr: trace })
}
