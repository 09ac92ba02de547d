use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use super::{
    build_ec_error_model, dense_dft_matrix, dense_haar_matrix, ec_recursion_equivalence, epsilon2_covariance_check,
    log_spaced_spectrum, offdiagonal_scaling, weingarten_moment_check,
};
use crate::denoisers::{Denoiser, PrecisionVector, SoftThreshold};
use crate::error::{Error, Result};
use crate::forward::{
    generate_coil_maps, generate_phantom, make_point_mask, simulate_measurements, Acceleration, CoilSupport,
    ForwardModel, PhantomKind,
};
use crate::rng::{complex_normal_vec, normal, SeedTree};
use crate::solver::{dgec_iterate, ec_run, init_state, EcConfig, EcState, F1Cg, Grouping, SolverConfig, TraceMode};
use crate::transforms::{
    dft2, dwt2_haar_with, idft2, idwt2_haar, ComplexImage, Partition, SubbandLayout, WaveletPyramid,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Appendix,
    Transforms,
    Solver,
    All,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "appendix" => Ok(Suite::Appendix),
            "transforms" => Ok(Suite::Transforms),
            "solver" => Ok(Suite::Solver),
            "all" => Ok(Suite::All),
            _ => Err(Error::InvalidInput(format!("unknown verification suite '{s}'"))),
        }
    }
}

/// One verified quantity with the bound it was held to.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub value: f64,
    pub bound: String,
    pub pass: bool,
}

impl Check {
    fn at_most(suite: &'static str, name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check { suite, name: name.into(), value, bound: format!("<= {limit:e}"), pass: value <= limit }
    }

    fn within(suite: &'static str, name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Check { suite, name: name.into(), value, bound: format!("in [{lo}, {hi}]"), pass: (lo..=hi).contains(&value) }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}/{}: {:.6e} ({})", self.suite, self.name, self.value, self.bound)
    }
}

pub fn run_suite(suite: Suite, seed: SeedTree) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    if matches!(suite, Suite::Transforms | Suite::All) {
        out.extend(transforms_suite(seed.child("transforms"))?);
    }
    if matches!(suite, Suite::Solver | Suite::All) {
        out.extend(solver_suite(seed.child("solver"))?);
    }
    if matches!(suite, Suite::Appendix | Suite::All) {
        out.extend(appendix_suite(seed.child("appendix"))?);
    }
    Ok(out)
}

fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn random_image<R: Rng>(rng: &mut R, h: usize, w: usize) -> Result<ComplexImage> {
    ComplexImage::new(h, w, complex_normal_vec(rng, h * w, 1.0))
}

fn transforms_suite(seed: SeedTree) -> Result<Vec<Check>> {
    const S: &str = "transforms";
    let mut rng = seed.rng();
    let sizes = [8usize, 16, 32, 64];
    let (mut dft_rt, mut haar_rt, mut parseval) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let h = sizes[rng.random_range(0..sizes.len())];
        let w = sizes[rng.random_range(0..sizes.len())];
        let max_depth = h.min(w).trailing_zeros() as usize;
        let layout = SubbandLayout::new(h, w, rng.random_range(1..=max_depth))?;
        let x = random_image(&mut rng, h, w)?;
        let fx = dft2(&x)?;
        dft_rt = dft_rt.max(max_abs_diff(idft2(&fx)?.data(), x.data()));
        let c = dwt2_haar_with(&x, &layout)?;
        haar_rt = haar_rt.max(max_abs_diff(idwt2_haar(&c)?.data(), x.data()));
        let e = x.norm_sqr();
        parseval = parseval.max((fx.norm_sqr() - e).abs() / e).max((c.norm_sqr() - e).abs() / e);
    }

    let (h, w) = (8, 8);
    let x = random_image(&mut rng, h, w)?;
    let xv = DVector::from_column_slice(x.data());
    let dense_f = dense_dft_matrix(h, w) * &xv;
    let dft_dense = max_abs_diff(dft2(&x)?.data(), dense_f.as_slice());
    let layout = SubbandLayout::new(h, w, 3)?;
    let psi = dense_haar_matrix(&layout).map(|v| Complex64::new(v, 0.0));
    let dense_c = psi * &xv;
    let haar_dense = max_abs_diff(dwt2_haar_with(&x, &layout)?.coeffs(), dense_c.as_slice());

    Ok(vec![
        Check::at_most(S, "dft_round_trip_100", dft_rt, 1e-12),
        Check::at_most(S, "haar_round_trip_100", haar_rt, 1e-12),
        Check::at_most(S, "energy_preservation_100", parseval, 1e-12),
        Check::at_most(S, "dft_vs_dense_8x8", dft_dense, 1e-10),
        Check::at_most(S, "haar_vs_dense_8x8_depth3", haar_dense, 1e-10),
    ])
}

fn solver_suite(seed: SeedTree) -> Result<Vec<Check>> {
    const S: &str = "solver";
    let mut out = conjugate_gaussian_fixed_point(seed.child("gaussian"))?;
    out.push(Check::at_most(S, "gec_one_group_vs_ec", gec_scalar_vs_ec(seed.child("gec"))?, 1e-10));
    Ok(out)
}

/// Gaussian prior `x ~ N(0, 1/gamma0)`: every EC fixed point is the exact
/// posterior mean, with `eta1 = eta2 = gamma1 + gamma2`.
fn conjugate_gaussian_fixed_point(seed: SeedTree) -> Result<Vec<Check>> {
    const S: &str = "solver";
    let (p, n, gamma0, gamma_w) = (24, 48, 2.0f64, 50.0f64);
    let mut rng = seed.rng();
    let a = DMatrix::from_fn(p, n, |_, _| normal(&mut rng) / (p as f64).sqrt());
    let x0 = DVector::from_fn(n, |_, _| normal(&mut rng) / gamma0.sqrt());
    let y = &a * &x0 + DVector::from_fn(p, |_, _| normal(&mut rng) / gamma_w.sqrt());
    let ata = a.tr_mul(&a) * gamma_w;
    let aty = a.tr_mul(&y) * gamma_w;
    let post = (&ata + DMatrix::identity(n, n) * gamma0)
        .lu()
        .solve(&aty)
        .ok_or_else(|| Error::Numerical("singular posterior system".into()))?;

    let f1 = |r: &[Complex64], g: f64| -> Result<(Vec<Complex64>, f64)> {
        let m = (&ata + DMatrix::identity(n, n) * g).lu();
        let rhs = &aty + DVector::from_iterator(n, r.iter().map(|z| g * z.re));
        let x = m.solve(&rhs).ok_or_else(|| Error::Numerical("singular f1 system".into()))?;
        let inv = m.try_inverse().ok_or_else(|| Error::Numerical("singular f1 system".into()))?;
        Ok((x.iter().map(|v| Complex64::new(*v, 0.0)).collect(), g * inv.trace() / n as f64))
    };
    let f2 = |r: &[Complex64], g: f64| -> Result<(Vec<Complex64>, f64)> {
        let k = g / (g + gamma0);
        Ok((r.iter().map(|z| z * k).collect(), k))
    };
    let r0 = vec![Complex64::new(0.0, 0.0); n];
    let cfg = EcConfig { damping_rho: 1.0, ..EcConfig::default() };
    let trace = ec_run(EcState::new(r0, 1.0), &f1, &f2, &cfg, 200)?;
    let last = trace.last().ok_or_else(|| Error::Numerical("EC produced no iterations".into()))?;

    let scale = post.amax();
    let mean_dev = last.x2_hat.iter().zip(post.iter()).map(|(z, v)| (z.re - v).abs()).fold(0.0, f64::max) / scale;
    let sum = last.gamma1 + last.gamma2;
    let eta_dev = ((last.eta1 - sum).abs().max((last.eta2 - sum).abs())) / sum;
    Ok(vec![
        Check::at_most(S, "gaussian_ec_posterior_mean", mean_dev, 1e-8),
        Check::at_most(S, "gaussian_ec_eta_equals_gamma_sum", eta_dev, 1e-8),
    ])
}

fn dense_b(fm: &ForwardModel) -> Result<DMatrix<Complex64>> {
    let layout = fm.layout().clone();
    let n = layout.len();
    let mut b = DMatrix::zeros(fm.num_measurements(), n);
    for k in 0..n {
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        e[k] = Complex64::new(1.0, 0.0);
        let col = fm.apply_b(&WaveletPyramid::new(layout.clone(), e)?)?;
        b.set_column(k, &DVector::from_vec(col));
    }
    Ok(b)
}

/// Largest per-iteration discrepancy (relative) between the wavelet engine
/// with one scalar precision and exact traces, and the scalar EC engine fed
/// a dense LU `f1`, over eight iterations of a small MRI problem.
fn gec_scalar_vs_ec(seed: SeedTree) -> Result<f64> {
    let n = 8;
    let s = seed.seed();
    let layout = SubbandLayout::new(n, n, 2)?;
    let mask = make_point_mask((n, n), Acceleration::integer(2)?, 2.0, 2, s)?;
    let maps = generate_coil_maps((n, n), 1, 0.5, CoilSupport::Full, s)?;
    let fm = ForwardModel::new(mask, maps, layout.clone())?;
    let x0 = generate_phantom((n, n), PhantomKind::SheppLogan, s)?;
    let m = simulate_measurements(&x0, &fm, 25.0, s)?;
    let (gw, y) = (m.gamma_w, m.y);
    let b = dense_b(&fm)?;
    let bh = b.adjoint();
    let bhb = &bh * &b * Complex64::new(gw, 0.0);
    let bhy = &bh * DVector::from_column_slice(&y) * Complex64::new(gw, 0.0);
    let nn = layout.len();

    let config = SolverConfig {
        max_iters: 8,
        cg_iters: 64,
        grouping: Grouping::Scalar,
        trace_mode: TraceMode::Exact,
        tol: 0.0,
        damping_rho: 0.7,
        ..SolverConfig::default()
    };
    let init = init_state(&y, &fm, &config, None, seed)?;
    let f1_gec = F1Cg::new(&fm, &y, gw, 64, 0.0)?;
    let soft = SoftThreshold::new(0.8)?;

    let f1_ec = |r: &[Complex64], g: f64| -> Result<(Vec<Complex64>, f64)> {
        let sys = &bhb + DMatrix::identity(nn, nn) * Complex64::new(g, 0.0);
        let rhs = &bhy + DVector::from_iterator(nn, r.iter().map(|z| z * g));
        let lu = sys.lu();
        let x = lu.solve(&rhs).ok_or_else(|| Error::Numerical("singular f1 system".into()))?;
        let inv = lu.try_inverse().ok_or_else(|| Error::Numerical("singular f1 system".into()))?;
        let div = (0..nn).map(|i| inv[(i, i)].re).sum::<f64>() * g / nn as f64;
        Ok((x.as_slice().to_vec(), div))
    };
    let f2_ec = |r: &[Complex64], g: f64| -> Result<(Vec<Complex64>, f64)> {
        let pyr = WaveletPyramid::new(layout.clone(), r.to_vec())?;
        let gv = PrecisionVector::new(Partition::whole(r.len()), vec![g])?;
        let res = soft.denoise(&pyr, &gv, SeedTree::new(0))?;
        let d = res.subband_divergence.ok_or_else(|| Error::Numerical("soft threshold gave no divergence".into()))?[0];
        Ok((res.estimate.into_coeffs(), d))
    };
    let ec_cfg = EcConfig { damping_rho: config.damping_rho, ..EcConfig::default() };
    let ec =
        ec_run(EcState::new(init.r1.coeffs().to_vec(), init.gamma1.get(0)), &f1_ec, &f2_ec, &ec_cfg, config.max_iters)?;

    let mut state = init;
    let mut worst = 0.0f64;
    for t in &ec[1..] {
        state = dgec_iterate(&state, &f1_gec, &soft, &config, seed)?;
        let scale = t.r1.iter().map(|z| z.norm()).fold(1.0, f64::max);
        worst = worst
            .max(max_abs_diff(state.r1.coeffs(), &t.r1) / scale)
            .max(max_abs_diff(state.r2.coeffs(), &t.r2) / scale)
            .max(max_abs_diff(state.c2_hat.coeffs(), &t.x2_hat) / scale);
        for (a, b) in [
            (state.gamma1.get(0), t.gamma1),
            (state.gamma2.get(0), t.gamma2),
            (state.eta1.get(0), t.eta1),
            (state.eta2.get(0), t.eta2),
        ] {
            worst = worst.max((a - b).abs() / b.abs());
        }
    }
    Ok(worst)
}

fn appendix_suite(seed: SeedTree) -> Result<Vec<Check>> {
    const S: &str = "appendix";
    let mut out = Vec::new();

    let mut rng = seed.child("instances").rng();
    let (mut dev, mut trace_d) = (0.0f64, 0.0f64);
    for k in 0..20u64 {
        let n = rng.random_range(8..=64usize);
        let p = rng.random_range(n / 2..=2 * n);
        let gamma1 = 10f64.powf(rng.random_range(-1.0..1.0));
        let gamma_w = 10f64.powf(rng.random_range(0.0..2.0));
        let a = DMatrix::from_fn(p, n, |_, _| normal(&mut rng) / (p as f64).sqrt());
        let e1: Vec<f64> = (0..n).map(|_| normal(&mut rng) / gamma1.sqrt()).collect();
        let w: Vec<f64> = (0..p).map(|_| normal(&mut rng) / gamma_w.sqrt()).collect();
        let model = build_ec_error_model(&a, gamma1, gamma_w)?;
        trace_d = trace_d.max(model.spectrum.trace_d().abs());
        let scale = e1.iter().chain(&w).fold(1.0f64, |m, v| m.max(v.abs()));
        dev = dev.max(ec_recursion_equivalence(&a, gamma1, gamma_w, &e1, &w, seed.indexed("x0", k))? / scale);
    }
    out.push(Check::at_most(S, "ec_error_recursion_20_instances", dev, 1e-10));
    out.push(Check::at_most(S, "trace_d_20_instances", trace_d, 1e-10));

    let wg = weingarten_moment_check(8, 100_000, seed.child("weingarten"))?;
    out.push(Check::at_most(S, "weingarten_fourth_moments_n8", wg.max_relative_deviation(), 0.05));

    let lambda = log_spaced_spectrum(128, 0.1, 10.0);
    let e2 = epsilon2_covariance_check(&lambda, 1.0, 1.0, 0.5, 20_000, seed.child("epsilon2"))?;
    out.push(Check::at_most(S, "epsilon2_diagonal_n128", e2.diag_relative_deviation(), 0.05));
    out.push(Check::at_most(S, "e2_mean_pooled_z", e2.mean_z.abs(), 3.0));

    let sc = offdiagonal_scaling(&[64, 128, 256], 1.0, 1.0, 0.5, 20_000, seed.child("scaling"))?;
    out.push(Check::within(S, "offdiagonal_decay_slope", sc.slope, -1.3, -0.7));
    Ok(out)
}
