//! Acceptance run: one PASS/FAIL line per criterion, with its runtime budget.
//!
//! `cargo test --test acceptance` runs all nine; extra arguments select
//! criteria by id (`cargo test --test acceptance -- ac5 ac8`). A failing
//! criterion is reported but does not fail the process unless
//! `DGEC_ACCEPTANCE_STRICT=1` is set.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use dgec::baselines::{
    amp_init, amp_iterate, amp_state_evolution, run_pnp_pgd_mri, run_pr_admm_mri, AmpConfig, BernoulliGaussian,
    MriBaselineConfig,
};
use dgec::denoisers::soft::soft_threshold;
use dgec::denoisers::{Denoiser, PrecisionVector, SoftThreshold};
use dgec::diagnostics::{psnr, subband_error_report};
use dgec::experiment::{cmd_recover, ExperimentConfig, DIAGNOSTICS_FILE};
use dgec::forward::{
    generate_phantom, make_line_mask, make_point_mask, simulate_measurements, Acceleration, CoilMaps, ForwardModel,
    PhantomKind, SamplingMask,
};
use dgec::oracle::{
    build_ec_error_model, ec_recursion_equivalence, epsilon2_covariance_check, log_spaced_spectrum,
    offdiagonal_scaling, run_suite, weingarten_moment_check, Suite,
};
use dgec::rng::{complex_normal, normal, SeedTree};
use dgec::solver::{
    calibrate, ec_run, mc_subband_trace, run_dgec, run_dgec_observed, EcConfig, EcState, GecState, InitMode, Problem,
    SolverConfig,
};
use dgec::transforms::{
    dft2, dwt2_haar_with, idft2, idwt2_haar, ComplexImage, Partition, SubbandLayout, WaveletPyramid,
};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use statrs::distribution::{Binomial, DiscreteCDF};

type Outcome = Result<(bool, String), String>;

struct Criterion {
    id: &'static str,
    title: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

const CRITERIA: &[Criterion] = &[
    Criterion { id: "ac1", title: "transforms", budget: Duration::from_secs(10), run: ac1 },
    Criterion { id: "ac2", title: "EC error recursion", budget: Duration::from_secs(30), run: ac2 },
    Criterion { id: "ac3", title: "Haar fourth moments and e2 covariance", budget: Duration::from_secs(600), run: ac3 },
    Criterion { id: "ac4", title: "EC fixed point", budget: Duration::from_secs(60), run: ac4 },
    Criterion { id: "ac5", title: "AMP state evolution", budget: Duration::from_secs(300), run: ac5 },
    Criterion { id: "ac6", title: "D-GEC error statistics", budget: Duration::from_secs(900), run: ac6 },
    Criterion { id: "ac7", title: "recovery quality", budget: Duration::from_secs(600), run: ac7 },
    Criterion { id: "ac8", title: "MC divergence", budget: Duration::from_secs(60), run: ac8 },
    Criterion { id: "ac9", title: "determinism", budget: Duration::from_secs(600), run: ac9 },
];

fn main() {
    let wanted: Vec<String> =
        std::env::args().skip(1).filter(|a| !a.starts_with('-')).map(|a| a.to_lowercase()).collect();
    let strict = std::env::var("DGEC_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let (mut ran, mut passed) = (0, 0);
    for c in CRITERIA {
        if !wanted.is_empty() && !wanted.iter().any(|w| w == c.id) {
            continue;
        }
        let start = Instant::now();
        let outcome = (c.run)();
        let took = start.elapsed();
        let in_time = took <= c.budget;
        let (ok, detail) = match outcome {
            Ok((ok, d)) => (ok && in_time, d),
            Err(e) => (false, format!("error: {e}")),
        };
        ran += 1;
        passed += ok as usize;
        println!(
            "{} {} {}: {} [{:.1} s, budget {} s{}]",
            if ok { "PASS" } else { "FAIL" },
            c.id.to_uppercase(),
            c.title,
            detail,
            took.as_secs_f64(),
            c.budget.as_secs(),
            if in_time { "" } else { ", over budget" }
        );
    }
    println!("acceptance: {passed}/{ran} criteria passed");
    if strict && passed < ran {
        std::process::exit(1);
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn random_image<R: Rng>(rng: &mut R, h: usize, w: usize) -> ComplexImage {
    ComplexImage::from_fn(h, w, |_, _| complex_normal(rng, 1.0))
}

// ---------------------------------------------------------------- AC1

/// Direct double sum with `exp(-2 pi i (u m / H + v n / W)) / sqrt(HW)`.
fn naive_dft(x: &ComplexImage) -> Vec<Complex64> {
    let (h, w) = x.shape();
    let mut out = vec![Complex64::new(0.0, 0.0); h * w];
    for u in 0..h {
        for v in 0..w {
            let mut acc = Complex64::new(0.0, 0.0);
            for m in 0..h {
                for n in 0..w {
                    let ph = -2.0 * PI * ((u * m) as f64 / h as f64 + (v * n) as f64 / w as f64);
                    acc += x.data()[m * w + n] * Complex64::from_polar(1.0, ph);
                }
            }
            out[u * w + v] = acc / ((h * w) as f64).sqrt();
        }
    }
    out
}

/// One Haar analysis level on the approximation block, written out by hand:
/// LL = (a+b+c+d)/2, LH = (a-b+c-d)/2 (column difference), HL = (a+b-c-d)/2,
/// HH = (a-b-c+d)/2, where a b / c d is a 2x2 block.
fn naive_haar_level(x: &[Complex64], h: usize, w: usize) -> [Vec<Complex64>; 4] {
    let (h2, w2) = (h / 2, w / 2);
    let mut bands: [Vec<Complex64>; 4] = Default::default();
    for b in &mut bands {
        *b = vec![Complex64::new(0.0, 0.0); h2 * w2];
    }
    for i in 0..h2 {
        for j in 0..w2 {
            let a = x[2 * i * w + 2 * j];
            let b = x[2 * i * w + 2 * j + 1];
            let c = x[(2 * i + 1) * w + 2 * j];
            let d = x[(2 * i + 1) * w + 2 * j + 1];
            bands[0][i * w2 + j] = (a + b + c + d) / 2.0;
            bands[1][i * w2 + j] = (a - b + c - d) / 2.0;
            bands[2][i * w2 + j] = (a + b - c - d) / 2.0;
            bands[3][i * w2 + j] = (a - b - c + d) / 2.0;
        }
    }
    bands
}

fn ac1() -> Outcome {
    let checks = run_suite(Suite::Transforms, SeedTree::new(2024)).map_err(e)?;
    let mut ok = checks.iter().all(|c| c.pass);
    let worst_rt = checks.iter().filter(|c| c.name.ends_with("_100")).map(|c| c.value).fold(0.0, f64::max);

    // the 8x8 dense comparisons again, against oracles written here
    let mut rng = SeedTree::new(7).rng();
    let (mut dft_dev, mut haar_dev) = (0.0f64, 0.0f64);
    for _ in 0..5 {
        let x = random_image(&mut rng, 8, 8);
        let got = dft2(&x).map_err(e)?;
        dft_dev = dft_dev.max(max_diff(got.data(), &naive_dft(&x)));
        let back = idft2(&got).map_err(e)?;
        dft_dev = dft_dev.max(max_diff(back.data(), x.data()));

        let layout = SubbandLayout::new(8, 8, 3).map_err(e)?;
        let pyr = dwt2_haar_with(&x, &layout).map_err(e)?;
        let (mut approx, mut hh, mut ww) = (x.data().to_vec(), 8, 8);
        // detail bands are listed coarse to fine after LL; compare by name
        for level in 1..=3 {
            let [ll, lh, hl, hhb] = naive_haar_level(&approx, hh, ww);
            for (suffix, band) in [("LH", &lh), ("HL", &hl), ("HH", &hhb)] {
                let name = format!("{suffix}{level}");
                let ell =
                    layout.subbands().iter().position(|s| s.name() == name).ok_or(format!("no subband {name}"))?;
                haar_dev = haar_dev.max(max_diff(pyr.subband(ell), band));
            }
            approx = ll;
            hh /= 2;
            ww /= 2;
        }
        haar_dev = haar_dev.max(max_diff(pyr.subband(0), &approx));
    }
    ok &= dft_dev <= 1e-10 && haar_dev <= 1e-10;
    Ok((
        ok,
        format!(
            "100 random round trips max rel err {worst_rt:.1e} (<= 1e-12); 8x8 vs direct DFT {dft_dev:.1e}, vs hand Haar {haar_dev:.1e} (<= 1e-10)"
        ),
    ))
}

// ---------------------------------------------------------------- AC2

fn ac2() -> Outcome {
    let mut rng = SeedTree::new(31).rng();
    let (mut dev, mut trace_d, mut alpha_dev) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..20u64 {
        let n = rng.random_range(8..=64usize);
        let p = rng.random_range(n / 2..=2 * n);
        let gamma1 = 10f64.powf(rng.random_range(-1.0..1.0));
        let gamma_w = 10f64.powf(rng.random_range(0.0..2.0));
        let a = DMatrix::from_fn(p, n, |_, _| normal(&mut rng) / (p as f64).sqrt());
        let e1: Vec<f64> = (0..n).map(|_| normal(&mut rng) / gamma1.sqrt()).collect();
        let w: Vec<f64> = (0..p).map(|_| normal(&mut rng) / gamma_w.sqrt()).collect();
        let model = build_ec_error_model(&a, gamma1, gamma_w).map_err(e)?;
        trace_d = trace_d.max(model.spectrum.trace_d().abs());
        // alpha = 1 - gamma1 tr((gamma_w A^T A + gamma1 I)^-1) / N
        let q = (a.tr_mul(&a) * gamma_w + DMatrix::identity(n, n) * gamma1).try_inverse().ok_or("singular")?;
        alpha_dev = alpha_dev.max((1.0 - gamma1 * q.trace() / n as f64 - model.spectrum.alpha).abs());
        let scale = e1.iter().chain(&w).fold(1.0f64, |m, v| m.max(v.abs()));
        dev =
            dev.max(ec_recursion_equivalence(&a, gamma1, gamma_w, &e1, &w, SeedTree::new(100 + k)).map_err(e)? / scale);
    }
    Ok((
        dev <= 1e-10 && trace_d <= 1e-10 && alpha_dev <= 1e-12,
        format!("20 instances: recursion max dev {dev:.1e} (<= 1e-10), max |tr D| {trace_d:.1e} (<= 1e-10), alpha vs dense inverse {alpha_dev:.1e}"),
    ))
}

// ---------------------------------------------------------------- AC3

fn ac3() -> Outcome {
    let n = 8.0f64;
    let wg = weingarten_moment_check(8, 100_000, SeedTree::new(41)).map_err(e)?;
    // Haar-orthogonal fourth moments, written out independently
    let expected =
        [3.0 / (n * (n + 2.0)), 1.0 / (n * (n + 2.0)), 1.0 / (n * (n + 2.0)), (n + 1.0) / ((n - 1.0) * n * (n + 2.0))];
    let wg_dev = wg.empirical.iter().zip(&expected).map(|(a, b)| (a - b).abs() / b).fold(0.0, f64::max);
    let table_dev = wg.theoretical.iter().zip(&expected).map(|(a, b)| (a - b).abs() / b).fold(0.0, f64::max);

    let lambda = log_spaced_spectrum(128, 0.1, 10.0);
    let e2 = epsilon2_covariance_check(&lambda, 1.0, 1.0, 0.5, 20_000, SeedTree::new(42)).map_err(e)?;
    // eps2 = eps1 mean(d^2) + mean(sigma^2 / lambda) for C = gamma_w A^T A
    // with eigenvalues lambda, alpha = mean(lambda / (lambda + gamma1)),
    // sigma = lambda / (alpha (lambda + gamma1)), d = 1 - sigma
    let gamma1 = 1.0;
    let alpha = lambda.iter().map(|l| l / (l + gamma1)).sum::<f64>() / lambda.len() as f64;
    let sigma: Vec<f64> = lambda.iter().map(|l| l / (alpha * (l + gamma1))).collect();
    let mean_d2 = sigma.iter().map(|s| (1.0 - s).powi(2)).sum::<f64>() / lambda.len() as f64;
    let noise = sigma.iter().zip(&lambda).map(|(s, l)| s * s / l).sum::<f64>() / lambda.len() as f64;
    let eps2_indep = 0.5 * mean_d2 + noise;
    let eps2_dev = (eps2_indep - e2.eps2).abs() / e2.eps2;

    let sc = offdiagonal_scaling(&[64, 128, 256], 1.0, 1.0, 0.5, 20_000, SeedTree::new(43)).map_err(e)?;
    let ok = wg_dev <= 0.05
        && table_dev <= 1e-12
        && e2.diag_relative_deviation() <= 0.05
        && eps2_dev <= 1e-10
        && e2.mean_z.abs() <= 3.0
        && (-1.3..=-0.7).contains(&sc.slope);
    Ok((
        ok,
        format!(
            "fourth moments N=8 max rel dev {wg_dev:.3} (<= 0.05); e2 diag N=128 rel dev {:.2e} (<= 0.05), eps2 {:.6} vs closed form rel {eps2_dev:.1e}, pooled mean z {:.2}; off-diagonal slope over N=64,128,256 {:.2} (in [-1.3, -0.7])",
            e2.diag_relative_deviation(),
            e2.eps2,
            e2.mean_z,
            sc.slope
        ),
    ))
}

// ---------------------------------------------------------------- AC4

fn ac4() -> Outcome {
    let (p, n, gamma0, gamma_w) = (30, 60, 1.5f64, 40.0f64);
    let mut rng = SeedTree::new(51).rng();
    let a = DMatrix::from_fn(p, n, |_, _| normal(&mut rng) / (p as f64).sqrt());
    let x0 = DVector::from_fn(n, |_, _| normal(&mut rng) / gamma0.sqrt());
    let y = &a * &x0 + DVector::from_fn(p, |_, _| normal(&mut rng) / gamma_w.sqrt());
    let ata = a.tr_mul(&a) * gamma_w;
    let aty = a.tr_mul(&y) * gamma_w;
    let posterior = (&ata + DMatrix::identity(n, n) * gamma0).lu().solve(&aty).ok_or("singular")?;

    let f1 = |r: &[Complex64], g: f64| -> dgec::Result<(Vec<Complex64>, f64)> {
        let m = &ata + DMatrix::identity(n, n) * g;
        let inv = m.try_inverse().expect("positive definite");
        let x = &inv * (&aty + DVector::from_iterator(n, r.iter().map(|z| g * z.re)));
        Ok((x.iter().map(|v| Complex64::new(*v, 0.0)).collect(), g * inv.trace() / n as f64))
    };
    let f2 = |r: &[Complex64], g: f64| -> dgec::Result<(Vec<Complex64>, f64)> {
        let k = g / (g + gamma0);
        Ok((r.iter().map(|z| z * k).collect(), k))
    };
    let cfg = EcConfig { damping_rho: 1.0, ..EcConfig::default() };
    let trace = ec_run(EcState::new(vec![Complex64::new(0.0, 0.0); n], 1.0), &f1, &f2, &cfg, 100).map_err(e)?;
    let last = trace.last().ok_or("no iterations")?;
    let mean_dev =
        last.x2_hat.iter().zip(posterior.iter()).map(|(z, v)| (z.re - v).abs()).fold(0.0, f64::max) / posterior.amax();
    let sum = last.gamma1 + last.gamma2;
    let eta_dev = (last.eta1 - sum).abs().max((last.eta2 - sum).abs()) / sum;

    let solver = run_suite(Suite::Solver, SeedTree::new(52)).map_err(e)?;
    let gec = solver.iter().find(|c| c.name == "gec_one_group_vs_ec").ok_or("missing GEC/EC check")?;
    Ok((
        mean_dev <= 1e-6 && eta_dev <= 1e-6 && gec.value <= 1e-10,
        format!(
            "posterior mean dev {mean_dev:.1e}, eta vs gamma1+gamma2 {eta_dev:.1e} (<= 1e-6); GEC L=1 vs EC per iteration {:.1e} (<= 1e-10)",
            gec.value
        ),
    ))
}

// ---------------------------------------------------------------- AC5

/// MMSE of the Bernoulli-Gaussian prior on `r = x + sqrt(tau) z`, by a fine
/// trapezoid over `r` of the posterior-mean energy: `E x^2 - E[E(x|r)^2]`.
fn bg_mmse_trapezoid(rho: f64, var: f64, tau: f64) -> f64 {
    let s1 = var + tau;
    let lim = 14.0 * s1.sqrt();
    let h = 0.01 * tau.sqrt();
    let steps = (2.0 * lim / h).ceil() as usize;
    let h = 2.0 * lim / steps as f64;
    let gauss = |r: f64, v: f64| (-r * r / (2.0 * v)).exp() / (2.0 * PI * v).sqrt();
    let mut acc = 0.0;
    for i in 0..=steps {
        let r = -lim + i as f64 * h;
        let (p0, p1) = ((1.0 - rho) * gauss(r, tau), rho * gauss(r, s1));
        let pr = p0 + p1;
        if pr <= 0.0 {
            continue;
        }
        let m = p1 / pr * r * var / s1;
        let wgt = if i == 0 || i == steps { 0.5 } else { 1.0 };
        acc += wgt * pr * m * m;
    }
    rho * var - acc * h
}

fn ac5() -> Outcome {
    let (p, n, iters, trials) = (512usize, 1024usize, 10usize, 20u64);
    let (rho, var, tau_w) = (0.1, 1.0, 1e-2);
    let prior = BernoulliGaussian::new(rho, var).map_err(e)?;
    let delta = n as f64 / p as f64;
    let mut se = vec![tau_w + delta * rho * var];
    for t in 1..iters {
        se.push(tau_w + delta * bg_mmse_trapezoid(rho, var, se[t - 1]));
    }
    let lib = amp_state_evolution(prior.second_moment(), tau_w, n, p, |t| prior.mmse(t), iters).map_err(e)?;
    let se_agree = se.iter().zip(&lib.tau).map(|(a, b)| (a - b).abs() / a).fold(0.0, f64::max);

    let taus: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let seed = SeedTree::new(500 + trial);
            let mut rng = seed.child("matrix").rng();
            let a = DMatrix::from_fn(p, n, |_, _| normal(&mut rng) / (p as f64).sqrt());
            let mut rng = seed.child("signal").rng();
            let x0: Vec<f64> =
                (0..n).map(|_| if rng.random::<f64>() < rho { var.sqrt() * normal(&mut rng) } else { 0.0 }).collect();
            let y: Vec<f64> =
                (&a * DVector::from_vec(x0)).iter().map(|v| v + tau_w.sqrt() * normal(&mut rng)).collect();
            let cfg = AmpConfig::default();
            let mut s = amp_init(&a, &cfg)?;
            let mut out = Vec::with_capacity(iters);
            for _ in 0..iters {
                s = amp_iterate(&s, &y, &a, &prior, &cfg)?;
                out.push(s.tau);
            }
            Ok(out)
        })
        .collect::<dgec::Result<_>>()
        .map_err(e)?;
    let worst = (0..iters)
        .map(|t| {
            let m = taus.iter().map(|v| v[t]).sum::<f64>() / trials as f64;
            (m - se[t]).abs() / se[t]
        })
        .fold(0.0, f64::max);
    Ok((
        worst <= 0.10,
        format!("512x1024, rho 0.1, tau_w 1e-2, 20 seeds: max |tau_emp - tau_SE| / tau_SE over t <= 10 = {worst:.3} (<= 0.10); library SE vs trapezoid SE {se_agree:.1e}"),
    ))
}

// ---------------------------------------------------------------- AC6

struct TrialStats {
    /// `[iteration][subband]`
    predicted: Vec<Vec<f64>>,
    empirical_var: Vec<Vec<f64>>,
    rejections: Vec<(usize, usize)>,
}

fn ac6_trial(trial: u64) -> dgec::Result<TrialStats> {
    let seed = SeedTree::new(600).indexed("trial", trial);
    let n = 128;
    let layout = SubbandLayout::new(n, n, 4)?;
    let kind = PhantomKind::PiecewiseSmooth;
    let x0 = generate_phantom((n, n), kind, seed.child("phantom").seed())?;
    let mask = make_point_mask((n, n), Acceleration::integer(4)?, 8.0, 8, seed.child("mask").seed())?;
    let fm = ForwardModel::new(mask, CoilMaps::single(n, n), layout.clone())?;
    let m = simulate_measurements(&x0, &fm, 40.0, seed.child("noise").seed())?;
    let cal_seed = seed.child("calibration");
    let cal_imgs = (0..5)
        .map(|i| generate_phantom((n, n), kind, cal_seed.indexed("phantom", i).seed()))
        .collect::<dgec::Result<Vec<_>>>()?;
    let cal = calibrate(&fm, &cal_imgs, 40.0, cal_seed.child("noise"))?;
    let cfg = SolverConfig {
        max_iters: 10,
        cg_iters: 150,
        damping_rho: 0.5,
        init_mode: InitMode::BhyPlusNoise,
        init_inflation: 10.0,
        tol: 0.0,
        ..SolverConfig::default()
    };
    let c0 = dwt2_haar_with(&x0, &layout)?;
    let support = layout.coefficient_support(fm.support());
    let den = SoftThreshold::new(1.0)?;
    let problem = Problem { fm: &fm, y: &m.y, gamma_w: m.gamma_w, truth: Some(&x0) };
    let mut stats = TrialStats { predicted: vec![], empirical_var: vec![], rejections: vec![] };
    let mut failure = None;
    let mut observe = |s: &GecState| match subband_error_report(&s.r2, &c0, &layout, &support, 0.05) {
        Ok(rep) => {
            stats.predicted.push(s.gamma2.std_devs());
            stats.empirical_var.push(rep.sds().iter().map(|v| v * v).collect());
            stats.rejections.push(rep.rejection_counts());
        }
        Err(err) => failure = Some(err),
    };
    run_dgec_observed(&problem, &den, &cfg, Some(&cal), seed.child("solver"), &mut observe)?;
    match failure {
        Some(err) => Err(err),
        None => Ok(stats),
    }
}

fn binomial_95(n: usize, p: f64) -> Result<(usize, usize), String> {
    let b = Binomial::new(p, n as u64).map_err(e)?;
    Ok((b.inverse_cdf(0.025) as usize, b.inverse_cdf(0.975) as usize))
}

fn ac6() -> Outcome {
    let trials = 20u64;
    let stats: Vec<TrialStats> = (0..trials).into_par_iter().map(ac6_trial).collect::<dgec::Result<_>>().map_err(e)?;
    let iters = stats[0].predicted.len();
    let bands = stats[0].predicted[0].len();
    let mut worst_ratio = (1.0f64, 0usize, 0usize);
    let mut sd_ok = true;
    let mut rej_ok = true;
    let mut per_iter = Vec::new();
    for t in 0..iters {
        for ell in 0..bands {
            let pred = stats.iter().map(|s| s.predicted[t][ell]).sum::<f64>() / trials as f64;
            let emp = (stats.iter().map(|s| s.empirical_var[t][ell]).sum::<f64>() / trials as f64).sqrt();
            let ratio = pred / emp;
            if (ratio - 1.0).abs() > 0.15 {
                sd_ok = false;
            }
            if (ratio - 1.0).abs() > (worst_ratio.0 - 1.0).abs() {
                worst_ratio = (ratio, t + 1, ell);
            }
        }
        let (r, tests) = stats.iter().fold((0, 0), |(a, b), s| (a + s.rejections[t].0, b + s.rejections[t].1));
        let (lo, hi) = binomial_95(tests, 0.05)?;
        rej_ok &= (lo..=hi).contains(&r);
        per_iter.push(format!("{r}/{tests}"));
    }
    let (lo, hi) = binomial_95(stats[0].rejections[0].1 * trials as usize, 0.05)?;
    Ok((
        sd_ok && rej_ok,
        format!(
            "worst predicted/empirical SD {:.2} (iteration {}, subband {}; need within 15%); t-test rejections per iteration {} (95% band [{lo}, {hi}])",
            worst_ratio.0,
            worst_ratio.1,
            worst_ratio.2,
            per_iter.join(" ")
        ),
    ))
}

// ---------------------------------------------------------------- AC7

fn ac7_case(line: bool, trial: u64) -> dgec::Result<[f64; 4]> {
    let seed = SeedTree::new(700).indexed("trial", trial);
    let n = 128;
    let layout = SubbandLayout::new(n, n, 4)?;
    let x0 = generate_phantom((n, n), PhantomKind::PiecewiseSmooth, seed.child("phantom").seed())?;
    let acc = Acceleration::integer(4)?;
    let mask: SamplingMask = if line {
        make_line_mask((n, n), acc, 2.0, 8, seed.child("mask").seed())?
    } else {
        make_point_mask((n, n), acc, 2.0, 8, seed.child("mask").seed())?
    };
    let fm = ForwardModel::new(mask, CoilMaps::single(n, n), layout)?;
    let m = simulate_measurements(&x0, &fm, 40.0, seed.child("noise").seed())?;
    let mut zf = idwt2_haar(&fm.apply_bh(&m.y)?)?;
    fm.restrict_to_support(&mut zf);
    let den = SoftThreshold::new(3.0)?;
    let cfg = SolverConfig { max_iters: 40, cg_iters: 10, damping_rho: 0.5, tol: 0.0, ..SolverConfig::default() };
    let problem = Problem { fm: &fm, y: &m.y, gamma_w: m.gamma_w, truth: Some(&x0) };
    let out = run_dgec(&problem, &den, &cfg, None, seed.child("solver"))?;
    let base = MriBaselineConfig { iters: 40, gamma: m.gamma_w, cg_iters: 10 };
    let admm = run_pr_admm_mri(&fm, &m.y, m.gamma_w, &den, &base, Some(&x0), seed.child("admm"))?;
    let pgd = run_pnp_pgd_mri(&fm, &m.y, &den, &base, Some(&x0), seed.child("pgd"))?;
    let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
    let admm_last =
        if finite(&admm.psnr) && admm.estimate.is_finite() { admm.psnr[admm.psnr.len() - 1] } else { f64::NAN };
    let pgd_last = if finite(&pgd.psnr) && pgd.estimate.is_finite() { pgd.psnr[pgd.psnr.len() - 1] } else { f64::NAN };
    Ok([psnr(&zf, &x0)?, psnr(&out.image, &x0)?, admm_last, pgd_last])
}

fn ac7() -> Outcome {
    let cases: Vec<(bool, u64)> = [false, true].iter().flat_map(|&l| (0..5).map(move |t| (l, t))).collect();
    let res: Vec<[f64; 4]> = cases.par_iter().map(|&(l, t)| ac7_case(l, t)).collect::<dgec::Result<_>>().map_err(e)?;
    let gains: Vec<f64> = res.iter().map(|r| r[1] - r[0]).collect();
    let min_gain = gains.iter().cloned().fold(f64::INFINITY, f64::min);
    // baselines must not diverge: finite and no worse than zero-fill
    let baselines_ok = res.iter().all(|r| r[2].is_finite() && r[3].is_finite() && r[2] > r[0] && r[3] > r[0]);
    let fmt = |range: std::ops::Range<usize>| {
        res[range]
            .iter()
            .map(|r| format!("{:.1}/{:.1}/{:.1}/{:.1}", r[0], r[1], r[2], r[3]))
            .collect::<Vec<_>>()
            .join(" ")
    };
    Ok((
        min_gain >= 3.0 && baselines_ok,
        format!(
            "min D-GEC gain over zero-fill {min_gain:.2} dB (>= 3); zf/dgec/admm/pgd dB point: {} line: {}",
            fmt(0..5),
            fmt(5..10)
        ),
    ))
}

// ---------------------------------------------------------------- AC8

fn ac8() -> Outcome {
    let nl = 4096;
    let part = Partition::from_ranges(vec![0..nl]).map_err(e)?;
    let mut rng = SeedTree::new(800).rng();
    let mut worst = 0.0f64;
    let mut lib_dev = 0.0f64;
    let mut details = Vec::new();
    let mut small_step = Vec::new();
    for k in 0..10u64 {
        let gamma = 10f64.powf(rng.random_range(-1.0..2.0));
        let lambda = rng.random_range(0.5..2.0) * gamma.sqrt();
        let sparsity = rng.random_range(0.05..0.5);
        let signal_var = 10f64.powf(rng.random_range(0.0..2.0)) / gamma;
        let r: Vec<Complex64> = (0..nl)
            .map(|_| {
                let x = if rng.random::<f64>() < sparsity {
                    complex_normal(&mut rng, signal_var)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                x + complex_normal(&mut rng, 1.0 / gamma)
            })
            .collect();
        let t = lambda / gamma;
        // analytic divergence, per coefficient 1 - t / (2|r|) above threshold
        let analytic =
            r.iter().map(|z| if z.norm() > t { 1.0 - t / (2.0 * z.norm()) } else { 0.0 }).sum::<f64>() / nl as f64;

        let layout_free = |v: &[Complex64]| -> dgec::Result<Vec<Complex64>> {
            Ok(v.iter().map(|z| soft_threshold(*z, t).0).collect())
        };
        let fr = layout_free(&r).map_err(e)?;
        let g = PrecisionVector::uniform(part.clone(), gamma).map_err(e)?;
        let mc = mc_subband_trace(layout_free, &r, &fr, &g, 0, SeedTree::new(810).indexed("probe", k)).map_err(e)?
            / nl as f64;
        let rel = (mc - analytic).abs() / analytic;
        worst = worst.max(rel);
        details.push(format!("{rel:.3}"));
        // not part of the criterion: the same probe with a step of 1e-6 noise
        // SDs, which separates finite-difference bias from probe variance
        let tiny = PrecisionVector::uniform(part.clone(), gamma * 1e12).map_err(e)?;
        let mc_small = mc_subband_trace(layout_free, &r, &fr, &tiny, 0, SeedTree::new(810).indexed("probe", k))
            .map_err(e)?
            / nl as f64;
        small_step.push(format!("{:.3}", (mc_small - analytic).abs() / analytic));

        // the denoiser's closed form agrees with the one above
        let layout = SubbandLayout::new(64, 64, 0).map_err(e)?;
        let pyr = WaveletPyramid::new(layout.clone(), r.clone()).map_err(e)?;
        let den = SoftThreshold::new(lambda / gamma.sqrt()).map_err(e)?;
        let out = den
            .denoise(&pyr, &PrecisionVector::for_layout(&layout, vec![gamma]).map_err(e)?, SeedTree::new(0))
            .map_err(e)?;
        let d = out.subband_divergence.ok_or("no closed-form divergence")?[0];
        lib_dev = lib_dev.max((d - analytic).abs());
    }
    Ok((
        worst <= 0.02 && lib_dev <= 1e-12,
        format!(
            "N_l = 4096, 10 draws: max relative MC error {worst:.4} (<= 0.02) [{}]; closed form vs denoiser {lib_dev:.1e}; with a 1e-6 SD step instead [{}]",
            details.join(" "),
            small_step.join(" ")
        ),
    ))
}

// ---------------------------------------------------------------- AC9

fn ac9() -> Outcome {
    let dir = tempfile::tempdir().map_err(e)?;
    let cfg = ExperimentConfig::parse("seed = 9\nmax_iters = 15\n").map_err(e)?;
    let mut csvs = Vec::new();
    for run in ["first", "second"] {
        let out = dir.path().join(run);
        cmd_recover(&cfg, 9, 1, &out).map_err(e)?;
        csvs.push(std::fs::read(out.join(DIAGNOSTICS_FILE)).map_err(e)?);
    }
    let rows = String::from_utf8_lossy(&csvs[0]).lines().count();
    Ok((
        csvs[0] == csvs[1] && rows == 16,
        format!(
            "128x128 default config, 15 iterations: {} CSV bytes, identical = {}",
            csvs[0].len(),
            csvs[0] == csvs[1]
        ),
    ))
}
