use rayon::prelude::*;

use super::{chunks, EcSpectrum, HouseholderOrthogonal};
use crate::error::{Error, Result};
use crate::rng::{normal, SeedTree};

#[derive(Debug, Clone, PartialEq)]
pub struct Epsilon2Report {
    pub n: usize,
    pub trials: usize,
    pub eps1: f64,
    /// Closed-form `eps2`.
    pub eps2: f64,
    /// Mean over coordinates of the empirical variance of `e2_n`.
    pub diag_empirical: f64,
    /// Pooled z-score of the coordinate means of `e2` (all should be 0).
    pub mean_z: f64,
    pub max_abs_mean_z: f64,
    /// Least-squares fit of `c` in `E(e2_n e2_m) = c e1_n e1_m`, `n != m`.
    pub offdiag_coef: f64,
    /// Finite-N value `(N-3) / ((N+2)(N-1)) mean(d^2)`.
    pub offdiag_coef_theory: f64,
    /// `|c|` times the mean of `|e1_n e1_m|` over `n != m`.
    pub offdiag_mean_abs: f64,
}

impl Epsilon2Report {
    pub fn diag_relative_deviation(&self) -> f64 {
        (self.diag_empirical - self.eps2).abs() / self.eps2
    }
}

/// `lambda_j` log-spaced over `[lo, hi]`.
pub fn log_spaced_spectrum(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|j| (a + (b - a) * j as f64 / (n.max(2) - 1) as f64).exp()).collect()
}

/// A fixed, deliberately non-Gaussian `e1` (offset with periodic spikes)
/// with `|e1|^2 / N = variance`.
fn structured_e1(n: usize, variance: f64) -> Vec<f64> {
    let raw: Vec<f64> =
        (0..n).map(|j| 1.0 + if j % 7 == 0 { 4.0 } else { 0.0 } - 0.5 * (j >= n / 2) as u8 as f64).collect();
    let ms = raw.iter().map(|v| v * v).sum::<f64>() / n as f64;
    raw.iter().map(|v| v * (variance / ms).sqrt()).collect()
}

struct Sums {
    first: Vec<f64>,
    second: Vec<f64>,
    cross: f64,
}

/// Monte-Carlo over Haar `V` and Gaussian `w` of `e2 = V D V^T e1 + u` for a
/// fixed `e1`, with `A = diag(sqrt(lambda / gamma_w)) V^T` so that
/// `gamma_w A^T A` has eigenvalues `lambda` and eigenvectors `V`.
pub fn epsilon2_covariance_check(
    lambda: &[f64],
    gamma1: f64,
    gamma_w: f64,
    e1_variance: f64,
    trials: usize,
    seed: SeedTree,
) -> Result<Epsilon2Report> {
    let n = lambda.len();
    if n < 64 || trials < 10_000 {
        return Err(Error::InvalidInput(format!(
            "covariance check needs N >= 64 and >= 1e4 trials, got {n}, {trials}"
        )));
    }
    if !(gamma_w > 0.0 && e1_variance >= 0.0) {
        return Err(Error::InvalidInput("covariance check needs gamma_w > 0, e1 variance >= 0".into()));
    }
    let spec = EcSpectrum::new(lambda.to_vec(), gamma1)?;
    let e1 = structured_e1(n, e1_variance);
    // u = (gamma_w / alpha) V (Lambda + gamma1)^-1 V^T A^T w and V^T A^T w = sqrt(lambda / gamma_w) w.
    let u_gain: Vec<f64> =
        spec.lambda.iter().map(|l| gamma_w / spec.alpha * (l / gamma_w).sqrt() / (l + gamma1)).collect();
    let w_sd = 1.0 / gamma_w.sqrt();

    let parts: Vec<Sums> = chunks(trials)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(c, len)| {
            let mut rng = seed.indexed("chunk", c).rng();
            let mut s = Sums { first: vec![0.0; n], second: vec![0.0; n], cross: 0.0 };
            let mut t = vec![0.0; n];
            for _ in 0..len {
                let v = HouseholderOrthogonal::sample(n, &mut rng);
                t.copy_from_slice(&e1);
                v.apply_transpose(&mut t);
                for j in 0..n {
                    t[j] = spec.d[j] * t[j] + u_gain[j] * w_sd * normal(&mut rng);
                }
                v.apply(&mut t);
                let mut dot = 0.0;
                let mut diag = 0.0;
                for j in 0..n {
                    s.first[j] += t[j];
                    s.second[j] += t[j] * t[j];
                    dot += t[j] * e1[j];
                    diag += t[j] * t[j] * e1[j] * e1[j];
                }
                s.cross += dot * dot - diag;
            }
            s
        })
        .collect();
    let mut total = Sums { first: vec![0.0; n], second: vec![0.0; n], cross: 0.0 };
    for p in &parts {
        for j in 0..n {
            total.first[j] += p.first[j];
            total.second[j] += p.second[j];
        }
        total.cross += p.cross;
    }

    let tf = trials as f64;
    let nf = n as f64;
    let means: Vec<f64> = total.first.iter().map(|s| s / tf).collect();
    let vars: Vec<f64> = total.second.iter().zip(&means).map(|(s, m)| s / tf - m * m).collect();
    let diag_empirical = vars.iter().sum::<f64>() / nf;
    let z: Vec<f64> = means.iter().zip(&vars).map(|(m, v)| m / (v / tf).sqrt()).collect();
    let mean_z = means.iter().sum::<f64>() / nf / (diag_empirical / (tf * nf)).sqrt();
    let max_abs_mean_z = z.iter().map(|v| v.abs()).fold(0.0, f64::max);

    let sum_e2: f64 = e1.iter().map(|e| e * e).sum();
    let sum_e4: f64 = e1.iter().map(|e| e.powi(4)).sum();
    let offdiag_coef = total.cross / tf / (sum_e2 * sum_e2 - sum_e4);
    let mean_d2 = spec.d.iter().map(|d| d * d).sum::<f64>() / nf;
    let sum_abs: f64 = e1.iter().map(|e| e.abs()).sum();
    let mean_abs_pair = (sum_abs * sum_abs - sum_e2) / (nf * (nf - 1.0));
    Ok(Epsilon2Report {
        n,
        trials,
        eps1: e1_variance,
        eps2: spec.epsilon2(e1_variance),
        diag_empirical,
        mean_z,
        max_abs_mean_z,
        offdiag_coef,
        offdiag_coef_theory: (nf - 3.0) / ((nf + 2.0) * (nf - 1.0)) * mean_d2,
        offdiag_mean_abs: offdiag_coef.abs() * mean_abs_pair,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OffDiagonalScaling {
    pub ns: Vec<usize>,
    pub mean_abs: Vec<f64>,
    /// Least-squares slope of `log mean_abs` against `log N`; `-1` for `O(1/N)`.
    pub slope: f64,
}

/// Runs [`epsilon2_covariance_check`] on log-spaced spectra over `[0.1, 10]`
/// at each `N` and fits the decay of the off-diagonal covariance.
pub fn offdiagonal_scaling(
    ns: &[usize],
    gamma1: f64,
    gamma_w: f64,
    e1_variance: f64,
    trials: usize,
    seed: SeedTree,
) -> Result<OffDiagonalScaling> {
    if ns.len() < 2 {
        return Err(Error::InvalidInput("scaling fit needs at least two sizes".into()));
    }
    let mut mean_abs = Vec::with_capacity(ns.len());
    for (i, &n) in ns.iter().enumerate() {
        let lambda = log_spaced_spectrum(n, 0.1, 10.0);
        let r =
            epsilon2_covariance_check(&lambda, gamma1, gamma_w, e1_variance, trials, seed.indexed("size", i as u64))?;
        mean_abs.push(r.offdiag_mean_abs);
    }
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = mean_abs.iter().map(|v| v.max(f64::MIN_POSITIVE).ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(OffDiagonalScaling { ns: ns.to_vec(), mean_abs, slope: sxy / sxx })
}
