use std::io::Write;

use num_complex::Complex64;
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};
use crate::transforms::{SubbandLayout, WaveletPyramid};

/// Error statistics of one subband. The t-statistics and rejection flags
/// are `None` when the sample is degenerate (fewer than two samples or zero
/// spread).
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandStats {
    pub name: String,
    pub count: usize,
    pub mean: Complex64,
    /// `sqrt(sum |e - mean|^2 / (n - 1))`, comparable with `1/sqrt(gamma)`.
    pub sd: f64,
    pub t_re: Option<f64>,
    pub t_im: Option<f64>,
    pub reject_re: Option<bool>,
    pub reject_im: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubbandErrorReport {
    pub alpha: f64,
    pub subbands: Vec<SubbandStats>,
}

impl SubbandErrorReport {
    /// `(rejections, tests)` over the non-degenerate real and imaginary tests.
    pub fn rejection_counts(&self) -> (usize, usize) {
        let flags = self.subbands.iter().flat_map(|s| [s.reject_re, s.reject_im]).flatten();
        flags.fold((0, 0), |(r, n), f| (r + f as usize, n + 1))
    }

    pub fn sds(&self) -> Vec<f64> {
        self.subbands.iter().map(|s| s.sd).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["subband", "count", "mean_re", "mean_im", "sd", "t_re", "t_im", "reject_re", "reject_im"])?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let flag = |v: Option<bool>| v.map(|x| (x as u8).to_string()).unwrap_or_default();
        for s in &self.subbands {
            w.write_record([
                s.name.clone(),
                s.count.to_string(),
                s.mean.re.to_string(),
                s.mean.im.to_string(),
                s.sd.to_string(),
                opt(s.t_re),
                opt(s.t_im),
                flag(s.reject_re),
                flag(s.reject_im),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Two-sided one-sample t-test of zero mean: `(t, p)`.
pub fn t_test_zero_mean(samples: &[f64]) -> Option<(f64, f64)> {
    let n = samples.len();
    if n < 2 {
        return None;
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    if !(var > 0.0) {
        return None;
    }
    let t = mean / (var / n as f64).sqrt();
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).ok()?;
    Some((t, 2.0 * dist.cdf(-t.abs())))
}

/// Per-subband statistics of `r2 - c0` over coefficients flagged in
/// `support` (a coefficient-domain mask, see
/// [`SubbandLayout::coefficient_support`]).
pub fn subband_error_report(
    r2: &WaveletPyramid,
    c0: &WaveletPyramid,
    layout: &SubbandLayout,
    support: &[bool],
    alpha: f64,
) -> Result<SubbandErrorReport> {
    if r2.layout() != layout || c0.layout() != layout || support.len() != layout.len() {
        return Err(Error::ShapeMismatch("error report inputs disagree with the layout".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("alpha must be in (0, 1), got {alpha}")));
    }
    if !support.iter().any(|&s| s) {
        return Err(Error::InvalidInput("error report support is empty".into()));
    }
    let mut subbands = Vec::with_capacity(layout.num_subbands());
    for sb in layout.subbands() {
        let e: Vec<Complex64> = sb.range().filter(|&k| support[k]).map(|k| r2.coeffs()[k] - c0.coeffs()[k]).collect();
        let n = e.len();
        let mean = if n > 0 { e.iter().sum::<Complex64>() / n as f64 } else { Complex64::new(0.0, 0.0) };
        let sd =
            if n > 1 { (e.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / (n - 1) as f64).sqrt() } else { 0.0 };
        let re: Vec<f64> = e.iter().map(|v| v.re).collect();
        let im: Vec<f64> = e.iter().map(|v| v.im).collect();
        let (tr, ti) = (t_test_zero_mean(&re), t_test_zero_mean(&im));
        subbands.push(SubbandStats {
            name: sb.name(),
            count: n,
            mean,
            sd,
            t_re: tr.map(|x| x.0),
            t_im: ti.map(|x| x.0),
            reject_re: tr.map(|x| x.1 < alpha),
            reject_im: ti.map(|x| x.1 < alpha),
        });
    }
    Ok(SubbandErrorReport { alpha, subbands })
}

/// Standard-normal quantiles against the quantiles of the standardized
/// samples, at probabilities `(i + 0.5) / n_quantiles`.
pub fn qq_data(samples: &[f64], n_quantiles: usize) -> Result<Vec<(f64, f64)>> {
    let n = samples.len();
    if n < 2 || n_quantiles == 0 {
        return Err(Error::InvalidInput("QQ data needs at least two samples and one quantile".into()));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let sd = (samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    if !(sd > 0.0) {
        return Err(Error::InvalidInput("QQ data samples have zero variance".into()));
    }
    let mut z: Vec<f64> = samples.iter().map(|v| (v - mean) / sd).collect();
    z.sort_by(f64::total_cmp);
    let normal = Normal::standard();
    Ok((0..n_quantiles)
        .map(|i| {
            let p = (i as f64 + 0.5) / n_quantiles as f64;
            let pos = p * n as f64 - 0.5;
            let lo = pos.floor().clamp(0.0, (n - 1) as f64) as usize;
            let hi = (lo + 1).min(n - 1);
            let frac = (pos - lo as f64).clamp(0.0, 1.0);
            (normal.inverse_cdf(p), z[lo] + frac * (z[hi] - z[lo]))
        })
        .collect())
}

pub fn write_qq_csv<W: Write>(qq: &[(f64, f64)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["theoretical", "empirical"])?;
    for (a, b) in qq {
        w.write_record([a.to_string(), b.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Mean of the horizontal and vertical lag-1 autocorrelations of a
/// (mean-removed) field on a `rows x cols` grid, restricted to `mask`.
/// `Ok(None)` flags a constant field.
pub fn whiteness_score(values: &[f64], rows: usize, cols: usize, mask: Option<&[bool]>) -> Result<Option<f64>> {
    if values.len() != rows * cols || mask.is_some_and(|m| m.len() != values.len()) {
        return Err(Error::ShapeMismatch("whiteness input does not match grid".into()));
    }
    let inside = |k: usize| mask.is_none_or(|m| m[k]);
    let idx: Vec<usize> = (0..values.len()).filter(|&k| inside(k)).collect();
    if idx.len() < 4 {
        return Err(Error::InvalidInput("whiteness score needs at least 4 samples".into()));
    }
    let mean = idx.iter().map(|&k| values[k]).sum::<f64>() / idx.len() as f64;
    let c = |k: usize| values[k] - mean;
    let energy: f64 = idx.iter().map(|&k| c(k).powi(2)).sum();
    if !(energy > 0.0) {
        return Ok(None);
    }
    let lag = |di: usize, dj: usize| -> Option<f64> {
        let (mut acc, mut n_pairs) = (0.0, 0usize);
        for i in 0..rows - di {
            for j in 0..cols - dj {
                let (a, b) = (i * cols + j, (i + di) * cols + j + dj);
                if inside(a) && inside(b) {
                    acc += c(a) * c(b);
                    n_pairs += 1;
                }
            }
        }
        (n_pairs > 0).then(|| acc / n_pairs as f64 / (energy / idx.len() as f64))
    };
    match (lag(0, 1), lag(1, 0)) {
        (Some(h), Some(v)) => Ok(Some(0.5 * (h + v))),
        (Some(x), None) | (None, Some(x)) => Ok(Some(x)),
        (None, None) => Err(Error::InvalidInput("no neighbouring samples inside the mask".into())),
    }
}
