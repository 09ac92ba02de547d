//! Block-diagonal Jacobian averages (`gdiag`) and their Monte-Carlo
//! estimates.

use num_complex::Complex64;

use crate::denoisers::PrecisionVector;
use crate::error::{Error, Result};
use crate::rng::{complex_normal, SeedTree};
use crate::transforms::{dot, Partition};

/// Expands per-group traces into the length-`N` vector of group averages
/// `d_l = tr(Q_ll) / N_l`.
pub fn gdiag_from_traces(traces: &[f64], partition: &Partition) -> Result<Vec<f64>> {
    if traces.len() != partition.num_groups() {
        return Err(Error::ShapeMismatch(format!("{} traces for {} groups", traces.len(), partition.num_groups())));
    }
    if traces.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite("Jacobian traces"));
    }
    let avg: Vec<f64> = traces.iter().enumerate().map(|(ell, t)| t / partition.group_len(ell) as f64).collect();
    Ok(partition.expand(&avg))
}

/// Unit-variance complex Gaussian probe on group `ell`, zero elsewhere.
pub fn subband_probe(partition: &Partition, ell: usize, seed: SeedTree) -> Vec<Complex64> {
    let mut q = vec![Complex64::new(0.0, 0.0); partition.total_len()];
    let mut rng = seed.rng();
    for v in &mut q[partition.range(ell)] {
        *v = complex_normal(&mut rng, 1.0);
    }
    q
}

/// Probe step `min(sqrt(1/gamma_l), |r_l|_1 / N_l)`, falling back to the
/// first term when `r_l` is zero.
pub fn probe_step(r: &[Complex64], partition: &Partition, gamma: f64, ell: usize) -> f64 {
    let range = partition.range(ell);
    let l1: f64 = r[range.clone()].iter().map(|z| z.norm()).sum::<f64>() / range.len() as f64;
    let sd = (1.0 / gamma).sqrt();
    if l1 > 0.0 {
        sd.min(l1)
    } else {
        sd
    }
}

/// `tr(Q_ll) ~ delta^-1 Re q^H [f(r + delta q) - f(r)]`.
///
/// `f` maps a full coefficient vector to a full output vector; `f_r` is
/// `f(r)`, usually already available to the caller.
pub fn mc_subband_trace<F>(
    mut f: F,
    r: &[Complex64],
    f_r: &[Complex64],
    gamma: &PrecisionVector,
    ell: usize,
    seed: SeedTree,
) -> Result<f64>
where
    F: FnMut(&[Complex64]) -> Result<Vec<Complex64>>,
{
    let part = gamma.partition();
    let q = subband_probe(part, ell, seed);
    let delta = probe_step(r, part, gamma.get(ell), ell);
    let shifted: Vec<Complex64> = r.iter().zip(&q).map(|(a, b)| a + b * delta).collect();
    let f_shift = f(&shifted)?;
    let range = part.range(ell);
    let diff: Vec<Complex64> = f_shift[range.clone()].iter().zip(&f_r[range.clone()]).map(|(a, b)| a - b).collect();
    Ok(dot(&q[range], &diff).re / delta)
}
