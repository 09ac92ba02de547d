use crate::error::{Error, Result};

/// State-evolution trajectory. `tau[t] = tau_w + (N/P) mse[t]`, with
/// `mse[0]` the prior second moment (AMP starts at `x = 0`). The empirical
/// `tau` of the AMP state after `t + 1` iterations corresponds to `tau[t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeTrace {
    pub tau: Vec<f64>,
    pub mse: Vec<f64>,
}

impl SeTrace {
    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.tau.iter().copied().zip(self.mse.iter().copied())
    }
}

/// Iterates `tau = tau_w + (N/P) E`, `E <- mse(tau)` for `iters` steps.
/// `second_moment` is `E x0^2`, the error of the zero initial estimate.
pub fn amp_state_evolution<F>(
    second_moment: f64,
    tau_w: f64,
    n: usize,
    p: usize,
    mse: F,
    iters: usize,
) -> Result<SeTrace>
where
    F: Fn(f64) -> Result<f64>,
{
    if n == 0 || p == 0 {
        return Err(Error::InvalidInput("state evolution needs N, P > 0".into()));
    }
    if !(tau_w >= 0.0 && second_moment >= 0.0) {
        return Err(Error::InvalidInput("state evolution needs nonnegative variances".into()));
    }
    let ratio = n as f64 / p as f64;
    let mut e = second_moment;
    let (mut taus, mut mses) = (Vec::with_capacity(iters), Vec::with_capacity(iters));
    for _ in 0..iters {
        let tau = tau_w + ratio * e;
        taus.push(tau);
        mses.push(e);
        e = mse(tau)?;
        if !(e.is_finite() && e >= 0.0) {
            return Err(Error::Numerical(format!("state evolution MSE became {e}")));
        }
    }
    Ok(SeTrace { tau: taus, mse: mses })
}
