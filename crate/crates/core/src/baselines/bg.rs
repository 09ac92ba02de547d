use super::amp::ScalarDenoiser;
use crate::error::{Error, Result};

/// `E h(sd Z)` for standard normal `Z` by composite Simpson over
/// `|z| <= 12`, with grid spacing at most `resolution` in `r = sd z`.
fn gaussian_expectation<H: Fn(f64) -> f64>(h: H, sd: f64, resolution: f64) -> f64 {
    if sd == 0.0 {
        return h(0.0);
    }
    const ZMAX: f64 = 12.0;
    let intervals = ((2.0 * ZMAX * sd / resolution).ceil() as usize).clamp(2000, 400_000);
    let intervals = intervals + intervals % 2;
    let dz = 2.0 * ZMAX / intervals as f64;
    let norm = dz / 3.0 / (2.0 * std::f64::consts::PI).sqrt();
    let mut acc = 0.0;
    for i in 0..=intervals {
        let z = -ZMAX + i as f64 * dz;
        let w = if i == 0 || i == intervals {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * (-0.5 * z * z).exp() * h(sd * z);
    }
    acc * norm
}

/// Spike-and-slab prior `x ~ (1 - rho) delta_0 + rho N(0, var)` on real
/// scalars; as a [`ScalarDenoiser`] it is the posterior-mean (MMSE) denoiser.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BernoulliGaussian {
    pub rho: f64,
    pub var: f64,
}

impl BernoulliGaussian {
    pub fn new(rho: f64, var: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho) || !(var >= 0.0 && var.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "Bernoulli-Gaussian needs rho in [0,1], var >= 0; got {rho}, {var}"
            )));
        }
        Ok(BernoulliGaussian { rho, var })
    }

    pub fn second_moment(&self) -> f64 {
        self.rho * self.var
    }

    /// `(pi, k)`: posterior probability of the slab and the slab's Wiener gain.
    fn posterior(&self, r: f64, tau: f64) -> (f64, f64) {
        if self.rho == 0.0 || self.var == 0.0 {
            return (0.0, 0.0);
        }
        let s1 = self.var + tau;
        let k = self.var / s1;
        if self.rho == 1.0 {
            return (1.0, k);
        }
        // log [rho N(r; 0, s1)] - log [(1 - rho) N(r; 0, tau)]
        let llr = (self.rho / (1.0 - self.rho)).ln() + 0.5 * (tau / s1).ln() + 0.5 * r * r * (1.0 / tau - 1.0 / s1);
        (1.0 / (1.0 + (-llr).exp()), k)
    }

    pub fn posterior_mean(&self, r: f64, tau: f64) -> f64 {
        let (pi, k) = self.posterior(r, tau);
        pi * k * r
    }

    pub fn posterior_mean_derivative(&self, r: f64, tau: f64) -> f64 {
        let (pi, k) = self.posterior(r, tau);
        if pi == 0.0 {
            return 0.0;
        }
        let dllr = r * (1.0 / tau - 1.0 / (self.var + tau));
        k * (pi + r * pi * (1.0 - pi) * dllr)
    }

    /// `E (f(x + sqrt(tau) z) - x)^2` under this prior, as a 1-D integral
    /// over the observation `r` using the posterior moments:
    /// `E[f(r)^2 - 2 f(r) E(x|r) + E(x^2|r)]`.
    pub fn mse_of<F: Fn(f64) -> f64>(&self, f: F, tau: f64) -> Result<f64> {
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::InvalidInput(format!("noise variance must be finite and >= 0, got {tau}")));
        }
        let e = if tau == 0.0 {
            let slab = gaussian_expectation(|x| (f(x) - x).powi(2), self.var.sqrt(), 1e-3);
            (1.0 - self.rho) * f(0.0).powi(2) + self.rho * slab
        } else {
            let h = |r: f64| {
                let (pi, k) = self.posterior(r, tau);
                let fr = f(r);
                fr * fr - 2.0 * fr * pi * k * r + pi * (k * tau + k * k * r * r)
            };
            let res = 0.05 * tau.sqrt();
            (1.0 - self.rho) * gaussian_expectation(h, tau.sqrt(), res)
                + self.rho * gaussian_expectation(h, (self.var + tau).sqrt(), res)
        };
        if !e.is_finite() {
            return Err(Error::Numerical(format!("MSE integral did not converge at tau = {tau}")));
        }
        Ok(e.max(0.0))
    }

    pub fn mmse(&self, tau: f64) -> Result<f64> {
        if tau == 0.0 {
            return Ok(0.0);
        }
        self.mse_of(|r| self.posterior_mean(r, tau), tau)
    }
}

impl ScalarDenoiser for BernoulliGaussian {
    fn denoise(&self, r: &[f64], tau: f64) -> Result<Vec<f64>> {
        if !(tau > 0.0) {
            return Err(Error::InvalidInput(format!("MMSE denoiser needs tau > 0, got {tau}")));
        }
        Ok(r.iter().map(|&v| self.posterior_mean(v, tau)).collect())
    }

    fn trace_jacobian(&self, r: &[f64], tau: f64) -> Option<Result<f64>> {
        Some(Ok(r.iter().map(|&v| self.posterior_mean_derivative(v, tau)).sum()))
    }
}
