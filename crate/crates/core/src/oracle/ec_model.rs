use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rng::{normal, SeedTree};
use crate::solver::{ec_iterate, EcConfig, EcState};

/// Spectral quantities of the EC error recursion for `C = gamma_w A^T A`
/// with eigenvalues `lambda`:
/// `alpha = mean(lambda / (lambda + gamma1))`,
/// `Sigma = diag(lambda / (alpha (lambda + gamma1)))`, `D = I - Sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct EcSpectrum {
    pub lambda: Vec<f64>,
    pub gamma1: f64,
    pub alpha: f64,
    pub d: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl EcSpectrum {
    pub fn new(lambda: Vec<f64>, gamma1: f64) -> Result<Self> {
        if !(gamma1 > 0.0 && gamma1.is_finite()) {
            return Err(Error::InvalidInput(format!("gamma1 must be positive, got {gamma1}")));
        }
        if lambda.is_empty() || lambda.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
            return Err(Error::InvalidInput("eigenvalues must be finite and >= 0".into()));
        }
        let n = lambda.len() as f64;
        let ratio: Vec<f64> = lambda.iter().map(|l| l / (l + gamma1)).collect();
        let alpha = ratio.iter().sum::<f64>() / n;
        if !(alpha > 0.0) {
            return Err(Error::Numerical("alpha = 0: the operator is zero".into()));
        }
        let sigma: Vec<f64> = ratio.iter().map(|r| r / alpha).collect();
        let d: Vec<f64> = sigma.iter().map(|s| 1.0 - s).collect();
        let spec = EcSpectrum { lambda, gamma1, alpha, d, sigma };
        let tr = spec.trace_d();
        if tr.abs() > 1e-10 {
            return Err(Error::Verification(format!("tr(D) = {tr:e}")));
        }
        Ok(spec)
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    pub fn trace_d(&self) -> f64 {
        self.d.iter().sum()
    }

    /// `gamma1 alpha / (1 - alpha)`.
    pub fn gamma2(&self) -> f64 {
        self.gamma1 * self.alpha / (1.0 - self.alpha)
    }

    /// `eps1 tr(D^2) / N + tr(Sigma Lambda^-1 Sigma) / N`, with
    /// `sigma^2 / lambda` written as `lambda / (alpha (lambda + gamma1))^2`
    /// so that zero eigenvalues contribute zero.
    pub fn epsilon2_direct(&self, eps1: f64) -> f64 {
        let n = self.len() as f64;
        let d2: f64 = self.d.iter().map(|d| d * d).sum();
        let noise: f64 = self.lambda.iter().map(|l| l / (self.alpha * (l + self.gamma1)).powi(2)).sum();
        eps1 * d2 / n + noise / n
    }

    /// `(eps1 - 1/gamma1) / N sum ((1 - lambda/gamma2) / (1 + lambda/gamma1))^2 + 1/gamma2`.
    pub fn epsilon2(&self, eps1: f64) -> f64 {
        let (g1, g2) = (self.gamma1, self.gamma2());
        let s: f64 = self.lambda.iter().map(|l| ((1.0 - l / g2) / (1.0 + l / g1)).powi(2)).sum();
        (eps1 - 1.0 / g1) / self.len() as f64 * s + 1.0 / g2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EcErrorModel {
    /// Eigenvectors of `C`, columns matching `spectrum.lambda`.
    pub v: DMatrix<f64>,
    pub spectrum: EcSpectrum,
    pub gamma_w: f64,
}

impl EcErrorModel {
    /// `V D V^T e1 + u`, `u = (gamma_w / alpha) V (Lambda + gamma1)^-1 V^T A^T w`.
    pub fn predict_e2(&self, a: &DMatrix<f64>, e1: &[f64], w: &[f64]) -> Result<Vec<f64>> {
        let n = self.spectrum.len();
        if e1.len() != n || w.len() != a.nrows() || a.ncols() != n {
            return Err(Error::ShapeMismatch("e1 / w do not match the model".into()));
        }
        let s = &self.spectrum;
        let vt_e1 = self.v.tr_mul(&DVector::from_column_slice(e1));
        let vt_atw = self.v.tr_mul(&a.tr_mul(&DVector::from_column_slice(w)));
        let inner = DVector::from_fn(n, |j, _| {
            s.d[j] * vt_e1[j] + self.gamma_w / s.alpha * vt_atw[j] / (s.lambda[j] + s.gamma1)
        });
        Ok((&self.v * inner).iter().copied().collect())
    }
}

/// Eigendecomposes `C = gamma_w A^T A` and builds the recursion quantities.
pub fn build_ec_error_model(a: &DMatrix<f64>, gamma1: f64, gamma_w: f64) -> Result<EcErrorModel> {
    if !(gamma_w > 0.0 && gamma_w.is_finite()) {
        return Err(Error::InvalidInput(format!("gamma_w must be positive, got {gamma_w}")));
    }
    let c = a.tr_mul(a) * gamma_w;
    let eig = SymmetricEigen::try_new(c, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("eigendecomposition did not converge".into()))?;
    // Clamp round-off negatives of a PSD matrix.
    let lambda: Vec<f64> = eig.eigenvalues.iter().map(|l| l.max(0.0)).collect();
    let spectrum = EcSpectrum::new(lambda, gamma1)?;
    let max_dev = spectrum.d.iter().zip(&spectrum.sigma).map(|(d, s)| (s - (1.0 - d)).abs()).fold(0.0, f64::max);
    if max_dev > 1e-12 {
        return Err(Error::Verification(format!("Sigma != I - D by {max_dev:e}")));
    }
    Ok(EcErrorModel { v: eig.eigenvectors, spectrum, gamma_w })
}

/// Runs the measurement half of one EC iteration (the crate's EC engine
/// with a dense LMMSE `f1`) from `r1 = x0 + e1` on `y = A x0 + w`, and
/// returns `max |(r2 - x0) - (V D V^T e1 + u)|`. `x0` is drawn from `seed`.
pub fn ec_recursion_equivalence(
    a: &DMatrix<f64>,
    gamma1: f64,
    gamma_w: f64,
    e1: &[f64],
    w: &[f64],
    seed: SeedTree,
) -> Result<f64> {
    let (p, n) = a.shape();
    if e1.len() != n || w.len() != p {
        return Err(Error::ShapeMismatch("e1 / w do not match A".into()));
    }
    let model = build_ec_error_model(a, gamma1, gamma_w)?;
    let mut rng = seed.rng();
    let x0: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
    let y = a * DVector::from_column_slice(&x0) + DVector::from_column_slice(w);

    let sys = a.tr_mul(a) * gamma_w;
    let lu = |g: f64| (&sys + DMatrix::identity(n, n) * g).lu();
    let aty = a.tr_mul(&y) * gamma_w;
    let f1 = |r: &[Complex64], g: f64| -> Result<(Vec<Complex64>, f64)> {
        let m = lu(g);
        let rhs = &aty + DVector::from_iterator(n, r.iter().map(|z| g * z.re));
        let x = m.solve(&rhs).ok_or_else(|| Error::Numerical("singular f1 system".into()))?;
        let inv = m.try_inverse().ok_or_else(|| Error::Numerical("singular f1 system".into()))?;
        let div = g * inv.trace() / n as f64;
        Ok((x.iter().map(|v| Complex64::new(*v, 0.0)).collect(), div))
    };
    let identity = |r: &[Complex64], _g: f64| -> Result<(Vec<Complex64>, f64)> { Ok((r.to_vec(), 0.5)) };
    let r1: Vec<Complex64> = x0.iter().zip(e1).map(|(x, e)| Complex64::new(x + e, 0.0)).collect();
    let state = ec_iterate(&EcState::new(r1, gamma1), &f1, &identity, &EcConfig::default())?;
    let e2_direct: Vec<f64> = state.r2.iter().zip(&x0).map(|(r, x)| r.re - x).collect();
    let e2_model = model.predict_e2(a, e1, w)?;
    Ok(e2_direct.iter().zip(&e2_model).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max))
}
