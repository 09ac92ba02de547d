use num_complex::Complex64;

use crate::error::{Error, Result};

/// `(v, gamma) -> prox_{g / gamma}(v)`.
pub type ProxFn<'a> = dyn Fn(&[Complex64], f64) -> Result<Vec<Complex64>> + Sync + 'a;

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub x1: Vec<Complex64>,
    pub x2: Vec<Complex64>,
    pub u: Vec<Complex64>,
    pub iteration: usize,
}

impl AdmmState {
    /// Starts from `x2 = x`, `u = 0`.
    pub fn new(x: Vec<Complex64>) -> Self {
        AdmmState { x1: x.clone(), u: vec![Complex64::new(0.0, 0.0); x.len()], x2: x, iteration: 0 }
    }
}

/// Peaceman-Rachford ADMM with one penalty `gamma`:
/// `x1 <- prox1(x2 - u)`, `u += x1 - x2`, `x2 <- prox2(x1 + u)`, `u += x1 - x2`.
pub fn pr_admm_iterate(state: &AdmmState, gamma: f64, f1: &ProxFn<'_>, f2: &ProxFn<'_>) -> Result<AdmmState> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Config(format!("ADMM penalty must be positive, got {gamma}")));
    }
    let t = state.iteration;
    let step = || -> Result<AdmmState> {
        let v1: Vec<Complex64> = state.x2.iter().zip(&state.u).map(|(a, b)| a - b).collect();
        let x1 = f1(&v1, gamma)?;
        let mut u: Vec<Complex64> = state.u.iter().zip(x1.iter().zip(&state.x2)).map(|(u, (a, b))| u + a - b).collect();
        let v2: Vec<Complex64> = x1.iter().zip(&u).map(|(a, b)| a + b).collect();
        let x2 = f2(&v2, gamma)?;
        if x1.len() != v1.len() || x2.len() != v1.len() {
            return Err(Error::ShapeMismatch("prox changed the vector length".into()));
        }
        for (ui, (a, b)) in u.iter_mut().zip(x1.iter().zip(&x2)) {
            *ui += a - b;
        }
        Ok(AdmmState { x1, x2, u, iteration: t + 1 })
    };
    step().map_err(|e| e.at_iteration(t + 1))
}
