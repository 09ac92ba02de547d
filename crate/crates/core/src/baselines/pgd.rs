use std::ops::{Mul, Sub};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PgdState<T> {
    pub x1: Vec<T>,
    pub x2: Vec<T>,
    pub iteration: usize,
}

impl<T: Clone> PgdState<T> {
    pub fn new(x: Vec<T>) -> Self {
        PgdState { x1: x.clone(), x2: x, iteration: 0 }
    }
}

/// `x1 <- x2 - mu grad(x2)`, `x2 <- f2(x1, mu)`. `f2` receives the step so
/// that a true prox can scale with it (`prox_{mu g2}`).
pub fn pnp_pgd_iterate<T, G, F>(state: &PgdState<T>, grad: G, mu: f64, f2: F) -> Result<PgdState<T>>
where
    T: Copy + Sub<Output = T> + Mul<f64, Output = T>,
    G: Fn(&[T]) -> Result<Vec<T>>,
    F: Fn(&[T], f64) -> Result<Vec<T>>,
{
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::Config(format!("PGD step must be finite and >= 0, got {mu}")));
    }
    let g = grad(&state.x2)?;
    if g.len() != state.x2.len() {
        return Err(Error::ShapeMismatch("gradient length differs from the iterate".into()));
    }
    let x1: Vec<T> = state.x2.iter().zip(&g).map(|(&x, &d)| x - d * mu).collect();
    let x2 = f2(&x1, mu)?;
    Ok(PgdState { x1, x2, iteration: state.iteration + 1 })
}

/// `x -> A^T (A x - y)` for a dense real `A`.
pub fn least_squares_gradient<'a>(a: &'a DMatrix<f64>, y: &'a [f64]) -> impl Fn(&[f64]) -> Result<Vec<f64>> + 'a {
    move |x: &[f64]| {
        if x.len() != a.ncols() || y.len() != a.nrows() {
            return Err(Error::ShapeMismatch("gradient input does not match the matrix".into()));
        }
        let res = a * DVector::from_column_slice(x) - DVector::from_column_slice(y);
        Ok(a.tr_mul(&res).iter().copied().collect())
    }
}
