use num_complex::Complex64;

use crate::transforms::{dot, norm_sqr};

#[derive(Debug, Clone, PartialEq)]
pub struct CgOutcome {
    pub x: Vec<Complex64>,
    pub iterations: usize,
    pub residual_norm: f64,
    /// Set when `p^H A p <= 0` stopped the iteration early.
    pub breakdown: bool,
}

/// Conjugate gradient for a Hermitian positive-definite operator, started
/// at `x0`. Stops after `max_iters` steps, when the residual falls below
/// `rel_tol * |b|`, or on breakdown (returning the current iterate).
pub fn cg_solve<F>(apply: F, b: &[Complex64], x0: &[Complex64], max_iters: usize, rel_tol: f64) -> CgOutcome
where
    F: FnMut(&[Complex64], &mut [Complex64]),
{
    pcg_solve(apply, None, b, x0, max_iters, rel_tol)
}

/// [`cg_solve`] with an optional positive diagonal preconditioner
/// (`M^-1 = 1 / diag`). The stopping rule still uses the unpreconditioned
/// residual.
pub fn pcg_solve<F>(
    mut apply: F,
    diag: Option<&[f64]>,
    b: &[Complex64],
    x0: &[Complex64],
    max_iters: usize,
    rel_tol: f64,
) -> CgOutcome
where
    F: FnMut(&[Complex64], &mut [Complex64]),
{
    let n = b.len();
    let precond = |r: &[Complex64]| -> Vec<Complex64> {
        match diag {
            Some(d) => r.iter().zip(d).map(|(v, di)| v / *di).collect(),
            None => r.to_vec(),
        }
    };
    let mut x = x0.to_vec();
    let mut ap = vec![Complex64::new(0.0, 0.0); n];
    apply(&x, &mut ap);
    let mut r: Vec<Complex64> = b.iter().zip(&ap).map(|(bi, ai)| bi - ai).collect();
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z).re;
    let mut rr = norm_sqr(&r);
    let stop = rel_tol * rel_tol * norm_sqr(b);
    let mut iterations = 0;
    let mut breakdown = false;
    while iterations < max_iters && rr > stop && rr > 0.0 && rz > 0.0 {
        apply(&p, &mut ap);
        let curv = dot(&p, &ap).re;
        if !(curv > 0.0) {
            breakdown = true;
            break;
        }
        let alpha = rz / curv;
        for ((xi, ri), (pi, ai)) in x.iter_mut().zip(r.iter_mut()).zip(p.iter().zip(&ap)) {
            *xi += pi * alpha;
            *ri -= ai * alpha;
        }
        rr = norm_sqr(&r);
        z = precond(&r);
        let rz_new = dot(&r, &z).re;
        let beta = rz_new / rz;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + *pi * beta;
        }
        rz = rz_new;
        iterations += 1;
    }
    CgOutcome { x, iterations, residual_norm: rr.sqrt(), breakdown }
}
