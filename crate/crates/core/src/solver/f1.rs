//! Measurement-fidelity estimator
//! `f1(r, gamma) = (gamma_w B^H B + Diag(gamma))^-1 (gamma_w B^H y + Diag(gamma) r)`,
//! solved matrix-free by CG.

use num_complex::Complex64;

use super::cg::{pcg_solve, CgOutcome};
use crate::denoisers::PrecisionVector;
use crate::error::{Error, Result};
use crate::forward::ForwardModel;
use crate::transforms::WaveletPyramid;

pub struct F1Cg<'a> {
    fm: &'a ForwardModel,
    gamma_w: f64,
    /// `gamma_w B^H y`.
    rhs_data: Vec<Complex64>,
    cg_iters: usize,
    cg_tol: f64,
    /// Diagonal of `B^H B` at the first coefficient of each subband, spread
    /// over the subband. Exact for one coil (Haar atoms of a subband are
    /// translates of one another); used only to precondition CG.
    bhb_diag: Vec<f64>,
}

impl<'a> F1Cg<'a> {
    pub fn new(fm: &'a ForwardModel, y: &[Complex64], gamma_w: f64, cg_iters: usize, cg_tol: f64) -> Result<Self> {
        if !(gamma_w >= 0.0 && gamma_w.is_finite()) {
            return Err(Error::InvalidInput(format!("noise precision must be finite and >= 0, got {gamma_w}")));
        }
        if cg_iters == 0 {
            return Err(Error::Config("cg_iters must be at least 1".into()));
        }
        let mut bhy = fm.apply_bh(y)?.into_coeffs();
        for v in &mut bhy {
            *v *= gamma_w;
        }
        let bhb_diag = if gamma_w > 0.0 { subband_bhb_diag(fm) } else { vec![0.0; bhy.len()] };
        Ok(F1Cg { fm, gamma_w, rhs_data: bhy, cg_iters, cg_tol, bhb_diag })
    }

    pub fn forward_model(&self) -> &ForwardModel {
        self.fm
    }

    pub fn gamma_w(&self) -> f64 {
        self.gamma_w
    }

    fn system(&self, gamma: &[f64]) -> impl Fn(&[Complex64], &mut [Complex64]) + '_ {
        let gamma = gamma.to_vec();
        move |v: &[Complex64], out: &mut [Complex64]| {
            if self.gamma_w > 0.0 {
                self.fm.bhb_raw(v, out);
                for ((o, vi), g) in out.iter_mut().zip(v).zip(&gamma) {
                    *o = *o * self.gamma_w + vi * *g;
                }
            } else {
                for ((o, vi), g) in out.iter_mut().zip(v).zip(&gamma) {
                    *o = vi * *g;
                }
            }
        }
    }

    fn preconditioner(&self, gamma: &[f64]) -> Option<Vec<f64>> {
        let d: Vec<f64> = self.bhb_diag.iter().zip(gamma).map(|(s, g)| self.gamma_w * s + g).collect();
        d.iter().all(|v| *v > 0.0 && v.is_finite()).then_some(d)
    }

    /// Solves the prox system, warm-started at `r`.
    pub fn solve(&self, r: &[Complex64], gamma: &PrecisionVector) -> Result<CgOutcome> {
        let g = gamma.expand();
        if g.len() != r.len() || r.len() != self.rhs_data.len() {
            return Err(Error::ShapeMismatch("f1 input length does not match the operator".into()));
        }
        let b: Vec<Complex64> = self.rhs_data.iter().zip(r).zip(&g).map(|((a, ri), gi)| a + ri * *gi).collect();
        let m = self.preconditioner(&g);
        let out = pcg_solve(self.system(&g), m.as_deref(), &b, r, self.cg_iters, self.cg_tol);
        if out.x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Numerical("CG produced non-finite values".into()));
        }
        Ok(out)
    }

    pub fn apply(&self, r: &WaveletPyramid, gamma: &PrecisionVector) -> Result<WaveletPyramid> {
        let out = self.solve(r.coeffs(), gamma)?;
        r.with_coeffs(out.x)
    }

    /// `Q q = (gamma_w B^H B + Diag(gamma))^-1 Diag(gamma) q`, the Jacobian of
    /// `f1` applied to a probe. Started from zero: when `gamma` is tiny next to
    /// `gamma_w` the answer is tiny too, and a start at `q` would leave an
    /// error of order `|q|` that swamps the divergence.
    pub fn jacobian_apply(&self, q: &[Complex64], gamma: &PrecisionVector) -> Result<Vec<Complex64>> {
        let g = gamma.expand();
        let b: Vec<Complex64> = q.iter().zip(&g).map(|(v, gi)| v * *gi).collect();
        let m = self.preconditioner(&g);
        let zero = vec![Complex64::new(0.0, 0.0); q.len()];
        let out = pcg_solve(self.system(&g), m.as_deref(), &b, &zero, self.cg_iters, self.cg_tol);
        if out.x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Numerical("CG produced non-finite values".into()));
        }
        Ok(out.x)
    }
}

fn subband_bhb_diag(fm: &ForwardModel) -> Vec<f64> {
    let n = fm.num_pixels();
    let mut diag = vec![0.0; n];
    let mut e = vec![Complex64::new(0.0, 0.0); n];
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for sb in fm.layout().subbands() {
        let k = sb.range().start;
        e[k] = Complex64::new(1.0, 0.0);
        fm.bhb_raw(&e, &mut out);
        e[k] = Complex64::new(0.0, 0.0);
        let v = out[k].re.max(0.0);
        diag[sb.range()].iter_mut().for_each(|d| *d = v);
    }
    diag
}

/// One-shot form of [`F1Cg::apply`].
pub fn f1_cg(
    r1: &WaveletPyramid,
    gamma1: &PrecisionVector,
    y: &[Complex64],
    fm: &ForwardModel,
    gamma_w: f64,
    cg_iters: usize,
) -> Result<WaveletPyramid> {
    F1Cg::new(fm, y, gamma_w, cg_iters, 0.0)?.apply(r1, gamma1)
}
