#![allow(dead_code)]

use dgec::forward::{
    generate_coil_maps, generate_phantom, make_point_mask, simulate_measurements, Acceleration, CoilSupport,
    ForwardModel, MeasurementSet, PhantomKind, SamplingMask,
};
use dgec::transforms::{SubbandLayout, WaveletPyramid};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Columns `B e_k`, built by probing the operator.
pub fn dense_b(fm: &ForwardModel) -> DMatrix<Complex64> {
    let layout = fm.layout().clone();
    let n = layout.len();
    let p = fm.num_measurements();
    let mut b = DMatrix::zeros(p, n);
    for k in 0..n {
        let mut e = vec![c(0.0, 0.0); n];
        e[k] = c(1.0, 0.0);
        let col = fm.apply_b(&WaveletPyramid::new(layout.clone(), e).unwrap()).unwrap();
        b.set_column(k, &DVector::from_vec(col));
    }
    b
}

/// `(gamma_w B^H B + Diag(g))^-1 (gamma_w B^H y + Diag(g) r)` by LU.
pub fn dense_f1(b: &DMatrix<Complex64>, y: &[Complex64], gamma_w: f64, g: &[f64], r: &[Complex64]) -> Vec<Complex64> {
    let (sys, rhs) = dense_system(b, y, gamma_w, g, r);
    sys.lu().solve(&rhs).unwrap().as_slice().to_vec()
}

pub fn dense_system(
    b: &DMatrix<Complex64>,
    y: &[Complex64],
    gamma_w: f64,
    g: &[f64],
    r: &[Complex64],
) -> (DMatrix<Complex64>, DVector<Complex64>) {
    let bh = b.adjoint();
    let mut sys = &bh * b * c(gamma_w, 0.0);
    for (i, gi) in g.iter().enumerate() {
        sys[(i, i)] += c(*gi, 0.0);
    }
    let rhs = &bh * DVector::from_column_slice(y) * c(gamma_w, 0.0)
        + DVector::from_iterator(r.len(), r.iter().zip(g).map(|(ri, gi)| ri * *gi));
    (sys, rhs)
}

/// `tr((gamma_w B^H B + g I)^-1 g) / N` for scalar `g`.
pub fn dense_f1_divergence(b: &DMatrix<Complex64>, gamma_w: f64, g: f64) -> f64 {
    let n = b.ncols();
    let (sys, _) = dense_system(b, &vec![c(0.0, 0.0); b.nrows()], gamma_w, &vec![g; n], &vec![c(0.0, 0.0); n]);
    let inv = sys.try_inverse().unwrap();
    (0..n).map(|i| inv[(i, i)].re).sum::<f64>() * g / n as f64
}

pub fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub struct SmallProblem {
    pub fm: ForwardModel,
    pub x0: dgec::transforms::ComplexImage,
    pub m: MeasurementSet,
}

/// `n x n` Shepp-Logan through a point mask at R = 2.
pub fn small_problem(n: usize, depth: usize, coils: usize, snr_db: f64, seed: u64) -> SmallProblem {
    let layout = SubbandLayout::new(n, n, depth).unwrap();
    let mask = make_point_mask((n, n), Acceleration::integer(2).unwrap(), 2.0, 2, seed).unwrap();
    small_problem_with(mask, layout, coils, snr_db, seed)
}

pub fn small_problem_with(
    mask: SamplingMask,
    layout: SubbandLayout,
    coils: usize,
    snr_db: f64,
    seed: u64,
) -> SmallProblem {
    let (h, w) = layout.shape();
    let maps = generate_coil_maps((h, w), coils, 0.5, CoilSupport::Full, seed).unwrap();
    let fm = ForwardModel::new(mask, maps, layout).unwrap();
    let x0 = generate_phantom((h, w), PhantomKind::SheppLogan, seed).unwrap();
    let m = simulate_measurements(&x0, &fm, snr_db, seed).unwrap();
    SmallProblem { fm, x0, m }
}
