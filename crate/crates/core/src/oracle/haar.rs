use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{normal, SeedTree};

/// Haar-distributed orthogonal matrix by QR of an i.i.d. Gaussian matrix,
/// with the columns of Q flipped so that R has a positive diagonal.
pub fn random_orthogonal(n: usize, seed: SeedTree) -> Result<DMatrix<f64>> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("random orthogonal matrix needs N >= 2, got {n}")));
    }
    let mut rng = seed.rng();
    let g = DMatrix::from_fn(n, n, |_, _| normal(&mut rng));
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Ok(q)
}

/// The same distribution in factored form, `V = H_1 ... H_{N-1} S`: the
/// Householder reflections Householder-QR would produce on a Gaussian matrix
/// (each drawn fresh, which is equivalent by rotation invariance) and the
/// sign fix of R's diagonal. `O(N^2)` to draw and to apply.
#[derive(Debug, Clone, PartialEq)]
pub struct HouseholderOrthogonal {
    /// Unit reflection vector of `H_j`, acting on coordinates `j..N`.
    reflectors: Vec<Vec<f64>>,
    signs: Vec<f64>,
}

impl HouseholderOrthogonal {
    pub fn sample<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut reflectors = Vec::with_capacity(n.saturating_sub(1));
        let mut signs = Vec::with_capacity(n);
        for j in 0..n.saturating_sub(1) {
            let mut v: Vec<f64> = (0..n - j).map(|_| normal(rng)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let s = if v[0] >= 0.0 { 1.0 } else { -1.0 };
            v[0] += s * norm;
            let vn = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= vn);
            reflectors.push(v);
            // R_jj = -s |x|.
            signs.push(-s);
        }
        signs.push(if normal(rng) >= 0.0 { 1.0 } else { -1.0 });
        HouseholderOrthogonal { reflectors, signs }
    }

    pub fn dim(&self) -> usize {
        self.signs.len()
    }

    fn reflect(&self, j: usize, x: &mut [f64]) {
        let v = &self.reflectors[j];
        let tail = &mut x[j..];
        let dot: f64 = v.iter().zip(tail.iter()).map(|(a, b)| a * b).sum();
        for (t, a) in tail.iter_mut().zip(v) {
            *t -= 2.0 * dot * a;
        }
    }

    /// `x <- V x`.
    pub fn apply(&self, x: &mut [f64]) {
        for (xi, s) in x.iter_mut().zip(&self.signs) {
            *xi *= s;
        }
        for j in (0..self.reflectors.len()).rev() {
            self.reflect(j, x);
        }
    }

    /// `x <- V^T x`.
    pub fn apply_transpose(&self, x: &mut [f64]) {
        for j in 0..self.reflectors.len() {
            self.reflect(j, x);
        }
        for (xi, s) in x.iter_mut().zip(&self.signs) {
            *xi *= s;
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        let mut col = vec![0.0; n];
        for j in 0..n {
            col.iter_mut().for_each(|c| *c = 0.0);
            col[j] = 1.0;
            self.apply(&mut col);
            m.set_column(j, &nalgebra::DVector::from_column_slice(&col));
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthogonality() {
        let n = 64;
        let q = random_orthogonal(n, SeedTree::new(1)).unwrap();
        let h = HouseholderOrthogonal::sample(n, &mut SeedTree::new(2).rng()).to_dense();
        for m in [q, h] {
            let err = (m.transpose() * &m - DMatrix::<f64>::identity(n, n)).abs().max();
            assert!(err < 1e-12, "{err}");
        }
        assert!(random_orthogonal(1, SeedTree::new(0)).is_err());
    }

    #[test]
    fn transpose_is_inverse() {
        let h = HouseholderOrthogonal::sample(9, &mut SeedTree::new(3).rng());
        let x: Vec<f64> = (0..9).map(|i| i as f64 - 2.5).collect();
        let mut y = x.clone();
        h.apply(&mut y);
        h.apply_transpose(&mut y);
        assert!(x.iter().zip(&y).all(|(a, b)| (a - b).abs() < 1e-13));
        let d = h.to_dense();
        let mut z = x.clone();
        h.apply_transpose(&mut z);
        let dz = d.transpose() * nalgebra::DVector::from_column_slice(&x);
        assert!(z.iter().zip(dz.iter()).all(|(a, b)| (a - b).abs() < 1e-13));
    }

    // E v = 0 and E v^2 = 1/N entrywise, for both samplers.
    #[test]
    fn first_and_second_moments() {
        let (n, draws) = (6, 10_000);
        let root = SeedTree::new(4);
        let mut rng = root.child("h").rng();
        let mut s1 = [DMatrix::<f64>::zeros(n, n), DMatrix::zeros(n, n)];
        let mut s2 = [DMatrix::<f64>::zeros(n, n), DMatrix::zeros(n, n)];
        for t in 0..draws {
            let ms = [
                random_orthogonal(n, root.indexed("qr", t)).unwrap(),
                HouseholderOrthogonal::sample(n, &mut rng).to_dense(),
            ];
            for (k, m) in ms.iter().enumerate() {
                s1[k] += m;
                s2[k] += m.component_mul(m);
            }
        }
        let tol_mean = 9.0 / (draws as f64 * n as f64).sqrt();
        for k in 0..2 {
            let mean = &s1[k] / draws as f64;
            let second = &s2[k] / draws as f64;
            assert!(mean.abs().max() <= tol_mean, "sampler {k}: {}", mean.abs().max());
            for v in second.iter() {
                assert!((v * n as f64 - 1.0).abs() < 0.05, "sampler {k}: {v}");
            }
        }
    }
}
