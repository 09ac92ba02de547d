use rayon::prelude::*;

use super::{chunks, HouseholderOrthogonal};
use crate::error::{Error, Result};
use crate::rng::SeedTree;

#[derive(Debug, Clone, PartialEq)]
pub struct WeingartenReport {
    pub n: usize,
    pub trials: usize,
    pub labels: [&'static str; 4],
    pub empirical: [f64; 4],
    pub theoretical: [f64; 4],
}

impl WeingartenReport {
    pub fn relative_deviations(&self) -> [f64; 4] {
        std::array::from_fn(|k| (self.empirical[k] - self.theoretical[k]).abs() / self.theoretical[k])
    }

    pub fn max_relative_deviation(&self) -> f64 {
        self.relative_deviations().into_iter().fold(0.0, f64::max)
    }
}

/// `E v_nj^2 v_mk^2` for Haar orthogonal `V` in the four index cases,
/// estimated on the entries `(0,0)` with `(0,0)`, `(0,1)`, `(1,0)`, `(1,1)`.
pub fn weingarten_moment_check(n: usize, trials: usize, seed: SeedTree) -> Result<WeingartenReport> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("moment check needs N >= 2, got {n}")));
    }
    if trials < 10_000 {
        return Err(Error::InvalidInput(format!("moment check needs at least 1e4 trials, got {trials}")));
    }
    let sums: Vec<[f64; 4]> = chunks(trials)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(c, len)| {
            let mut rng = seed.indexed("chunk", c).rng();
            let mut acc = [0.0; 4];
            let (mut c0, mut c1) = (vec![0.0; n], vec![0.0; n]);
            for _ in 0..len {
                let v = HouseholderOrthogonal::sample(n, &mut rng);
                c0.iter_mut().enumerate().for_each(|(i, x)| *x = (i == 0) as u8 as f64);
                c1.iter_mut().enumerate().for_each(|(i, x)| *x = (i == 1) as u8 as f64);
                v.apply(&mut c0);
                v.apply(&mut c1);
                let (v00, v10, v01, v11) = (c0[0] * c0[0], c0[1] * c0[1], c1[0] * c1[0], c1[1] * c1[1]);
                acc[0] += v00 * v00;
                acc[1] += v00 * v01;
                acc[2] += v00 * v10;
                acc[3] += v00 * v11;
            }
            acc
        })
        .collect();
    let mut total = [0.0; 4];
    for s in &sums {
        for k in 0..4 {
            total[k] += s[k];
        }
    }
    let nf = n as f64;
    let base = 1.0 / (nf * (nf + 2.0));
    Ok(WeingartenReport {
        n,
        trials,
        labels: ["n=m,j=k", "n=m,j!=k", "n!=m,j=k", "n!=m,j!=k"],
        empirical: total.map(|s| s / trials as f64),
        theoretical: [3.0 * base, base, base, (nf + 1.0) * base / (nf - 1.0)],
    })
}
