use num_complex::Complex64;

use super::config::{Grouping, InitMode, SolverConfig};
use super::gec::GecState;
use crate::denoisers::PrecisionVector;
use crate::error::{Error, Result};
use crate::forward::{simulate_measurements, ForwardModel};
use crate::rng::{complex_normal, SeedTree};
use crate::transforms::{dwt2_haar_with, ComplexImage, Partition, SubbandLayout};

/// Per-subband variance of the initial error `B^H y - c0`, averaged over a
/// calibration set of ground-truth images.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub subband_variance: Vec<f64>,
    pub set_size: usize,
}

const VARIANCE_FLOOR: f64 = 1e-30;

impl Calibration {
    /// Variances for `partition`: per subband, or the size-weighted average
    /// when the partition is a single group.
    pub fn grouped(&self, layout: &SubbandLayout, partition: &Partition) -> Result<Vec<f64>> {
        if partition == &layout.partition() {
            return Ok(self.subband_variance.clone());
        }
        if partition.num_groups() == 1 {
            let total: f64 =
                layout.subbands().iter().zip(&self.subband_variance).map(|(sb, v)| sb.len() as f64 * v).sum();
            return Ok(vec![total / layout.len() as f64]);
        }
        Err(Error::InvalidInput("calibration only maps onto subband or scalar grouping".into()))
    }
}

/// Simulates each image through `fm` at `snr_db` and averages the subband
/// powers of `B^H y - Psi x0`.
pub fn calibrate(fm: &ForwardModel, images: &[ComplexImage], snr_db: f64, seed: SeedTree) -> Result<Calibration> {
    if images.is_empty() {
        return Err(Error::InvalidInput("calibration set is empty".into()));
    }
    let layout = fm.layout();
    let mut acc = vec![0.0; layout.num_subbands()];
    for (i, x0) in images.iter().enumerate() {
        let m = simulate_measurements(x0, fm, snr_db, seed.indexed("calibration", i as u64).seed())?;
        let bhy = fm.apply_bh(&m.y)?;
        let c0 = dwt2_haar_with(x0, layout)?;
        for (ell, sb) in layout.subbands().iter().enumerate() {
            let e: f64 =
                bhy.coeffs()[sb.range()].iter().zip(&c0.coeffs()[sb.range()]).map(|(a, b)| (a - b).norm_sqr()).sum();
            acc[ell] += e / sb.len() as f64;
        }
    }
    let n = images.len() as f64;
    Ok(Calibration {
        subband_variance: acc.into_iter().map(|v| (v / n).max(VARIANCE_FLOOR)).collect(),
        set_size: images.len(),
    })
}

pub fn partition_for(layout: &SubbandLayout, grouping: Grouping) -> Partition {
    match grouping {
        Grouping::Subbands => layout.partition(),
        Grouping::Scalar => Partition::whole(layout.len()),
    }
}

/// Initial state. In `BhyPlusNoise` mode `calibration` is required and
/// `gamma1 = 1 / ((1 + inflation) v_l)`; in `BhyPlain` mode
/// `gamma1 = 1 / v_l`, or `N / |B^H y|^2` without calibration.
pub fn init_state(
    y: &[Complex64],
    fm: &ForwardModel,
    config: &SolverConfig,
    calibration: Option<&Calibration>,
    seed: SeedTree,
) -> Result<GecState> {
    let layout = fm.layout();
    let partition = partition_for(layout, config.grouping);
    let mut r1 = fm.apply_bh(y)?;
    let gammas = match (config.init_mode, calibration) {
        (InitMode::BhyPlusNoise, None) => return Err(Error::MissingCalibration("bhy_plus_noise")),
        (InitMode::BhyPlusNoise, Some(cal)) => {
            let v = cal.grouped(layout, &partition)?;
            let mut rng = seed.child("init").rng();
            for (ell, range) in partition.ranges().iter().enumerate() {
                let var = config.init_inflation * v[ell];
                for c in &mut r1.coeffs_mut()[range.clone()] {
                    *c += complex_normal(&mut rng, var);
                }
            }
            v.iter().map(|v| 1.0 / ((1.0 + config.init_inflation) * v)).collect()
        }
        (InitMode::BhyPlain, Some(cal)) => cal.grouped(layout, &partition)?.iter().map(|v| 1.0 / v).collect(),
        (InitMode::BhyPlain, None) => {
            let p = r1.norm_sqr() / r1.coeffs().len() as f64;
            vec![1.0 / p.max(VARIANCE_FLOOR); partition.num_groups()]
        }
    };
    let gamma1 = PrecisionVector::new(partition, gammas)?;
    Ok(GecState::initial(r1, gamma1))
}
