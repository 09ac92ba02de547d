use crate::error::{Error, Result};
use crate::transforms::{Partition, SubbandLayout};

/// One precision per coefficient group, shared by every coefficient in the
/// group. With the subband partition this is the `L`-vector of per-subband
/// precisions; with [`Partition::whole`] it is a single scalar.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionVector {
    partition: Partition,
    gammas: Vec<f64>,
}

impl PrecisionVector {
    pub fn new(partition: Partition, gammas: Vec<f64>) -> Result<Self> {
        if gammas.len() != partition.num_groups() {
            return Err(Error::ShapeMismatch(format!(
                "{} precisions for {} groups",
                gammas.len(),
                partition.num_groups()
            )));
        }
        if let Some(g) = gammas.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
            return Err(Error::InvalidInput(format!("precisions must be positive and finite, got {g}")));
        }
        Ok(PrecisionVector { partition, gammas })
    }

    pub fn uniform(partition: Partition, gamma: f64) -> Result<Self> {
        let n = partition.num_groups();
        PrecisionVector::new(partition, vec![gamma; n])
    }

    /// Per-subband precisions for a wavelet layout.
    pub fn for_layout(layout: &SubbandLayout, gammas: Vec<f64>) -> Result<Self> {
        PrecisionVector::new(layout.partition(), gammas)
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn num_groups(&self) -> usize {
        self.gammas.len()
    }

    pub fn get(&self, ell: usize) -> f64 {
        self.gammas[ell]
    }

    /// Length-`N` vector with each precision repeated over its group.
    pub fn expand(&self) -> Vec<f64> {
        self.partition.expand(&self.gammas)
    }

    /// Same partition, new values (validated).
    pub fn with_gammas(&self, gammas: Vec<f64>) -> Result<Self> {
        PrecisionVector::new(self.partition.clone(), gammas)
    }

    /// Predicted error standard deviations `1/sqrt(gamma)`.
    pub fn std_devs(&self) -> Vec<f64> {
        self.gammas.iter().map(|g| 1.0 / g.sqrt()).collect()
    }
}
