use std::io::Write;

use crate::error::Result;
use crate::transforms::{Partition, SubbandLayout};

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// `None` without ground truth.
    pub psnr: Option<f64>,
    /// `1 / sqrt(gamma2)` per group.
    pub predicted_sd: Vec<f64>,
    /// SD of `r2 - c0` per group over the coefficient support.
    pub empirical_sd: Option<Vec<f64>>,
    /// `|x_t - x_{t-1}| / |x_t|`.
    pub relative_change: f64,
}

/// One row per iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationDiagnostics {
    group_names: Vec<String>,
    rows: Vec<IterationRecord>,
}

impl IterationDiagnostics {
    pub fn new(layout: &SubbandLayout, partition: &Partition) -> Self {
        let group_names = if partition == &layout.partition() {
            layout.subbands().iter().map(|s| s.name()).collect()
        } else {
            (0..partition.num_groups()).map(|g| format!("g{g}")).collect()
        };
        IterationDiagnostics { group_names, rows: Vec::new() }
    }

    pub fn push(&mut self, row: IterationRecord) {
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[IterationRecord] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last_psnr(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.psnr)
    }

    fn has_empirical(&self) -> bool {
        self.rows.iter().any(|r| r.empirical_sd.is_some())
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["iter".to_string(), "psnr".to_string()];
        h.extend(self.group_names.iter().map(|n| format!("pred_sd_{n}")));
        if self.has_empirical() {
            h.extend(self.group_names.iter().map(|n| format!("emp_sd_{n}")));
        }
        h
    }

    /// `iter, psnr, predicted SDs..., [empirical SDs...]`. A missing PSNR is
    /// an empty field; an infinite one is written as `inf`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        let emp = self.has_empirical();
        for row in &self.rows {
            let mut rec = vec![row.iteration.to_string(), row.psnr.map(|p| p.to_string()).unwrap_or_default()];
            rec.extend(row.predicted_sd.iter().map(|v| v.to_string()));
            if emp {
                match &row.empirical_sd {
                    Some(e) => rec.extend(e.iter().map(|v| v.to_string())),
                    None => rec.extend(self.group_names.iter().map(|_| String::new())),
                }
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}
