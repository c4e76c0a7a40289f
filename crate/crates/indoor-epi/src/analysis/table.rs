//! The flat per-run dataset consumed by the analysis stage.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::stats;

pub const COLUMNS: [&str; 8] = [
    "n_crowding",
    "d_crowding",
    "n_stopping",
    "t_stopping",
    "t_total_stop",
    "sigma_spaces",
    "c_new",
    "e_ave",
];

/// One run of the experiment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub n_crowding: f64,
    pub d_crowding: f64,
    pub n_stopping: f64,
    pub t_stopping: f64,
    pub t_total_stop: f64,
    pub sigma_spaces: f64,
    pub c_new: f64,
    pub e_ave: f64,
}

impl SampleRow {
    pub fn get(&self, column: &str) -> Option<f64> {
        match column {
            "n_crowding" => Some(self.n_crowding),
            "d_crowding" => Some(self.d_crowding),
            "n_stopping" => Some(self.n_stopping),
            "t_stopping" => Some(self.t_stopping),
            "t_total_stop" => Some(self.t_total_stop),
            "sigma_spaces" => Some(self.sigma_spaces),
            "c_new" => Some(self.c_new),
            "e_ave" => Some(self.e_ave),
            _ => None,
        }
    }

    fn set(&mut self, column: &str, value: f64) {
        match column {
            "n_crowding" => self.n_crowding = value,
            "d_crowding" => self.d_crowding = value,
            "n_stopping" => self.n_stopping = value,
            "t_stopping" => self.t_stopping = value,
            "t_total_stop" => self.t_total_stop = value,
            "sigma_spaces" => self.sigma_spaces = value,
            "c_new" => self.c_new = value,
            "e_ave" => self.e_ave = value,
            _ => unreachable!("unknown column {column}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SampleTable {
    pub rows: Vec<SampleRow>,
}

impl SampleTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        if !COLUMNS.contains(&name) {
            return Err(Error::Table(format!("unknown column '{name}'")));
        }
        Ok(self.rows.iter().map(|r| r.get(name).unwrap()).collect())
    }

    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let mut rows = Vec::new();
        for rec in rdr.deserialize::<SampleRow>() {
            rows.push(rec?);
        }
        Ok(SampleTable { rows })
    }

    pub fn to_csv(&self, path: &Path) -> Result<()> {
        let mut wtr = csv::Writer::from_path(path)?;
        for row in &self.rows {
            wtr.serialize(row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Maps every column onto [0, 1] via `(x - min) / (max - min)`.
pub fn min_max_scale(table: &SampleTable) -> Result<SampleTable> {
    let mut scaled = table.clone();
    for column in COLUMNS {
        let values = table.column(column)?;
        if values.is_empty() {
            return Err(Error::Table("cannot scale an empty table".into()));
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max <= min {
            return Err(Error::ConstantColumn(column.to_string()));
        }
        let range = max - min;
        for (row, v) in scaled.rows.iter_mut().zip(&values) {
            row.set(column, (v - min) / range);
        }
    }
    Ok(scaled)
}

/// 1 where the value strictly exceeds the column mean, else 0.
pub fn binarize(values: &[f64]) -> Vec<u8> {
    let mean = stats::mean(values);
    values.iter().map(|&v| u8::from(v > mean)).collect()
}
