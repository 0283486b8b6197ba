//! Plot-ready CSV result files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{ChshValue, CorrelationTable, SweepResult};
use crate::error::{Error, Result};

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::io(path, e.into_error()))?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut reader = csv::Reader::from_path(path)?;
    reader
        .deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(Error::from)
}

pub fn write_correlations(path: &Path, table: &CorrelationTable) -> Result<()> {
    write_rows(path, table.rows())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshRow {
    pub window: f64,
    pub s: f64,
    pub stderr: f64,
    pub coincidences: u64,
    pub coincidence_rate: f64,
}

impl ChshRow {
    pub fn new(window: f64, value: ChshValue, coincidences: u64, n_pairs: u64) -> Self {
        ChshRow {
            window,
            s: value.s,
            stderr: value.stderr,
            coincidences,
            coincidence_rate: coincidences as f64 / n_pairs as f64,
        }
    }
}

pub fn write_chsh(path: &Path, row: &ChshRow) -> Result<()> {
    write_rows(path, [row])
}

pub fn write_sweep(path: &Path, sweep: &SweepResult) -> Result<()> {
    write_rows(path, &sweep.rows)
}

/// One point of the exact correlation curves, versus `delta = a2 - a1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub delta_rad: f64,
    pub model: f64,
    pub singlet: f64,
    pub mixed: f64,
    pub coincidence_probability: f64,
}

pub fn write_curves(path: &Path, rows: &[CurveRow]) -> Result<()> {
    write_rows(path, rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleChshRow {
    pub window: f64,
    pub s_model: f64,
    pub s_singlet: f64,
    pub s_mixed: f64,
}

pub fn write_oracle_chsh(path: &Path, row: &OracleChshRow) -> Result<()> {
    write_rows(path, [row])
}
