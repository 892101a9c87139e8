//! CSV tables and the JSON run record.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::ScenarioConfig;
use crate::run::{HarnessError, PointFailure, RunOutput, Table};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
    pub rows: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scenario: String,
    pub config: ScenarioConfig,
    pub code_version: String,
    pub wall_time_s: f64,
    pub outputs: Vec<OutputFile>,
    pub summary: Value,
    pub failures: Vec<PointFailure>,
    pub passed: bool,
}

pub fn csv_bytes(table: &Table) -> Result<Vec<u8>, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| HarnessError::Output(e.to_string());
    w.write_record(&table.header).map_err(err)?;
    for row in &table.rows {
        w.write_record(row).map_err(err)?;
    }
    w.into_inner().map_err(|e| HarnessError::Output(e.to_string()))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    fs::write(path, bytes).map_err(|e| HarnessError::Output(format!("{}: {e}", path.display())))
}

/// Writes `<name><suffix>.csv` for every table and `<name>.json` listing
/// them; returns the record.
pub fn emit_outputs(
    dir: &Path,
    cfg: &ScenarioConfig,
    out: &RunOutput,
    wall_time_s: f64,
) -> Result<RunRecord, HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::Output(format!("{}: {e}", dir.display())))?;
    let mut outputs = Vec::new();
    for t in &out.tables {
        let file = format!("{}{}.csv", cfg.name, t.suffix);
        let bytes = csv_bytes(t)?;
        write(&dir.join(&file), &bytes)?;
        outputs.push(OutputFile { file, sha256: hex(&Sha256::digest(&bytes)), rows: t.rows.len() });
    }
    let record = RunRecord {
        scenario: cfg.name.clone(),
        config: cfg.clone(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_s,
        outputs,
        summary: out.summary.clone(),
        failures: out.failures.clone(),
        passed: out.passed,
    };
    let json = serde_json::to_vec_pretty(&record).map_err(|e| HarnessError::Output(e.to_string()))?;
    write(&summary_path(dir, &cfg.name), &json)?;
    Ok(record)
}

pub fn summary_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("{name}.json"))
}

pub fn load_record(path: &Path) -> Result<RunRecord, HarnessError> {
    let bytes = fs::read(path).map_err(|e| HarnessError::Output(format!("{}: {e}", path.display())))?;
    serde_json::from_slice(&bytes).map_err(|e| HarnessError::Output(e.to_string()))
}
