//! Run reports in JSON and CSV.
//!
//! A report file holds the tool version, the full [`RunConfig`] and one
//! [`Record`] per run (one per trial for injection runs). The CSV file has
//! one row per record with the same values; nested fields (`params`,
//! `details`, `config`) are written as compact JSON strings.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::runner::RunConfig;
use crate::twolocus::Direction;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// One engine run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub algorithm: String,
    /// Resolved algorithm parameters.
    pub params: Value,
    pub dataset: String,
    pub pair_index_1: Option<usize>,
    pub pair_index_2: Option<usize>,
    /// Euclidean distance for motif runs, raw match count for Hamming runs;
    /// empty for neighbour and two-locus runs.
    pub distance_or_matches: Option<f64>,
    pub pairs_examined: u64,
    pub iterations: Option<u64>,
    /// Always 0 in deterministic mode.
    pub wall_seconds: f64,
    pub seed: u64,
    pub delta: Option<f64>,
    pub direction: Option<Direction>,
    pub recovery_iteration: Option<u64>,
    pub recovery_candidates: Option<u64>,
    /// Engine-specific counters.
    pub details: Value,
}

/// Engine result compared against a second engine on the same input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub engine: String,
    pub against: String,
    pub engine_pair: Option<(usize, usize)>,
    pub against_pair: Option<(usize, usize)>,
    pub engine_value: Option<f64>,
    pub against_value: Option<f64>,
    /// Exact equality of the objective values (distance, matches, delta or
    /// neighbour lists).
    pub values_equal: bool,
    pub pairs_equal: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub config: RunConfig,
    pub records: Vec<Record>,
    pub verification: Option<Verification>,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    algorithm: &'a str,
    params: String,
    dataset: &'a str,
    pair_index_1: Option<usize>,
    pair_index_2: Option<usize>,
    distance_or_matches: Option<f64>,
    pairs_examined: u64,
    iterations: Option<u64>,
    wall_seconds: f64,
    seed: u64,
    delta: Option<f64>,
    direction: Option<&'static str>,
    recovery_iteration: Option<u64>,
    recovery_candidates: Option<u64>,
    details: String,
    version: &'a str,
    config: String,
}

fn direction_label(d: Direction) -> &'static str {
    match d {
        Direction::CasesOverControls => "cases_over_controls",
        Direction::ControlsOverCases => "controls_over_cases",
    }
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_csv(&self) -> Result<String> {
        let config = serde_json::to_string(&self.config)?;
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.records {
            w.serialize(CsvRow {
                algorithm: &r.algorithm,
                params: serde_json::to_string(&r.params)?,
                dataset: &r.dataset,
                pair_index_1: r.pair_index_1,
                pair_index_2: r.pair_index_2,
                distance_or_matches: r.distance_or_matches,
                pairs_examined: r.pairs_examined,
                iterations: r.iterations,
                wall_seconds: r.wall_seconds,
                seed: r.seed,
                delta: r.delta,
                direction: r.direction.map(direction_label),
                recovery_iteration: r.recovery_iteration,
                recovery_candidates: r.recovery_candidates,
                details: serde_json::to_string(&r.details)?,
                version: &self.version,
                config: config.clone(),
            })?;
        }
        csv_text(w)
    }
}

pub(crate) fn csv_text(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Serialize(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Serialize(e.to_string()))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// `<stem>.json` and `<stem>.csv` next to `path`, whatever its extension.
pub fn report_paths(path: &Path) -> (PathBuf, PathBuf) {
    (path.with_extension("json"), path.with_extension("csv"))
}

/// Writes the JSON and CSV forms; returns both paths.
pub fn write_report(report: &RunReport, path: &Path) -> Result<(PathBuf, PathBuf)> {
    let (json, csv) = report_paths(path);
    write_text(&json, &report.to_json()?)?;
    write_text(&csv, &report.to_csv()?)?;
    Ok((json, csv))
}

pub fn read_report(path: &Path) -> Result<RunReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RunReport::from_json(&text)
}
