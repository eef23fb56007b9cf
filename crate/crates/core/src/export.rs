//! Trajectory CSV and verdict sidecar JSON.
//!
//! CSV columns: `time`, `agent{i}_x`, `agent{i}_y` (and `agent{i}_z` in 3D)
//! for every agent, `bearing_error`, then `ctrl_norm_agent{i}` for every
//! agent. Numbers are written as `{:.16e}` (17 significant digits), which
//! parses back to the identical `f64`.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::simulate::{IntegratorSettings, TrajectoryRecord, Verdict};

const AXES: [&str; 3] = ["x", "y", "z"];

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const VERDICT_FILE: &str = "verdict.json";

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV header for `n` agents in dimension `d`.
pub fn trajectory_header(n: usize, d: usize) -> Vec<String> {
    let mut header = vec!["time".to_string()];
    for i in 1..=n {
        for axis in &AXES[..d] {
            header.push(format!("agent{i}_{axis}"));
        }
    }
    header.push("bearing_error".to_string());
    for i in 1..=n {
        header.push(format!("ctrl_norm_agent{i}"));
    }
    header
}

/// Writes `record` as CSV. An empty record yields the header alone, sized
/// by `layout = (n, d)` when given and `time,bearing_error` otherwise.
pub fn write_trajectory<W: Write>(
    record: &TrajectoryRecord,
    layout: Option<(usize, usize)>,
    writer: W,
) -> Result<()> {
    let layout = record.configs.first().map(|c| (c.n(), c.d())).or(layout);
    let mut csv = csv::Writer::from_writer(writer);
    match layout {
        Some((n, d)) => csv.write_record(trajectory_header(n, d))?,
        None => csv.write_record(["time", "bearing_error"])?,
    }
    for k in 0..record.len() {
        let mut row = vec![fmt(record.times[k])];
        row.extend(record.configs[k].stacked().iter().map(|x| fmt(*x)));
        row.push(fmt(record.errors[k]));
        row.extend(record.control_norms[k].iter().map(|x| fmt(*x)));
        csv.write_record(&row)?;
    }
    csv.flush()?;
    Ok(())
}

pub fn export_trajectory(record: &TrajectoryRecord, path: &Path) -> Result<()> {
    write_trajectory(record, None, File::create(path)?)
}

/// A trajectory CSV read back into columns.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTable {
    pub header: Vec<String>,
    pub times: Vec<f64>,
    /// Stacked agent coordinates per row.
    pub positions: Vec<Vec<f64>>,
    pub errors: Vec<f64>,
    pub control_norms: Vec<Vec<f64>>,
}

pub fn read_trajectory<R: std::io::Read>(reader: R) -> Result<TrajectoryTable> {
    let mut csv = csv::Reader::from_reader(reader);
    let header: Vec<String> = csv.headers()?.iter().map(str::to_string).collect();
    let error_col = header
        .iter()
        .position(|h| h == "bearing_error")
        .ok_or_else(|| Error::Parse("missing bearing_error column".into()))?;
    if header.first().map(String::as_str) != Some("time") {
        return Err(Error::Parse("first column must be time".into()));
    }
    let mut table = TrajectoryTable {
        header: header.clone(),
        times: Vec::new(),
        positions: Vec::new(),
        errors: Vec::new(),
        control_norms: Vec::new(),
    };
    for (line, row) in csv.records().enumerate() {
        let row = row?;
        let values = row
            .iter()
            .map(|s| {
                s.parse::<f64>().map_err(|_| Error::Parse(format!("row {}: bad number {s:?}", line + 2)))
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != header.len() {
            return Err(Error::Parse(format!("row {}: wrong field count", line + 2)));
        }
        table.times.push(values[0]);
        table.positions.push(values[1..error_col].to_vec());
        table.errors.push(values[error_col]);
        table.control_norms.push(values[error_col + 1..].to_vec());
    }
    Ok(table)
}

pub fn import_trajectory(path: &Path) -> Result<TrajectoryTable> {
    read_trajectory(File::open(path)?)
}

/// Verdict and run metadata written next to the trajectory CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictSidecar {
    pub scenario: String,
    pub verdict: Verdict,
    pub seed: Option<u64>,
    pub samples: usize,
    pub final_time: Option<f64>,
    pub final_error: Option<f64>,
    pub time_to_tol: Option<f64>,
    pub settings: IntegratorSettings,
}

impl VerdictSidecar {
    pub fn new(scenario: &str, record: &TrajectoryRecord, settings: &IntegratorSettings) -> Self {
        VerdictSidecar {
            scenario: scenario.to_string(),
            verdict: record.verdict,
            seed: record.seed,
            samples: record.len(),
            final_time: record.final_time(),
            final_error: record.final_error(),
            time_to_tol: record.time_to_error(settings.convergence_tol),
            settings: settings.clone(),
        }
    }
}

/// Writes `trajectory.csv` and `verdict.json` into `dir`, creating it.
pub fn export_run(
    dir: &Path,
    scenario: &str,
    record: &TrajectoryRecord,
    settings: &IntegratorSettings,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    export_trajectory(record, &dir.join(TRAJECTORY_FILE))?;
    let sidecar = VerdictSidecar::new(scenario, record, settings);
    let json = serde_json::to_string_pretty(&sidecar)?;
    std::fs::write(dir.join(VERDICT_FILE), json + "\n")?;
    Ok(())
}
