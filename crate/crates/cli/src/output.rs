//! CSV and JSON writers.

use std::fs;
use std::path::Path;

use serde::Serialize;

use piezo_core::analysis::SweepCell;
use piezo_core::SimulationResult;

use crate::error::CliError;

pub const TIMESERIES_HEADER: [&str; 11] = [
    "t",
    "U",
    "U_bar",
    "f_b",
    "strain_tip",
    "strain_boundary",
    "H_d",
    "S_h",
    "S_d",
    "balance_residual",
    "dSd_dt",
];

pub const SUMMARY_HEADER: [&str; 10] = [
    "row",
    "gain",
    "status",
    "rise_time_10_90",
    "overshoot_pct",
    "settling_time_2pct",
    "steady_state_error_pct",
    "vibration_index",
    "cell",
    "error",
];

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::output(dir, e))
}

pub fn write_timeseries(path: &Path, r: &SimulationResult) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::output(path, e))?;
    w.write_record(TIMESERIES_HEADER)
        .map_err(|e| CliError::output(path, e))?;
    for k in 0..r.len() {
        let row = [
            r.times[k],
            r.u[k],
            r.u_bar[k],
            r.f_b[k],
            r.strain_tip[k],
            r.strain_boundary[k],
            r.h_d[k],
            r.s_h[k],
            r.s_d[k],
            r.balance_residual[k],
            r.s_d_derivative[k],
        ];
        w.write_record(row.iter().map(|v| fmt_f64(*v)))
            .map_err(|e| CliError::output(path, e))?;
    }
    w.flush().map_err(|e| CliError::output(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::output(path, e))?;
    fs::write(path, text + "\n").map_err(|e| CliError::output(path, e))
}

pub fn write_summary(path: &Path, cells: &[(String, &SweepCell)]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::output(path, e))?;
    w.write_record(SUMMARY_HEADER)
        .map_err(|e| CliError::output(path, e))?;
    for (dir, c) in cells {
        let m = c.metrics;
        let record = [
            c.row.clone(),
            fmt_f64(c.gain),
            if c.ok() { "ok" } else { "failed" }.to_string(),
            fmt_opt(m.and_then(|m| m.rise_time_10_90)),
            fmt_opt(m.and_then(|m| m.overshoot_pct)),
            fmt_opt(m.and_then(|m| m.settling_time_2pct)),
            fmt_opt(m.and_then(|m| m.steady_state_error_pct)),
            m.map(|m| m.vibration_index.to_string()).unwrap_or_default(),
            dir.clone(),
            c.error.clone().unwrap_or_default(),
        ];
        w.write_record(&record)
            .map_err(|e| CliError::output(path, e))?;
    }
    w.flush().map_err(|e| CliError::output(path, e))
}
