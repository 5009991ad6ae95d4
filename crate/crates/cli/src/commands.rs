//! `simulate` and `sweep`.

use rayon::prelude::*;
use serde::Serialize;

use piezo_core::analysis::{steady_state_limit, sweep, SweepCell};
use piezo_core::{simulate, Scenario, SimulationResult, StepMetrics};

use crate::config::{cell_name, Job, RunConfig};
use crate::error::CliError;
use crate::output::{ensure_dir, write_json, write_summary, write_timeseries};

#[derive(Debug, Serialize)]
struct RunReport {
    name: String,
    status: &'static str,
    scenario: Scenario,
    metrics: Option<StepMetrics>,
    cfl_warning: bool,
    final_strain_tip: Option<f64>,
    /// Tip strain of the closed-loop limit `t -> inf`.
    limit_strain_tip: Option<f64>,
    limit_error_pct: Option<f64>,
    timeseries: Option<String>,
    error: Option<String>,
}

fn report(
    job: &Job,
    outcome: &Result<SimulationResult, piezo_core::Error>,
    csv: Option<String>,
) -> RunReport {
    let sc = &job.scenario;
    let target = sc.strain_target;
    let limit = steady_state_limit(sc).ok().map(|x| x[sc.n - 1]);
    let (status, metrics, final_tip, error) = match outcome {
        Ok(r) => (
            "ok",
            Some(r.metrics(target)),
            r.strain_tip.last().copied(),
            None,
        ),
        Err(e) => ("aborted", None, None, Some(e.to_string())),
    };
    RunReport {
        name: job.name.clone(),
        status,
        scenario: sc.clone(),
        metrics,
        cfl_warning: sc.cfl_warning(),
        final_strain_tip: final_tip,
        limit_strain_tip: limit,
        limit_error_pct: limit
            .filter(|_| target != 0.0)
            .map(|l| ((l - target) / target).abs() * 100.0),
        timeseries: if outcome.is_ok() { csv } else { None },
        error,
    }
}

fn warn_cfl(sc: &Scenario, name: &str) {
    if sc.cfl_warning() {
        eprintln!(
            "warning: {name}: dt = {} exceeds the step heuristic {:.3e}",
            sc.dt,
            sc.cfl_limit()
        );
    }
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let jobs = cfg.jobs();
    ensure_dir(&cfg.out)?;
    for j in &jobs {
        warn_cfl(&j.scenario, &j.name);
    }
    let outcomes: Vec<_> = jobs.par_iter().map(|j| simulate(&j.scenario)).collect();

    let mut runs = Vec::with_capacity(jobs.len());
    for (job, outcome) in jobs.iter().zip(&outcomes) {
        let csv = cfg.write_timeseries.then(|| {
            if jobs.len() == 1 {
                "timeseries.csv".to_string()
            } else {
                format!("timeseries_{}.csv", job.name)
            }
        });
        if let (Ok(r), Some(name)) = (outcome, &csv) {
            write_timeseries(&cfg.out.join(name), r)?;
        }
        let rep = report(job, outcome, csv);
        if let Some(m) = &rep.metrics {
            println!(
                "{}: rise {} overshoot {} settling {} sse {}",
                job.name,
                show(m.rise_time_10_90),
                show(m.overshoot_pct),
                show(m.settling_time_2pct),
                show(m.steady_state_error_pct),
            );
        }
        runs.push(rep);
    }
    write_json(
        &cfg.out.join("metrics.json"),
        &serde_json::json!({ "runs": runs }),
    )?;

    match outcomes
        .iter()
        .zip(&jobs)
        .find_map(|(o, j)| o.as_ref().err().map(|e| (j, e)))
    {
        Some((job, e)) => Err(CliError::Numerical(format!("{}: {e}", job.name))),
        None => Ok(()),
    }
}

fn show(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.4}"))
}

#[derive(Debug, Serialize)]
struct CellReport<'a> {
    row: &'a str,
    gain: f64,
    scenario: &'a Scenario,
    metrics: Option<StepMetrics>,
    cfl_warning: bool,
    error: Option<&'a str>,
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<(), CliError> {
    let rows = cfg.rows()?;
    let base = cfg.scenario();
    warn_cfl(&base, "sweep");
    ensure_dir(&cfg.out)?;
    let cells = sweep(&base, &rows);

    let mut named: Vec<(String, &SweepCell)> = Vec::with_capacity(cells.len());
    let mut k = 0;
    for r in &rows {
        for &v in &r.values {
            named.push((cell_name(r, v), &cells[k]));
            k += 1;
        }
    }

    named
        .par_iter()
        .map(|(dir, cell)| {
            let path = cfg.out.join(dir);
            ensure_dir(&path)?;
            if let (Some(r), true) = (&cell.result, cfg.write_timeseries) {
                write_timeseries(&path.join("timeseries.csv"), r)?;
            }
            write_json(
                &path.join("metrics.json"),
                &CellReport {
                    row: &cell.row,
                    gain: cell.gain,
                    scenario: &cell.scenario,
                    metrics: cell.metrics,
                    cfl_warning: cell.scenario.cfl_warning(),
                    error: cell.error.as_deref(),
                },
            )
        })
        .collect::<Result<Vec<()>, CliError>>()?;
    write_summary(&cfg.out.join("sweep_summary.csv"), &named)?;

    for (dir, c) in &named {
        match (&c.metrics, &c.error) {
            (Some(m), _) => println!(
                "{dir}: rise {} overshoot {} vibration {}",
                show(m.rise_time_10_90),
                show(m.overshoot_pct),
                m.vibration_index
            ),
            (None, e) => println!("{dir}: failed: {}", e.as_deref().unwrap_or("unknown")),
        }
    }
    if cells.iter().any(|c| c.ok()) {
        Ok(())
    } else {
        Err(CliError::Numerical("every sweep cell failed".into()))
    }
}
