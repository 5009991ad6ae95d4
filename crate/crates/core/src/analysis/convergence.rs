//! Mesh refinement of one scenario.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::closed_loop::steady_state_limit;
use crate::analysis::metrics::StepMetrics;
use crate::error::{Error, Result};
use crate::sim::{simulate, Scenario};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub metrics: StepMetrics,
    /// Tip strain of the closed-loop limit `t -> inf`.
    pub limit_strain: f64,
    /// Steady-state error of the limit, percent.
    pub limit_error_pct: f64,
    /// `|rise(N) - rise(N_prev)|`, absent on the first row or when undefined.
    pub rise_delta: Option<f64>,
}

pub fn convergence_study(scenario: &Scenario, ns: &[usize]) -> Result<Vec<ConvergenceRow>> {
    if ns.is_empty() || ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidScenario(
            "mesh sizes must be non-empty and strictly ascending".into(),
        ));
    }
    let target = scenario.strain_target;
    let rows: Vec<(usize, StepMetrics, f64)> = ns
        .par_iter()
        .map(|&n| {
            let sc = Scenario {
                n,
                ..scenario.clone()
            };
            let metrics = simulate(&sc)?.metrics(target);
            let limit = steady_state_limit(&sc)?[n - 1];
            Ok((n, metrics, limit))
        })
        .collect::<Result<_>>()?;

    let mut out: Vec<ConvergenceRow> = Vec::with_capacity(rows.len());
    for (n, metrics, limit_strain) in rows {
        let rise_delta = out.last().and_then(|prev| {
            Some((metrics.rise_time_10_90? - prev.metrics.rise_time_10_90?).abs())
        });
        out.push(ConvergenceRow {
            n,
            metrics,
            limit_strain,
            limit_error_pct: ((limit_strain - target) / target).abs() * 100.0,
            rise_delta,
        });
    }
    Ok(out)
}
