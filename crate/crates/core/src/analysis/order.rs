//! Temporal self-convergence of the RK4 integrator.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{simulate_from, ClosedLoop, Scenario};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderStudy {
    pub dts: Vec<f64>,
    pub dt_ref: f64,
    /// Spacing of the shared sample grid (the largest step).
    pub sample_interval: f64,
    /// Max-norm state error against the reference run, maximized over the
    /// shared sample grid.
    pub errors: Vec<f64>,
    /// Max-norm error of the terminal state alone.
    pub terminal_errors: Vec<f64>,
    /// `log2(e(dt_k) / e(dt_{k+1})) / log2(dt_k / dt_{k+1})` for successive pairs.
    pub orders: Vec<f64>,
}

impl OrderStudy {
    pub fn min_order(&self) -> f64 {
        self.orders.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Compare runs at `dts` with a run at `dt_ref` on the grid of the largest
/// step.
pub fn rk4_self_convergence(scenario: &Scenario, dts: &[f64], dt_ref: f64) -> Result<OrderStudy> {
    if dts.len() < 2
        || dts
            .iter()
            .any(|&d| d.partial_cmp(&dt_ref) != Some(std::cmp::Ordering::Greater))
    {
        return Err(Error::InvalidScenario(
            "need at least two step sizes, all above the reference".into(),
        ));
    }
    let interval = dts.iter().copied().fold(0.0, f64::max);
    let t_end = scenario.t_end;
    let dim = ClosedLoop::new(scenario)?.dim();
    let runs: Vec<Vec<Vec<f64>>> = std::iter::once(dt_ref)
        .chain(dts.iter().copied())
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|dt| {
            let every = whole(interval / dt).ok_or_else(|| {
                Error::InvalidScenario(format!("dt = {dt} does not divide {interval}"))
            })?;
            let steps = whole(t_end / dt).ok_or_else(|| {
                Error::InvalidScenario(format!("dt = {dt} does not divide t_end = {t_end}"))
            })?;
            let sc = Scenario {
                dt,
                record_every: every,
                snapshot_times: Vec::new(),
                ..scenario.clone()
            };
            let mut states = Vec::with_capacity(steps / every + 1);
            simulate_from(&sc, &vec![0.0; dim], |_, _, x| states.push(x.to_vec()))?;
            Ok(states)
        })
        .collect::<Result<_>>()?;

    let reference = &runs[0];
    let dist = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max)
    };
    let errors: Vec<f64> = runs[1..]
        .iter()
        .map(|r| {
            r.iter()
                .zip(reference)
                .map(|(a, b)| dist(a, b))
                .fold(0.0, f64::max)
        })
        .collect();
    let terminal_errors = runs[1..]
        .iter()
        .map(|r| dist(r.last().unwrap(), reference.last().unwrap()))
        .collect();
    let orders = errors
        .windows(2)
        .zip(dts.windows(2))
        .map(|(e, d)| (e[0] / e[1]).log2() / (d[0] / d[1]).log2())
        .collect();
    Ok(OrderStudy {
        dts: dts.to_vec(),
        dt_ref,
        sample_interval: interval,
        errors,
        terminal_errors,
        orders,
    })
}

fn whole(ratio: f64) -> Option<usize> {
    let k = ratio.round();
    (k >= 1.0 && (ratio - k).abs() <= 1e-9 * k).then_some(k as usize)
}
