//! Step-response metrics of the tip strain.
//!
//! Conventions: rise time is 10 % to 90 % of the target, settling uses a
//! +/-2 % band that must hold through the end of the record, and the vibration
//! index counts sign changes of `y - target` after the first target crossing,
//! ignoring excursions inside a 0.1 % dead band.

use serde::{Deserialize, Serialize};

const SETTLING_BAND: f64 = 0.02;
const VIBRATION_DEADBAND: f64 = 1e-3;

/// `None` marks a metric that is undefined for the record (no crossing, not
/// settled, or zero target).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub rise_time_10_90: Option<f64>,
    pub overshoot_pct: Option<f64>,
    pub settling_time_2pct: Option<f64>,
    pub steady_state_error_pct: Option<f64>,
    pub vibration_index: usize,
}

impl StepMetrics {
    fn undefined() -> Self {
        Self {
            rise_time_10_90: None,
            overshoot_pct: None,
            settling_time_2pct: None,
            steady_state_error_pct: None,
            vibration_index: 0,
        }
    }

    pub fn settled(&self) -> bool {
        self.settling_time_2pct.is_some()
    }
}

/// Metrics of `series` sampled at uniformly spaced `times`.
pub fn step_metrics(times: &[f64], series: &[f64], target: f64) -> StepMetrics {
    let len = times.len().min(series.len());
    if len == 0 || target == 0.0 || !target.is_finite() {
        return StepMetrics::undefined();
    }
    let times = &times[..len];
    let y: Vec<f64> = series[..len].iter().map(|v| v / target).collect();

    let t10 = first_crossing(times, &y, 0.1);
    let t90 = first_crossing(times, &y, 0.9);
    let rise_time_10_90 = match (t10, t90) {
        (Some(a), Some(b)) => Some(b - a),
        _ => None,
    };

    let peak = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let overshoot_pct = Some((peak - 1.0).max(0.0) * 100.0);

    StepMetrics {
        rise_time_10_90,
        overshoot_pct,
        settling_time_2pct: settling_time(times, &y),
        steady_state_error_pct: Some((y[len - 1] - 1.0).abs() * 100.0),
        vibration_index: vibration_index(&y),
    }
}

/// First time the normalized signal reaches `level`, linearly interpolated.
fn first_crossing(times: &[f64], y: &[f64], level: f64) -> Option<f64> {
    let k = y.iter().position(|&v| v >= level)?;
    if k == 0 {
        return Some(times[0]);
    }
    Some(interpolate(times[k - 1], times[k], y[k - 1], y[k], level))
}

fn interpolate(t0: f64, t1: f64, y0: f64, y1: f64, level: f64) -> f64 {
    if y1 == y0 {
        return t1;
    }
    t0 + (level - y0) / (y1 - y0) * (t1 - t0)
}

fn settling_time(times: &[f64], y: &[f64]) -> Option<f64> {
    let outside = |v: f64| (v - 1.0).abs() > SETTLING_BAND;
    let Some(k) = y.iter().rposition(|&v| outside(v)) else {
        return Some(times[0]);
    };
    if k + 1 == y.len() {
        return None;
    }
    let edge = if y[k] > 1.0 {
        1.0 + SETTLING_BAND
    } else {
        1.0 - SETTLING_BAND
    };
    Some(interpolate(times[k], times[k + 1], y[k], y[k + 1], edge))
}

fn vibration_index(y: &[f64]) -> usize {
    let Some(start) = y.iter().position(|&v| v >= 1.0) else {
        return 0;
    };
    let mut sign = 1.0;
    let mut count = 0;
    for &v in &y[start..] {
        let d = v - 1.0;
        if d.abs() <= VIBRATION_DEADBAND {
            continue;
        }
        let s = d.signum();
        if s != sign {
            count += 1;
            sign = s;
        }
    }
    count
}
