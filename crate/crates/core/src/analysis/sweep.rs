//! Gain sweeps over the tabulated experiment rows and the tuned cases.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::metrics::StepMetrics;
use crate::control::{ControllerFamily, ControllerSpec};
use crate::sim::{simulate, Scenario, SimulationResult};

/// Which gain a row varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepVariable {
    Kp,
    Ki,
}

/// One row: a family, a fixed gain, a list of values for the other gain.
/// Gains are in the reparameterized (bar) form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRow {
    pub label: String,
    pub family: ControllerFamily,
    pub fixed: f64,
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub reference_on: bool,
}

impl SweepRow {
    pub fn spec(&self, value: f64) -> ControllerSpec {
        let (ki, kp) = match self.variable {
            SweepVariable::Kp => (self.fixed, value),
            SweepVariable::Ki => (value, self.fixed),
        };
        match self.family {
            ControllerFamily::InputShaping => {
                ControllerSpec::input_shaping_bar(ki, kp, self.reference_on)
            }
            _ => ControllerSpec::output_shaping_bar(ki, kp, self.reference_on),
        }
    }

    pub fn scenarios(&self, base: &Scenario) -> Vec<Scenario> {
        self.values
            .iter()
            .map(|&v| Scenario {
                controller: self.spec(v),
                ..base.clone()
            })
            .collect()
    }

    pub fn with_reference(&self, reference_on: bool) -> Self {
        Self {
            reference_on,
            ..self.clone()
        }
    }
}

fn row(
    label: &str,
    family: ControllerFamily,
    fixed: f64,
    variable: SweepVariable,
    values: &[f64],
    reference_on: bool,
) -> SweepRow {
    SweepRow {
        label: label.into(),
        family,
        fixed,
        variable,
        values: values.to_vec(),
        reference_on,
    }
}

/// The six rows of the output/input shaping study.
pub fn table_one() -> Vec<SweepRow> {
    use ControllerFamily::{InputShaping as Is, OutputShaping as Os};
    use SweepVariable::{Ki, Kp};
    let five = [0.0, 0.2, 0.5, 1.0, 2.5];
    vec![
        row("fig2a", Os, 0.0, Kp, &[0.0, 0.5, 2.0, 5.0], true),
        row("fig2b", Os, 0.0, Ki, &[0.0, 0.1, 0.3, 0.5], true),
        row("fig2c", Os, 0.3, Kp, &five, true),
        row("fig3a", Is, 0.0, Ki, &five, false),
        row("fig3b", Is, 0.5, Kp, &five, false),
        row("fig3c", Is, 0.5, Kp, &five, true),
    ]
}

/// The two tuned requirement cases, controllers A (output shaping) and B
/// (input shaping), reference on.
pub fn tuned_cases() -> Vec<(String, ControllerSpec)> {
    vec![
        (
            "case1-A".into(),
            ControllerSpec::output_shaping_bar(0.5, 1.35, true),
        ),
        (
            "case1-B".into(),
            ControllerSpec::input_shaping_bar(0.45, 1.4, true),
        ),
        (
            "case2-A".into(),
            ControllerSpec::output_shaping_bar(0.25, 0.65, true),
        ),
        (
            "case2-B".into(),
            ControllerSpec::input_shaping_bar(0.1, 0.5, true),
        ),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub row: String,
    pub gain: f64,
    pub scenario: Scenario,
    pub metrics: Option<StepMetrics>,
    pub error: Option<String>,
    #[serde(skip)]
    pub result: Option<SimulationResult>,
}

impl SweepCell {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }

    /// Rise time with "never rises" mapped to infinity.
    pub fn rise_time(&self) -> f64 {
        self.metrics
            .and_then(|m| m.rise_time_10_90)
            .unwrap_or(f64::INFINITY)
    }
}

/// Run every cell of `rows` on top of `base`, in parallel. Cells come back
/// in row order, then value order. A failed cell carries its error.
pub fn sweep(base: &Scenario, rows: &[SweepRow]) -> Vec<SweepCell> {
    let jobs: Vec<(String, f64, Scenario)> = rows
        .iter()
        .flat_map(|r| {
            r.values
                .iter()
                .zip(r.scenarios(base))
                .map(|(&v, s)| (r.label.clone(), v, s))
                .collect::<Vec<_>>()
        })
        .collect();
    jobs.into_par_iter()
        .map(|(row, gain, scenario)| match simulate(&scenario) {
            Ok(result) => SweepCell {
                metrics: Some(result.metrics(scenario.strain_target)),
                row,
                gain,
                scenario,
                error: None,
                result: Some(result),
            },
            Err(e) => SweepCell {
                row,
                gain,
                scenario,
                metrics: None,
                error: Some(e.to_string()),
                result: None,
            },
        })
        .collect()
}

pub fn cells_of<'a>(cells: &'a [SweepCell], row: &str) -> Vec<&'a SweepCell> {
    cells.iter().filter(|c| c.row == row).collect()
}

pub fn non_increasing<T: PartialOrd>(xs: &[T]) -> bool {
    xs.windows(2).all(|w| w[1] <= w[0])
}

pub fn non_decreasing<T: PartialOrd>(xs: &[T]) -> bool {
    xs.windows(2).all(|w| w[1] >= w[0])
}
