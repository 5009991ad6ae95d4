//! Run configuration: defaults, then a JSON file, then command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use piezo_core::analysis::{table_one, tuned_cases, SweepRow, SweepVariable};
use piezo_core::{BeamParameters, ControllerSpec, Scenario};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    #[serde(rename = "paper-open-loop")]
    PaperOpenLoop,
    #[serde(rename = "fig2a")]
    Fig2a,
    #[serde(rename = "fig2b")]
    Fig2b,
    #[serde(rename = "fig2c")]
    Fig2c,
    #[serde(rename = "fig3a")]
    Fig3a,
    #[serde(rename = "fig3b")]
    Fig3b,
    #[serde(rename = "fig3c")]
    Fig3c,
    #[serde(rename = "fig4-case1")]
    Fig4Case1,
    #[serde(rename = "fig4-case2")]
    Fig4Case2,
}

impl Preset {
    pub const ALL: [Preset; 9] = [
        Preset::PaperOpenLoop,
        Preset::Fig2a,
        Preset::Fig2b,
        Preset::Fig2c,
        Preset::Fig3a,
        Preset::Fig3b,
        Preset::Fig3c,
        Preset::Fig4Case1,
        Preset::Fig4Case2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::PaperOpenLoop => "paper-open-loop",
            Preset::Fig2a => "fig2a",
            Preset::Fig2b => "fig2b",
            Preset::Fig2c => "fig2c",
            Preset::Fig3a => "fig3a",
            Preset::Fig3b => "fig3b",
            Preset::Fig3c => "fig3c",
            Preset::Fig4Case1 => "fig4-case1",
            Preset::Fig4Case2 => "fig4-case2",
        }
    }

    /// The table row this preset stands for, if any.
    pub fn sweep_row(self) -> Option<SweepRow> {
        table_one().into_iter().find(|r| r.label == self.name())
    }

    /// Named scenarios the preset expands to on top of `base`.
    pub fn expand(self, base: &Scenario) -> Vec<Job> {
        let with = |name: String, controller: ControllerSpec| Job {
            name,
            scenario: Scenario {
                controller,
                ..base.clone()
            },
        };
        match self {
            Preset::PaperOpenLoop => vec![with(self.name().into(), ControllerSpec::constant(None))],
            Preset::Fig4Case1 | Preset::Fig4Case2 => {
                let case = if self == Preset::Fig4Case1 {
                    "case1"
                } else {
                    "case2"
                };
                tuned_cases()
                    .into_iter()
                    .filter(|(label, _)| label.starts_with(case))
                    .map(|(label, spec)| with(label, spec))
                    .collect()
            }
            _ => {
                let row = self.sweep_row().expect("figure presets are table rows");
                row.values
                    .iter()
                    .map(|&v| with(cell_name(&row, v), row.spec(v)))
                    .collect()
            }
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `fig2a_Kp_0.5`.
pub fn cell_name(row: &SweepRow, value: f64) -> String {
    let var = match row.variable {
        SweepVariable::Kp => "Kp",
        SweepVariable::Ki => "Ki",
    };
    format!("{}_{var}_{value}", row.label)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    pub name: String,
    pub scenario: Scenario,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: BeamParameters,
    #[serde(rename = "N")]
    pub n: usize,
    pub controller: ControllerSpec,
    pub strain_target: f64,
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    pub out: PathBuf,
    #[serde(default)]
    pub preset: Option<Preset>,
    /// Write `timeseries*.csv` next to the metrics.
    #[serde(default = "yes")]
    pub write_timeseries: bool,
    /// Custom sweep rows; the six table rows when absent.
    #[serde(default)]
    pub sweep_rows: Option<Vec<SweepRow>>,
}

fn yes() -> bool {
    true
}

impl Default for RunConfig {
    fn default() -> Self {
        let sc = Scenario::paper(ControllerSpec::constant(None));
        Self {
            params: sc.params,
            n: sc.n,
            controller: sc.controller,
            strain_target: sc.strain_target,
            dt: sc.dt,
            t_end: sc.t_end,
            record_every: sc.record_every,
            snapshot_times: Vec::new(),
            out: PathBuf::from("out"),
            preset: None,
            write_timeseries: true,
            sweep_rows: None,
        }
    }
}

impl RunConfig {
    pub fn scenario(&self) -> Scenario {
        Scenario {
            params: self.params,
            n: self.n,
            controller: self.controller,
            strain_target: self.strain_target,
            dt: self.dt,
            t_end: self.t_end,
            record_every: self.record_every,
            snapshot_times: self.snapshot_times.clone(),
        }
    }

    /// Scenarios run by `simulate` and `verify`.
    pub fn jobs(&self) -> Vec<Job> {
        let base = self.scenario();
        match self.preset {
            Some(p) => p.expand(&base),
            None => vec![Job {
                name: "run".into(),
                scenario: base,
            }],
        }
    }

    /// Rows run by `sweep`.
    pub fn rows(&self) -> Result<Vec<SweepRow>, CliError> {
        match (self.preset, &self.sweep_rows) {
            (Some(p), _) => p.sweep_row().map(|r| vec![r]).ok_or_else(|| {
                CliError::Config(format!(
                    "preset: `{p}` is not a sweep row (use fig2a..fig3c)"
                ))
            }),
            (None, Some(rows)) => Ok(rows.clone()),
            (None, None) => Ok(table_one()),
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        self.scenario().validate()?;
        for job in self.jobs() {
            job.scenario
                .validate()
                .map_err(|e| CliError::Config(format!("{}: {e}", job.name)))?;
        }
        if let Some(rows) = &self.sweep_rows {
            for (i, r) in rows.iter().enumerate() {
                if r.values.is_empty() || !r.fixed.is_finite() {
                    return Err(CliError::Config(format!(
                        "sweep_rows[{i}]: needs a finite fixed gain and at least one value"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Command-line layer on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub preset: Option<String>,
    pub set: Vec<String>,
}

pub fn resolve(o: &Overrides) -> Result<RunConfig, CliError> {
    let mut v = serde_json::to_value(RunConfig::default()).expect("defaults serialize");
    if let Some(path) = &o.config {
        merge(&mut v, read_file(path)?);
    }
    for item in &o.set {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set `{item}`: expected key=value")))?;
        set_path(&mut v, key, parse_scalar(raw))?;
    }
    if let Some(p) = &o.preset {
        v["preset"] = Value::String(p.clone());
    }
    if let Some(out) = &o.out {
        v["out"] = Value::String(out.to_string_lossy().into_owned());
    }
    let cfg: RunConfig = serde_path_to_error::deserialize(v)
        .map_err(|e| CliError::Config(format!("{}: {}", e.path(), e.inner())))?;
    cfg.validate()?;
    Ok(cfg)
}

fn read_file(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if !v.is_object() {
        return Err(CliError::Config(format!(
            "{}: top level must be an object",
            path.display()
        )));
    }
    Ok(v)
}

fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn parse_scalar(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

fn set_path(v: &mut Value, key: &str, value: Value) -> Result<(), CliError> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("--set: malformed key `{key}`")));
    }
    let mut cur = v;
    for (i, part) in parts.iter().enumerate() {
        if cur.is_null() {
            *cur = Value::Object(Map::new());
        }
        let obj = cur.as_object_mut().ok_or_else(|| {
            CliError::Config(format!(
                "--set {key}: `{}` is not an object",
                parts[..i].join(".")
            ))
        })?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj.entry(part.to_string()).or_insert(Value::Null);
    }
    unreachable!("key has at least one segment")
}
