//! `verify`: invariant suites on the configured scenarios.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use piezo_core::analysis::{
    assemble_closed_loop, convergence_study, lyapunov_sandwich_check, spectral_abscissa,
};
use piezo_core::disc::{self, DiscreteBeam};
use piezo_core::sim::coupled_rhs;
use piezo_core::{simulate, ControllerFamily, ControllerSpec, Scenario};

use crate::config::{Job, RunConfig};
use crate::error::CliError;
use crate::output::{ensure_dir, write_json};

const SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    /// Worst observed value; compare with `threshold`.
    pub value: Option<f64>,
    pub threshold: Option<f64>,
    pub detail: String,
}

impl Check {
    fn measured(
        name: impl Into<String>,
        value: f64,
        threshold: f64,
        detail: impl Into<String>,
    ) -> Self {
        Self {
            name: name.into(),
            status: if value <= threshold {
                Status::Pass
            } else {
                Status::Fail
            },
            value: Some(value),
            threshold: Some(threshold),
            detail: detail.into(),
        }
    }

    fn failed(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: Status::Fail,
            value: None,
            threshold: None,
            detail: detail.into(),
        }
    }

    fn skipped(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: Status::Skipped,
            value: None,
            threshold: None,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub pass: bool,
    pub checks: Vec<Check>,
}

fn positive_gains(spec: &ControllerSpec) -> bool {
    match spec.family {
        ControllerFamily::Constant => false,
        _ => spec.kp > 0.0 && spec.ki > 0.0,
    }
}

fn power_balance(sc: &Scenario) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut sizes = vec![2, sc.n, 64];
    sizes.sort_unstable();
    sizes.dedup();
    let mut worst: f64 = 0.0;
    for &n in &sizes {
        for _ in 0..1000 {
            let aq: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let ap: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let e_b = rng.random_range(-1.0..1.0);
            let beam = DiscreteBeam::with_state(&sc.params, aq, ap).expect("validated");
            let b = disc::power_balance(&beam, &sc.params, e_b);
            worst = worst.max(b.residual().abs() / b.scale().max(f64::MIN_POSITIVE));
        }
    }
    Check::measured(
        "power_balance",
        worst,
        1e-12,
        format!("relative residual over 1000 random states for N in {sizes:?}"),
    )
}

fn oracle(job: &Job) -> Check {
    let name = format!("oracle_equivalence/{}", job.name);
    let m = match assemble_closed_loop(&job.scenario) {
        Ok(m) => m,
        Err(e) => return Check::failed(name, e.to_string()),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    let dim = 2 * job.scenario.n + 1;
    for _ in 0..100 {
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = m.apply(&x);
        let b = coupled_rhs(&x, &job.scenario).expect("validated");
        for (u, v) in a.iter().zip(&b) {
            worst = worst.max((u - v).abs());
        }
    }
    Check::measured(
        name,
        worst,
        1e-13,
        "max |A x + c - f(x)| over 100 random states",
    )
}

fn spectrum(job: &Job) -> Check {
    let name = format!("spectral_abscissa/{}", job.name);
    match assemble_closed_loop(&job.scenario).and_then(|m| spectral_abscissa(&m)) {
        Ok(s) => Check::measured(name, s, 1e-9, "max Re(lambda) of the closed-loop matrix"),
        Err(e) => Check::failed(name, e.to_string()),
    }
}

fn trajectory_checks(job: &Job) -> Vec<Check> {
    let storage = format!("storage_balance/{}", job.name);
    let monotone = format!("sd_monotonicity/{}", job.name);
    let run = match simulate(&job.scenario) {
        Ok(r) => r,
        Err(e) => {
            return vec![
                Check::failed(storage, e.to_string()),
                Check::failed(monotone, e.to_string()),
            ]
        }
    };
    let max_sh = run.s_h.iter().copied().fold(0.0, f64::max);
    let excess = (0..run.len())
        .map(|k| run.s_h[k] - run.s_h[0] - run.supply_integral[k])
        .fold(f64::NEG_INFINITY, f64::max);
    let mut out = vec![Check::measured(
        storage,
        excess,
        1e-9 * max_sh,
        "max S_h(t) - S_h(0) - supplied; threshold 1e-9 max S_h",
    )];

    let spec = &job.scenario.controller;
    if spec.family == ControllerFamily::Constant || positive_gains(spec) {
        let max_sd = run.s_d.iter().copied().fold(0.0, f64::max);
        let worst = run
            .s_d_derivative
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        out.push(Check::measured(
            monotone,
            worst,
            1e-9 * max_sd,
            "max recorded dS_d/dt; threshold 1e-9 max S_d",
        ));
    } else {
        out.push(Check::skipped(monotone, "needs positive gains"));
    }
    out
}

fn sandwich(job: &Job) -> Check {
    let name = format!("sandwich_bounds/{}", job.name);
    let spec = &job.scenario.controller;
    if spec.family != ControllerFamily::OutputShaping || !positive_gains(spec) {
        return Check::skipped(name, "needs output shaping with positive gains");
    }
    match lyapunov_sandwich_check(&job.scenario) {
        Ok(r) => Check {
            name,
            status: if r.pass() { Status::Pass } else { Status::Fail },
            value: Some(r.violations as f64),
            threshold: Some(0.0),
            detail: format!(
                "ratios N/|dx|^2 in [{:.4}, {:.4}] against [{:.4}, {:.4}] on {} states; bounds including C/4 and 1/(4 rho) give [{:.4}, {:.4}] with {} violations",
                r.min_ratio,
                r.max_ratio,
                r.claimed.gamma1,
                r.claimed.gamma2,
                r.samples,
                r.exact.gamma1,
                r.exact.gamma2,
                r.exact_violations
            ),
        },
        Err(e) => Check::failed(name, e.to_string()),
    }
}

fn convergence(job: &Job) -> Check {
    let name = format!("convergence/{}", job.name);
    match convergence_study(&job.scenario, &[8, 16, 32]) {
        Ok(rows) => {
            let finite = rows
                .iter()
                .all(|r| r.metrics.steady_state_error_pct.is_some_and(f64::is_finite));
            let lo = rows
                .iter()
                .map(|r| r.limit_strain)
                .fold(f64::INFINITY, f64::min);
            let hi = rows
                .iter()
                .map(|r| r.limit_strain)
                .fold(f64::NEG_INFINITY, f64::max);
            let spread = if finite { hi - lo } else { f64::INFINITY };
            Check::measured(
                name,
                spread,
                1e-10,
                format!("spread of the limit tip strain over N in [8, 16, 32] (limit {lo:.12})"),
            )
        }
        Err(e) => Check::failed(name, e.to_string()),
    }
}

pub fn run_checks(cfg: &RunConfig) -> VerifyReport {
    let jobs = cfg.jobs();
    let mut checks = vec![power_balance(&cfg.scenario())];
    for job in &jobs {
        checks.push(oracle(job));
        checks.push(spectrum(job));
        checks.extend(trajectory_checks(job));
        checks.push(sandwich(job));
    }
    checks.push(convergence(&jobs[0]));
    let pass = checks.iter().all(|c| c.status != Status::Fail);
    VerifyReport { pass, checks }
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<(), CliError> {
    ensure_dir(&cfg.out)?;
    let report = run_checks(cfg);
    write_json(&cfg.out.join("verify.json"), &report)?;
    for c in &report.checks {
        let status = match c.status {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Skipped => "skip",
        };
        match (c.value, c.threshold) {
            (Some(v), Some(t)) => println!("{status:4} {:40} {v:.3e} (<= {t:.3e})", c.name),
            _ => println!("{status:4} {:40} {}", c.name, c.detail),
        }
    }
    if report.pass {
        Ok(())
    } else {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| c.status == Status::Fail)
            .map(|c| c.name.as_str())
            .collect();
        Err(CliError::Verification(failed.join(", ")))
    }
}
