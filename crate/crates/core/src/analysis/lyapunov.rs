//! Two-sided quadratic bounds on the output-shaping Lyapunov functional.
//!
//! The extended state consists of the velocity efforts and the stencil
//! gradients of the efforts. For a perturbation `dx` around the equilibrium
//!
//! ```text
//! N(dx)   = h/4 sum( edq^2/C + rho edp^2 + C (d ep)^2 + (d eq - b ep)^2/rho ) + Ki/2 ep(N)^2
//! |dx|^2  = h   sum( edq^2   +     edp^2 +   (d ep)^2 + (d eq - b ep)^2     ) +        ep(N)^2
//! ```
//!
//! and the claimed constants are `gamma1 = min{1/C, rho, 2 Ki}/4`,
//! `gamma2 = max{1/C, rho, 2 Ki}/4`.

use serde::{Deserialize, Serialize};

use crate::control::ControllerFamily;
use crate::error::{Error, Result};
use crate::model::BeamParameters;
use crate::sim::{simulate_from, ClosedLoop, Scenario};

const RATIO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichConstants {
    pub gamma1: f64,
    pub gamma2: f64,
}

impl SandwichConstants {
    /// `min/max{1/C, rho, 2 Ki} / 4`.
    pub fn claimed(params: &BeamParameters, ki: f64) -> Self {
        Self::from_coefficients(&[1.0 / params.stiffness, params.rho, 2.0 * ki])
    }

    /// Constants covering every coefficient of the two quadratic forms,
    /// `min/max{1/C, rho, C, 1/rho, 2 Ki} / 4`.
    pub fn exact(params: &BeamParameters, ki: f64) -> Self {
        Self::from_coefficients(&[
            1.0 / params.stiffness,
            params.rho,
            params.stiffness,
            1.0 / params.rho,
            2.0 * ki,
        ])
    }

    fn from_coefficients(values: &[f64]) -> Self {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self {
            gamma1: 0.25 * min,
            gamma2: 0.25 * max,
        }
    }

    pub fn contains(&self, ratio: f64) -> bool {
        ratio >= self.gamma1 * (1.0 - RATIO_TOL) && ratio <= self.gamma2 * (1.0 + RATIO_TOL)
    }
}

/// Perturbation of the extended state, in the coordinates of both forms.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedPerturbation {
    pub h: f64,
    /// Velocity of the stress effort, per cell.
    pub edot_q: Vec<f64>,
    /// Velocity of the velocity effort, per node.
    pub edot_p: Vec<f64>,
    /// Stencil gradient of the velocity effort, per cell.
    pub grad_ep: Vec<f64>,
    /// `d e_q - b e_p`, per node.
    pub grad_eq_damped: Vec<f64>,
    /// Tip velocity perturbation.
    pub ep_tip: f64,
}

impl ExtendedPerturbation {
    pub fn zeros(n: usize, h: f64) -> Self {
        Self {
            h,
            edot_q: vec![0.0; n],
            edot_p: vec![0.0; n],
            grad_ep: vec![0.0; n],
            grad_eq_damped: vec![0.0; n],
            ep_tip: 0.0,
        }
    }

    /// Perturbation of closed-loop state `x` from the equilibrium.
    ///
    /// Gradients of the equilibrium efforts vanish, so only the velocity
    /// efforts and the stencil differences of `x` itself contribute.
    pub fn from_state(sys: &ClosedLoop, x: &[f64]) -> Self {
        let n = sys.n();
        let p = sys.params();
        let h = p.ell / n as f64;
        let eq = sys.equilibrium();
        let e_b = sys.boundary_effort(x);
        let mut dx = vec![0.0; x.len()];
        sys.rhs(x, &mut dx);

        let mut out = Self::zeros(n, h);
        let ep = |i: usize| (x[n + i] / p.rho) - eq.ep_star;
        let deq = |i: usize| p.stiffness * x[i] - eq.eq_star;
        for i in 0..n {
            out.edot_q[i] = p.stiffness * dx[i];
            out.edot_p[i] = dx[n + i] / p.rho;
            let ep_prev = if i == 0 { 0.0 } else { ep(i - 1) };
            out.grad_ep[i] = (ep(i) - ep_prev) / h;
            let eq_next = if i + 1 < n {
                deq(i + 1)
            } else {
                e_b - eq.u_bar_star
            };
            out.grad_eq_damped[i] = (eq_next - deq(i)) / h - p.damping * ep(i);
        }
        out.ep_tip = ep(n - 1);
        out
    }

    /// The Lyapunov functional `N(dx)`.
    pub fn lyapunov(&self, params: &BeamParameters, ki: f64) -> f64 {
        let (c, rho) = (params.stiffness, params.rho);
        let mut acc = 0.0;
        for i in 0..self.edot_q.len() {
            acc += self.edot_q[i].powi(2) / c
                + rho * self.edot_p[i].powi(2)
                + c * self.grad_ep[i].powi(2)
                + self.grad_eq_damped[i].powi(2) / rho;
        }
        0.25 * self.h * acc + 0.5 * ki * self.ep_tip.powi(2)
    }

    pub fn norm_sq(&self) -> f64 {
        let acc: f64 = (0..self.edot_q.len())
            .map(|i| {
                self.edot_q[i].powi(2)
                    + self.edot_p[i].powi(2)
                    + self.grad_ep[i].powi(2)
                    + self.grad_eq_damped[i].powi(2)
            })
            .sum();
        self.h * acc + self.ep_tip.powi(2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub ki: f64,
    pub claimed: SandwichConstants,
    pub exact: SandwichConstants,
    pub samples: usize,
    /// Samples with `|dx| = 0`, where both forms vanish.
    pub trivial: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Samples outside the claimed bounds.
    pub violations: usize,
    /// Samples outside the exact bounds.
    pub exact_violations: usize,
}

impl SandwichReport {
    fn new(params: &BeamParameters, ki: f64) -> Self {
        Self {
            ki,
            claimed: SandwichConstants::claimed(params, ki),
            exact: SandwichConstants::exact(params, ki),
            samples: 0,
            trivial: 0,
            min_ratio: f64::INFINITY,
            max_ratio: f64::NEG_INFINITY,
            violations: 0,
            exact_violations: 0,
        }
    }

    fn record(&mut self, lyapunov: f64, norm_sq: f64) {
        self.samples += 1;
        if norm_sq == 0.0 {
            self.trivial += 1;
            if lyapunov != 0.0 {
                self.violations += 1;
                self.exact_violations += 1;
            }
            return;
        }
        let ratio = lyapunov / norm_sq;
        self.min_ratio = self.min_ratio.min(ratio);
        self.max_ratio = self.max_ratio.max(ratio);
        if !self.claimed.contains(ratio) {
            self.violations += 1;
        }
        if !self.exact.contains(ratio) {
            self.exact_violations += 1;
        }
    }

    pub fn pass(&self) -> bool {
        self.violations == 0
    }

    /// Worst relative shortfall below `gamma1` (positive when violated).
    pub fn lower_margin(&self) -> f64 {
        (self.claimed.gamma1 - self.min_ratio) / self.claimed.gamma1
    }
}

/// Check the bounds on arbitrary extended perturbations.
pub fn sandwich_check<'a, I>(params: &BeamParameters, ki: f64, perturbations: I) -> SandwichReport
where
    I: IntoIterator<Item = &'a ExtendedPerturbation>,
{
    let mut report = SandwichReport::new(params, ki);
    for dx in perturbations {
        report.record(dx.lyapunov(params, ki), dx.norm_sq());
    }
    report
}

/// Simulate an output-shaping scenario and check every recorded state.
pub fn lyapunov_sandwich_check(scenario: &Scenario) -> Result<SandwichReport> {
    if scenario.controller.family != ControllerFamily::OutputShaping {
        return Err(Error::InvalidController(
            "sandwich bounds apply to output shaping".into(),
        ));
    }
    let sys = ClosedLoop::new(scenario)?;
    let ki = scenario.controller.ki;
    if ki <= 0.0 || scenario.controller.kp <= 0.0 {
        return Err(Error::InvalidController(
            "sandwich bounds need positive gains".into(),
        ));
    }
    let mut report = SandwichReport::new(&scenario.params, ki);
    let x0 = vec![0.0; sys.dim()];
    simulate_from(scenario, &x0, |_, _, x| {
        let dx = ExtendedPerturbation::from_state(&sys, x);
        report.record(dx.lyapunov(&scenario.params, ki), dx.norm_sq());
    })?;
    Ok(report)
}
