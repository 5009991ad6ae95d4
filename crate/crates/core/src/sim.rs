//! Fixed-step RK4 integration of the beam coupled to a boundary controller.
//!
//! The closed-loop state is the concatenation `[alpha_q (N), alpha_p (N), xi]`.
//! Every run starts from the open-loop equilibrium (zero strain, zero
//! momentum, zero integrator).

use serde::{Deserialize, Serialize};

use crate::analysis::metrics::{step_metrics, StepMetrics};
use crate::control::{self, ControllerFamily, ControllerSpec, ControllerState};
use crate::disc::{self, build_grid};
use crate::error::{Error, Result};
use crate::model::{steady_state, BeamParameters, Equilibrium};

/// One closed-loop experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub params: BeamParameters,
    #[serde(rename = "N")]
    pub n: usize,
    pub controller: ControllerSpec,
    pub strain_target: f64,
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
    /// Times at which the full strain profile is stored.
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
}

impl Scenario {
    pub const DEFAULT_N: usize = 16;
    pub const DEFAULT_DT: f64 = 1e-4;
    pub const DEFAULT_T_END: f64 = 15.0;
    pub const DEFAULT_RECORD_EVERY: usize = 100;

    /// Paper parameters, `N = 16`, `dt = 1e-4`, `E* = 1`, `t_end = 15`.
    pub fn paper(controller: ControllerSpec) -> Self {
        Self {
            params: BeamParameters::PAPER,
            n: Self::DEFAULT_N,
            controller,
            strain_target: 1.0,
            dt: Self::DEFAULT_DT,
            t_end: Self::DEFAULT_T_END,
            record_every: Self::DEFAULT_RECORD_EVERY,
            snapshot_times: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.controller.validate()?;
        if self.n < 2 {
            return Err(Error::InvalidScenario(format!(
                "N must be at least 2, got {}",
                self.n
            )));
        }
        if !self.strain_target.is_finite() {
            return Err(Error::InvalidScenario(
                "strain_target must be finite".into(),
            ));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidScenario(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_end.is_finite() && self.t_end >= self.dt) {
            return Err(Error::InvalidScenario(format!(
                "t_end must be at least dt, got {}",
                self.t_end
            )));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidScenario(
                "record_every must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn h(&self) -> f64 {
        self.params.ell / self.n as f64
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    /// Heuristic step bound `0.5 h sqrt(rho / C)`.
    pub fn cfl_limit(&self) -> f64 {
        0.5 * self.h() * (self.params.rho / self.params.stiffness).sqrt()
    }

    pub fn cfl_warning(&self) -> bool {
        self.dt > self.cfl_limit()
    }

    pub fn equilibrium(&self) -> Result<Equilibrium> {
        steady_state(&self.params, self.strain_target)
    }
}

/// Compiled closed-loop vector field for one scenario.
#[derive(Debug, Clone)]
pub struct ClosedLoop {
    params: BeamParameters,
    spec: ControllerSpec,
    eq: Equilibrium,
    n: usize,
    h: f64,
    storage_weight: f64,
}

/// Instantaneous closed-loop quantities at one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub u: f64,
    pub u_bar: f64,
    pub f_b: f64,
    pub strain_tip: f64,
    pub strain_boundary: f64,
    pub h_d: f64,
    pub s_h: f64,
    pub s_d: f64,
    pub balance_residual: f64,
    /// `-gamma dU/dt * d e_p(N)/dt`.
    pub supply_rate: f64,
}

impl ClosedLoop {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        let eq = scenario.equilibrium()?;
        Ok(Self {
            params: scenario.params,
            spec: scenario.controller,
            eq,
            n: scenario.n,
            h: scenario.h(),
            storage_weight: scenario
                .controller
                .storage_weight(scenario.params.gamma)
                .unwrap_or(0.0),
        })
    }

    pub fn dim(&self) -> usize {
        2 * self.n + 1
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn equilibrium(&self) -> &Equilibrium {
        &self.eq
    }

    pub fn params(&self) -> &BeamParameters {
        &self.params
    }

    /// Closed-loop fixed point `(E*, 0, 0)` reached with the reference on.
    pub fn equilibrium_state(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        x[..self.n].fill(self.eq.strain_target);
        x
    }

    pub fn tip_velocity(&self, x: &[f64]) -> f64 {
        x[2 * self.n - 1] / self.params.rho
    }

    /// Boundary effort `e_b = -gamma U` at state `x`.
    pub fn boundary_effort(&self, x: &[f64]) -> f64 {
        let state = ControllerState { xi: x[2 * self.n] };
        control::boundary_effort(
            &self.spec,
            &state,
            self.tip_velocity(x),
            &self.eq,
            &self.params,
        )
    }

    pub fn voltage(&self, x: &[f64]) -> f64 {
        match (self.spec.family, self.spec.u_constant) {
            (ControllerFamily::Constant, Some(u)) => u,
            (ControllerFamily::Constant, None) => self.eq.u_star,
            _ => -self.boundary_effort(x) / self.params.gamma,
        }
    }

    /// `dx/dt` of the coupled plant and controller.
    pub fn rhs(&self, x: &[f64], dx: &mut [f64]) {
        let n = self.n;
        let e_b = self.boundary_effort(x);
        let (dq, rest) = dx.split_at_mut(n);
        let (dp, dxi) = rest.split_at_mut(n);
        disc::rhs_into(&self.params, self.h, &x[..n], &x[n..2 * n], e_b, dq, dp);
        dxi[0] = control::integrator_rate(
            &self.spec,
            self.tip_velocity(x),
            e_b,
            &self.eq,
            self.params.gamma,
        );
    }

    /// Linear part of the boundary effort, i.e. its rate along velocity `v`.
    fn effort_rate(&self, v: &[f64]) -> f64 {
        let fb_rate = self.tip_velocity(v);
        let xi_rate = v[2 * self.n];
        match self.spec.family {
            ControllerFamily::Constant => 0.0,
            ControllerFamily::OutputShaping => -self.spec.ki * xi_rate - self.spec.kp * fb_rate,
            ControllerFamily::InputShaping => {
                let (kp_b, ki_b) = self.spec.bar_gains(self.params.gamma);
                ki_b * xi_rate - kp_b * fb_rate
            }
        }
    }

    /// Signal weighted in the closed-loop storage: `f_b` for output shaping,
    /// `U - U*` for input shaping.
    fn shaped_signal(&self, x: &[f64], e_b: f64) -> f64 {
        match self.spec.family {
            ControllerFamily::Constant => 0.0,
            ControllerFamily::OutputShaping => self.tip_velocity(x) - self.eq.ep_star,
            ControllerFamily::InputShaping => -(e_b - self.eq.u_bar_star) / self.params.gamma,
        }
    }

    /// Closed-loop storage `S_d = S_h + Ki/2 * signal^2` (raw `Ki`).
    pub fn storage_weight(&self) -> f64 {
        self.storage_weight
    }

    /// Diagnostics at `x`, given `dx = rhs(x)`.
    pub fn diagnostics(&self, x: &[f64], dx: &[f64]) -> Diagnostics {
        let n = self.n;
        let p = &self.params;
        let e_b = self.boundary_effort(x);
        let (aq, ap) = (&x[..n], &x[n..2 * n]);
        let (dq, dp) = (&dx[..n], &dx[n..2 * n]);
        let balance = disc::balance_of(p, self.h, aq, ap, dq, dp, e_b);
        let s_h = disc::hamiltonian_of(p, self.h, dq, dp);
        let signal = self.shaped_signal(x, e_b);
        Diagnostics {
            u: self.voltage(x),
            u_bar: e_b,
            f_b: self.tip_velocity(x),
            strain_tip: aq[n - 1],
            strain_boundary: e_b / p.stiffness,
            h_d: disc::hamiltonian_of(p, self.h, aq, ap),
            s_h,
            s_d: s_h + 0.5 * self.storage_weight * signal * signal,
            balance_residual: balance.residual(),
            supply_rate: self.supply_rate(dx),
        }
    }

    /// Supply `-gamma dU/dt * d e_p(N)/dt` of the velocity storage along `dx`.
    pub fn supply_rate(&self, dx: &[f64]) -> f64 {
        self.effort_rate(dx) * self.tip_velocity(dx)
    }
}

/// Closed-loop right-hand side for a state of length `2N + 1`.
pub fn coupled_rhs(x: &[f64], scenario: &Scenario) -> Result<Vec<f64>> {
    let sys = ClosedLoop::new(scenario)?;
    check_dim(&sys, x)?;
    let mut dx = vec![0.0; x.len()];
    sys.rhs(x, &mut dx);
    Ok(dx)
}

fn check_dim(sys: &ClosedLoop, x: &[f64]) -> Result<()> {
    if x.len() != sys.dim() {
        return Err(Error::Dimension {
            expected: sys.dim(),
            got: x.len(),
        });
    }
    Ok(())
}

/// Reusable RK4 stage buffers.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; dim]),
            tmp: vec![0.0; dim],
        }
    }

    /// Advance `x` in place by one classical RK4 step. Returns the Simpson
    /// estimate of the supplied velocity-storage energy over the step.
    pub fn step(&mut self, sys: &ClosedLoop, x: &mut [f64], dt: f64) -> f64 {
        let [k1, k2, k3, k4] = &mut self.k;
        let tmp = &mut self.tmp;
        sys.rhs(x, k1);
        for ((t, xi), ki) in tmp.iter_mut().zip(x.iter()).zip(k1.iter()) {
            *t = xi + 0.5 * dt * ki;
        }
        sys.rhs(tmp, k2);
        for ((t, xi), ki) in tmp.iter_mut().zip(x.iter()).zip(k2.iter()) {
            *t = xi + 0.5 * dt * ki;
        }
        sys.rhs(tmp, k3);
        for ((t, xi), ki) in tmp.iter_mut().zip(x.iter()).zip(k3.iter()) {
            *t = xi + dt * ki;
        }
        sys.rhs(tmp, k4);
        for i in 0..x.len() {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        dt / 6.0
            * (sys.supply_rate(k1)
                + 2.0 * sys.supply_rate(k2)
                + 2.0 * sys.supply_rate(k3)
                + sys.supply_rate(k4))
    }
}

/// One classical Runge-Kutta step of the coupled system.
pub fn rk4_step(x: &[f64], scenario: &Scenario, dt: f64) -> Result<Vec<f64>> {
    let sys = ClosedLoop::new(scenario)?;
    check_dim(&sys, x)?;
    let mut next = x.to_vec();
    Rk4::new(x.len()).step(&sys, &mut next, dt);
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { step: 1, time: dt });
    }
    Ok(next)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrainSnapshot {
    pub t: f64,
    pub strain: Vec<f64>,
}

/// Decimated time series of one run. Samples are every `record_every` steps,
/// plus the final step when it falls off that grid.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub times: Vec<f64>,
    pub u: Vec<f64>,
    pub u_bar: Vec<f64>,
    pub f_b: Vec<f64>,
    /// Strain of the last cell, `alpha_q(N)`.
    pub strain_tip: Vec<f64>,
    /// Strain imposed at the tip, `e_b / C`.
    pub strain_boundary: Vec<f64>,
    pub h_d: Vec<f64>,
    pub s_h: Vec<f64>,
    pub s_d: Vec<f64>,
    pub balance_residual: Vec<f64>,
    /// Central differences of the recorded `s_d` (one-sided at the ends).
    pub s_d_derivative: Vec<f64>,
    /// Cumulative `integral(-gamma dU/dt * d e_p(N)/dt)` from `t = 0`.
    pub supply_integral: Vec<f64>,
    pub strain_profile_snapshots: Vec<StrainSnapshot>,
    pub cfl_warning: bool,
    pub final_state: Vec<f64>,
}

impl SimulationResult {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn metrics(&self, target: f64) -> StepMetrics {
        step_metrics(&self.times, &self.strain_tip, target)
    }

    fn push(&mut self, t: f64, d: &Diagnostics, supplied: f64) {
        self.times.push(t);
        self.u.push(d.u);
        self.u_bar.push(d.u_bar);
        self.f_b.push(d.f_b);
        self.strain_tip.push(d.strain_tip);
        self.strain_boundary.push(d.strain_boundary);
        self.h_d.push(d.h_d);
        self.s_h.push(d.s_h);
        self.s_d.push(d.s_d);
        self.balance_residual.push(d.balance_residual);
        self.supply_integral.push(supplied);
    }
}

/// Central finite differences on a uniform grid, one-sided at the ends.
pub fn finite_difference(values: &[f64], spacing: f64) -> Vec<f64> {
    let n = values.len();
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n)
            .map(|i| {
                if i == 0 {
                    (values[1] - values[0]) / spacing
                } else if i == n - 1 {
                    (values[n - 1] - values[n - 2]) / spacing
                } else {
                    (values[i + 1] - values[i - 1]) / (2.0 * spacing)
                }
            })
            .collect(),
    }
}

/// Central differences on an arbitrary increasing grid, one-sided at the ends.
pub fn finite_difference_on(times: &[f64], values: &[f64]) -> Vec<f64> {
    let n = values.len().min(times.len());
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|i| {
            let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
            (values[b] - values[a]) / (times[b] - times[a])
        })
        .collect()
}

/// Integrate from the open-loop equilibrium to `t_end`.
pub fn simulate(scenario: &Scenario) -> Result<SimulationResult> {
    let sys = ClosedLoop::new(scenario)?;
    let x0 = vec![0.0; sys.dim()];
    simulate_from(scenario, &x0, |_, _, _| {})
}

/// Integrate from `x0`, calling `observer(step, t, x)` at every recorded step.
pub fn simulate_from<F>(
    scenario: &Scenario,
    x0: &[f64],
    mut observer: F,
) -> Result<SimulationResult>
where
    F: FnMut(usize, f64, &[f64]),
{
    let sys = ClosedLoop::new(scenario)?;
    check_dim(&sys, x0)?;
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { step: 0, time: 0.0 });
    }
    let steps = scenario.steps();
    let dt = scenario.dt;
    let every = scenario.record_every;
    let snapshot_steps: Vec<usize> = scenario
        .snapshot_times
        .iter()
        .map(|t| ((t / dt).round().max(0.0) as usize).min(steps))
        .collect();

    let mut out = SimulationResult {
        cfl_warning: scenario.cfl_warning(),
        ..Default::default()
    };
    let mut x = x0.to_vec();
    let mut dx = vec![0.0; x.len()];
    let mut rk = Rk4::new(x.len());
    let mut supplied = 0.0;

    for step in 0..=steps {
        let t = step as f64 * dt;
        if step % every == 0 || step == steps {
            sys.rhs(&x, &mut dx);
            out.push(t, &sys.diagnostics(&x, &dx), supplied);
            observer(step, t, &x);
        }
        for (k, &s) in snapshot_steps.iter().enumerate() {
            if s == step {
                out.strain_profile_snapshots.push(StrainSnapshot {
                    t: scenario.snapshot_times[k],
                    strain: x[..sys.n()].to_vec(),
                });
            }
        }
        if step == steps {
            break;
        }
        supplied += rk.step(&sys, &mut x, dt);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                step: step + 1,
                time: (step + 1) as f64 * dt,
            });
        }
    }

    out.s_d_derivative = finite_difference_on(&out.times, &out.s_d);
    out.final_state = x;
    Ok(out)
}

/// Build the equivalent [`disc::DiscreteBeam`] for the plant part of `x`.
pub fn plant_beam(scenario: &Scenario, x: &[f64]) -> Result<disc::DiscreteBeam> {
    let n = scenario.n;
    let mut beam = build_grid(&scenario.params, n)?;
    beam.set_state(&x[..n], &x[n..2 * n])?;
    Ok(beam)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::GainForm;

    fn case1_a() -> Scenario {
        Scenario::paper(ControllerSpec::output_shaping_bar(0.5, 1.35, true))
    }

    #[test]
    fn fixed_point_is_exact_for_shaping_controllers() {
        for spec in [
            ControllerSpec::output_shaping_bar(0.5, 1.35, true),
            ControllerSpec::input_shaping_bar(0.45, 1.4, true),
            ControllerSpec::raw(ControllerFamily::OutputShaping, 1.0, 0.3),
            ControllerSpec::raw(ControllerFamily::InputShaping, 0.02, 0.1),
        ] {
            let sc = Scenario::paper(spec);
            let sys = ClosedLoop::new(&sc).unwrap();
            let x = sys.equilibrium_state();
            let dx = coupled_rhs(&x, &sc).unwrap();
            assert!(dx.iter().all(|&v| v == 0.0), "{spec:?}: {dx:?}");
            assert_eq!(rk4_step(&x, &sc, 1e-4).unwrap(), x);
        }
    }

    #[test]
    fn origin_is_fixed_with_zero_voltage() {
        let sc = Scenario::paper(ControllerSpec::constant(Some(0.0)));
        let x = vec![0.0; 33];
        assert!(coupled_rhs(&x, &sc).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_bad_dimension_and_scenarios() {
        let sc = case1_a();
        assert!(coupled_rhs(&[0.0; 5], &sc).is_err());
        let mut bad = sc.clone();
        bad.n = 1;
        assert!(simulate(&bad).is_err());
        let mut bad = sc.clone();
        bad.record_every = 0;
        assert!(bad.validate().is_err());
        let mut bad = sc;
        bad.t_end = 0.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn records_uniform_decimated_series() {
        let mut sc = case1_a();
        sc.t_end = 0.5;
        sc.record_every = 50;
        sc.snapshot_times = vec![0.0, 0.25];
        let r = simulate(&sc).unwrap();
        assert_eq!(r.len(), 101);
        for w in r.times.windows(2) {
            assert!((w[1] - w[0] - 0.005).abs() < 1e-12);
        }
        for series in [
            &r.u,
            &r.s_d,
            &r.s_d_derivative,
            &r.supply_integral,
            &r.strain_boundary,
        ] {
            assert_eq!(series.len(), r.len());
        }
        assert_eq!(r.strain_profile_snapshots.len(), 2);
        assert_eq!(r.strain_profile_snapshots[1].strain.len(), 16);
        assert!(!r.cfl_warning);
        assert_eq!(r.final_state.len(), 33);
    }

    #[test]
    fn runs_are_bit_identical() {
        let mut sc = Scenario::paper(ControllerSpec::input_shaping_bar(0.45, 1.4, true));
        sc.t_end = 0.3;
        assert_eq!(simulate(&sc).unwrap(), simulate(&sc).unwrap());
    }

    #[test]
    fn unstable_step_aborts_with_step_index() {
        let mut sc = case1_a();
        sc.dt = 0.5;
        sc.t_end = 200.0;
        assert!(sc.cfl_warning());
        match simulate(&sc) {
            Err(Error::NonFinite { step, .. }) => assert!(step > 0),
            other => panic!("expected abort, got {:?}", other.map(|r| r.len())),
        }
    }

    #[test]
    fn cfl_limit_at_paper_values() {
        let sc = case1_a();
        assert!((sc.cfl_limit() - 0.5 * 0.0625 * (1.0f64 / 0.75).sqrt()).abs() < 1e-15);
        assert!(!sc.cfl_warning());
    }

    #[test]
    fn storage_uses_raw_integral_gain() {
        let sc = Scenario::paper(ControllerSpec {
            gain_form: GainForm::Raw,
            ..ControllerSpec::raw(ControllerFamily::InputShaping, 0.02, 0.1)
        });
        let sys = ClosedLoop::new(&sc).unwrap();
        assert_eq!(sys.storage_weight(), 0.1);
    }

    #[test]
    fn finite_difference_of_linear_ramp() {
        let v: Vec<f64> = (0..5).map(|i| 2.0 * i as f64).collect();
        assert_eq!(finite_difference(&v, 1.0), vec![2.0; 5]);
        assert!(finite_difference(&[], 1.0).is_empty());
        let t = [0.0, 1.0, 2.0, 2.5];
        let v: Vec<f64> = t.iter().map(|x| 3.0 * x).collect();
        assert_eq!(finite_difference_on(&t, &v), vec![3.0; 4]);
        assert_eq!(
            finite_difference_on(&t[..3], &v[..3]),
            finite_difference(&v[..3], 1.0)
        );
    }

    #[test]
    fn final_step_is_always_recorded() {
        let mut sc = case1_a();
        sc.t_end = 0.0105;
        sc.record_every = 50;
        let r = simulate(&sc).unwrap();
        assert_eq!(r.len(), 4);
        assert!((r.times[3] - 0.0105).abs() < 1e-15);
        assert_eq!(r.s_d_derivative.len(), 4);
    }
}
