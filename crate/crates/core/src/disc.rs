//! Staggered lowest-order mixed discretization of the beam.
//!
//! Strain `alpha_q` lives on the `N` cells, momentum density `alpha_p` on the
//! nodes `z_i = i * h` for `i = 1..=N`. The clamped node `z_0` carries
//! `e_p = 0` and the tip receives the boundary effort `e_b`. With this layout
//! the interconnection telescopes, so the discrete Hamiltonian obeys
//!
//! ```text
//! dH/dt = e_b * f_b - b * h * sum(e_p^2)
//! ```
//!
//! exactly. All quadratures use weight `h`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::BeamParameters;

/// Semi-discrete state of the beam on a uniform mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteBeam {
    h: f64,
    alpha_q: Vec<f64>,
    alpha_p: Vec<f64>,
}

/// Boundary port pair at the actuated tip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPort {
    /// Boundary effort `-gamma * U`.
    pub e_b: f64,
    /// Boundary flow, the tip velocity `e_p` at the last node.
    pub f_b: f64,
}

/// Terms of an energy balance `rate = supply - dissipation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerBalance {
    pub rate: f64,
    pub supply: f64,
    pub dissipation: f64,
}

impl PowerBalance {
    pub fn residual(&self) -> f64 {
        self.rate - (self.supply - self.dissipation)
    }

    /// Magnitude used to normalize the residual.
    pub fn scale(&self) -> f64 {
        self.rate.abs() + self.supply.abs() + self.dissipation.abs()
    }

    pub fn relative_residual(&self) -> f64 {
        self.residual().abs() / (1.0 + self.scale())
    }
}

/// Zero-initialized beam with `n` segments on `[0, ell]`.
pub fn build_grid(params: &BeamParameters, n: usize) -> Result<DiscreteBeam> {
    params.validate()?;
    if n < 2 {
        return Err(invalid("N", format!("need at least 2 segments, got {n}")));
    }
    Ok(DiscreteBeam {
        h: params.ell / n as f64,
        alpha_q: vec![0.0; n],
        alpha_p: vec![0.0; n],
    })
}

impl DiscreteBeam {
    pub fn with_state(
        params: &BeamParameters,
        alpha_q: Vec<f64>,
        alpha_p: Vec<f64>,
    ) -> Result<Self> {
        let mut beam = build_grid(params, alpha_q.len())?;
        beam.set_state(&alpha_q, &alpha_p)?;
        Ok(beam)
    }

    pub fn n(&self) -> usize {
        self.alpha_q.len()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn alpha_q(&self) -> &[f64] {
        &self.alpha_q
    }

    pub fn alpha_p(&self) -> &[f64] {
        &self.alpha_p
    }

    pub fn set_state(&mut self, alpha_q: &[f64], alpha_p: &[f64]) -> Result<()> {
        let n = self.n();
        for len in [alpha_q.len(), alpha_p.len()] {
            if len != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: len,
                });
            }
        }
        if alpha_q.iter().chain(alpha_p).any(|v| !v.is_finite()) {
            return Err(invalid("state", "entries must be finite"));
        }
        self.alpha_q.copy_from_slice(alpha_q);
        self.alpha_p.copy_from_slice(alpha_p);
        Ok(())
    }

    /// Midpoints of the strain cells.
    pub fn cell_centers(&self) -> Vec<f64> {
        (0..self.n()).map(|i| (i as f64 + 0.5) * self.h).collect()
    }

    /// Momentum nodes `z_1..z_N`.
    pub fn nodes(&self) -> Vec<f64> {
        (1..=self.n()).map(|i| i as f64 * self.h).collect()
    }
}

/// Constitutive map `e_q = C alpha_q`, `e_p = alpha_p / rho`.
pub fn efforts(beam: &DiscreteBeam, params: &BeamParameters) -> (Vec<f64>, Vec<f64>) {
    let e_q = beam.alpha_q.iter().map(|a| params.stiffness * a).collect();
    let e_p = beam.alpha_p.iter().map(|a| a / params.rho).collect();
    (e_q, e_p)
}

/// Semi-discrete time derivatives `(d alpha_q/dt, d alpha_p/dt)`.
pub fn rhs(beam: &DiscreteBeam, params: &BeamParameters, e_b: f64) -> (Vec<f64>, Vec<f64>) {
    let n = beam.n();
    let mut dq = vec![0.0; n];
    let mut dp = vec![0.0; n];
    rhs_into(
        params,
        beam.h,
        &beam.alpha_q,
        &beam.alpha_p,
        e_b,
        &mut dq,
        &mut dp,
    );
    (dq, dp)
}

/// Slice kernel behind [`rhs`]; all slices must share one length.
pub(crate) fn rhs_into(
    params: &BeamParameters,
    h: f64,
    alpha_q: &[f64],
    alpha_p: &[f64],
    e_b: f64,
    dq: &mut [f64],
    dp: &mut [f64],
) {
    let n = alpha_q.len();
    let c = params.stiffness;
    let b = params.damping;
    let inv_rho = 1.0 / params.rho;

    let mut ep_prev = 0.0; // clamped end
    for i in 0..n {
        let ep = alpha_p[i] * inv_rho;
        dq[i] = (ep - ep_prev) / h;
        let eq_next = if i + 1 < n { c * alpha_q[i + 1] } else { e_b };
        dp[i] = (eq_next - c * alpha_q[i]) / h - b * ep;
        ep_prev = ep;
    }
}

/// Tip velocity `e_p` at the last node.
pub fn boundary_output(beam: &DiscreteBeam, params: &BeamParameters) -> f64 {
    beam.alpha_p[beam.n() - 1] / params.rho
}

pub fn boundary_port(beam: &DiscreteBeam, params: &BeamParameters, voltage: f64) -> BoundaryPort {
    BoundaryPort {
        e_b: -params.gamma * voltage,
        f_b: boundary_output(beam, params),
    }
}

pub(crate) fn hamiltonian_of(
    params: &BeamParameters,
    h: f64,
    alpha_q: &[f64],
    alpha_p: &[f64],
) -> f64 {
    let c = params.stiffness;
    let inv_rho = 1.0 / params.rho;
    let sum: f64 = alpha_q
        .iter()
        .zip(alpha_p)
        .map(|(q, p)| c * q * q + p * p * inv_rho)
        .sum();
    0.5 * h * sum
}

/// `H_d = (h/2) sum(C alpha_q^2 + alpha_p^2 / rho)`.
pub fn discrete_hamiltonian(beam: &DiscreteBeam, params: &BeamParameters) -> f64 {
    hamiltonian_of(params, beam.h, &beam.alpha_q, &beam.alpha_p)
}

/// Velocity storage `S_h = (h/2) sum(edot_q^2 / C + rho edot_p^2)`.
///
/// Since `edot_q = C alphadot_q` and `edot_p = alphadot_p / rho`, this is the
/// discrete Hamiltonian evaluated on the velocity field.
pub fn discrete_storage_s(beam: &DiscreteBeam, params: &BeamParameters, e_b: f64) -> f64 {
    let (dq, dp) = rhs(beam, params, e_b);
    hamiltonian_of(params, beam.h, &dq, &dp)
}

/// Discrete power balance of the Hamiltonian at one state.
pub fn power_balance(beam: &DiscreteBeam, params: &BeamParameters, e_b: f64) -> PowerBalance {
    let (dq, dp) = rhs(beam, params, e_b);
    balance_of(params, beam.h, &beam.alpha_q, &beam.alpha_p, &dq, &dp, e_b)
}

pub(crate) fn balance_of(
    params: &BeamParameters,
    h: f64,
    alpha_q: &[f64],
    alpha_p: &[f64],
    dq: &[f64],
    dp: &[f64],
    e_b: f64,
) -> PowerBalance {
    let c = params.stiffness;
    let inv_rho = 1.0 / params.rho;
    let mut rate = 0.0;
    let mut ep_sq = 0.0;
    for i in 0..alpha_q.len() {
        let ep = alpha_p[i] * inv_rho;
        rate += c * alpha_q[i] * dq[i] + ep * dp[i];
        ep_sq += ep * ep;
    }
    let f_b = alpha_p[alpha_p.len() - 1] * inv_rho;
    PowerBalance {
        rate: h * rate,
        supply: e_b * f_b,
        dissipation: params.damping * h * ep_sq,
    }
}

/// `dH_d/dt - (e_b f_b - b h sum e_p^2)`; vanishes up to roundoff.
pub fn power_balance_residual(beam: &DiscreteBeam, params: &BeamParameters, e_b: f64) -> f64 {
    power_balance(beam, params, e_b).residual()
}

/// Balance of the velocity storage `S_h` given the boundary effort rate
/// `d e_b/dt = -gamma dU/dt`.
///
/// The velocity field obeys the same stencil as the state, so
/// `dS_h/dt = edot_b * edot_p(N) - b h sum(edot_p^2)`.
pub fn storage_balance(
    beam: &DiscreteBeam,
    params: &BeamParameters,
    e_b: f64,
    e_b_rate: f64,
) -> PowerBalance {
    let n = beam.n();
    let (dq, dp) = rhs(beam, params, e_b);
    let mut ddq = vec![0.0; n];
    let mut ddp = vec![0.0; n];
    rhs_into(params, beam.h, &dq, &dp, e_b_rate, &mut ddq, &mut ddp);
    balance_of(params, beam.h, &dq, &dp, &ddq, &ddp, e_b_rate)
}
