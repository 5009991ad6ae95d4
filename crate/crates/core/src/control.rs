//! PI-like boundary voltage controllers.
//!
//! Both shaping controllers act on the measured tip velocity `f_b` and carry
//! one scalar integrator:
//!
//! * output shaping integrates the tip velocity, `phi' = f_b`, and applies
//!   `Ubar = -Ki_A phi - Kp_A f_b + Ubar*`;
//! * input shaping integrates the voltage error, `psi' = U - U*`, and applies
//!   `Ubar = Ki_B psi - Kp_B f_b + Ubar*`.
//!
//! Here `Ubar = -gamma U` is the boundary effort. Gains are stored either in
//! the raw form of the stability statements or in the `Ubar` ("bar") form
//! used for tuning; [`reparameterize`] converts between the two.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BeamParameters, Equilibrium};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ControllerFamily {
    /// Fixed voltage, no feedback.
    Constant,
    OutputShaping,
    InputShaping,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GainForm {
    /// Gains `(Kp, Ki)` of the voltage law.
    Raw,
    /// Gains `(Kp^A, Ki^A)` / `(Kp^B, Ki^B)` of the boundary-effort law.
    Bar,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSpec {
    pub family: ControllerFamily,
    #[serde(rename = "Kp", default)]
    pub kp: f64,
    #[serde(rename = "Ki", default)]
    pub ki: f64,
    /// Include the `Ubar*` feedforward.
    #[serde(default = "default_true")]
    pub reference_on: bool,
    #[serde(default = "default_form")]
    pub gain_form: GainForm,
    /// Voltage of the `Constant` family; `None` means `U*`.
    #[serde(default)]
    pub u_constant: Option<f64>,
}

fn default_true() -> bool {
    true
}

fn default_form() -> GainForm {
    GainForm::Bar
}

/// Scalar integrator state: `phi` for output shaping, `psi` for input shaping.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ControllerState {
    pub xi: f64,
}

impl ControllerSpec {
    /// Voltage held at `U*` (or a fixed value when `u_constant` is set).
    pub fn constant(u_constant: Option<f64>) -> Self {
        Self {
            family: ControllerFamily::Constant,
            kp: 0.0,
            ki: 0.0,
            reference_on: true,
            gain_form: GainForm::Bar,
            u_constant,
        }
    }

    pub fn output_shaping_bar(ki_a: f64, kp_a: f64, reference_on: bool) -> Self {
        Self {
            family: ControllerFamily::OutputShaping,
            kp: kp_a,
            ki: ki_a,
            reference_on,
            gain_form: GainForm::Bar,
            u_constant: None,
        }
    }

    pub fn input_shaping_bar(ki_b: f64, kp_b: f64, reference_on: bool) -> Self {
        Self {
            family: ControllerFamily::InputShaping,
            kp: kp_b,
            ki: ki_b,
            reference_on,
            gain_form: GainForm::Bar,
            u_constant: None,
        }
    }

    pub fn raw(family: ControllerFamily, kp: f64, ki: f64) -> Self {
        Self {
            family,
            kp,
            ki,
            reference_on: true,
            gain_form: GainForm::Raw,
            u_constant: None,
        }
    }

    /// Raw-form gains must be strictly positive; bar-form gains only finite,
    /// so that zero-gain sweep cells can be simulated.
    pub fn validate(&self) -> Result<()> {
        if !self.kp.is_finite() || !self.ki.is_finite() {
            return Err(Error::InvalidController("gains must be finite".into()));
        }
        match self.family {
            ControllerFamily::Constant => {
                if let Some(u) = self.u_constant {
                    if !u.is_finite() {
                        return Err(Error::InvalidController("u_constant must be finite".into()));
                    }
                }
            }
            ControllerFamily::OutputShaping | ControllerFamily::InputShaping => {
                if self.gain_form == GainForm::Raw && (self.kp <= 0.0 || self.ki <= 0.0) {
                    return Err(Error::InvalidController(format!(
                        "raw gains must satisfy Kp > 0 and Ki > 0, got Kp = {}, Ki = {}",
                        self.kp, self.ki
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn has_integrator(&self) -> bool {
        self.family != ControllerFamily::Constant
    }

    /// `(Kp, Ki)` of the boundary-effort law; for input shaping in raw form
    /// this is `(gamma^2 / Kp, gamma Ki / Kp)`.
    pub fn bar_gains(&self, gamma: f64) -> (f64, f64) {
        match (self.family, self.gain_form) {
            (ControllerFamily::InputShaping, GainForm::Raw) => {
                (gamma * gamma / self.kp, gamma * self.ki / self.kp)
            }
            _ => (self.kp, self.ki),
        }
    }

    /// Weight `Ki` (raw form) of the integrator term in the closed-loop
    /// storage function; `None` if it is undefined (input shaping with
    /// `Kp^B = 0`).
    pub fn storage_weight(&self, gamma: f64) -> Option<f64> {
        match self.family {
            ControllerFamily::Constant => Some(0.0),
            ControllerFamily::OutputShaping => Some(self.ki),
            ControllerFamily::InputShaping => match self.gain_form {
                GainForm::Raw => Some(self.ki),
                GainForm::Bar if self.kp != 0.0 => Some(gamma * self.ki / self.kp),
                GainForm::Bar if self.ki == 0.0 => Some(0.0),
                GainForm::Bar => None,
            },
        }
    }
}

/// Boundary effort `Ubar = -gamma U` produced by the controller.
///
/// Works directly in the effort domain so that the closed-loop equilibrium
/// is reproduced without a round trip through `1/gamma`.
pub fn boundary_effort(
    spec: &ControllerSpec,
    state: &ControllerState,
    f_b: f64,
    eq: &Equilibrium,
    params: &BeamParameters,
) -> f64 {
    let velocity_error = f_b - eq.ep_star;
    let reference = if spec.reference_on {
        eq.u_bar_star
    } else {
        0.0
    };
    match spec.family {
        ControllerFamily::Constant => match spec.u_constant {
            Some(u) => -params.gamma * u,
            None => eq.u_bar_star,
        },
        ControllerFamily::OutputShaping => {
            -spec.ki * state.xi - spec.kp * velocity_error + reference
        }
        ControllerFamily::InputShaping => {
            let (kp_b, ki_b) = spec.bar_gains(params.gamma);
            ki_b * state.xi - kp_b * velocity_error + reference
        }
    }
}

/// Applied voltage `U`.
pub fn controller_output(
    spec: &ControllerSpec,
    state: &ControllerState,
    f_b: f64,
    eq: &Equilibrium,
    params: &BeamParameters,
) -> f64 {
    match (spec.family, spec.u_constant) {
        (ControllerFamily::Constant, Some(u)) => u,
        (ControllerFamily::Constant, None) => eq.u_star,
        _ => -boundary_effort(spec, state, f_b, eq, params) / params.gamma,
    }
}

/// Integrator derivative given the output `voltage` at the same instant.
pub fn controller_rhs(
    spec: &ControllerSpec,
    _state: &ControllerState,
    f_b: f64,
    voltage: f64,
    eq: &Equilibrium,
    params: &BeamParameters,
) -> f64 {
    integrator_rate(spec, f_b, -params.gamma * voltage, eq, params.gamma)
}

/// Integrator derivative in terms of the boundary effort `u_bar`.
///
/// For input shaping the voltage error is formed as
/// `U - U* = -(Ubar - Ubar*) / gamma`, which is exact at the equilibrium.
pub(crate) fn integrator_rate(
    spec: &ControllerSpec,
    f_b: f64,
    u_bar: f64,
    eq: &Equilibrium,
    gamma: f64,
) -> f64 {
    match spec.family {
        ControllerFamily::Constant => 0.0,
        ControllerFamily::OutputShaping => f_b - eq.ep_star,
        ControllerFamily::InputShaping => -(u_bar - eq.u_bar_star) / gamma,
    }
}

/// Convert between raw and bar gain forms.
pub fn reparameterize(spec: &ControllerSpec, gamma: f64) -> Result<ControllerSpec> {
    let mut out = *spec;
    match spec.gain_form {
        GainForm::Raw => {
            out.gain_form = GainForm::Bar;
            if spec.family == ControllerFamily::InputShaping {
                if spec.kp == 0.0 {
                    return Err(Error::InvalidController(
                        "raw input shaping needs Kp != 0".into(),
                    ));
                }
                out.kp = gamma * gamma / spec.kp;
                out.ki = gamma * spec.ki / spec.kp;
            }
        }
        GainForm::Bar => {
            out.gain_form = GainForm::Raw;
            if spec.family == ControllerFamily::InputShaping {
                if spec.kp == 0.0 {
                    return Err(Error::InvalidController(
                        "input shaping with Kp^B = 0 has no raw form (Kp = gamma^2 / Kp^B)".into(),
                    ));
                }
                let kp = gamma * gamma / spec.kp;
                out.kp = kp;
                out.ki = spec.ki * kp / gamma;
            }
        }
    }
    Ok(out)
}
