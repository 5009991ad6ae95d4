//! Physical constants of the viscously damped piezoelectric beam and its
//! constant-strain equilibrium.
//!
//! The beam is clamped at `z = 0` and actuated through a voltage `U` at
//! `z = ell`, which enters the mechanics as the boundary stress `-gamma * U`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Material and geometric constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamParameters {
    /// Mass density per unit length.
    pub rho: f64,
    /// Beam length.
    pub ell: f64,
    /// Axial stiffness.
    #[serde(rename = "C")]
    pub stiffness: f64,
    /// Piezoelectric coupling (force per volt).
    pub gamma: f64,
    /// Viscous damping coefficient.
    #[serde(rename = "b")]
    pub damping: f64,
}

impl BeamParameters {
    /// The illustrative values `(rho, ell, C, gamma, b) = (1, 1, 3/4, 1/10, 7)`.
    pub const PAPER: BeamParameters = BeamParameters {
        rho: 1.0,
        ell: 1.0,
        stiffness: 0.75,
        gamma: 0.1,
        damping: 7.0,
    };

    pub fn new(rho: f64, ell: f64, stiffness: f64, gamma: f64, damping: f64) -> Result<Self> {
        let params = Self {
            rho,
            ell,
            stiffness,
            gamma,
            damping,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("rho", self.rho),
            ("ell", self.ell),
            ("C", self.stiffness),
            ("gamma", self.gamma),
            ("b", self.damping),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(invalid(name, format!("must be finite, got {value}")));
            }
        }
        if self.rho <= 0.0 {
            return Err(invalid("rho", "must be positive"));
        }
        if self.ell <= 0.0 {
            return Err(invalid("ell", "must be positive"));
        }
        if self.stiffness <= 0.0 {
            return Err(invalid("C", "must be positive"));
        }
        if self.gamma == 0.0 {
            return Err(invalid("gamma", "must be nonzero"));
        }
        if self.damping < 0.0 {
            return Err(invalid("b", "must be non-negative"));
        }
        Ok(())
    }
}

impl Default for BeamParameters {
    fn default() -> Self {
        Self::PAPER
    }
}

/// Validating constructor, argument order `(rho, ell, C, gamma, b)`.
pub fn make_parameters(
    rho: f64,
    ell: f64,
    stiffness: f64,
    gamma: f64,
    damping: f64,
) -> Result<BeamParameters> {
    BeamParameters::new(rho, ell, stiffness, gamma, damping)
}

/// Closed-loop operating point for a target tip strain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    /// Steady stress effort `C * E*`, uniform along the beam.
    pub eq_star: f64,
    /// Steady velocity effort; always zero.
    pub ep_star: f64,
    /// Steady voltage `-C * E* / gamma`.
    pub u_star: f64,
    /// Steady boundary effort `-gamma * U* = C * E*`.
    pub u_bar_star: f64,
    pub strain_target: f64,
}

/// Constant-strain solution of the steady boundary value problem.
///
/// With zero steady velocity the stress gradient vanishes, so the stress is
/// uniform and fixed by the boundary condition at the tip.
pub fn steady_state(params: &BeamParameters, strain_target: f64) -> Result<Equilibrium> {
    params.validate()?;
    if !strain_target.is_finite() {
        return Err(invalid("strain_target", "must be finite"));
    }
    let eq_star = params.stiffness * strain_target;
    Ok(Equilibrium {
        eq_star,
        ep_star: 0.0,
        u_star: -eq_star / params.gamma,
        u_bar_star: eq_star,
        strain_target,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn paper_parameters_are_valid() {
        let p = make_parameters(1.0, 1.0, 0.75, 0.1, 7.0).unwrap();
        assert_eq!(p, BeamParameters::PAPER);
    }

    #[test]
    fn rejects_zero_coupling() {
        let err = make_parameters(1.0, 1.0, 0.75, 0.0, 7.0).unwrap_err();
        assert!(err.to_string().contains("gamma"), "{err}");
    }

    #[test]
    fn rejects_negative_density() {
        let err = make_parameters(-1.0, 1.0, 0.75, 0.1, 7.0).unwrap_err();
        assert!(err.to_string().contains("rho"), "{err}");
    }

    #[test]
    fn rejects_negative_damping_and_non_finite() {
        assert!(make_parameters(1.0, 1.0, 0.75, 0.1, -1.0).is_err());
        assert!(make_parameters(1.0, f64::NAN, 0.75, 0.1, 7.0).is_err());
        assert!(make_parameters(1.0, 1.0, f64::INFINITY, 0.1, 7.0).is_err());
        assert!(make_parameters(1.0, 0.0, 0.75, 0.1, 7.0).is_err());
        assert!(make_parameters(1.0, 1.0, 0.0, 0.1, 7.0).is_err());
        // zero damping is the lossless limit, still admissible
        assert!(make_parameters(1.0, 1.0, 0.75, 0.1, 0.0).is_ok());
    }

    #[test]
    fn paper_equilibrium() {
        let eq = steady_state(&BeamParameters::PAPER, 1.0).unwrap();
        assert_relative_eq!(eq.eq_star, 0.75);
        assert_eq!(eq.ep_star, 0.0);
        assert_relative_eq!(eq.u_star, -7.5, max_relative = 1e-15);
        assert_relative_eq!(eq.u_bar_star, 0.75);
    }

    #[test]
    fn zero_target_gives_zero_equilibrium() {
        let eq = steady_state(&BeamParameters::PAPER, 0.0).unwrap();
        assert_eq!(eq.eq_star, 0.0);
        assert_eq!(eq.u_star, 0.0);
        assert_eq!(eq.u_bar_star, 0.0);
    }

    #[test]
    fn negative_target() {
        let p = make_parameters(1.0, 1.0, 2.0, 1.0, 7.0).unwrap();
        let eq = steady_state(&p, -0.5).unwrap();
        assert_eq!(eq.eq_star, -1.0);
        assert_eq!(eq.u_star, 1.0);
        assert_eq!(eq.u_bar_star, -1.0);
    }

    proptest::proptest! {
        #[test]
        fn equilibrium_is_linear_in_target(e in -10.0f64..10.0, a in -5.0f64..5.0) {
            let p = BeamParameters::PAPER;
            let base = steady_state(&p, e).unwrap();
            let scaled = steady_state(&p, a * e).unwrap();
            let tol = 1e-12 * (1.0 + (a * e).abs() * 10.0);
            proptest::prop_assert!((scaled.eq_star - a * base.eq_star).abs() <= tol);
            proptest::prop_assert!((scaled.u_star - a * base.u_star).abs() <= tol * 10.0);
            proptest::prop_assert!((scaled.u_star * p.gamma + scaled.eq_star).abs() <= tol);
            proptest::prop_assert_eq!(scaled.ep_star, 0.0);
        }
    }
}
