//! Boundary passivity-based control of a viscously damped piezoelectric beam.
//!
//! The beam is modelled as a one-dimensional port-Hamiltonian system with a
//! clamped end and a voltage-actuated tip. The crate provides
//!
//! * [`model`]: physical parameters and the constant-strain equilibrium,
//! * [`disc`]: a power-preserving staggered discretization with boundary port,
//! * [`control`]: output-shaping and input-shaping PI boundary controllers,
//! * [`sim`]: fixed-step RK4 closed-loop simulation with energy diagnostics,
//! * [`analysis`]: step metrics, dense closed-loop matrices and spectra,
//!   Lyapunov sandwich bounds, gain sweeps and convergence studies.

pub mod analysis;
pub mod control;
pub mod disc;
pub mod error;
pub mod model;
pub mod sim;

pub use analysis::metrics::{step_metrics, StepMetrics};
pub use control::{ControllerFamily, ControllerSpec, ControllerState, GainForm};
pub use disc::{BoundaryPort, DiscreteBeam};
pub use error::{Error, Result};
pub use model::{make_parameters, steady_state, BeamParameters, Equilibrium};
pub use sim::{simulate, Scenario, SimulationResult};
