//! Post-processing and certification of closed-loop runs.

pub mod closed_loop;
pub mod convergence;
pub mod lyapunov;
pub mod metrics;
pub mod order;
pub mod sweep;

pub use closed_loop::{
    assemble_closed_loop, spectral_abscissa, steady_state_limit, ClosedLoopMatrix,
};
pub use convergence::{convergence_study, ConvergenceRow};
pub use lyapunov::{
    lyapunov_sandwich_check, sandwich_check, ExtendedPerturbation, SandwichConstants,
    SandwichReport,
};
pub use order::{rk4_self_convergence, OrderStudy};
pub use sweep::{
    non_decreasing, non_increasing, sweep, table_one, tuned_cases, SweepCell, SweepRow,
    SweepVariable,
};
