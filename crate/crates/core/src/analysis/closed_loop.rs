//! Dense affine form `dx/dt = A x + c` of the closed loop.
//!
//! The matrix is assembled entry by entry from the stencil and the control
//! laws, independently of [`crate::sim::ClosedLoop::rhs`], so the two can be
//! compared against each other.

use nalgebra::{DMatrix, DVector};

use crate::control::ControllerFamily;
use crate::error::{Error, Result};
use crate::sim::Scenario;

/// Largest state dimension accepted by the dense eigensolver (`N <= 256`).
pub const MAX_DENSE_DIM: usize = 2 * 256 + 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopMatrix {
    pub a: DMatrix<f64>,
    pub c: DVector<f64>,
    pub labels: Vec<String>,
}

impl ClosedLoopMatrix {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let v = &self.a * DVector::from_column_slice(x) + &self.c;
        v.iter().copied().collect()
    }

    /// Indices of states with an all-zero row and column; they neither move
    /// nor influence anything (the integrator slot of a constant voltage).
    fn inert_states(&self) -> Vec<usize> {
        let n = self.a.nrows();
        (0..n)
            .filter(|&i| {
                self.a.row(i).iter().all(|&v| v == 0.0)
                    && self.a.column(i).iter().all(|&v| v == 0.0)
            })
            .collect()
    }

    /// `A` with inert states removed.
    pub fn dynamic_block(&self) -> DMatrix<f64> {
        let inert = self.inert_states();
        let keep: Vec<usize> = (0..self.a.nrows()).filter(|i| !inert.contains(i)).collect();
        DMatrix::from_fn(keep.len(), keep.len(), |r, c| self.a[(keep[r], keep[c])])
    }
}

pub fn assemble_closed_loop(scenario: &Scenario) -> Result<ClosedLoopMatrix> {
    scenario.validate()?;
    let n = scenario.n;
    let dim = 2 * n + 1;
    let p = &scenario.params;
    let eq = scenario.equilibrium()?;
    let spec = &scenario.controller;
    let h = scenario.h();
    let (qi, pi, xi) = (|i: usize| i, |i: usize| n + i, 2 * n);

    let mut a = DMatrix::<f64>::zeros(dim, dim);
    let mut c = DVector::<f64>::zeros(dim);

    // strain: d alpha_q,i = (e_p,i - e_p,i-1) / h, e_p,0 = 0
    for i in 0..n {
        a[(qi(i), pi(i))] += 1.0 / (h * p.rho);
        if i > 0 {
            a[(qi(i), pi(i - 1))] -= 1.0 / (h * p.rho);
        }
    }
    // momentum: d alpha_p,i = (e_q,i+1 - e_q,i) / h - b e_p,i
    for i in 0..n {
        a[(pi(i), qi(i))] -= p.stiffness / h;
        if i + 1 < n {
            a[(pi(i), qi(i + 1))] += p.stiffness / h;
        }
        a[(pi(i), pi(i))] -= p.damping / p.rho;
    }

    // boundary effort e_b = gain . x + drive
    let mut gain = vec![0.0; dim];
    let reference = if spec.reference_on {
        eq.u_bar_star
    } else {
        0.0
    };
    let drive = match spec.family {
        ControllerFamily::Constant => spec.u_constant.map_or(eq.u_bar_star, |u| -p.gamma * u),
        ControllerFamily::OutputShaping => {
            gain[xi] = -spec.ki;
            gain[pi(n - 1)] = -spec.kp / p.rho;
            reference
        }
        ControllerFamily::InputShaping => {
            let (kp_b, ki_b) = spec.bar_gains(p.gamma);
            gain[xi] = ki_b;
            gain[pi(n - 1)] = -kp_b / p.rho;
            reference
        }
    };
    for (j, g) in gain.iter().enumerate() {
        a[(pi(n - 1), j)] += g / h;
    }
    c[pi(n - 1)] += drive / h;

    match spec.family {
        ControllerFamily::Constant => {}
        ControllerFamily::OutputShaping => {
            a[(xi, pi(n - 1))] = 1.0 / p.rho;
            c[xi] = -eq.ep_star;
        }
        ControllerFamily::InputShaping => {
            // psi' = U - U* = -(e_b - Ubar*) / gamma
            for (j, g) in gain.iter().enumerate() {
                a[(xi, j)] = -g / p.gamma;
            }
            c[xi] = -(drive - eq.u_bar_star) / p.gamma;
        }
    }

    let labels = (1..=n)
        .map(|i| format!("alpha_q[{i}]"))
        .chain((1..=n).map(|i| format!("alpha_p[{i}]")))
        .chain(std::iter::once(
            match spec.family {
                ControllerFamily::InputShaping => "psi",
                _ => "phi",
            }
            .to_string(),
        ))
        .collect();

    Ok(ClosedLoopMatrix { a, c, labels })
}

/// Largest real part of the eigenvalues of `A`, inert states excluded.
pub fn spectral_abscissa(m: &ClosedLoopMatrix) -> Result<f64> {
    if m.a.nrows() > MAX_DENSE_DIM {
        return Err(Error::Eigen(format!(
            "dimension {} exceeds dense budget {MAX_DENSE_DIM}",
            m.a.nrows()
        )));
    }
    let block = m.dynamic_block();
    if block.nrows() == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    let schur = nalgebra::Schur::try_new(block, f64::EPSILON, 100_000)
        .ok_or_else(|| Error::Eigen("Schur iteration did not converge".into()))?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Limit state `x(inf)` of the trajectory started at the origin.
///
/// Solves `A x + c = 0`. Integrators that do not feed back (zero column) are
/// excluded from the solve. Output shaping with integral action conserves
/// `phi - h * sum(alpha_q)`, which replaces the singular integrator row.
pub fn steady_state_limit(scenario: &Scenario) -> Result<Vec<f64>> {
    let m = assemble_closed_loop(scenario)?;
    let n = scenario.n;
    let xi = 2 * n;
    let dim = 2 * n + 1;
    let integrator_feeds_back = m.a.column(xi).iter().any(|&v| v != 0.0);

    if !integrator_feeds_back {
        let a = m.a.view((0, 0), (2 * n, 2 * n)).into_owned();
        let c = m.c.rows(0, 2 * n).into_owned();
        let sol = a
            .lu()
            .solve(&(-c))
            .ok_or_else(|| Error::Eigen("singular plant block".into()))?;
        let mut x: Vec<f64> = sol.iter().copied().collect();
        x.push(f64::NAN);
        return Ok(x);
    }

    let mut a = m.a.clone();
    let mut c = m.c.clone();
    if scenario.controller.family == ControllerFamily::OutputShaping {
        let h = scenario.h();
        for j in 0..dim {
            a[(xi, j)] = 0.0;
        }
        a[(xi, xi)] = 1.0;
        for i in 0..n {
            a[(xi, i)] = -h;
        }
        c[xi] = 0.0;
    }
    let sol = a
        .lu()
        .solve(&(-c))
        .ok_or_else(|| Error::Eigen("singular closed-loop matrix".into()))?;
    Ok(sol.iter().copied().collect())
}
