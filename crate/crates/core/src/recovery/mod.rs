//! Basis pursuit: `min ‖x‖₁ s.t. A x = y` (and `x ≥ 0` in the signed regime).
//!
//! [`solve_bp`] is the workhorse operator-splitting solver used by the
//! Monte Carlo experiments; [`simplex_reference`] solves the same problem as
//! a linear program and serves as an exact oracle at small scale.

mod admm;
mod simplex;

pub use admm::{BpSolver, ADMM_MAX_ITER, ADMM_OVER_RELAXATION, ADMM_RHO, ADMM_TOL};
pub use simplex::{simplex_reference, SIMPLEX_MAX_N};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{norm_inf, DenseMatrix};
use crate::Regime;

/// Default tolerance of [`check_recovery`].
pub const RECOVERY_TOL: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct BpProblem {
    pub a: DenseMatrix,
    pub y: Vec<f64>,
    pub regime: Regime,
}

impl BpProblem {
    pub fn new(a: DenseMatrix, y: Vec<f64>, regime: Regime) -> Result<Self> {
        if y.len() != a.rows() {
            return Err(Error::Input(format!(
                "y has length {} but A has {} rows",
                y.len(),
                a.rows()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("y has non-finite entries".into()));
        }
        Ok(BpProblem { a, y, regime })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BpSolution {
    pub x_hat: Vec<f64>,
    /// `‖x̂‖₁`
    pub objective: f64,
    /// `‖A x̂ − y‖₂`
    pub feas_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Solve basis pursuit by operator splitting (see [`BpSolver`]).
pub fn solve_bp(problem: &BpProblem) -> Result<BpSolution> {
    BpSolver::new(&problem.a, problem.regime)?.solve(&problem.y)
}

/// True iff the solver converged and `‖x̂ − x₀‖_∞ ≤ tol · max(1, ‖x₀‖_∞)`.
pub fn check_recovery(x0: &[f64], sol: &BpSolution, tol: f64) -> bool {
    assert_eq!(x0.len(), sol.x_hat.len(), "dimension mismatch");
    if !sol.converged {
        return false;
    }
    let err = x0
        .iter()
        .zip(&sol.x_hat)
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    err <= tol * norm_inf(x0).max(1.0)
}
