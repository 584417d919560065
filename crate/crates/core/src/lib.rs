//! Exact weak thresholds of ℓ1 minimization for sparse recovery.
//!
//! The crate is organised bottom-up:
//!
//! - [`specfn`]: error function, its inverse and Gaussian quantiles.
//! - [`linalg`]: dense Householder QR, Cholesky, least squares, null-space
//!   bases and row-space projectors.
//! - [`threshold`]: the weak-threshold characterization equations for the
//!   general and sign-constrained regimes, together with the two-sided α
//!   bounds they collapse from.
//! - [`cert`]: the null-space functional τ(A) of a concrete matrix, computed
//!   through its dual distance formulation and cross-checked against a
//!   primal oracle, plus success/failure classification and counterexample
//!   construction.
//! - [`recovery`]: basis pursuit by operator splitting and an exact simplex
//!   reference.
//! - [`experiments`]: Monte Carlo phase-transition harness and finite-n
//!   estimates of the Gaussian framework quantities.

pub mod cert;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod recovery;
pub mod rng;
pub mod specfn;
pub mod threshold;

pub use cert::{
    canonicalize, classify_nsp, construct_counterexample, sphere_minimum, tau_dual,
    tau_primal_oracle, verify_certificate, Canonical, CertCheck, NspVerdict, SupportPattern,
    TauCertificate, Verdict,
};
pub use error::{Error, Result};
pub use experiments::{
    estimate_transition, framework_alpha_estimate, framework_cw, run_phase_grid, run_trial,
    FrameworkEstimate, FrameworkSample, PhaseCell, PhaseGrid,
};
pub use linalg::{DenseMatrix, NullBasis, RowProjector};
pub use recovery::{check_recovery, simplex_reference, solve_bp, BpProblem, BpSolution, BpSolver};
pub use threshold::{
    alpha_bound, alpha_w, char_residual, solve_theta, threshold_curve, EpsilonSet, Side,
    ThresholdPoint,
};

use serde::{Deserialize, Serialize};

/// Which ℓ1 problem is being analysed.
///
/// `General` is plain basis pursuit with arbitrary signs on the support;
/// `Signed` adds the constraint `x ≥ 0` and assumes a nonnegative support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    General,
    Signed,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::General => "general",
            Regime::Signed => "signed",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}
