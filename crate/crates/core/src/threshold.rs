//! Weak thresholds of ℓ1 minimization.
//!
//! For a sparsity ratio `β = k/n` the threshold `θ̂` is the root in `(β, 1)`
//! of the characterization equation. Writing `q = (1 − θ)/(1 − β)`:
//!
//! ```text
//! general:  (1 − β) √(2/π)  e^{−E²} / θ − √2 · erfinv(q)       = 0,  E = erfinv(q)
//! signed:   (1 − β) √(1/2π) e^{−E²} / θ − √2 · erfinv(2q − 1)  = 0,  E = erfinv(2q − 1)
//! ```
//!
//! The two-sided versions carry the perturbations `ε₁⁽ᶜ⁾` (lower side) and
//! `ε₂⁽ᶜ⁾` (upper side) on the density term and on the erfinv argument. The
//! α bounds of [`alpha_bound`] are closed-form functions of `θ̂`; with every
//! ε set to zero both collapse onto `θ̂`, which is the weak threshold
//! `α_w(β)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfn::erfinv;
use crate::Regime;

const SQRT_2: f64 = std::f64::consts::SQRT_2;
/// √(2π)
const SQRT_2PI: f64 = 2.506_628_274_631_000_5;
/// √(2/π)
const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;
/// √(1/(2π))
const SQRT_1_OVER_2PI: f64 = 0.398_942_280_401_432_7;

/// Distance kept from both ends of `(β, 1)` when bracketing the root.
pub const BRACKET_MARGIN: f64 = 1e-9;
/// Number of points of the sign-change scan that precedes bisection.
pub const SCAN_POINTS: usize = 64;
/// Required accuracy of a solved root, in residual units.
pub const ROOT_RESIDUAL_TOL: f64 = 1e-11;

/// Which of the two matching inequalities is meant.
///
/// `Lower` is the recovery-success side (α above the bound means success),
/// `Upper` the failure side (α below the bound means failure).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Lower,
    Upper,
}

/// Slack constants of the two-sided characterization.
///
/// All must lie in `[0, 0.1)`. `eps5_g` is accepted and validated but does
/// not enter any closed-form bound.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSet {
    pub eps1_c: f64,
    pub eps2_c: f64,
    pub eps1_m: f64,
    pub eps3_m: f64,
    pub eps1_g: f64,
    pub eps3_g: f64,
    pub eps5_g: f64,
}

impl EpsilonSet {
    pub const ZERO: EpsilonSet = EpsilonSet {
        eps1_c: 0.0,
        eps2_c: 0.0,
        eps1_m: 0.0,
        eps3_m: 0.0,
        eps1_g: 0.0,
        eps3_g: 0.0,
        eps5_g: 0.0,
    };

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("eps1_c", self.eps1_c),
            ("eps2_c", self.eps2_c),
            ("eps1_m", self.eps1_m),
            ("eps3_m", self.eps3_m),
            ("eps1_g", self.eps1_g),
            ("eps3_g", self.eps3_g),
            ("eps5_g", self.eps5_g),
        ];
        for (name, v) in named {
            if !(0.0..0.1).contains(&v) {
                return Err(Error::Precondition(format!(
                    "{name} = {v} must lie in [0, 0.1)"
                )));
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        *self == EpsilonSet::ZERO
    }

    /// Characterization perturbation for the given side.
    pub fn char_eps(&self, side: Side) -> f64 {
        match side {
            Side::Lower => self.eps1_c,
            Side::Upper => self.eps2_c,
        }
    }
}

/// One point `(β, θ̂, α)` of a weak-threshold curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPoint {
    pub beta: f64,
    pub theta_hat: f64,
    pub alpha: f64,
    pub regime: Regime,
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta < 1.0 {
        Ok(())
    } else {
        Err(Error::Precondition(format!("beta = {beta} must lie in (0, 1)")))
    }
}

/// Left-hand side of the characterization equation at `θ`.
///
/// `eps1_c` is used on the lower side and `eps2_c` on the upper side; the
/// exponent always uses the unperturbed erfinv argument.
pub fn char_residual(
    regime: Regime,
    theta: f64,
    beta: f64,
    eps1_c: f64,
    eps2_c: f64,
    side: Side,
) -> Result<f64> {
    check_beta(beta)?;
    if !(theta > beta && theta < 1.0) {
        return Err(Error::Precondition(format!(
            "theta = {theta} must lie in (beta, 1) = ({beta}, 1)"
        )));
    }
    let (dens_factor, arg_factor) = match side {
        Side::Lower => (1.0 - eps1_c, 1.0 + eps1_c),
        Side::Upper => (1.0 + eps2_c, 1.0 - eps2_c),
    };
    let q = (1.0 - theta) / (1.0 - beta);
    let value = match regime {
        Regime::General => {
            let e = erfinv(q)?;
            dens_factor * (1.0 - beta) * SQRT_2_OVER_PI * (-e * e).exp() / theta
                - SQRT_2 * erfinv(arg_factor * q)?
        }
        Regime::Signed => {
            let e = erfinv(2.0 * q - 1.0)?;
            dens_factor * (1.0 - beta) * SQRT_1_OVER_2PI * (-e * e).exp() / theta
                - SQRT_2 * erfinv(2.0 * arg_factor * q - 1.0)?
        }
    };
    Ok(value)
}

/// Root `θ̂ ∈ (β, 1)` of [`char_residual`].
///
/// A 64-point scan over the admissible interval locates the first sign
/// change, which is then bisected until the residual is below
/// [`ROOT_RESIDUAL_TOL`] or the bracket collapses to adjacent floats.
pub fn solve_theta(regime: Regime, beta: f64, eps: &EpsilonSet, side: Side) -> Result<f64> {
    check_beta(beta)?;
    eps.validate()?;
    let (e1, e2) = (eps.eps1_c, eps.eps2_c);
    let arg_factor = match side {
        Side::Lower => 1.0 + e1,
        Side::Upper => 1.0 - e2,
    };
    // Keep the perturbed erfinv argument strictly below 1: q·arg_factor < 1.
    let theta_floor = (1.0 - (1.0 - beta) / arg_factor).max(beta);
    let lo0 = theta_floor + BRACKET_MARGIN;
    let hi0 = 1.0 - BRACKET_MARGIN;
    if !(lo0 < hi0) {
        return Err(Error::Bracket {
            beta,
            lo: lo0,
            hi: hi0,
        });
    }

    let f = |t: f64| char_residual(regime, t, beta, e1, e2, side);

    let mut prev_t = lo0;
    let mut prev_f = f(lo0)?;
    let mut bracket = None;
    if prev_f == 0.0 {
        return Ok(lo0);
    }
    for i in 1..SCAN_POINTS {
        let t = lo0 + (hi0 - lo0) * i as f64 / (SCAN_POINTS - 1) as f64;
        let ft = f(t)?;
        if ft == 0.0 {
            return Ok(t);
        }
        if ft.signum() != prev_f.signum() {
            bracket = Some((prev_t, prev_f, t));
            break;
        }
        prev_t = t;
        prev_f = ft;
    }
    let (mut lo, f_lo, mut hi) = bracket.ok_or(Error::Bracket {
        beta,
        lo: lo0,
        hi: hi0,
    })?;

    let lo_sign = f_lo.signum();
    let mut best = (lo, f_lo.abs());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid)?;
        if fm.abs() < best.1 {
            best = (mid, fm.abs());
        }
        if fm == 0.0 {
            break;
        }
        if fm.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let fh = f(hi)?.abs();
    if fh < best.1 {
        best = (hi, fh);
    }
    if best.1 > ROOT_RESIDUAL_TOL {
        return Err(Error::Bracket {
            beta,
            lo: lo0,
            hi: hi0,
        });
    }
    Ok(best.0)
}

/// Weak threshold `α_w(β)` from the ε-free characterization.
pub fn alpha_w(regime: Regime, beta: f64) -> Result<ThresholdPoint> {
    let theta = solve_theta(regime, beta, &EpsilonSet::ZERO, Side::Lower)?;
    Ok(ThresholdPoint {
        beta,
        theta_hat: theta,
        alpha: theta,
        regime,
    })
}

/// Closed-form right-hand side of the α inequality on the given side.
///
/// With `E = erfinv(q̂)` (general) or `erfinv(2q̂ − 1)` (signed),
/// `q̂ = (1 − θ̂)/(1 − β)`, `D` the density term `(1 − β)·c·e^{−E²}`
/// (`c = √(2/π)` general, `√(1/2π)` signed) and `S = √(2E²)/e^{E²}`:
///
/// ```text
/// general lower: (1−β)/√(2π) · (√(2π) + 2S − √(2π) q̂) + β − D²/θ̂
/// general upper: ((1−ε₁ᵍ)(θ̂ + 2(1−β)S/√(2π)) − (1+ε₃ᵍ)² D²/θ̂) / (1+ε₁ᵐ)²
/// signed lower:  (1−β) S/√(2π) + θ̂ − D²/θ̂
/// signed upper:  ((1−ε₁ᵍ)(θ̂ + (1−β)S/√(2π)) − (1+ε₃ᵍ)² D²/θ̂) / (1+ε₁ᵐ)²
/// ```
///
/// A nonzero `eps3_m` enters the upper bound as `(√U − ε₃ᵐ)² / (1+ε₁ᵐ)²`
/// where `U` is the bracketed term.
pub fn alpha_bound(
    regime: Regime,
    side: Side,
    beta: f64,
    theta_hat: f64,
    eps: &EpsilonSet,
) -> Result<f64> {
    check_beta(beta)?;
    eps.validate()?;
    if !(theta_hat > beta && theta_hat < 1.0) {
        return Err(Error::Precondition(format!(
            "theta_hat = {theta_hat} must lie in (beta, 1)"
        )));
    }
    let q = (1.0 - theta_hat) / (1.0 - beta);
    let (e, density_const, s_weight) = match regime {
        Regime::General => (erfinv(q)?, SQRT_2_OVER_PI, 2.0),
        Regime::Signed => (erfinv(2.0 * q - 1.0)?, SQRT_1_OVER_2PI, 1.0),
    };
    let e2 = e * e;
    let s = (2.0 * e2).sqrt() / e2.exp();
    let d = (1.0 - beta) * density_const * (-e2).exp();
    let d_sq_over_theta = d * d / theta_hat;

    let value = match (regime, side) {
        (Regime::General, Side::Lower) => {
            (1.0 - beta) / SQRT_2PI * (SQRT_2PI + 2.0 * s - SQRT_2PI * q) + beta
                - d_sq_over_theta
        }
        (Regime::Signed, Side::Lower) => {
            (1.0 - beta) / SQRT_2PI * s + theta_hat - d_sq_over_theta
        }
        (_, Side::Upper) => {
            let inner = (1.0 - eps.eps1_g)
                * (theta_hat + s_weight * (1.0 - beta) / SQRT_2PI * s)
                - (1.0 + eps.eps3_g).powi(2) * d_sq_over_theta;
            let prefactor = 1.0 / (1.0 + eps.eps1_m).powi(2);
            if eps.eps3_m == 0.0 {
                prefactor * inner
            } else {
                if inner < 0.0 {
                    return Err(Error::domain(
                        "alpha_bound",
                        inner,
                        "negative measurement term under the square root",
                    ));
                }
                prefactor * (inner.sqrt() - eps.eps3_m).max(0.0).powi(2)
            }
        }
    };
    Ok(value)
}

/// Pointwise [`alpha_w`] over a strictly increasing grid of `β` values.
pub fn threshold_curve(regime: Regime, betas: &[f64]) -> Result<Vec<ThresholdPoint>> {
    if betas.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Precondition("beta grid must be strictly increasing".into()));
    }
    betas
        .iter()
        .map(|&b| {
            alpha_w(regime, b).map_err(|e| match e {
                Error::Bracket { .. } | Error::Precondition(_) | Error::Domain { .. } => {
                    Error::Precondition(format!("beta = {b}: {e}"))
                }
                other => other,
            })
        })
        .collect()
}

/// `steps` equally spaced values from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..steps)
            .map(|i| {
                if i == steps - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (steps - 1) as f64
                }
            })
            .collect(),
    }
}
