//! Null-space certificates for a fixed support and sign pattern.
//!
//! For a matrix `A` and a pattern with support `S` and signs `s`, ℓ1
//! recovery of every vector with that pattern hinges on the sign of
//!
//! ```text
//! τ(A) = min { f(w) : A w = 0, ‖w‖₂ ≤ 1 }
//! f(w) = Σ_{i∉S} |w_i| + Σ_{i∈S} s_i w_i            (general)
//! f(w) = Σ_i w_i,  with w_i ≥ 0 for i ∉ S            (signed)
//! ```
//!
//! `τ < 0` exhibits a null vector that beats every vector on the pattern
//! and yields an explicit recovery failure; `f > 0` on all nonzero null
//! vectors guarantees recovery. Minimizing over `w` in closed form gives the
//! dual distance problem `τ(A) = −min { ‖z − Aᵀν‖₂ : z ∈ Z, ν }` over a box
//! `Z` that fixes `z_i = s_i` on the support.
//!
//! Everything is computed in the caller's coordinates. [`canonicalize`]
//! exposes the permutation and column flips that map a pattern onto the
//! standard layout (zeros first, support last with sign −1 in the general
//! regime and +1 in the signed regime), under which τ is unchanged.

mod dual;
mod primal;

pub use dual::{tau_dual, DUAL_MAX_ITER, SIGNED_FLOOR};
pub use primal::{sphere_minimum, tau_primal_oracle, ORACLE_MAX_N, SPHERE_RESTARTS};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, norm_inf, DenseMatrix};
use crate::Regime;

/// Default classification tolerance.
pub const NSP_TOL: f64 = 1e-6;
/// Objective margin a witness must clear to yield a counterexample.
pub const STRICT_TOL: f64 = 1e-9;

const NULL_TOL: f64 = 1e-8;
const UNIT_TOL: f64 = 1e-10;
const OBJECTIVE_TOL: f64 = 1e-6;
const BOX_TOL: f64 = 1e-12;

/// Support location and signs of the vectors under study.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportPattern {
    n: usize,
    support: Vec<usize>,
    signs: Vec<f64>,
    regime: Regime,
}

impl SupportPattern {
    /// `support` holds 0-based indices; `signs[i]` belongs to `support[i]`.
    pub fn new(n: usize, support: Vec<usize>, signs: Vec<f64>, regime: Regime) -> Result<Self> {
        let k = support.len();
        if k == 0 || k >= n {
            return Err(Error::Input(format!("need 1 <= k < n, got k = {k}, n = {n}")));
        }
        if signs.len() != k {
            return Err(Error::Input(format!(
                "{} signs given for {k} support indices",
                signs.len()
            )));
        }
        let mut seen = vec![false; n];
        for &i in &support {
            if i >= n {
                return Err(Error::Input(format!("support index {i} out of range for n = {n}")));
            }
            if seen[i] {
                return Err(Error::Input(format!("support index {i} repeated")));
            }
            seen[i] = true;
        }
        for &s in &signs {
            if s != 1.0 && s != -1.0 {
                return Err(Error::Input(format!("sign {s} is not +1 or -1")));
            }
            if regime == Regime::Signed && s != 1.0 {
                return Err(Error::Input("signed regime requires all signs +1".into()));
            }
        }
        Ok(SupportPattern {
            n,
            support,
            signs,
            regime,
        })
    }

    /// The standard layout: support `{n−k, …, n−1}` with sign −1 (general)
    /// or +1 (signed).
    pub fn canonical(n: usize, k: usize, regime: Regime) -> Result<Self> {
        let sign = match regime {
            Regime::General => -1.0,
            Regime::Signed => 1.0,
        };
        SupportPattern::new(n, (n.saturating_sub(k)..n).collect(), vec![sign; k], regime)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.support.len()
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn signs(&self) -> &[f64] {
        &self.signs
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    /// Length-`n` vector carrying the sign on the support and 0 elsewhere.
    pub fn sign_vector(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n];
        for (&i, &v) in self.support.iter().zip(&self.signs) {
            s[i] = v;
        }
        s
    }

    /// Indicator of the support.
    pub fn mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.n];
        for &i in &self.support {
            m[i] = true;
        }
        m
    }

    /// The objective `f(w)` of the primal problem. In the signed regime the
    /// cone constraint is not checked here.
    pub fn objective(&self, w: &[f64]) -> f64 {
        assert_eq!(w.len(), self.n, "dimension mismatch");
        match self.regime {
            Regime::General => {
                let s = self.sign_vector();
                w.iter()
                    .zip(&s)
                    .map(|(&wi, &si)| if si == 0.0 { wi.abs() } else { si * wi })
                    .sum()
            }
            Regime::Signed => w.iter().sum(),
        }
    }

    /// Largest violation of `w_i ≥ 0` off the support (0 in the general
    /// regime).
    pub fn cone_violation(&self, w: &[f64]) -> f64 {
        if self.regime == Regime::General {
            return 0.0;
        }
        let mask = self.mask();
        w.iter()
            .zip(&mask)
            .filter(|(_, &on)| !on)
            .fold(0.0_f64, |m, (&wi, _)| m.max(-wi))
    }

    fn check_matrix(&self, a: &DenseMatrix) -> Result<()> {
        if a.cols() != self.n {
            return Err(Error::Input(format!(
                "matrix has {} columns but the pattern has n = {}",
                a.cols(),
                self.n
            )));
        }
        Ok(())
    }
}

/// Coordinate map onto the standard layout.
///
/// Column `j` of the canonical matrix is `flips[j] · A[:, perm[j]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Canonical {
    pub perm: Vec<usize>,
    pub flips: Vec<f64>,
}

impl Canonical {
    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(j, &p)| j == p) && self.flips.iter().all(|&f| f == 1.0)
    }

    pub fn apply_matrix(&self, a: &DenseMatrix) -> DenseMatrix {
        let mut out = a.select_columns(&self.perm);
        for i in 0..out.rows() {
            for (j, &f) in self.flips.iter().enumerate() {
                out[(i, j)] *= f;
            }
        }
        out
    }

    /// Maps a vector from the caller's coordinates to canonical ones.
    pub fn apply_vector(&self, v: &[f64]) -> Vec<f64> {
        self.perm
            .iter()
            .zip(&self.flips)
            .map(|(&p, &f)| f * v[p])
            .collect()
    }
}

/// Permutation (off-support coordinates first, support last, each in
/// increasing order) and column flips turning `pattern` into
/// [`SupportPattern::canonical`]. Flips and permutations of Gaussian columns
/// leave the Gaussian distribution unchanged.
pub fn canonicalize(pattern: &SupportPattern) -> Canonical {
    let mask = pattern.mask();
    let s = pattern.sign_vector();
    let mut perm: Vec<usize> = (0..pattern.n).filter(|&i| !mask[i]).collect();
    let mut on: Vec<usize> = (0..pattern.n).filter(|&i| mask[i]).collect();
    on.sort_unstable();
    perm.extend(on);
    let flips = perm
        .iter()
        .map(|&p| match (mask[p], pattern.regime) {
            (true, Regime::General) => -s[p],
            _ => 1.0,
        })
        .collect();
    Canonical { perm, flips }
}

/// Dual and primal witnesses for τ(A).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauCertificate {
    pub tau: f64,
    /// Point of `Z` closest to the row space.
    pub z: Vec<f64>,
    /// Coefficients with `Aᵀν` the row-space point closest to `z`.
    pub nu: Vec<f64>,
    /// Unit null vector attaining τ, absent when τ is numerically 0.
    pub w: Option<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
    /// `|τ − f(w)|`, 0 when `w` is absent.
    pub gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    CertifiedFailure,
    CertifiedSuccess,
    Inconclusive,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::CertifiedFailure => "certified_failure",
            Verdict::CertifiedSuccess => "certified_success",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NspVerdict {
    pub verdict: Verdict,
    pub tau: f64,
    pub tol: f64,
    /// Estimated minimum of `f` over unit null vectors; computed only when
    /// τ is within the tolerance band.
    pub sphere_min: Option<f64>,
    /// The dual certificate, absent when the null space is trivial.
    pub certificate: Option<TauCertificate>,
}

/// Classify recovery on `pattern` for the matrix `a`.
///
/// Failure needs both `τ < −tol` from the dual and a null vector with
/// `f(w) < −tol`; success needs `|τ| ≤ tol` and an estimated sphere minimum
/// above `tol`, since `τ = 0` alone allows ties. A square full-rank matrix
/// has no nonzero null vectors and always succeeds.
pub fn classify_nsp(a: &DenseMatrix, pattern: &SupportPattern, tol: f64) -> Result<NspVerdict> {
    pattern.check_matrix(a)?;
    if a.rows() > a.cols() {
        return Err(Error::Precondition(format!(
            "need m <= n, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if a.rows() == a.cols() {
        // Full rank is confirmed by the factorization.
        crate::linalg::RowProjector::new(a)?;
        return Ok(NspVerdict {
            verdict: Verdict::CertifiedSuccess,
            tau: 0.0,
            tol,
            sphere_min: None,
            certificate: None,
        });
    }
    let cert = tau_dual(a, pattern)?;
    let witness_value = cert.w.as_ref().and_then(|w| {
        (pattern.cone_violation(w) <= 1e-12).then(|| pattern.objective(w))
    });
    let (verdict, sphere_min) = if cert.tau < -tol && witness_value.is_some_and(|v| v < -tol) {
        (Verdict::CertifiedFailure, None)
    } else if cert.tau.abs() <= tol {
        let sm = sphere_minimum(a, pattern)?;
        let v = if sm > tol {
            Verdict::CertifiedSuccess
        } else {
            Verdict::Inconclusive
        };
        (v, Some(sm))
    } else {
        (Verdict::Inconclusive, None)
    };
    Ok(NspVerdict {
        verdict,
        tau: cert.tau,
        tol,
        sphere_min,
        certificate: Some(cert),
    })
}

/// A vector on `pattern` that ℓ1 minimization fails to recover, built from
/// a null vector `w` with `f(w) < 0`.
///
/// Support coordinates where `w` opposes the pattern sign are set to `−w_j`
/// so that `x₀ + w` vanishes there; the remaining support coordinates get
/// the pattern sign with magnitude `max(1, ‖w‖_∞)`. Then
/// `‖x₀ + w‖₁ − ‖x₀‖₁ = f(w) < 0` while `A(x₀ + w) = A x₀`.
pub fn construct_counterexample(w: &[f64], pattern: &SupportPattern) -> Result<Vec<f64>> {
    if w.len() != pattern.n {
        return Err(Error::Input("witness length differs from n".into()));
    }
    let value = pattern.objective(w);
    if !(value < -STRICT_TOL) {
        return Err(Error::Precondition(format!(
            "witness objective {value} is not strictly negative"
        )));
    }
    if pattern.cone_violation(w) > 1e-12 {
        return Err(Error::Precondition(
            "witness is negative off the support in the signed regime".into(),
        ));
    }
    let big = norm_inf(w).max(1.0);
    let mut x = vec![0.0; pattern.n];
    for (&j, &s) in pattern.support.iter().zip(&pattern.signs) {
        x[j] = if s * w[j] < 0.0 { -w[j] } else { s * big };
    }
    Ok(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertFailure {
    NotConverged,
    ZOutOfBox,
    WitnessNotInNullSpace,
    WitnessNotUnit,
    WitnessSignViolation,
    ObjectiveMismatch,
    DualMismatch,
    DimensionMismatch,
}

impl std::fmt::Display for CertFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CertFailure::NotConverged => "not converged",
            CertFailure::ZOutOfBox => "z out of box",
            CertFailure::WitnessNotInNullSpace => "witness not in null space",
            CertFailure::WitnessNotUnit => "witness not unit",
            CertFailure::WitnessSignViolation => "witness sign violation",
            CertFailure::ObjectiveMismatch => "objective mismatch",
            CertFailure::DualMismatch => "dual mismatch",
            CertFailure::DimensionMismatch => "dimension mismatch",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CertCheck {
    pub ok: bool,
    pub reason: Option<CertFailure>,
}

impl CertCheck {
    fn pass() -> Self {
        CertCheck {
            ok: true,
            reason: None,
        }
    }

    fn fail(reason: CertFailure) -> Self {
        CertCheck {
            ok: false,
            reason: Some(reason),
        }
    }
}

/// Independent check of a certificate against `a` and `pattern`.
pub fn verify_certificate(
    a: &DenseMatrix,
    pattern: &SupportPattern,
    cert: &TauCertificate,
) -> CertCheck {
    let n = pattern.n;
    if a.cols() != n || cert.z.len() != n || cert.nu.len() != a.rows() {
        return CertCheck::fail(CertFailure::DimensionMismatch);
    }
    if !cert.converged {
        return CertCheck::fail(CertFailure::NotConverged);
    }
    let s = pattern.sign_vector();
    let mask = pattern.mask();
    for i in 0..n {
        let zi = cert.z[i];
        let inside = if mask[i] {
            let target = match pattern.regime {
                Regime::General => s[i],
                Regime::Signed => 1.0,
            };
            (zi - target).abs() <= BOX_TOL
        } else {
            match pattern.regime {
                Regime::General => zi.abs() <= 1.0 + BOX_TOL,
                Regime::Signed => zi <= 1.0 + BOX_TOL && zi.is_finite(),
            }
        };
        if !inside {
            return CertCheck::fail(CertFailure::ZOutOfBox);
        }
    }
    let atnu = a.matvec_t(&cert.nu);
    let diff: Vec<f64> = cert.z.iter().zip(&atnu).map(|(z, r)| z - r).collect();
    let dist = norm2(&diff);
    if (dist + cert.tau).abs() > 1e-8 * dist.max(1.0) {
        return CertCheck::fail(CertFailure::DualMismatch);
    }
    match &cert.w {
        Some(w) => {
            if w.len() != n {
                return CertCheck::fail(CertFailure::DimensionMismatch);
            }
            if a.rows() > 0 && norm_inf(&a.matvec(w)) > NULL_TOL {
                return CertCheck::fail(CertFailure::WitnessNotInNullSpace);
            }
            if (dot(w, w).sqrt() - 1.0).abs() > UNIT_TOL {
                return CertCheck::fail(CertFailure::WitnessNotUnit);
            }
            if pattern.cone_violation(w) > 1e-9 {
                return CertCheck::fail(CertFailure::WitnessSignViolation);
            }
            if (pattern.objective(w) - cert.tau).abs() > OBJECTIVE_TOL {
                return CertCheck::fail(CertFailure::ObjectiveMismatch);
            }
        }
        None => {
            if cert.tau.abs() > 1e-9 {
                return CertCheck::fail(CertFailure::ObjectiveMismatch);
            }
        }
    }
    CertCheck::pass()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn empty(n: usize) -> DenseMatrix {
        DenseMatrix::new(0, n, Vec::new()).unwrap()
    }

    #[test]
    fn pattern_validation() {
        assert!(SupportPattern::new(3, vec![0], vec![1.0], Regime::General).is_ok());
        assert!(SupportPattern::new(3, vec![3], vec![1.0], Regime::General).is_err());
        assert!(SupportPattern::new(3, vec![0, 0], vec![1.0, 1.0], Regime::General).is_err());
        assert!(SupportPattern::new(2, vec![0, 1], vec![1.0, 1.0], Regime::General).is_err());
        assert!(SupportPattern::new(3, vec![0], vec![-1.0], Regime::Signed).is_err());
        assert!(SupportPattern::new(3, vec![0], vec![0.5], Regime::General).is_err());
    }

    #[test]
    fn canonical_maps() {
        for regime in [Regime::General, Regime::Signed] {
            let p = SupportPattern::canonical(5, 2, regime).unwrap();
            assert!(canonicalize(&p).is_identity());
        }
        let p = SupportPattern::new(3, vec![0], vec![1.0], Regime::General).unwrap();
        let c = canonicalize(&p);
        assert_eq!(c.perm, vec![1, 2, 0]);
        assert_eq!(c.flips, vec![1.0, 1.0, -1.0]);
    }

    #[test]
    fn counterexample_small_cases() {
        let p = SupportPattern::canonical(2, 1, Regime::General).unwrap();
        assert_eq!(construct_counterexample(&[0.0, 1.0], &p).unwrap(), vec![0.0, -1.0]);
        let p = SupportPattern::canonical(2, 1, Regime::Signed).unwrap();
        assert_eq!(construct_counterexample(&[0.0, -1.0], &p).unwrap(), vec![0.0, 1.0]);
        assert!(construct_counterexample(&[0.0, 1.0], &p).is_err());
    }

    #[test]
    fn hand_certificate_verifies_and_corruption_is_caught() {
        let a = empty(2);
        let p = SupportPattern::canonical(2, 1, Regime::General).unwrap();
        let cert = TauCertificate {
            tau: -1.0,
            z: vec![0.0, -1.0],
            nu: vec![],
            w: Some(vec![0.0, 1.0]),
            iterations: 1,
            converged: true,
            gap: 0.0,
        };
        assert!(verify_certificate(&a, &p, &cert).ok);
        let mut bad = cert.clone();
        bad.z[0] = 1.5;
        let check = verify_certificate(&a, &p, &bad);
        assert_eq!(check.reason, Some(CertFailure::ZOutOfBox));
        assert_eq!(check.reason.unwrap().to_string(), "z out of box");
    }

    #[test]
    fn square_matrix_is_success() {
        let p = SupportPattern::canonical(3, 1, Regime::General).unwrap();
        let v = classify_nsp(&DenseMatrix::identity(3), &p, NSP_TOL).unwrap();
        assert_eq!(v.verdict, Verdict::CertifiedSuccess);
    }

    #[test]
    fn tie_is_inconclusive() {
        let a = DenseMatrix::from_rows(&[vec![1.0, -1.0]]).unwrap();
        let p = SupportPattern::canonical(2, 1, Regime::General).unwrap();
        let v = classify_nsp(&a, &p, NSP_TOL).unwrap();
        assert_eq!(v.verdict, Verdict::Inconclusive);
        assert!(v.tau.abs() <= NSP_TOL);
    }
}
