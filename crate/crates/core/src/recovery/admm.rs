use crate::error::Result;
use crate::linalg::{cholesky_spd, dot, least_squares, norm1, norm2, DenseMatrix, RowProjector};
use crate::Regime;

use super::BpSolution;

pub const ADMM_RHO: f64 = 1.0;
pub const ADMM_OVER_RELAXATION: f64 = 1.8;
pub const ADMM_TOL: f64 = 1e-9;
pub const ADMM_MAX_ITER: usize = 50_000;

const CERT_EVERY: usize = 25;
const CERT_GATE: f64 = 1e-4;
const KKT_TOL: f64 = 1e-7;
const CERT_THRESHOLDS: [f64; 5] = [0.0, 1e-9, 1e-7, 1e-5, 1e-3];

/// Operator-splitting basis-pursuit solver for a fixed matrix.
///
/// Iterates, with `Π` the projection onto `{x : A x = y}`,
///
/// ```text
/// x  ← Π(z − u)
/// x̃  ← a·x + (1 − a)·z
/// z  ← shrink(x̃ + u)      soft threshold at 1/ρ, or shift by 1/ρ and clip at 0
/// u  ← u + x̃ − z
/// ```
///
/// with `ρ = 1` and over-relaxation `a = 1.8`. The projection is
/// `Π(v) = P v + Aᵀ(AAᵀ)⁻¹ y` with `P = I − Aᵀ(AAᵀ)⁻¹A` built once from the
/// Cholesky factor of `AAᵀ`, so one solver serves any number of right-hand
/// sides.
///
/// The iteration stops when both residuals fall below `1e−9` (relative), or
/// earlier once a support read off `z`, re-solved exactly by least squares,
/// comes with a dual certificate of optimality (see `certify`). Without a
/// certificate the final support is still re-solved when that keeps the
/// sign pattern; otherwise the last iterate is returned.
#[derive(Debug, Clone)]
pub struct BpSolver {
    regime: Regime,
    projector: RowProjector,
    null_proj: DenseMatrix,
    pub max_iter: usize,
    pub tol: f64,
}

impl BpSolver {
    pub fn new(a: &DenseMatrix, regime: Regime) -> Result<Self> {
        let projector = RowProjector::new(a)?;
        let null_proj = projector.dense_null_projector();
        Ok(BpSolver {
            regime,
            projector,
            null_proj,
            max_iter: ADMM_MAX_ITER,
            tol: ADMM_TOL,
        })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        self.projector.matrix()
    }

    pub fn solve(&self, y: &[f64]) -> Result<BpSolution> {
        self.solve_until(y, |_| false).map(|(sol, _)| sol)
    }

    /// [`solve`](Self::solve) with an early exit. Every few iterations the
    /// current `x` iterate, which satisfies `A x = y`, is passed to `stop`,
    /// and less often so is the least-squares solution on the support of
    /// `z` when it is feasible. Returning `true` ends the run with
    /// `converged = false`; the flag in the result reports whether that
    /// happened.
    pub fn solve_until<F>(&self, y: &[f64], stop: F) -> Result<(BpSolution, bool)>
    where
        F: Fn(&[f64]) -> bool,
    {
        let a = self.projector.matrix();
        let n = a.cols();
        assert_eq!(y.len(), a.rows(), "y length mismatch");
        let x_ls = self.projector.least_norm(y);
        let relax = ADMM_OVER_RELAXATION;
        let y_scale = norm2(y).max(1.0);

        let rho = ADMM_RHO;
        let mut z = vec![0.0; n];
        let mut u = vec![0.0; n];
        let mut v = vec![0.0; n];
        let mut x = vec![0.0; n];
        let mut converged = false;
        let kappa = 1.0 / rho;
        let mut certified: Option<Vec<f64>> = None;
        let mut interrupted = false;
        let mut iterations = 0;

        for it in 1..=self.max_iter {
            iterations = it;
            for i in 0..n {
                v[i] = z[i] - u[i];
            }
            for i in 0..n {
                x[i] = dot(self.null_proj.row(i), &v) + x_ls[i];
            }
            let mut r2 = 0.0;
            let mut s2 = 0.0;
            let mut x2 = 0.0;
            let mut z2 = 0.0;
            let mut u2 = 0.0;
            for i in 0..n {
                let xh = relax * x[i] + (1.0 - relax) * z[i];
                let w = xh + u[i];
                let z_new = match self.regime {
                    Regime::General => {
                        if w > kappa {
                            w - kappa
                        } else if w < -kappa {
                            w + kappa
                        } else {
                            0.0
                        }
                    }
                    Regime::Signed => (w - kappa).max(0.0),
                };
                u[i] = w - z_new;
                s2 += (z_new - z[i]).powi(2);
                r2 += (x[i] - z_new).powi(2);
                z[i] = z_new;
                x2 += x[i] * x[i];
                z2 += z_new * z_new;
                u2 += u[i] * u[i];
            }
            let (r, s) = (r2.sqrt(), rho * s2.sqrt());
            let pri_scale = x2.sqrt().max(z2.sqrt()).max(1.0);
            let dual_scale = (rho * u2.sqrt()).max(1.0);
            if r <= self.tol * pri_scale && s <= self.tol * dual_scale {
                converged = true;
                break;
            }
            if it % CERT_EVERY == 0 {
                let hit = stop(&x)
                    || (it % (4 * CERT_EVERY) == 0
                        && self.support_solve(&z, y).is_some_and(|p| stop(&p)));
                if hit {
                    interrupted = true;
                    break;
                }
            }
            if it % CERT_EVERY == 0 && r <= CERT_GATE * pri_scale && s <= CERT_GATE * dual_scale {
                if let Some(p) = self.certify(&z, &u, rho, y) {
                    certified = Some(p);
                    converged = true;
                    break;
                }
            }
        }
        if !converged && !interrupted {
            if let Some(p) = self.certify(&z, &u, rho, y) {
                certified = Some(p);
                converged = true;
            }
        }

        let x_hat = certified
            .or_else(|| self.polish(&z, y))
            .unwrap_or_else(|| {
                if self.residual(&z, y) <= 1e-8 * y_scale {
                    z.clone()
                } else {
                    x.clone()
                }
            });
        let feas_residual = self.residual(&x_hat, y);
        let sign_ok = match self.regime {
            Regime::General => true,
            Regime::Signed => x_hat.iter().all(|&v| v >= -1e-10),
        };
        let sol = BpSolution {
            objective: norm1(&x_hat),
            feas_residual,
            iterations,
            converged: converged && feas_residual <= 1e-8 * y_scale && sign_ok,
            x_hat,
        };
        Ok((sol, interrupted))
    }

    fn residual(&self, x: &[f64], y: &[f64]) -> f64 {
        let ax = self.projector.matrix().matvec(x);
        ax.iter()
            .zip(y)
            .map(|(p, q)| (p - q).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Least-squares solution of `A x = y` on the support of `z`, if it is
    /// exactly feasible and respects the sign constraint.
    fn support_solve(&self, z: &[f64], y: &[f64]) -> Option<Vec<f64>> {
        let support: Vec<usize> = (0..z.len()).filter(|&i| z[i] != 0.0).collect();
        self.solve_on(&support, y)
    }

    fn solve_on(&self, support: &[usize], y: &[f64]) -> Option<Vec<f64>> {
        let a = self.projector.matrix();
        if support.is_empty() || support.len() > a.rows() {
            return None;
        }
        let coef = least_squares(&a.select_columns(support), y).ok()?;
        let mut out = vec![0.0; a.cols()];
        for (&i, &c) in support.iter().zip(&coef) {
            if c == 0.0 || (self.regime == Regime::Signed && c < 0.0) {
                return None;
            }
            out[i] = c;
        }
        (self.residual(&out, y) <= 1e-10 * norm2(y).max(1.0)).then_some(out)
    }

    /// A point with an optimality certificate, if one can be read off the
    /// iterate.
    ///
    /// Candidate supports are the entries of `z` above a few relative
    /// thresholds. For a feasible least-squares point `p` on such a support
    /// `S`, the multiplier estimate `ν₀ = ρ (AAᵀ)⁻¹ A u` is projected onto
    /// `{ν : A_Sᵀ ν = sign(p_S)}`; `p` is optimal when the resulting
    /// `q = Aᵀν` also satisfies `|q_i| ≤ 1` (general) or `q_i ≤ 1` (signed)
    /// off `S`, up to `1e−7`.
    fn certify(&self, z: &[f64], u: &[f64], rho: f64, y: &[f64]) -> Option<Vec<f64>> {
        let a = self.projector.matrix();
        let z_max = z.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if z_max == 0.0 {
            return None;
        }
        let nu0: Vec<f64> = self
            .projector
            .coefficients(u)
            .iter()
            .map(|v| rho * v)
            .collect();
        let mut tried: Vec<Vec<usize>> = Vec::new();
        for &delta in &CERT_THRESHOLDS {
            let support: Vec<usize> = (0..z.len())
                .filter(|&i| z[i].abs() > delta * z_max)
                .collect();
            if tried.contains(&support) {
                continue;
            }
            tried.push(support.clone());
            let Some(p) = self.solve_on(&support, y) else {
                continue;
            };
            let a_s = a.select_columns(&support);
            let target: Vec<f64> = support.iter().map(|&i| p[i].signum()).collect();
            let mut resid = a_s.matvec_t(&nu0);
            for (r, t) in resid.iter_mut().zip(&target) {
                *r -= t;
            }
            let Ok(gram) = cholesky_spd(&a_s.transpose().matmul(&a_s)) else {
                continue;
            };
            let corr = a_s.matvec(&gram.solve(&resid));
            let nu: Vec<f64> = nu0.iter().zip(&corr).map(|(a, b)| a - b).collect();
            let q = a.matvec_t(&nu);
            let ok = (0..q.len()).all(|i| {
                if p[i] != 0.0 {
                    return true;
                }
                match self.regime {
                    Regime::General => q[i].abs() <= 1.0 + KKT_TOL,
                    Regime::Signed => q[i] <= 1.0 + KKT_TOL,
                }
            });
            if ok {
                return Some(p);
            }
        }
        None
    }

    /// Exact re-solve on the support of `z`, accepted only if it is
    /// consistent with the iterate.
    fn polish(&self, z: &[f64], y: &[f64]) -> Option<Vec<f64>> {
        let a = self.projector.matrix();
        let support: Vec<usize> = (0..z.len()).filter(|&i| z[i] != 0.0).collect();
        let y_scale = norm2(y).max(1.0);
        if support.is_empty() {
            return (norm2(y) <= 1e-12 * y_scale).then(|| vec![0.0; z.len()]);
        }
        if support.len() > a.rows() {
            return None;
        }
        let sub = a.select_columns(&support);
        let coef = least_squares(&sub, y).ok()?;
        let z_scale = z.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        for (&i, &c) in support.iter().zip(&coef) {
            if (c - z[i]).abs() > 1e-6 * z_scale || c * z[i] < 0.0 {
                return None;
            }
        }
        let mut out = vec![0.0; z.len()];
        for (&i, &c) in support.iter().zip(&coef) {
            out[i] = c;
        }
        if self.residual(&out, y) > 1e-10 * y_scale {
            return None;
        }
        if norm1(&out) > norm1(z) + 1e-9 * z_scale {
            return None;
        }
        Some(out)
    }
}
