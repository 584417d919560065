use crate::error::{Error, Result};
use crate::linalg::{
    cholesky_spd, dot, least_squares, norm2, nullspace_basis, DenseMatrix, NullBasis,
};
use crate::rng::Stream;
use crate::Regime;

use super::SupportPattern;

/// Largest `n` accepted by the primal routines.
pub const ORACLE_MAX_N: usize = 200;
/// Random restarts of the sphere search.
pub const SPHERE_RESTARTS: usize = 20;

const ADMM_ITER: usize = 20_000;
const ADMM_TOL: f64 = 1e-11;
const SPHERE_STEPS: usize = 1_500;
const SPHERE_SEED: u64 = 0x5eed_0f_7a0;
const FACE_THRESHOLDS: [f64; 8] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-10];
const FACE_ROUNDS: usize = 6;
const CONE_TOL: f64 = 1e-12;

struct Setup {
    nb: NullBasis,
    /// Off-support rows of the null basis.
    off: Vec<usize>,
    pattern: SupportPattern,
}

impl Setup {
    fn new(a: &DenseMatrix, pattern: &SupportPattern) -> Result<Self> {
        pattern.check_matrix(a)?;
        let (m, n) = (a.rows(), a.cols());
        if n > ORACLE_MAX_N {
            return Err(Error::Precondition(format!(
                "primal oracle supports n <= {ORACLE_MAX_N}, got {n}"
            )));
        }
        if m >= n {
            return Err(Error::Precondition(format!("need m < n, got {m}x{n}")));
        }
        let nb = nullspace_basis(a)?;
        let mask = pattern.mask();
        let off = (0..n).filter(|&i| !mask[i]).collect();
        Ok(Setup {
            nb,
            off,
            pattern: pattern.clone(),
        })
    }

    /// `f(w)` for unit null vectors `w`, `+∞` outside the signed cone.
    fn value(&self, w: &[f64]) -> f64 {
        if self.pattern.cone_violation(w) > CONE_TOL {
            return f64::INFINITY;
        }
        self.pattern.objective(w)
    }

    /// Linear coefficients of `f` on the face where the sign of `w` is
    /// fixed and `zero` coordinates vanish.
    fn face_gradient(&self, w: &[f64], zero: &[bool]) -> Vec<f64> {
        let s = self.pattern.sign_vector();
        (0..w.len())
            .map(|i| match self.pattern.regime() {
                Regime::Signed => {
                    if zero[i] {
                        0.0
                    } else {
                        1.0
                    }
                }
                Regime::General => {
                    if s[i] != 0.0 {
                        s[i]
                    } else if zero[i] {
                        0.0
                    } else {
                        w[i].signum()
                    }
                }
            })
            .collect()
    }

    /// Minimizer of the face-linear objective `gᵀw` over unit null vectors
    /// with `w_i = 0` on `zero`: `−P_F g / ‖P_F g‖`.
    fn face_minimizer(&self, g: &[f64], zero: &[usize]) -> Option<Vec<f64>> {
        let d = self.nb.dim();
        if zero.len() >= d {
            return None;
        }
        let gv = self.nb.coords(g);
        let p = if zero.is_empty() {
            gv
        } else {
            let ct = self.nb.basis.select_rows(zero).transpose();
            let lambda = least_squares(&ct, &gv).ok()?;
            let back = ct.matvec(&lambda);
            gv.iter().zip(&back).map(|(a, b)| a - b).collect()
        };
        let pn = norm2(&p);
        if pn <= 1e-12 {
            return None;
        }
        let v: Vec<f64> = p.iter().map(|x| -x / pn).collect();
        Some(self.nb.lift(&v))
    }

    /// Repeated face identification starting from `w`; returns the best
    /// value found among the visited unit vectors.
    ///
    /// `w` must lie in the null space. `hint` optionally names an extra
    /// zero pattern to try first.
    fn polish(&self, w: &[f64], hint: Option<&[bool]>) -> (f64, Vec<f64>) {
        let wn = norm2(w);
        if wn == 0.0 {
            return (f64::INFINITY, w.to_vec());
        }
        let start: Vec<f64> = w.iter().map(|x| x / wn).collect();
        let mut best = (self.value(&start), start.clone());
        let mask = self.pattern.mask();
        let attempts = hint
            .map(|_| f64::NAN)
            .into_iter()
            .chain(FACE_THRESHOLDS.iter().copied());
        for delta in attempts {
            let mut cur = start.clone();
            for round in 0..FACE_ROUNDS {
                let scale = cur.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                let zero_mask: Vec<bool> = match hint {
                    Some(h) if delta.is_nan() && round == 0 => h.to_vec(),
                    _ => {
                        let delta = if delta.is_nan() { 1e-8 } else { delta };
                        (0..cur.len())
                            .map(|i| !mask[i] && cur[i].abs() <= delta * scale)
                            .collect()
                    }
                };
                let zero: Vec<usize> = (0..cur.len()).filter(|&i| zero_mask[i]).collect();
                let g = self.face_gradient(&cur, &zero_mask);
                let Some(next) = self.face_minimizer(&g, &zero) else {
                    break;
                };
                let v = self.value(&next);
                if v < best.0 {
                    best = (v, next.clone());
                }
                if next
                    .iter()
                    .zip(&cur)
                    .all(|(a, b)| (a - b).abs() <= 1e-14)
                {
                    break;
                }
                cur = next;
            }
        }
        best
    }
}

/// τ(A) from the primal side: `min f(w)` over `w ∈ null(A)`, `‖w‖₂ ≤ 1`.
///
/// Writes `w = N v` over an orthonormal null basis and runs ADMM on the
/// splitting `u = (N v)_off`, `s = v` with `‖s‖ ≤ 1`, so that every
/// subproblem is a soft threshold, a ball projection or a fixed `d × d`
/// Cholesky solve. The iterate then seeds a face search: the zero pattern
/// off the support is read off at a range of thresholds, the objective is
/// linear on that face, and its exact unit minimizer is evaluated. Every
/// candidate is a feasible unit null vector, so the smallest value found is
/// an upper bound on the sphere minimum; the result is `min(0, that)`.
pub fn tau_primal_oracle(a: &DenseMatrix, pattern: &SupportPattern) -> Result<f64> {
    let setup = Setup::new(a, pattern)?;
    let nb = &setup.nb;
    let d = nb.dim();
    let n = pattern.n();
    let off = &setup.off;
    let h = nb.basis.select_rows(off);
    let mask = pattern.mask();
    let on: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
    let n_on = nb.basis.select_rows(&on);
    let s_on: Vec<f64> = match pattern.regime() {
        Regime::General => on.iter().map(|&i| pattern.sign_vector()[i]).collect(),
        Regime::Signed => vec![1.0; on.len()],
    };
    let c = n_on.matvec_t(&s_on);

    let rho = 1.0;
    // HᵀH + I
    let mut kmat = h.transpose().matmul(&h);
    for i in 0..d {
        kmat[(i, i)] += 1.0;
    }
    let chol = cholesky_spd(&kmat)?;

    let off_n = off.len();
    let mut u = vec![0.0; off_n];
    let mut s = vec![0.0; d];
    let mut lam = vec![0.0; off_n];
    let mut mu = vec![0.0; d];
    for _ in 0..ADMM_ITER {
        let ul: Vec<f64> = u.iter().zip(&lam).map(|(a, b)| a - b).collect();
        let mut rhs = h.matvec_t(&ul);
        for i in 0..d {
            rhs[i] += s[i] - mu[i] - c[i] / rho;
        }
        let v = chol.solve(&rhs);
        let hv = h.matvec(&v);
        let mut r2 = 0.0;
        let mut d2 = 0.0;
        for i in 0..off_n {
            let t = hv[i] + lam[i];
            let un = match pattern.regime() {
                Regime::General => {
                    if t > 1.0 / rho {
                        t - 1.0 / rho
                    } else if t < -1.0 / rho {
                        t + 1.0 / rho
                    } else {
                        0.0
                    }
                }
                Regime::Signed => (t - 1.0 / rho).max(0.0),
            };
            d2 += (un - u[i]).powi(2);
            u[i] = un;
            lam[i] += hv[i] - un;
            r2 += (hv[i] - un).powi(2);
        }
        let vm: Vec<f64> = v.iter().zip(&mu).map(|(a, b)| a + b).collect();
        let vn = norm2(&vm);
        let s_new: Vec<f64> = if vn > 1.0 {
            vm.iter().map(|x| x / vn).collect()
        } else {
            vm
        };
        for i in 0..d {
            d2 += (s_new[i] - s[i]).powi(2);
            mu[i] += v[i] - s_new[i];
            r2 += (v[i] - s_new[i]).powi(2);
        }
        s = s_new;
        if r2.sqrt() <= ADMM_TOL && d2.sqrt() <= ADMM_TOL {
            break;
        }
    }

    let w = nb.lift(&s);
    // The thresholded copy u carries exact zeros; offer them as a face.
    let mut hint = vec![false; n];
    for (j, &i) in off.iter().enumerate() {
        hint[i] = u[j] == 0.0;
    }
    let (best, _) = setup.polish(&w, Some(&hint));
    Ok(best.min(0.0))
}

/// Estimated minimum of `f` over unit vectors of `null(A)` (within the
/// signed cone). `+∞` when the null space is trivial or no feasible unit
/// vector is found.
///
/// Normalized projected subgradient descent on the sphere with
/// [`SPHERE_RESTARTS`] seeded random starts and step `1/√t`; in the signed
/// regime iterates are pulled back into the cone by alternating projections
/// between `null(A)` and the cone. The best iterate of each restart is
/// refined by the same face search as [`tau_primal_oracle`]. The result is
/// an upper estimate of the true minimum.
pub fn sphere_minimum(a: &DenseMatrix, pattern: &SupportPattern) -> Result<f64> {
    pattern.check_matrix(a)?;
    if a.rows() == a.cols() {
        crate::linalg::RowProjector::new(a)?;
        return Ok(f64::INFINITY);
    }
    let setup = Setup::new(a, pattern)?;
    let nb = &setup.nb;
    let d = nb.dim();
    let n = pattern.n();
    let mask = pattern.mask();
    let s = pattern.sign_vector();

    let mut best = f64::INFINITY;
    if d == 1 {
        let b = nb.lift(&[1.0]);
        let neg: Vec<f64> = b.iter().map(|x| -x).collect();
        return Ok(setup.value(&b).min(setup.value(&neg)));
    }

    let mut rng = Stream::new(SPHERE_SEED);
    for _ in 0..SPHERE_RESTARTS {
        let v0 = rng.gaussian_vec(d);
        let mut w = nb.lift(&v0);
        if pattern.regime() == Regime::Signed {
            w = into_cone(nb, &mask, &w);
        }
        let Some(mut w) = normalized(w) else {
            continue;
        };
        if setup.value(&w).is_infinite() {
            // The projections did not reach the cone from this start.
            continue;
        }
        let mut run_best = (setup.value(&w), w.clone());
        for t in 1..=SPHERE_STEPS {
            // Subgradient of f, projected onto null(A) and the sphere's
            // tangent space.
            let g: Vec<f64> = (0..n)
                .map(|i| match pattern.regime() {
                    Regime::General => {
                        if mask[i] {
                            s[i]
                        } else {
                            w[i].signum() * (w[i] != 0.0) as u8 as f64
                        }
                    }
                    Regime::Signed => 1.0,
                })
                .collect();
            let mut gp = nb.project(&g);
            let radial = dot(&gp, &w);
            for i in 0..n {
                gp[i] -= radial * w[i];
            }
            let gn = norm2(&gp);
            if gn <= 1e-14 {
                break;
            }
            let step = 1.0 / (t as f64).sqrt();
            let raw: Vec<f64> = (0..n).map(|i| w[i] - step * gp[i] / gn).collect();
            // The radial correction amplifies round-off off the null space,
            // so every iterate is projected back.
            let mut next = nb.project(&raw);
            if pattern.regime() == Regime::Signed {
                next = into_cone(nb, &mask, &next);
            }
            let Some(next) = normalized(next) else {
                break;
            };
            if pattern.regime() == Regime::Signed && setup.value(&next).is_infinite() {
                break;
            }
            w = next;
            let val = setup.value(&w);
            if val < run_best.0 {
                run_best = (val, w.clone());
            }
        }
        let (polished, _) = setup.polish(&run_best.1, None);
        best = best.min(run_best.0).min(polished);
    }
    Ok(best)
}

fn normalized(w: Vec<f64>) -> Option<Vec<f64>> {
    let n = norm2(&w);
    (n > 1e-12).then(|| w.iter().map(|x| x / n).collect())
}

/// Alternating projections between `null(A)` and `{w : w_off ≥ 0}`, ending
/// on the null space; coordinates off the support that remain slightly
/// negative are left for the caller's feasibility check.
fn into_cone(nb: &NullBasis, mask: &[bool], w: &[f64]) -> Vec<f64> {
    let mut cur = w.to_vec();
    for _ in 0..50 {
        let mut clipped = cur.clone();
        let mut violated = false;
        for i in 0..cur.len() {
            if !mask[i] && clipped[i] < 0.0 {
                violated = violated || clipped[i] < -CONE_TOL;
                clipped[i] = 0.0;
            }
        }
        if !violated {
            return cur;
        }
        cur = nb.project(&clipped);
    }
    cur
}
