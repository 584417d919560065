use crate::error::{Error, Result};
use crate::linalg::{least_squares, norm2, nullspace_basis, DenseMatrix, NullBasis, RowProjector};
use crate::Regime;

use super::{SupportPattern, TauCertificate};

/// Iteration cap of the accelerated projection scheme.
pub const DUAL_MAX_ITER: usize = 10_000;
/// Lower cap on off-support coordinates of `z` in the signed regime, where
/// the set is otherwise unbounded below.
pub const SIGNED_FLOOR: f64 = -1e6;

const STEP_TOL: f64 = 1e-13;
const WITNESS_MIN_DIST: f64 = 1e-9;
const FIXED_POINT_TOL: f64 = 1e-9;

/// Projection onto the constraint set `Z` in the caller's coordinates.
struct ZSet {
    /// `Some(target)` on the support, `None` off it.
    fixed: Vec<Option<f64>>,
    regime: Regime,
}

impl ZSet {
    fn new(pattern: &SupportPattern) -> Self {
        let mut fixed = vec![None; pattern.n()];
        for (&i, &s) in pattern.support().iter().zip(pattern.signs()) {
            fixed[i] = Some(match pattern.regime() {
                Regime::General => s,
                Regime::Signed => 1.0,
            });
        }
        ZSet {
            fixed,
            regime: pattern.regime(),
        }
    }

    #[inline]
    fn clip(&self, i: usize, v: f64) -> f64 {
        match self.fixed[i] {
            Some(t) => t,
            None => match self.regime {
                Regime::General => v.clamp(-1.0, 1.0),
                Regime::Signed => v.clamp(SIGNED_FLOOR, 1.0),
            },
        }
    }

    fn project(&self, v: &[f64]) -> Vec<f64> {
        v.iter().enumerate().map(|(i, &x)| self.clip(i, x)).collect()
    }

    /// Off-support coordinates strictly inside their interval.
    fn free(&self, z: &[f64]) -> Vec<usize> {
        (0..z.len())
            .filter(|&i| {
                self.fixed[i].is_none()
                    && match self.regime {
                        Regime::General => z[i].abs() < 1.0 - 1e-10,
                        Regime::Signed => z[i] < 1.0 - 1e-10 && z[i] > SIGNED_FLOOR,
                    }
            })
            .collect()
    }

    fn floor_active(&self, z: &[f64]) -> bool {
        self.regime == Regime::Signed
            && z.iter()
                .zip(&self.fixed)
                .any(|(&v, f)| f.is_none() && v <= SIGNED_FLOOR)
    }
}

/// `‖Nᵀ z‖₂² / 2`, half the squared distance from `z` to the row space.
fn half_sq_dist(nb: &NullBasis, z: &[f64]) -> f64 {
    let c = nb.coords(z);
    0.5 * c.iter().map(|v| v * v).sum::<f64>()
}

/// τ(A) through the dual distance problem.
///
/// Minimizes `½‖P z‖²` over `z ∈ Z`, with `P` the projector onto `null(A)`.
/// A plain projected-gradient step with unit step size is exactly one round
/// of alternating projections, `z ← Π_Z(P_row z)`; the iteration here adds
/// Nesterov momentum with function-value restarts and stops when the
/// projected step falls below `1e−13` or the distance vanishes. The free
/// coordinates of the final iterate are then re-solved exactly by least
/// squares, which is accepted when it stays in `Z` and does not increase the
/// distance.
///
/// The witness `w = −P z / ‖P z‖` lies in `null(A)`; it is reported when the
/// distance exceeds `1e−9`. `converged` requires the final point to be a
/// fixed point of the alternating map to within `1e−9` and, in the signed
/// regime, no coordinate to sit on the artificial floor.
pub fn tau_dual(a: &DenseMatrix, pattern: &SupportPattern) -> Result<TauCertificate> {
    pattern.check_matrix(a)?;
    let (m, n) = (a.rows(), a.cols());
    if m >= n {
        return Err(Error::Precondition(format!("need m < n, got {m}x{n}")));
    }
    let projector = RowProjector::new(a)?;
    let nb = nullspace_basis(a)?;
    let zset = ZSet::new(pattern);

    let mut z = zset.project(&vec![0.0; n]);
    let mut obj = half_sq_dist(&nb, &z);
    let mut y = z.clone();
    let mut t = 1.0_f64;
    let mut iterations = 0;

    while iterations < DUAL_MAX_ITER {
        iterations += 1;
        let g = nb.project(&y);
        let z_new: Vec<f64> = (0..n).map(|i| zset.clip(i, y[i] - g[i])).collect();
        let obj_new = half_sq_dist(&nb, &z_new);
        let step = z_new
            .iter()
            .zip(&y)
            .map(|(p, q)| (p - q).powi(2))
            .sum::<f64>()
            .sqrt();
        if obj_new > obj {
            // Momentum overshot: restart from the last accepted point.
            t = 1.0;
            y.clone_from(&z);
            continue;
        }
        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_new;
        for i in 0..n {
            y[i] = z_new[i] + beta * (z_new[i] - z[i]);
        }
        z = z_new;
        obj = obj_new;
        t = t_new;
        if step <= STEP_TOL * (1.0 + norm2(&z)) || obj.sqrt() <= 1e-15 {
            break;
        }
    }

    if let Some(polished) = polish(&nb, &zset, &z) {
        let p_obj = half_sq_dist(&nb, &polished);
        if p_obj <= obj * (1.0 + 1e-12) + 1e-30 {
            z = polished;
        }
    }

    let nu = projector.coefficients(&z);
    let u = a.matvec_t(&nu);
    let diff: Vec<f64> = z.iter().zip(&u).map(|(p, q)| p - q).collect();
    let dist = norm2(&diff);
    let tau = -dist;

    let g = nb.project(&z);
    let next: Vec<f64> = (0..n).map(|i| zset.clip(i, z[i] - g[i])).collect();
    let residual = next
        .iter()
        .zip(&z)
        .map(|(p, q)| (p - q).powi(2))
        .sum::<f64>()
        .sqrt();
    let converged = residual <= FIXED_POINT_TOL * (1.0 + norm2(&z)) && !zset.floor_active(&z);

    let (w, gap) = if dist > WITNESS_MIN_DIST {
        let gn = norm2(&g);
        let w: Vec<f64> = g.iter().map(|v| -v / gn).collect();
        let gap = (tau - pattern.objective(&w)).abs();
        (Some(w), gap)
    } else {
        (None, 0.0)
    };

    Ok(TauCertificate {
        tau,
        z,
        nu,
        w,
        iterations,
        converged,
        gap,
    })
}

/// Exact minimizer over the face of `Z` on which `z` lies: coordinates at a
/// bound stay put, free coordinates solve the least-squares problem
/// `min ‖Nᵀ(E_F z_F + c)‖`.
fn polish(nb: &NullBasis, zset: &ZSet, z: &[f64]) -> Option<Vec<f64>> {
    let free = zset.free(z);
    let d = nb.dim();
    if free.is_empty() || free.len() > d {
        return None;
    }
    let mut fixed_part = z.to_vec();
    for &i in &free {
        fixed_part[i] = 0.0;
    }
    let rhs: Vec<f64> = nb.coords(&fixed_part).iter().map(|v| -v).collect();
    let mat = nb.basis.select_rows(&free).transpose();
    let sol = least_squares(&mat, &rhs).ok()?;
    let mut out = fixed_part;
    for (&i, &v) in free.iter().zip(&sol) {
        if zset.clip(i, v) != v {
            return None;
        }
        out[i] = v;
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_equations_gives_minus_one() {
        let a = DenseMatrix::new(0, 2, Vec::new()).unwrap();
        let p = SupportPattern::canonical(2, 1, Regime::General).unwrap();
        let c = tau_dual(&a, &p).unwrap();
        assert!((c.tau + 1.0).abs() < 1e-12);
        assert!(c.converged);
        let w = c.w.unwrap();
        assert!(w[0].abs() < 1e-12 && (w[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tie_matrix_has_zero_tau() {
        let a = DenseMatrix::from_rows(&[vec![1.0, -1.0]]).unwrap();
        let p = SupportPattern::canonical(2, 1, Regime::General).unwrap();
        let c = tau_dual(&a, &p).unwrap();
        assert!(c.tau.abs() < 1e-9);
        assert!(c.w.is_none());
    }

    #[test]
    fn rank_deficient_is_error() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0]]).unwrap();
        let p = SupportPattern::canonical(3, 1, Regime::General).unwrap();
        assert!(tau_dual(&a, &p).is_err());
    }
}
