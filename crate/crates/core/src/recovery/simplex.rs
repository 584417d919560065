use crate::error::{Error, Result};
use crate::linalg::{norm1, norm2, DenseMatrix};
use crate::Regime;

use super::{BpProblem, BpSolution};

/// Largest `n` accepted by the dense-tableau reference.
pub const SIMPLEX_MAX_N: usize = 120;

const PIVOT_TOL: f64 = 1e-9;
const REDUCED_COST_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 100_000;
const DEGENERATE_SWITCH: usize = 50;

/// Basis pursuit as a linear program, solved by a two-phase dense tableau
/// simplex with Bland's rule guarding against cycling.
///
/// General regime: `min 1ᵀ(x⁺ + x⁻)` s.t. `A(x⁺ − x⁻) = y`, `x± ≥ 0`.
/// Signed regime: `min 1ᵀx` s.t. `A x = y`, `x ≥ 0`.
pub fn simplex_reference(problem: &BpProblem) -> Result<BpSolution> {
    let a = &problem.a;
    let (m, n) = (a.rows(), a.cols());
    if n > SIMPLEX_MAX_N {
        return Err(Error::Precondition(format!(
            "simplex reference supports n <= {SIMPLEX_MAX_N}, got {n}"
        )));
    }
    let width = match problem.regime {
        Regime::General => 2 * n,
        Regime::Signed => n,
    };
    let mut lp = DenseMatrix::zeros(m, width);
    for i in 0..m {
        for j in 0..n {
            lp[(i, j)] = a[(i, j)];
            if problem.regime == Regime::General {
                lp[(i, j + n)] = -a[(i, j)];
            }
        }
    }
    let cost = vec![1.0; width];
    let (z, pivots) = solve_standard_form(&lp, &problem.y, &cost)?;
    let x_hat: Vec<f64> = match problem.regime {
        Regime::General => (0..n).map(|j| z[j] - z[j + n]).collect(),
        Regime::Signed => z,
    };
    let ax = a.matvec(&x_hat);
    let feas_residual = norm2(
        &ax.iter()
            .zip(&problem.y)
            .map(|(p, q)| p - q)
            .collect::<Vec<_>>(),
    );
    Ok(BpSolution {
        objective: norm1(&x_hat),
        x_hat,
        feas_residual,
        iterations: pivots,
        converged: true,
    })
}

/// `min cᵀx` s.t. `A x = b`, `x ≥ 0`. Returns the optimal vertex and the
/// number of pivots.
fn solve_standard_form(a: &DenseMatrix, b: &[f64], c: &[f64]) -> Result<(Vec<f64>, usize)> {
    let (m, n) = (a.rows(), a.cols());
    let cols = n + m + 1;
    let rhs = n + m;
    let mut t = vec![vec![0.0; cols]; m];
    for i in 0..m {
        let flip = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i][j] = flip * a[(i, j)];
        }
        t[i][n + i] = 1.0;
        t[i][rhs] = flip * b[i];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    let mut pivots = 0;

    // Phase 1: minimise the sum of artificials.
    let mut phase1_cost = vec![0.0; n + m];
    for v in phase1_cost.iter_mut().skip(n) {
        *v = 1.0;
    }
    run_simplex(&mut t, &mut basis, &phase1_cost, n + m, &mut pivots)?;
    let infeasibility: f64 = basis
        .iter()
        .zip(&t)
        .filter(|(&bv, _)| bv >= n)
        .map(|(_, row)| row[rhs])
        .sum();
    let b_scale = b.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
    if infeasibility > 1e-9 * b_scale {
        return Err(Error::Infeasible);
    }

    // Drive artificials out of the basis; drop rows that are redundant.
    let mut keep = vec![true; m];
    for r in 0..m {
        if basis[r] < n {
            continue;
        }
        let entering = (0..n).find(|&j| t[r][j].abs() > 1e-9);
        match entering {
            Some(j) => {
                pivot(&mut t, r, j);
                basis[r] = j;
                pivots += 1;
            }
            None => keep[r] = false,
        }
    }
    let mut t2: Vec<Vec<f64>> = Vec::new();
    let mut basis2 = Vec::new();
    for r in 0..m {
        if keep[r] {
            t2.push(t[r].clone());
            basis2.push(basis[r]);
        }
    }

    // Phase 2 over the original columns only.
    run_simplex(&mut t2, &mut basis2, c, n, &mut pivots)?;
    let mut x = vec![0.0; n];
    for (r, &bv) in basis2.iter().enumerate() {
        if bv < n {
            x[bv] = t2[r][rhs].max(0.0);
        }
    }
    Ok((x, pivots))
}

fn pivot(t: &mut [Vec<f64>], r: usize, j: usize) {
    let p = t[r][j];
    for v in t[r].iter_mut() {
        *v /= p;
    }
    let pivot_row = t[r].clone();
    for (i, row) in t.iter_mut().enumerate() {
        if i == r {
            continue;
        }
        let f = row[j];
        if f != 0.0 {
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
        }
    }
}

/// Primal simplex on columns `0..active`.
///
/// The entering column is the most negative reduced cost, except during a
/// run of degenerate pivots, where Bland's smallest-index rule takes over
/// for both the entering and the leaving choice so that the method cannot
/// cycle.
fn run_simplex(
    t: &mut [Vec<f64>],
    basis: &mut [usize],
    cost: &[f64],
    active: usize,
    pivots: &mut usize,
) -> Result<()> {
    let rhs = t.first().map_or(0, |r| r.len() - 1);
    let mut degenerate_run = 0usize;
    let mut in_basis = vec![false; t.first().map_or(0, |r| r.len())];
    for &b in basis.iter() {
        in_basis[b] = true;
    }
    loop {
        if *pivots > MAX_PIVOTS {
            return Err(Error::Precondition("simplex pivot limit exceeded".into()));
        }
        let bland = degenerate_run >= DEGENERATE_SWITCH;
        // Reduced costs d_j = c_j − c_Bᵀ column_j.
        let mut entering: Option<(usize, f64)> = None;
        for j in 0..active {
            if in_basis[j] {
                continue;
            }
            let mut d = cost[j];
            for (r, &bv) in basis.iter().enumerate() {
                d -= cost[bv] * t[r][j];
            }
            if d < -REDUCED_COST_TOL {
                if bland {
                    entering = Some((j, d));
                    break;
                }
                if entering.is_none_or(|(_, best)| d < best) {
                    entering = Some((j, d));
                }
            }
        }
        let Some((j, _)) = entering else {
            return Ok(());
        };
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..t.len() {
            if t[r][j] > PIVOT_TOL {
                let ratio = t[r][rhs] / t[r][j];
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((lr, lratio)) => {
                        let better = if bland {
                            ratio < lratio - 1e-12
                                || (ratio <= lratio + 1e-12 && basis[r] < basis[lr])
                        } else {
                            ratio < lratio - 1e-12
                                || (ratio <= lratio + 1e-12 && t[r][j] > t[lr][j])
                        };
                        if better {
                            Some((r, ratio))
                        } else {
                            Some((lr, lratio))
                        }
                    }
                };
            }
        }
        let Some((r, ratio)) = leave else {
            return Err(Error::Unbounded);
        };
        if ratio <= 1e-12 {
            degenerate_run += 1;
        } else {
            degenerate_run = 0;
        }
        pivot(t, r, j);
        in_basis[basis[r]] = false;
        in_basis[j] = true;
        basis[r] = j;
        *pivots += 1;
    }
}
