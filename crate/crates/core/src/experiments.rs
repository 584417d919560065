//! Monte Carlo phase transitions and finite-n framework estimates.
//!
//! A phase grid is a set of `(α, β)` cells; each cell runs independent
//! trials of basis pursuit on a Gaussian matrix with `m = round(α n)` rows
//! and a random `k = round(β n)`-sparse ±1 vector. Every trial draws from its
//! own stream keyed by `(seed, cell, trial)`, so tables are identical for any
//! thread count and evaluation order.
//!
//! The framework estimator samples the sorted-magnitude vector `ḡ` of a
//! Gaussian vector and evaluates the finite-n expressions whose limits are
//! the threshold `α_w` and the crossing index `c_w/n → 1 − α_w`. The head of
//! `z` is fixed to 1 and the tail enters with a minus sign, matching the
//! fixed coordinates of the dual set.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{norm1, DenseMatrix};
use crate::recovery::{check_recovery, BpSolver, RECOVERY_TOL};
use crate::rng::Stream;
use crate::Regime;

/// Relative ℓ1 margin by which a feasible iterate must beat `x₀` to end a
/// trial early.
pub const BEATEN_MARGIN: f64 = 1e-8;

/// Round half up, `⌊x + 0.5⌋`.
pub fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor().max(0.0) as usize
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseGrid {
    pub n: usize,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub trials_per_cell: usize,
    pub seed: u64,
    pub regime: Regime,
}

impl PhaseGrid {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Input(format!("n = {} is too small", self.n)));
        }
        if self.trials_per_cell == 0 {
            return Err(Error::Input("trials per cell must be at least 1".into()));
        }
        for (name, grid) in [("alpha", &self.alphas), ("beta", &self.betas)] {
            if grid.is_empty() {
                return Err(Error::Input(format!("{name} grid is empty")));
            }
            if grid.iter().any(|&v| !(v > 0.0 && v < 1.0)) {
                return Err(Error::Input(format!("{name} grid must lie in (0, 1)")));
            }
            if grid.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::Input(format!("{name} grid must be strictly increasing")));
            }
        }
        Ok(())
    }

    /// Cells in row-major order: `β` outer, `α` inner.
    pub fn cells(&self) -> Vec<PhaseCell> {
        let mut out = Vec::with_capacity(self.alphas.len() * self.betas.len());
        for &beta in &self.betas {
            for &alpha in &self.alphas {
                let m = round_half_up(alpha * self.n as f64);
                let k = round_half_up(beta * self.n as f64);
                let skipped = !(k >= 1 && m >= 1 && k < m && m < self.n);
                out.push(PhaseCell {
                    alpha,
                    beta,
                    m,
                    k,
                    trials: if skipped { 0 } else { self.trials_per_cell },
                    successes: 0,
                    unconverged: 0,
                    skipped,
                });
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseCell {
    pub alpha: f64,
    pub beta: f64,
    pub m: usize,
    pub k: usize,
    pub trials: usize,
    pub successes: usize,
    /// Trials where the solver did not converge (counted as failures).
    pub unconverged: usize,
    /// Infeasible cell (`k ≥ m` or out of range); no trials were run.
    pub skipped: bool,
}

impl PhaseCell {
    pub fn rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.successes as f64 / self.trials as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialOutcome {
    pub success: bool,
    pub converged: bool,
}

/// One recovery experiment on a fresh Gaussian instance.
///
/// Draws `A` row by row, then the support, then the signs (general regime
/// only), all from `stream`. The solver is stopped as soon as one of its
/// feasible iterates has a smaller ℓ1 norm than `x₀`; such a trial is a
/// failure and is not counted as unconverged.
pub fn trial_outcome(
    n: usize,
    m: usize,
    k: usize,
    regime: Regime,
    stream: &mut Stream,
) -> Result<TrialOutcome> {
    if !(1 <= k && k < m && m < n) {
        return Err(Error::Precondition(format!(
            "need 1 <= k < m < n, got n = {n}, m = {m}, k = {k}"
        )));
    }
    let a = DenseMatrix::new(m, n, stream.gaussian_vec(m * n))?;
    let support = stream.subset(n, k);
    let mut x0 = vec![0.0; n];
    for &i in &support {
        x0[i] = match regime {
            Regime::General => stream.sign(),
            Regime::Signed => 1.0,
        };
    }
    let y = a.matvec(&x0);
    // A feasible iterate with a smaller ℓ1 norm than x₀ proves that x₀ is
    // not the minimizer, which settles the trial as a failure.
    let target = norm1(&x0) * (1.0 - BEATEN_MARGIN);
    let (sol, beaten) = BpSolver::new(&a, regime)?.solve_until(&y, |x| {
        norm1(x) < target && (regime == Regime::General || x.iter().all(|&v| v >= 0.0))
    })?;
    Ok(TrialOutcome {
        success: !beaten && check_recovery(&x0, &sol, RECOVERY_TOL),
        converged: sol.converged || beaten,
    })
}

/// [`trial_outcome`] reduced to its success flag.
pub fn run_trial(n: usize, m: usize, k: usize, regime: Regime, stream: &mut Stream) -> Result<bool> {
    trial_outcome(n, m, k, regime, stream).map(|o| o.success)
}

/// Run every feasible cell of `grid` on `threads` worker threads (0 uses
/// all cores). Skipped cells are returned with `skipped = true` and zero
/// trials.
pub fn run_phase_grid(grid: &PhaseGrid, threads: usize) -> Result<Vec<PhaseCell>> {
    grid.validate()?;
    let mut cells = grid.cells();
    let work: Vec<(usize, usize)> = cells
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.skipped)
        .flat_map(|(ci, c)| (0..c.trials).map(move |t| (ci, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Input(format!("thread pool: {e}")))?;
    let outcomes: Vec<Result<TrialOutcome>> = pool.install(|| {
        work.par_iter()
            .map(|&(ci, t)| {
                let c = &cells[ci];
                let mut stream = Stream::derived(grid.seed, ci as u64, t as u64);
                trial_outcome(grid.n, c.m, c.k, grid.regime, &mut stream)
            })
            .collect()
    });
    for (&(ci, _), outcome) in work.iter().zip(outcomes) {
        let o = outcome?;
        if o.success {
            cells[ci].successes += 1;
        }
        if !o.converged {
            cells[ci].unconverged += 1;
        }
    }
    Ok(cells)
}

/// Weighted pool-adjacent-violators fit of a nondecreasing sequence.
pub fn isotonic_fit(values: &[f64], weights: &[f64]) -> Vec<f64> {
    assert_eq!(values.len(), weights.len());
    // Blocks of (mean, weight, length).
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(values.len());
    for (&v, &w) in values.iter().zip(weights) {
        blocks.push((v, w, 1));
        while blocks.len() >= 2 {
            let (m2, w2, l2) = blocks[blocks.len() - 1];
            let (m1, w1, l1) = blocks[blocks.len() - 2];
            if m1 <= m2 {
                break;
            }
            blocks.truncate(blocks.len() - 2);
            let w = w1 + w2;
            blocks.push(((m1 * w1 + m2 * w2) / w, w, l1 + l2));
        }
    }
    blocks
        .into_iter()
        .flat_map(|(m, _, l)| std::iter::repeat_n(m, l))
        .collect()
}

/// Location of the 50% success rate along `α` for the cells of one `β`.
///
/// Rates are smoothed by isotonic regression (weighted by trials) and then
/// interpolated linearly; a fitted plateau exactly at 0.5 resolves to its
/// midpoint.
pub fn estimate_transition(cells: &[PhaseCell]) -> Result<f64> {
    let mut used: Vec<&PhaseCell> = cells.iter().filter(|c| !c.skipped && c.trials > 0).collect();
    used.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
    if used.len() < 4 {
        return Err(Error::Precondition(format!(
            "{} usable cells; at least 4 are needed, use a wider alpha grid",
            used.len()
        )));
    }
    let rates: Vec<f64> = used.iter().map(|c| c.rate()).collect();
    let lo = rates.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(lo < 0.3 && hi > 0.7) {
        return Err(Error::Precondition(format!(
            "success rates span [{lo}, {hi}]; need some below 0.3 and above 0.7, use a wider alpha grid"
        )));
    }
    let weights: Vec<f64> = used.iter().map(|c| c.trials as f64).collect();
    let fit = isotonic_fit(&rates, &weights);
    let alphas: Vec<f64> = used.iter().map(|c| c.alpha).collect();

    let first = fit.iter().position(|&r| r >= 0.5).expect("max rate exceeds 0.7");
    if fit[first] == 0.5 {
        let last = fit.iter().rposition(|&r| r == 0.5).unwrap();
        return Ok(0.5 * (alphas[first] + alphas[last]));
    }
    // first > 0 because the smallest fitted value is below 0.3.
    let (a0, a1) = (alphas[first - 1], alphas[first]);
    let (r0, r1) = (fit[first - 1], fit[first]);
    Ok(a0 + (0.5 - r0) * (a1 - a0) / (r1 - r0))
}

/// One draw of the framework vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameworkSample {
    pub g: Vec<f64>,
    /// Head `|g_1..g_{n−k}|` sorted increasingly, followed by the raw tail.
    pub gbar: Vec<f64>,
    pub c_w: usize,
    pub f_value: f64,
}

impl FrameworkSample {
    pub fn draw(n: usize, k: usize, stream: &mut Stream) -> Result<Self> {
        if k >= n {
            return Err(Error::Input(format!("need k < n, got k = {k}, n = {n}")));
        }
        let g = stream.gaussian_vec(n);
        Ok(FrameworkSample::from_g(g, k))
    }

    pub fn from_g(g: Vec<f64>, k: usize) -> Self {
        let n = g.len();
        let mut gbar: Vec<f64> = g[..n - k].iter().map(|v| v.abs()).collect();
        gbar.sort_by(f64::total_cmp);
        gbar.extend_from_slice(&g[n - k..]);
        let c_w = framework_cw(&gbar, n, k);
        let f_value = framework_value(&gbar, n, k, c_w);
        FrameworkSample {
            g,
            gbar,
            c_w,
            f_value,
        }
    }
}

/// `S(c)` for every `c ∈ {0, …, n−k}`: the head sum from `c + 1` minus the
/// tail sum.
fn s_values(gbar: &[f64], n: usize, k: usize) -> Vec<f64> {
    let head = n - k;
    let tail: f64 = gbar[head..n].iter().sum();
    let mut s = vec![0.0; head + 1];
    let mut acc = 0.0;
    for c in (0..head).rev() {
        acc += gbar[c];
        s[c] = acc - tail;
    }
    s[head] = -tail;
    s
}

/// Smallest `c ∈ {0, …, n−k−1}` with `S(c)/(n−c) ≤ ḡ_{c+1}` (1-based), or
/// `n−k−1` when no index qualifies.
pub fn framework_cw(gbar: &[f64], n: usize, k: usize) -> usize {
    assert_eq!(gbar.len(), n, "gbar length mismatch");
    assert!(k < n, "need k < n");
    let s = s_values(gbar, n, k);
    (0..n - k)
        .find(|&c| {
            let lhs = s[c] / (n - c) as f64;
            lhs <= gbar[c] + 1e-12 * gbar[c].abs().max(lhs.abs())
        })
        .unwrap_or(n - k - 1)
}

/// `(Σ_{i>c} ḡ_i² − S(c)²/(n−c)) / n`.
pub fn framework_value(gbar: &[f64], n: usize, k: usize, c: usize) -> f64 {
    assert_eq!(gbar.len(), n, "gbar length mismatch");
    assert!(c < n - k || (k == 0 && c < n), "c out of range");
    let s = s_values(gbar, n, k)[c];
    let sq: f64 = gbar[c..].iter().map(|v| v * v).sum();
    (sq - s * s / (n - c) as f64) / n as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameworkEstimate {
    pub n: usize,
    pub k: usize,
    pub samples: usize,
    /// Mean of the framework value over the samples.
    pub alpha_estimate: f64,
    /// Sample standard deviation of the framework value.
    pub alpha_std: f64,
    /// Mean of `c_w / n`.
    pub cw_over_n: f64,
    pub cw_std: f64,
}

/// Average the framework value and `c_w / n` over `samples` fresh draws.
/// Sample `i` uses the stream keyed by `(seed, 0, i)`.
pub fn framework_alpha_estimate(
    n: usize,
    k: usize,
    samples: usize,
    seed: u64,
) -> Result<FrameworkEstimate> {
    if samples < 10 {
        return Err(Error::Input(format!("need at least 10 samples, got {samples}")));
    }
    if k >= n {
        return Err(Error::Input(format!("need k < n, got k = {k}, n = {n}")));
    }
    let draws: Vec<FrameworkSample> = (0..samples)
        .into_par_iter()
        .map(|i| FrameworkSample::draw(n, k, &mut Stream::derived(seed, 0, i as u64)))
        .collect::<Result<_>>()?;
    let values: Vec<f64> = draws.iter().map(|d| d.f_value).collect();
    let cws: Vec<f64> = draws.iter().map(|d| d.c_w as f64 / n as f64).collect();
    let (alpha_estimate, alpha_std) = mean_std(&values);
    let (cw_over_n, cw_std) = mean_std(&cws);
    Ok(FrameworkEstimate {
        n,
        k,
        samples,
        alpha_estimate,
        alpha_std,
        cw_over_n,
        cw_std,
    })
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}
