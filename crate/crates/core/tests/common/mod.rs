//! Reference implementations used only by the tests. None of them call into
//! the crate's special functions.

#![allow(dead_code)]

use l1weak_core::rng::Stream;
use l1weak_core::{DenseMatrix, Regime, SupportPattern};

const TWO_OVER_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

/// erf by the positive-term series `2/√π e^{−x²} Σ 2ⁿ x^{2n+1} / (2n+1)!!`
/// for `|x| ≤ 4` and a Lentz continued fraction for `erfc` beyond.
pub fn erf_ref(x: f64) -> f64 {
    if x < 0.0 {
        return -erf_ref(-x);
    }
    if x == 0.0 {
        return 0.0;
    }
    if x <= 4.0 {
        let x2 = x * x;
        let mut term = x;
        let mut sum = x;
        let mut n = 0.0;
        loop {
            n += 1.0;
            term *= 2.0 * x2 / (2.0 * n + 1.0);
            sum += term;
            if term <= 1e-18 * sum {
                break;
            }
        }
        TWO_OVER_SQRT_PI * (-x2).exp() * sum
    } else {
        1.0 - erfc_cf(x)
    }
}

/// erfc(x) for large x: `e^{−x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + …))))`.
fn erfc_cf(x: f64) -> f64 {
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for j in 1..500 {
        let a = j as f64 / 2.0;
        d = x + a * d;
        d = if d.abs() < tiny { tiny } else { d };
        c = x + a / c;
        c = if c.abs() < tiny { tiny } else { c };
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-17 {
            break;
        }
    }
    (-x * x).exp() / (std::f64::consts::PI.sqrt() * f)
}

/// Bisection of a nondecreasing function for `f(x) = target` on `[lo, hi]`,
/// run until the midpoint stops moving.
pub fn bisect_increasing(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn erfinv_ref(p: f64) -> f64 {
    bisect_increasing(erf_ref, p, -7.0, 7.0)
}

pub fn phi_ref(x: f64) -> f64 {
    0.5 * (1.0 + erf_ref(x / std::f64::consts::SQRT_2))
}

pub fn phi_inv_ref(p: f64) -> f64 {
    bisect_increasing(phi_ref, p, -40.0, 40.0)
}

pub fn normal_pdf(t: f64) -> f64 {
    (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// The unperturbed characterization equation rewritten through the normal
/// quantile `t` and density `φ(t)`:
///
/// general: `2(1−β) φ(t)/θ − t`, `t = Φ⁻¹((1+q)/2)`;
/// signed:  `(1−β) φ(t)/θ − t`, `t = Φ⁻¹(q)`.
pub fn residual_ref(regime: Regime, theta: f64, beta: f64) -> f64 {
    let q = (1.0 - theta) / (1.0 - beta);
    match regime {
        Regime::General => {
            let t = phi_inv_ref(0.5 * (1.0 + q));
            2.0 * (1.0 - beta) * normal_pdf(t) / theta - t
        }
        Regime::Signed => {
            let t = phi_inv_ref(q);
            (1.0 - beta) * normal_pdf(t) / theta - t
        }
    }
}

/// 200 halvings of `(β, 1)` on [`residual_ref`], which is negative near `β`
/// and positive near 1.
pub fn theta_ref(regime: Regime, beta: f64) -> f64 {
    let (mut lo, mut hi) = (beta + 1e-9, 1.0 - 1e-9);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if residual_ref(regime, mid, beta) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn gaussian_matrix(m: usize, n: usize, s: &mut Stream) -> DenseMatrix {
    DenseMatrix::new(m, n, s.gaussian_vec(m * n)).unwrap()
}

pub fn random_pattern(n: usize, k: usize, regime: Regime, s: &mut Stream) -> SupportPattern {
    let support = s.subset(n, k);
    let signs = support
        .iter()
        .map(|_| match regime {
            Regime::General => s.sign(),
            Regime::Signed => 1.0,
        })
        .collect();
    SupportPattern::new(n, support, signs, regime).unwrap()
}

/// Random sizes `10 ≤ n ≤ 40`, `1 ≤ m ≤ n−2`, `1 ≤ k ≤ n−1` as used by the
/// duality checks.
pub fn small_instance(seed: u64, regime: Regime) -> (DenseMatrix, SupportPattern) {
    let mut s = Stream::new(seed);
    let n = 10 + s.below(31);
    let m = 1 + s.below(n - 2);
    let k = 1 + s.below(n - 1);
    let a = gaussian_matrix(m, n, &mut s);
    let p = random_pattern(n, k, regime, &mut s);
    (a, p)
}

/// `x₀` with unit entries of the pattern's signs on its support.
pub fn pattern_vector(p: &SupportPattern) -> Vec<f64> {
    p.sign_vector()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub fn l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}
