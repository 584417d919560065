//! Scalar special functions: `erf`, `erfinv`, and the Gaussian / half-normal
//! quantiles used by every threshold formula.
//!
//! `erf` and `erfc` are backed by the pure-Rust `libm` port of the fdlibm
//! routines, so results are identical on every platform. The inverse
//! functions start from Acklam's rational approximation of the normal
//! quantile and are refined by Newton steps on `erf`/`erfc`.

use crate::error::{Error, Result};

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// A value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(Error::domain("Probability::new", value, "must lie in [0, 1]"))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

pub fn erf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain("erf", x, "argument must be finite"));
    }
    Ok(libm::erf(x))
}

pub fn erfc(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain("erfc", x, "argument must be finite"));
    }
    Ok(libm::erfc(x))
}

/// Inverse error function on the open interval `(-1, 1)`.
///
/// The endpoints are errors rather than `±∞`: callers solving the threshold
/// equations rely on seeing the degenerate bracket.
pub fn erfinv(p: f64) -> Result<f64> {
    if !(p.abs() < 1.0) {
        return Err(Error::domain("erfinv", p, "argument must lie in (-1, 1)"));
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    let a = p.abs();
    // 1 - a is exact for a >= 1/2, which is where the tail form is used.
    let tail = 1.0 - a;
    let mut y = -acklam_quantile(0.5 * tail) * std::f64::consts::FRAC_1_SQRT_2;

    for step in 0..6 {
        let f = if a < 0.5 {
            libm::erf(y) - a
        } else {
            tail - libm::erfc(y)
        };
        let slope = FRAC_2_SQRT_PI * (-y * y).exp();
        let dy = f / slope;
        y -= dy;
        if step >= 1 && dy.abs() <= 1e-17 * y.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(y.copysign(p))
}

/// Standard normal distribution function, `Φ(x) = (1 + erf(x/√2)) / 2`.
pub fn std_normal_cdf(x: f64) -> Result<Probability> {
    if x.is_nan() {
        return Err(Error::domain("std_normal_cdf", x, "argument is NaN"));
    }
    // erfc form keeps relative accuracy in the lower tail.
    let value = 0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2);
    Ok(Probability(value.clamp(0.0, 1.0)))
}

/// Standard normal quantile `Φ⁻¹(p)` for `0 < p < 1`.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(
            "std_normal_quantile",
            p,
            "argument must lie in (0, 1)",
        ));
    }
    let mut x = acklam_quantile(p);
    for step in 0..6 {
        let f = if p < 0.5 {
            0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2) - p
        } else {
            (1.0 - p) - 0.5 * libm::erfc(x * std::f64::consts::FRAC_1_SQRT_2)
        };
        let density = FRAC_1_SQRT_2PI * (-0.5 * x * x).exp();
        let dx = f / density;
        x -= dx;
        if step >= 1 && dx.abs() <= 1e-17 * x.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(x)
}

/// Quantile of `|X|` for standard normal `X`: `F⁻¹(p) = √2 · erfinv(p)`.
pub fn halfnormal_quantile(p: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::domain(
            "halfnormal_quantile",
            p,
            "argument must lie in [0, 1)",
        ));
    }
    Ok(std::f64::consts::SQRT_2 * erfinv(p)?)
}

/// Acklam's rational approximation to the normal quantile (relative error
/// about 1.15e-9). Only used as a starting point.
fn acklam_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_690e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    let lower_tail = |p: f64| {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    if p < P_LOW {
        lower_tail(p)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -lower_tail(1.0 - p)
    }
}
