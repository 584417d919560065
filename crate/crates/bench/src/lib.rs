//! Seeded fixtures shared by the benchmarks.

use l1weak_core::rng::Stream;
use l1weak_core::{BpProblem, DenseMatrix, Regime, SupportPattern};

/// Gaussian `m × n` matrix with a random support of size `k`.
pub fn nsp_instance(m: usize, n: usize, k: usize, regime: Regime, seed: u64) -> (DenseMatrix, SupportPattern) {
    let mut s = Stream::new(seed);
    let a = DenseMatrix::new(m, n, s.gaussian_vec(m * n)).expect("sizes match");
    let support = s.subset(n, k);
    let signs = support
        .iter()
        .map(|_| match regime {
            Regime::General => s.sign(),
            Regime::Signed => 1.0,
        })
        .collect();
    let pattern = SupportPattern::new(n, support, signs, regime).expect("valid pattern");
    (a, pattern)
}

/// Basis pursuit problem whose measurements come from a `k`-sparse vector
/// with Gaussian entries (absolute values in the signed regime).
pub fn bp_instance(m: usize, n: usize, k: usize, regime: Regime, seed: u64) -> BpProblem {
    let mut s = Stream::new(seed);
    let a = DenseMatrix::new(m, n, s.gaussian_vec(m * n)).expect("sizes match");
    let mut x0 = vec![0.0; n];
    for j in s.subset(n, k) {
        let g = s.gaussian();
        x0[j] = match regime {
            Regime::General => g,
            Regime::Signed => g.abs(),
        };
    }
    let y = a.matvec(&x0);
    BpProblem::new(a, y, regime).expect("consistent sizes")
}
