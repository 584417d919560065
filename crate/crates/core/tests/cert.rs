mod common;

use common::{gaussian_matrix, l1, random_pattern, small_instance};
use l1weak_core::cert::CertFailure;
use l1weak_core::linalg::{nullspace_basis, norm2};
use l1weak_core::rng::Stream;
use l1weak_core::{
    canonicalize, classify_nsp, construct_counterexample, sphere_minimum, tau_dual,
    tau_primal_oracle, verify_certificate, BpSolver, DenseMatrix, Regime, SupportPattern,
    TauCertificate, Verdict,
};
use proptest::prelude::*;

const REGIMES: [Regime; 2] = [Regime::General, Regime::Signed];
const TOL: f64 = 1e-6;

fn no_equations() -> DenseMatrix {
    DenseMatrix::new(0, 2, Vec::new()).unwrap()
}

#[test]
fn canonical_pattern_maps_to_identity() {
    for regime in REGIMES {
        let p = SupportPattern::canonical(6, 2, regime).unwrap();
        assert!(canonicalize(&p).is_identity());
    }
}

#[test]
fn single_positive_entry_is_moved_last_and_flipped() {
    let p = SupportPattern::new(3, vec![0], vec![1.0], Regime::General).unwrap();
    let c = canonicalize(&p);
    assert_eq!(c.perm, vec![1, 2, 0]);
    assert_eq!(c.flips, vec![1.0, 1.0, -1.0]);
}

#[test]
fn tau_is_invariant_under_canonicalization() {
    for regime in REGIMES {
        for seed in 0..10 {
            let (a, p) = small_instance(500 + seed, regime);
            let c = canonicalize(&p);
            let pc = SupportPattern::canonical(p.n(), p.k(), regime).unwrap();
            let t1 = tau_dual(&a, &p).unwrap().tau;
            let t2 = tau_dual(&c.apply_matrix(&a), &pc).unwrap().tau;
            assert!((t1 - t2).abs() <= 1e-10, "{regime} seed {seed}: {t1} vs {t2}");
        }
    }
}

#[test]
fn dual_hand_cases() {
    let p = SupportPattern::canonical(2, 1, Regime::General).unwrap();
    let c = tau_dual(&no_equations(), &p).unwrap();
    assert!((c.tau + 1.0).abs() <= 1e-12);
    assert!((c.z[0]).abs() <= 1e-12 && c.z[1] == -1.0);

    let a = DenseMatrix::from_rows(&[vec![1.0, -1.0]]).unwrap();
    let c = tau_dual(&a, &p).unwrap();
    assert!(c.tau.abs() <= 1e-9);
}

#[test]
fn primal_oracle_hand_cases() {
    let p = SupportPattern::canonical(2, 1, Regime::General).unwrap();
    assert!((tau_primal_oracle(&no_equations(), &p).unwrap() + 1.0).abs() <= 1e-9);

    // Null space spanned by v = (3, 3, −1, −1): f(v) = 8 and f(−v) = 4.
    let v = DenseMatrix::from_rows(&[vec![3.0, 3.0, -1.0, -1.0]]).unwrap();
    let a = nullspace_basis(&v).unwrap().basis.transpose();
    assert_eq!((a.rows(), a.cols()), (3, 4));
    let p = SupportPattern::canonical(4, 2, Regime::General).unwrap();
    assert_eq!(tau_primal_oracle(&a, &p).unwrap(), 0.0);
    assert!(tau_dual(&a, &p).unwrap().tau.abs() <= 1e-9);
}

#[test]
fn dual_matches_primal_on_small_gaussian() {
    let mut s = Stream::new(36);
    let a = gaussian_matrix(3, 6, &mut s);
    for regime in REGIMES {
        let p = random_pattern(6, 2, regime, &mut s);
        let d = tau_dual(&a, &p).unwrap().tau;
        let o = tau_primal_oracle(&a, &p).unwrap();
        assert!((d - o).abs() <= 1e-6, "{regime}: {d} vs {o}");
    }
}

#[test]
fn duality_on_fifty_instances_per_regime() {
    for regime in REGIMES {
        for seed in 0..50 {
            let (a, p) = small_instance(1000 + seed, regime);
            let cert = tau_dual(&a, &p).unwrap();
            let oracle = tau_primal_oracle(&a, &p).unwrap();
            assert!(
                (cert.tau - oracle).abs() <= 1e-6,
                "{regime} seed {seed}: dual {} primal {oracle}",
                cert.tau
            );
            assert!(cert.tau <= 1e-12);
            if cert.converged {
                let check = verify_certificate(&a, &p, &cert);
                assert!(check.ok, "{regime} seed {seed}: {:?}", check.reason);
            }
        }
    }
}

#[test]
fn square_matrix_is_certified_success() {
    let p = SupportPattern::canonical(3, 1, Regime::General).unwrap();
    let v = classify_nsp(&DenseMatrix::identity(3), &p, TOL).unwrap();
    assert_eq!(v.verdict, Verdict::CertifiedSuccess);
}

#[test]
fn tie_is_inconclusive() {
    let a = DenseMatrix::from_rows(&[vec![1.0, -1.0]]).unwrap();
    let p = SupportPattern::canonical(2, 1, Regime::General).unwrap();
    let v = classify_nsp(&a, &p, TOL).unwrap();
    assert_eq!(v.verdict, Verdict::Inconclusive);
    assert!(v.sphere_min.unwrap() <= TOL);
}

#[test]
fn sphere_minimum_of_trivial_null_space_is_infinite() {
    let p = SupportPattern::canonical(2, 1, Regime::General).unwrap();
    assert_eq!(sphere_minimum(&DenseMatrix::identity(2), &p).unwrap(), f64::INFINITY);
}

#[test]
fn counterexample_hand_cases() {
    let p = SupportPattern::canonical(2, 1, Regime::General).unwrap();
    let w = [0.0, 1.0];
    let x0 = construct_counterexample(&w, &p).unwrap();
    assert_eq!(x0, vec![0.0, -1.0]);
    assert_eq!(l1(&[x0[0] + w[0], x0[1] + w[1]]), 0.0);

    let p = SupportPattern::canonical(2, 1, Regime::Signed).unwrap();
    let w = [0.0, -1.0];
    let x0 = construct_counterexample(&w, &p).unwrap();
    assert_eq!(x0, vec![0.0, 1.0]);
    assert_eq!(l1(&[x0[0] + w[0], x0[1] + w[1]]), 0.0);

    assert!(construct_counterexample(&[1.0, 0.0], &p).is_err());
}

#[test]
fn hand_certificate_verifies_and_corruption_is_caught() {
    let a = no_equations();
    let p = SupportPattern::canonical(2, 1, Regime::General).unwrap();
    let mut cert = TauCertificate {
        tau: -1.0,
        z: vec![0.0, -1.0],
        nu: Vec::new(),
        w: Some(vec![0.0, 1.0]),
        iterations: 1,
        converged: true,
        gap: 0.0,
    };
    assert!(verify_certificate(&a, &p, &cert).ok);
    cert.z[0] = 1.5;
    let check = verify_certificate(&a, &p, &cert);
    assert!(!check.ok);
    assert_eq!(check.reason, Some(CertFailure::ZOutOfBox));
    assert_eq!(check.reason.unwrap().to_string(), "z out of box");
}

#[test]
fn far_above_threshold_fails_and_bp_confirms() {
    let (n, m, k) = (100, 20, 15);
    let mut failures = 0;
    for t in 0..100 {
        let mut s = Stream::derived(2024, 0, t);
        let a = gaussian_matrix(m, n, &mut s);
        let p = random_pattern(n, k, Regime::General, &mut s);
        let v = classify_nsp(&a, &p, TOL).unwrap();
        if v.verdict != Verdict::CertifiedFailure {
            continue;
        }
        failures += 1;
        if t % 10 != 0 {
            continue;
        }
        let w = v.certificate.unwrap().w.unwrap();
        let x0 = construct_counterexample(&w, &p).unwrap();
        let sol = BpSolver::new(&a, Regime::General).unwrap().solve(&a.matvec(&x0)).unwrap();
        assert!(sol.objective <= l1(&x0) - 1e-6, "trial {t}");
        let diff: Vec<f64> = sol.x_hat.iter().zip(&x0).map(|(p, q)| p - q).collect();
        assert!(norm2(&diff) > 1e-3, "trial {t}");
    }
    assert!(failures >= 95, "only {failures}/100 certified failures");
}

#[test]
fn verdict_is_scale_invariant() {
    for seed in 0..20 {
        let regime = REGIMES[seed as usize % 2];
        let (a, p) = small_instance(3000 + seed, regime);
        let base = classify_nsp(&a, &p, TOL).unwrap().verdict;
        for c in [0.1, 10.0] {
            let v = classify_nsp(&a.scaled(c), &p, TOL).unwrap().verdict;
            assert_eq!(v, base, "seed {seed}, c = {c}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tau_is_nonpositive_and_certificates_verify(seed in any::<u64>(), signed in any::<bool>()) {
        let regime = if signed { Regime::Signed } else { Regime::General };
        let (a, p) = small_instance(seed, regime);
        let cert = tau_dual(&a, &p).unwrap();
        prop_assert!(cert.tau <= 1e-12);
        if cert.converged {
            let check = verify_certificate(&a, &p, &cert);
            prop_assert!(check.ok, "{:?}", check.reason);
        }
        if let Some(w) = &cert.w {
            prop_assert!(norm2(&a.matvec(w)) <= 1e-9);
        }
        // Every sphere candidate is a unit null vector, so none can beat τ.
        let sm = sphere_minimum(&a, &p).unwrap();
        prop_assert!(sm >= cert.tau - 1e-6, "sphere {} below tau {}", sm, cert.tau);
    }
}
