//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Built with `harness = false` so the lines are always
//! printed.

use std::time::{Duration, Instant};

use l1weak_cli::dispatch;
use l1weak_core::cert::NSP_TOL;
use l1weak_core::experiments::round_half_up;
use l1weak_core::recovery::RECOVERY_TOL;
use l1weak_core::rng::Stream;
use l1weak_core::threshold::{alpha_bound, solve_theta, EpsilonSet, Side};
use l1weak_core::{
    alpha_w, char_residual, check_recovery, classify_nsp, construct_counterexample,
    estimate_transition, framework_alpha_estimate, run_phase_grid, simplex_reference, solve_bp,
    tau_dual, tau_primal_oracle, verify_certificate, BpProblem, DenseMatrix, PhaseGrid, Regime,
    SupportPattern, Verdict,
};

const REGIMES: [Regime; 2] = [Regime::General, Regime::Signed];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn betas19() -> Vec<f64> {
    (1..=19).map(|i| i as f64 * 0.05).collect()
}

fn gaussian_matrix(m: usize, n: usize, s: &mut Stream) -> DenseMatrix {
    DenseMatrix::new(m, n, s.gaussian_vec(m * n)).unwrap()
}

fn random_pattern(n: usize, k: usize, regime: Regime, s: &mut Stream) -> SupportPattern {
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

fn l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn bound_coincidence() -> Outcome {
    let mut worst = 0.0f64;
    for regime in REGIMES {
        for beta in betas19() {
            let eps = EpsilonSet::ZERO;
            let theta_hat = alpha_w(regime, beta).unwrap().theta_hat;
            let tl = solve_theta(regime, beta, &eps, Side::Lower).unwrap();
            let tu = solve_theta(regime, beta, &eps, Side::Upper).unwrap();
            let lo = alpha_bound(regime, Side::Lower, beta, tl, &eps).unwrap();
            let hi = alpha_bound(regime, Side::Upper, beta, tu, &eps).unwrap();
            worst = worst
                .max((lo - hi).abs())
                .max((lo - theta_hat).abs())
                .max((hi - theta_hat).abs());
        }
    }
    outcome(worst <= 1e-9, format!("max deviation {worst:.3e} (tol 1e-9)"))
}

fn characterization_residual() -> Outcome {
    let betas = betas19();
    let mut worst = 0.0f64;
    let mut curves = Vec::new();
    for regime in REGIMES {
        let alphas: Vec<f64> = betas.iter().map(|&b| alpha_w(regime, b).unwrap().alpha).collect();
        for (&b, &a) in betas.iter().zip(&alphas) {
            let r = char_residual(regime, a, b, 0.0, 0.0, Side::Lower).unwrap();
            worst = worst.max(r.abs());
        }
        curves.push(alphas);
    }
    let increasing = curves.iter().all(|c| c.windows(2).all(|w| w[0] < w[1]));
    let ordered = curves[1].iter().zip(&curves[0]).all(|(s, g)| s <= g);
    outcome(
        worst <= 1e-10 && increasing && ordered,
        format!(
            "max |residual| {worst:.3e} (tol 1e-10), increasing {increasing}, signed <= general {ordered}"
        ),
    )
}

fn certificate_duality() -> Outcome {
    let mut worst = 0.0f64;
    let (mut converged, mut verified, mut count) = (0, 0, 0);
    for regime in REGIMES {
        for i in 0..50u64 {
            let mut s = Stream::new(70_000 + i + 1000 * (regime == Regime::Signed) as u64);
            let n = 10 + s.below(31);
            let m = 1 + s.below(n - 2);
            let k = 1 + s.below(n - 1);
            let a = gaussian_matrix(m, n, &mut s);
            let p = random_pattern(n, k, regime, &mut s);
            let dual = tau_dual(&a, &p).unwrap();
            let primal = tau_primal_oracle(&a, &p).unwrap();
            worst = worst.max((dual.tau - primal).abs());
            count += 1;
            if dual.converged {
                converged += 1;
                if verify_certificate(&a, &p, &dual).ok {
                    verified += 1;
                }
            }
        }
    }
    outcome(
        worst <= 1e-6 && verified == converged,
        format!(
            "{count} instances, max |dual - primal| {worst:.3e} (tol 1e-6), {verified}/{converged} converged certificates verify"
        ),
    )
}

/// Random magnitudes on the pattern's support with the pattern's signs.
fn magnitude_draw(p: &SupportPattern, s: &mut Stream) -> Vec<f64> {
    let mut x = vec![0.0; p.n()];
    for (&j, &sign) in p.support().iter().zip(p.signs()) {
        x[j] = sign * (0.1 + 2.0 * s.uniform());
    }
    x
}

fn end_to_end() -> Outcome {
    const PER_SIDE: usize = 30;
    let (mut failures, mut successes, mut inconclusive) = (0usize, 0usize, 0usize);
    let mut bad = Vec::new();
    let n = 40;
    for i in 0..400u64 {
        if failures >= PER_SIDE && successes >= PER_SIDE {
            break;
        }
        let regime = REGIMES[i as usize % 2];
        let mut s = Stream::new(50_000 + i);
        let beta = 0.1 + 0.2 * s.uniform();
        let aw = alpha_w(regime, beta).unwrap().alpha;
        // Alternate between well below and well above the threshold.
        let want_success = (i / 2) % 2 == 0;
        let alpha = if want_success { (aw + 0.25).min(0.95) } else { aw - 0.15 };
        let k = round_half_up(beta * n as f64).max(1);
        let m = round_half_up(alpha * n as f64).max(k + 1);
        let a = gaussian_matrix(m, n, &mut s);
        let p = random_pattern(n, k, regime, &mut s);
        let v = classify_nsp(&a, &p, NSP_TOL).unwrap();
        match v.verdict {
            Verdict::CertifiedFailure if failures < PER_SIDE => {
                failures += 1;
                let w = v.certificate.as_ref().and_then(|c| c.w.clone()).unwrap();
                let x0 = construct_counterexample(&w, &p).unwrap();
                let y = a.matvec(&x0);
                let sol = solve_bp(&BpProblem::new(a.clone(), y, regime).unwrap()).unwrap();
                let differs = max_abs_diff(&sol.x_hat, &x0) > RECOVERY_TOL;
                let no_worse = l1(&sol.x_hat) <= l1(&x0) + 1e-9 * l1(&x0);
                if !(differs && no_worse) {
                    bad.push(format!("failure instance {i}"));
                }
            }
            Verdict::CertifiedSuccess if successes < PER_SIDE => {
                successes += 1;
                let solver = l1weak_core::BpSolver::new(&a, regime).unwrap();
                let recovered = (0..20)
                    .filter(|_| {
                        let x0 = magnitude_draw(&p, &mut s);
                        let sol = solver.solve(&a.matvec(&x0)).unwrap();
                        check_recovery(&x0, &sol, RECOVERY_TOL)
                    })
                    .count();
                if recovered != 20 {
                    bad.push(format!("success instance {i}: {recovered}/20"));
                }
            }
            Verdict::Inconclusive => inconclusive += 1,
            _ => {}
        }
    }
    outcome(
        failures >= PER_SIDE && successes >= PER_SIDE && bad.is_empty(),
        format!(
            "{failures} certified failures, {successes} certified successes, {inconclusive} inconclusive; problems: {}",
            if bad.is_empty() { "none".to_string() } else { bad.join(", ") }
        ),
    )
}

fn phase_transition() -> Outcome {
    let n = 200;
    let offsets = [-0.07, -0.035, 0.0, 0.035, 0.07];
    let mut pass = true;
    let mut parts = Vec::new();
    for regime in REGIMES {
        for beta in [0.15, 0.25] {
            let aw = alpha_w(regime, beta).unwrap().alpha;
            let grid = PhaseGrid {
                n,
                alphas: offsets.iter().map(|d| aw + d).collect(),
                betas: vec![beta],
                trials_per_cell: 200,
                seed: 2024,
                regime,
            };
            let cells = run_phase_grid(&grid, 0).unwrap();
            let below = cells[0].rate();
            let above = cells[4].rate();
            let est = estimate_transition(&cells);
            let ok_est = matches!(est, Ok(e) if (e - aw).abs() <= 0.05);
            pass &= below <= 0.15 && above >= 0.85 && ok_est;
            parts.push(format!(
                "{regime} beta {beta}: rate {below:.3} at -0.07, {above:.3} at +0.07, estimate {} vs {aw:.4}",
                est.map_or_else(|e| e.to_string(), |e| format!("{e:.4}"))
            ));
        }
    }
    outcome(pass, parts.join("; "))
}

fn framework_consistency() -> Outcome {
    let aw = alpha_w(Regime::General, 0.3).unwrap().alpha;
    let est = framework_alpha_estimate(20_000, 6_000, 50, 31).unwrap();
    let d_alpha = (est.alpha_estimate - aw).abs();
    let d_cw = (est.cw_over_n - (1.0 - aw)).abs();
    outcome(
        d_alpha <= 0.02 && d_cw <= 0.02,
        format!(
            "alpha estimate {:.4} vs {aw:.4} (|d| {d_alpha:.4}), c_w/n {:.4} vs {:.4} (|d| {d_cw:.4}), tol 0.02",
            est.alpha_estimate,
            est.cw_over_n,
            1.0 - aw
        ),
    )
}

fn solver_cross_validation() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..30u64 {
        let regime = REGIMES[i as usize % 2];
        let mut s = Stream::new(31_000 + i);
        let n = 20 + s.below(81);
        let m = n / 4 + s.below(n / 2);
        let k = 1 + s.below(m);
        let a = gaussian_matrix(m, n, &mut s);
        let mut x0 = vec![0.0; n];
        for j in s.subset(n, k) {
            let g = s.gaussian();
            x0[j] = match regime {
                Regime::General => g,
                Regime::Signed => g.abs(),
            };
        }
        let y = a.matvec(&x0);
        let p = BpProblem::new(a, y, regime).unwrap();
        let admm = solve_bp(&p).unwrap();
        let lp = simplex_reference(&p).unwrap();
        worst = worst.max((admm.objective - lp.objective).abs());
    }
    outcome(worst <= 1e-6, format!("30 instances, max objective gap {worst:.3e} (tol 1e-6)"))
}

fn reproducibility() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let commands: [(&str, Vec<&str>); 3] = [
        (
            "phase",
            vec![
                "phase", "--n", "60", "--alpha-grid", "0.2:0.8:4", "--beta-grid", "0.05:0.45:3",
                "--trials", "10", "--seed", "8",
            ],
        ),
        (
            "phase-signed",
            vec![
                "phase", "--n", "60", "--alpha-grid", "0.2:0.8:4", "--beta-grid", "0.05:0.45:3",
                "--trials", "10", "--seed", "8", "--signed",
            ],
        ),
        (
            "framework",
            vec!["framework", "--n", "4000", "--beta", "0.3", "--samples", "20", "--seed", "8"],
        ),
    ];
    let mut mismatches = Vec::new();
    for (name, base) in &commands {
        let mut reference: Option<(Vec<u8>, Vec<u8>)> = None;
        for threads in ["1", "2", "4", "0"] {
            let csv = dir.path().join(format!("{name}-{threads}.csv"));
            let json = dir.path().join(format!("{name}-{threads}.json"));
            let mut argv = vec!["l1weak"];
            argv.extend(base.iter().copied());
            argv.extend(["--threads", threads, "--out", csv.to_str().unwrap()]);
            argv.extend(["--json", json.to_str().unwrap()]);
            let (code, _) = dispatch(argv);
            let bytes = (std::fs::read(&csv).unwrap(), std::fs::read(&json).unwrap());
            if code != 0 {
                mismatches.push(format!("{name} exit {code}"));
            }
            match &reference {
                None => reference = Some(bytes),
                Some(r) if *r != bytes => mismatches.push(format!("{name} --threads {threads}")),
                Some(_) => {}
            }
        }
    }
    outcome(
        mismatches.is_empty(),
        format!(
            "{} commands x 4 thread counts; differences: {}",
            commands.len(),
            if mismatches.is_empty() { "none".to_string() } else { mismatches.join(", ") }
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Option<Duration>); 8] = [
        ("bound coincidence", bound_coincidence, Some(Duration::from_secs(1))),
        ("characterization residual", characterization_residual, None),
        ("certificate duality", certificate_duality, Some(Duration::from_secs(30))),
        ("end-to-end recovery", end_to_end, Some(Duration::from_secs(120))),
        ("phase transition", phase_transition, None),
        ("framework consistency", framework_consistency, Some(Duration::from_secs(60))),
        ("solver cross-validation", solver_cross_validation, None),
        ("reproducibility", reproducibility, None),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.iter().any(|o| name.contains(o.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let in_time = budget.is_none_or(|b| elapsed <= b);
        let pass = result.pass && in_time;
        failed += usize::from(!pass);
        let limit = budget.map_or(String::new(), |b| format!(", limit {}s", b.as_secs()));
        println!(
            "{} [{}] {name}: {} ({:.2}s{limit})",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            result.detail,
            elapsed.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
