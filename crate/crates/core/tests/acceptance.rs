//! Acceptance criteria, one line per criterion. Exits nonzero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use levy_core::harness::{
    check_bregman, check_cond_mean, check_dmle, check_entropy, check_esscher, check_fenchel,
    check_gamma_amp_invariance, check_immle, check_pythagorean, check_relent, BuiltinChannel, Check, IdentityId,
    IdentityReport, Mutation, Settings,
};
use levy_core::info::{mi_curve, mutual_information, relent_curve};
use levy_core::loss::{levy_loss, point_mass_reconstruction, representative_loss};
use levy_core::mc::{mc_expected_loss, mc_mutual_information};
use levy_core::posterior::expected_levy_loss;
use levy_core::DiscretePrior;

const CHANNELS: [BuiltinChannel; 4] = [
    BuiltinChannel::Gaussian,
    BuiltinChannel::Poisson,
    BuiltinChannel::Gamma,
    BuiltinChannel::NegativeBinomial,
];

fn binary_atoms(c: BuiltinChannel) -> [f64; 2] {
    if c == BuiltinChannel::Gaussian {
        [-1.0, 1.0]
    } else {
        [1.0, 2.0]
    }
}

fn prior(atoms: [f64; 2], w: [f64; 2]) -> DiscretePrior {
    DiscretePrior::new(atoms.to_vec(), w.to_vec()).unwrap()
}

fn dummy(c: BuiltinChannel) -> Check {
    Check::Fenchel {
        channel: c,
        inputs: vec![],
    }
}

/// Outcome of one criterion: pass flag and a one-line summary.
struct Outcome {
    passed: bool,
    detail: String,
}

type Criterion = fn() -> Result<Outcome, String>;

fn fail_on(reports: &[IdentityReport]) -> Option<&IdentityReport> {
    reports.iter().find(|r| !r.passed)
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn c1_immle() -> Result<Outcome, String> {
    let s = Settings { tol: 1e-7, slack: 10.0 };
    let (res, dt) = timed(|| -> Result<(f64, bool), String> {
        let mut worst_ratio: f64 = 0.0;
        let mut ok = true;
        for c in CHANNELS {
            let limit = if matches!(c, BuiltinChannel::Gaussian | BuiltinChannel::Poisson) { 1e-4 } else { 1e-3 };
            let p = prior(binary_atoms(c), [0.5, 0.5]);
            for gamma in [0.5, 1.0, 2.0] {
                let r = check_immle(&c.model(), &p, gamma, &s, Mutation::None, &dummy(c)).map_err(|e| e.to_string())?;
                ok &= r.passed && r.abs_gap <= limit;
                worst_ratio = worst_ratio.max(r.abs_gap / limit);
            }
        }
        Ok((worst_ratio, ok))
    });
    let (worst, ok) = res?;
    let in_time = dt <= Duration::from_secs(60);
    Ok(Outcome {
        passed: ok && in_time,
        detail: format!("worst gap/limit = {worst:.2e}, {:.1} s (limit 60 s)", dt.as_secs_f64()),
    })
}

fn c2_dmle() -> Result<Outcome, String> {
    let s = Settings { tol: 1e-6, slack: 10.0 };
    let (res, dt) = timed(|| -> Result<(f64, bool), String> {
        let mut worst: f64 = 0.0;
        let mut ok = true;
        for c in CHANNELS {
            let a = binary_atoms(c);
            let (p, q) = (prior(a, [0.5, 0.5]), prior(a, [0.8, 0.2]));
            for gamma in [0.5, 2.0] {
                let r = check_dmle(&c.model(), &p, &q, gamma, &s, &dummy(c)).map_err(|e| e.to_string())?;
                ok &= r.passed && r.abs_gap <= 1e-3;
                worst = worst.max(r.abs_gap);
            }
        }
        Ok((worst, ok))
    });
    let (worst, ok) = res?;
    let in_time = dt <= Duration::from_secs(300);
    Ok(Outcome {
        passed: ok && in_time,
        detail: format!("worst gap = {worst:.2e} (limit 1e-3), {:.1} s (limit 300 s)", dt.as_secs_f64()),
    })
}

fn c3_entropy() -> Result<Outcome, String> {
    let s = Settings { tol: 1e-6, slack: 10.0 };
    let cases = [
        (BuiltinChannel::Gaussian, prior([-1.0, 1.0], [0.5, 0.5])),
        (BuiltinChannel::Poisson, prior([1.0, 2.0], [0.5, 0.5])),
        (BuiltinChannel::Poisson, prior([0.0, 3.0], [0.5, 0.5])),
    ];
    let mut ok = true;
    let mut vals = Vec::new();
    for (c, p) in cases {
        let r = check_entropy(&c.model(), &p, &s, &dummy(c)).map_err(|e| e.to_string())?;
        let rel = (r.lhs - std::f64::consts::LN_2).abs() / std::f64::consts::LN_2;
        ok &= r.passed && rel <= 0.01;
        vals.push(format!("{:.6}", r.lhs));
    }
    Ok(Outcome {
        passed: ok,
        detail: format!("integrals = [{}] vs ln 2 = 0.693147", vals.join(", ")),
    })
}

fn c4_relent() -> Result<Outcome, String> {
    let s = Settings { tol: 1e-6, slack: 10.0 };
    let (p, q) = (prior([1.0, 2.0], [0.5, 0.5]), prior([1.0, 2.0], [0.9, 0.1]));
    let mut ok = true;
    let mut vals = Vec::new();
    for c in [BuiltinChannel::Poisson, BuiltinChannel::Gamma] {
        let r = check_relent(&c.model(), &p, &q, &s, &dummy(c)).map_err(|e| e.to_string())?;
        ok &= r.passed && (r.lhs - 0.510826).abs() <= 0.01 * 0.510826;
        vals.push(format!("{:.6}", r.lhs));
    }
    Ok(Outcome {
        passed: ok,
        detail: format!("integrals = [{}] vs 0.510826", vals.join(", ")),
    })
}

fn c5_bregman() -> Result<Outcome, String> {
    let tol = 1e-10;
    let collapse = |c: BuiltinChannel, x1: f64, x2: f64| -> Result<f64, String> {
        let ch = c.model();
        let recon = point_mass_reconstruction(&ch, x2).map_err(|e| e.to_string())?;
        Ok(levy_loss(&ch, x1, &recon, tol).map_err(|e| e.to_string())?.value)
    };
    let mut ok = true;
    let g = collapse(BuiltinChannel::Gamma, 2.0, 1.0)?;
    ok &= (g - (1.0 - std::f64::consts::LN_2)).abs() <= 1e-6;
    let nb = collapse(BuiltinChannel::NegativeBinomial, 1.0, 2.0)?;
    ok &= (nb - 0.117783).abs() <= 1e-6;
    let mut exact_gap: f64 = 0.0;
    for (c, x1, x2) in [
        (BuiltinChannel::Gaussian, -0.5, 1.5),
        (BuiltinChannel::Gaussian, 1.0, 1.0),
        (BuiltinChannel::Poisson, 2.0, 1.0),
        (BuiltinChannel::Poisson, 0.0, 3.0),
    ] {
        let v = collapse(c, x1, x2)?;
        let want = representative_loss(&c.model(), x1, x2).map_err(|e| e.to_string())?;
        exact_gap = exact_gap.max((v - want).abs());
    }
    ok &= exact_gap <= 1e-10;
    let s = Settings { tol: 1e-7, slack: 10.0 };
    let mut deriv_gap: f64 = 0.0;
    for (c, x1, x2) in [
        (BuiltinChannel::Gaussian, -0.5, 1.5),
        (BuiltinChannel::Poisson, 2.0, 1.0),
        (BuiltinChannel::Gamma, 2.0, 1.0),
        (BuiltinChannel::NegativeBinomial, 1.0, 2.0),
    ] {
        let r = check_bregman(&c.model(), x1, x2, 1.0, &s, &dummy(c)).map_err(|e| e.to_string())?;
        let d = r.iter().find(|r| r.identity_id == IdentityId::BregmanSnrDeriv).unwrap();
        ok &= fail_on(&r).is_none() && d.abs_gap <= 1e-4;
        deriv_gap = deriv_gap.max(d.abs_gap);
    }
    Ok(Outcome {
        passed: ok,
        detail: format!(
            "gamma(2,1) = {g:.9}, nb(1,2) = {nb:.9}, gaussian/poisson gap = {exact_gap:.1e}, snr-derivative gap = {deriv_gap:.1e}"
        ),
    })
}

fn c6_gamma_amp() -> Result<Outcome, String> {
    let s = Settings { tol: 1e-8, slack: 10.0 };
    let p = prior([1.0, 2.0], [0.5, 0.5]);
    let q = prior([1.0, 2.0], [0.9, 0.1]);
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for k in [1.0, 2.0] {
        let r = check_gamma_amp_invariance(k, &p, &p, &q, &[0.5, 1.0, 2.0, 4.0], &s, &dummy(BuiltinChannel::Gamma))
            .map_err(|e| e.to_string())?;
        ok &= fail_on(&r).is_none();
        for spread in &r[..2] {
            ok &= spread.lhs < 1e-6;
            worst = worst.max(spread.lhs);
        }
    }
    Ok(Outcome {
        passed: ok,
        detail: format!("largest spread = {worst:.2e} (limit 1e-6)"),
    })
}

fn c7_structural() -> Result<Outcome, String> {
    let s = Settings { tol: 1e-8, slack: 10.0 };
    let mut failures = Vec::new();
    let grid: Vec<f64> = (0..=40).map(|i| 0.125 * f64::from(i)).collect();
    let gammas = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0];
    for c in CHANNELS {
        let ch = c.model();
        let name = ch.name().to_string();
        let a = binary_atoms(c);
        let x = a[1];
        let outputs: Vec<f64> = match c {
            BuiltinChannel::Poisson | BuiltinChannel::NegativeBinomial => (0..30).map(f64::from).collect(),
            BuiltinChannel::Gaussian => (-20..=20).map(|i| 0.25 * f64::from(i)).collect(),
            BuiltinChannel::Gamma => (1..40).map(|i| 0.2 * f64::from(i)).collect(),
        };
        let mut reports = vec![check_esscher(&ch, x, 2.0, &outputs, &dummy(c)).map_err(|e| e.to_string())?];
        let inputs: Vec<f64> = match c {
            BuiltinChannel::Gaussian => grid.iter().map(|v| v - 2.5).collect(),
            BuiltinChannel::Gamma => grid[1..].to_vec(),
            _ => grid.clone(),
        };
        reports.push(check_fenchel(&ch, &inputs, &dummy(c)).map_err(|e| e.to_string())?);
        reports.extend(check_cond_mean(&ch, x, 1.5, &s, &dummy(c)).map_err(|e| e.to_string())?);
        let (p, q) = (prior(a, [0.5, 0.5]), prior(a, [0.8, 0.2]));
        for gamma in [0.5, 2.0] {
            reports.extend(check_pythagorean(&ch, &p, &q, gamma, 1.0, &s, &dummy(c)).map_err(|e| e.to_string())?);
        }
        if let Some(r) = fail_on(&reports) {
            failures.push(format!("{name} {}", r.identity_id));
        }
        let mi = mi_curve(&ch, &p, &gammas, 1e-9).map_err(|e| e.to_string())?;
        if !mi.is_nondecreasing() || mi.values.iter().any(|&v| v > p.entropy() + 1e-9 || v < -1e-9) {
            failures.push(format!("{name} MI curve"));
        }
        let d = relent_curve(&ch, &p, &q, &gammas, 1e-9).map_err(|e| e.to_string())?;
        let bound = p.relative_entropy(&q).unwrap();
        if !d.is_nondecreasing() || d.values.iter().any(|&v| v > bound + 1e-9 || v < -1e-9) {
            failures.push(format!("{name} relative-entropy curve"));
        }
    }
    Ok(Outcome {
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            "Esscher, Fenchel, conditional moments, Pythagorean, monotone bounded I and D on 4 channels".into()
        } else {
            format!("failed: {}", failures.join(", "))
        },
    })
}

fn c8_monte_carlo() -> Result<Outcome, String> {
    const N: usize = 100_000;
    let mut worst: f64 = 0.0;
    for (i, c) in CHANNELS.into_iter().enumerate() {
        let ch = c.model();
        let p = prior(binary_atoms(c), [0.5, 0.5]);
        let seed = 1000 + i as u64;
        let mi = mutual_information(&ch, &p, 1.0, 1e-10).map_err(|e| e.to_string())?.value;
        let est = mc_mutual_information(&ch, &p, 1.0, seed, N).map_err(|e| e.to_string())?;
        worst = worst.max(est.z_score(mi));
        let loss = expected_levy_loss(&ch, &p, &p, 1.0, 1e-10).map_err(|e| e.to_string())?.value;
        let est = mc_expected_loss(&ch, &p, &p, 1.0, seed + 100, N).map_err(|e| e.to_string())?;
        worst = worst.max(est.z_score(loss));
    }
    Ok(Outcome {
        passed: worst < 3.0,
        detail: format!("largest |MC - quadrature| = {worst:.2} standard errors (limit 3)"),
    })
}

fn c9_mutation() -> Result<Outcome, String> {
    let s = Settings { tol: 1e-6, slack: 10.0 };
    let run = |c: BuiltinChannel, m: Mutation| -> Result<IdentityReport, String> {
        let p = prior(binary_atoms(c), [0.5, 0.5]);
        check_immle(&c.model(), &p, 1.0, &s, m, &dummy(c)).map_err(|e| e.to_string())
    };
    let mut missed = Vec::new();
    let mut cases = vec![
        (BuiltinChannel::Gaussian, Mutation::DropVolatility),
        (BuiltinChannel::Gamma, Mutation::ScaleJumps { factor: 1.01 }),
        (BuiltinChannel::Gamma, Mutation::ScaleJumps { factor: 0.99 }),
        (BuiltinChannel::NegativeBinomial, Mutation::ScaleJumps { factor: 1.01 }),
        (BuiltinChannel::NegativeBinomial, Mutation::ScaleJumps { factor: 0.99 }),
    ];
    for c in CHANNELS {
        for f in [1.01, 0.99] {
            cases.push((c, Mutation::ScaleLhs { factor: f }));
            cases.push((c, Mutation::ScaleRhs { factor: f }));
        }
        if !run(c, Mutation::None)?.passed {
            missed.push(format!("{c:?} unmutated check failed"));
        }
    }
    for (c, m) in &cases {
        if run(*c, *m)?.passed {
            missed.push(format!("{c:?} {m:?}"));
        }
    }
    Ok(Outcome {
        passed: missed.is_empty(),
        detail: if missed.is_empty() {
            format!("{} mutations detected, unmutated checks pass", cases.len())
        } else {
            format!("not detected: {}", missed.join(", "))
        },
    })
}

fn main() -> ExitCode {
    // `cargo test -- --list` and filters are not meaningful here
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let criteria: [(&str, Criterion); 9] = [
        ("I-MMLE", c1_immle),
        ("D-MLE", c2_dmle),
        ("entropy representation", c3_entropy),
        ("relative-entropy representation", c4_relent),
        ("Bregman collapse", c5_bregman),
        ("Gamma amplification invariance", c6_gamma_amp),
        ("structural invariants", c7_structural),
        ("Monte Carlo cross-validation", c8_monte_carlo),
        ("mutation sensitivity", c9_mutation),
    ];
    let mut all = true;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let (outcome, dt) = timed(f);
        let (passed, detail) = match outcome {
            Ok(o) => (o.passed, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        all &= passed;
        println!(
            "criterion {} {:<32} {}  {} [{:.1} s]",
            i + 1,
            name,
            if passed { "PASS" } else { "FAIL" },
            detail,
            dt.as_secs_f64()
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
