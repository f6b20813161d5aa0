use anyhow::{bail, Result};
use levy_core::harness::{
    check_dmle, check_immle, default_suite, run_check, run_suite, BuiltinChannel, Check, IdentityReport, Mutation,
    PriorSpec, Settings, DEFAULT_SLACK,
};
use levy_core::info::mutual_information;
use levy_core::loss::bregman_curve;
use levy_core::mc::{mc_mutual_information, McEstimate};
use levy_core::{ChannelModel, DiscretePrior};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{binary_prior, RunConfig, DEFAULT_SEED};
use crate::report::{render_json, Csv, Outputs};

/// Files to write, whether every identity held, and a console summary.
pub struct Outcome {
    pub outputs: Outputs,
    pub passed: bool,
    pub summary: Vec<String>,
}

fn settings(cfg: &RunConfig) -> Settings {
    Settings {
        tol: cfg.tol(),
        slack: cfg.slack.unwrap_or(DEFAULT_SLACK),
    }
}

fn validated(channel: BuiltinChannel, prior: &PriorSpec) -> Result<DiscretePrior> {
    let p = prior.build()?;
    p.validate_for(&channel.model())?;
    Ok(p)
}

fn summary_line(r: &IdentityReport, label: &str) -> String {
    format!(
        "{:<20} {label:<14} lhs={:.10e} rhs={:.10e} gap={:.3e} budget={:.3e} {}",
        r.identity_id.to_string(),
        r.lhs,
        r.rhs,
        r.abs_gap,
        r.error_budget + r.slack * r.tol,
        if r.passed { "PASS" } else { "FAIL" }
    )
}

/// Agreement of a Monte Carlo estimate with quadrature: within 3 standard
/// errors passes, 3 to 4 is flagged, beyond 4 fails.
#[derive(Serialize)]
struct McCheck {
    estimate: McEstimate,
    reference: f64,
    z_score: f64,
    status: &'static str,
}

impl McCheck {
    fn new(estimate: McEstimate, reference: f64) -> Self {
        let z = estimate.z_score(reference);
        let status = if z <= 3.0 {
            "pass"
        } else if z <= 4.0 {
            "flag"
        } else {
            "fail"
        };
        McCheck {
            estimate,
            reference,
            z_score: z,
            status,
        }
    }
}

pub fn immle(mut cfg: RunConfig) -> Result<Outcome> {
    let channel = *cfg.channel.get_or_insert(BuiltinChannel::Gaussian);
    let prior_spec = cfg.prior.get_or_insert_with(|| binary_prior(channel, [0.5, 0.5])).clone();
    let gammas = match cfg.gamma_list()? {
        Some(g) => g,
        None => {
            cfg.gammas = Some(vec![0.5, 1.0, 2.0]);
            vec![0.5, 1.0, 2.0]
        }
    };
    let mutation = cfg.mutation.unwrap_or_default();
    let seed = *cfg.seed.get_or_insert(DEFAULT_SEED);
    let prior = validated(channel, &prior_spec)?;
    let s = settings(&cfg);
    let ch = channel.model();

    struct Row {
        gamma: f64,
        mi: levy_core::QuadResult,
        report: IdentityReport,
        mc: Option<McCheck>,
    }
    let rows = gammas
        .par_iter()
        .enumerate()
        .map(|(i, &gamma)| -> Result<Row> {
            let check = Check::Immle {
                channel,
                prior: prior_spec.clone(),
                gamma,
                mutation,
            };
            let mi = mutual_information(&ch, &prior, gamma, s.tol)?;
            let report = check_immle(&ch, &prior, gamma, &s, mutation, &check)?;
            let mc = match &cfg.monte_carlo {
                Some(m) => Some(McCheck::new(
                    mc_mutual_information(&ch, &prior, gamma, seed.wrapping_add(i as u64), m.samples)?,
                    mi.value,
                )),
                None => None,
            };
            Ok(Row { gamma, mi, report, mc })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut csv = Csv::new(&["gamma", "mi", "dmi_dgamma", "expected_loss", "abs_gap", "error_budget", "passed"]);
    let mut passed = true;
    let mut summary = Vec::new();
    let mut results = Vec::new();
    for r in &rows {
        csv.row(vec![
            r.gamma.into(),
            r.mi.value.into(),
            r.report.lhs.into(),
            r.report.rhs.into(),
            r.report.abs_gap.into(),
            r.report.error_budget.into(),
            r.report.passed.into(),
        ]);
        passed &= r.report.passed;
        summary.push(summary_line(&r.report, &format!("gamma={}", r.gamma)));
        if let Some(m) = &r.mc {
            passed &= m.status != "fail";
            summary.push(format!(
                "{:<20} {:<14} mc={:.6e} +- {:.1e} quadrature={:.6e} z={:.2} {}",
                "MC_MUTUAL_INFO",
                format!("gamma={}", r.gamma),
                m.estimate.value,
                m.estimate.std_error,
                m.reference,
                m.z_score,
                m.status.to_uppercase()
            ));
        }
        results.push(json!({
            "gamma": r.gamma,
            "mi": r.mi,
            "report": r.report,
            "monte_carlo": r.mc,
        }));
    }
    let mut outputs = Outputs::new();
    outputs.add("immle.csv", csv.render()?);
    outputs.add("immle.json", render_json("immle", passed, &cfg, json!(results))?);
    Ok(Outcome { outputs, passed, summary })
}

pub fn dmle(mut cfg: RunConfig) -> Result<Outcome> {
    let channel = *cfg.channel.get_or_insert(BuiltinChannel::Gaussian);
    let p_spec = cfg.p.get_or_insert_with(|| binary_prior(channel, [0.5, 0.5])).clone();
    let q_spec = cfg.q.get_or_insert_with(|| binary_prior(channel, [0.8, 0.2])).clone();
    let gammas = match cfg.gamma_list()? {
        Some(g) => g,
        None => {
            cfg.gammas = Some(vec![0.5, 2.0]);
            vec![0.5, 2.0]
        }
    };
    let s = settings(&cfg);
    let ch = channel.model();
    let checks: Vec<Check> = gammas
        .iter()
        .map(|&gamma| Check::Dmle {
            channel,
            p: p_spec.clone(),
            q: q_spec.clone(),
            gamma,
        })
        .collect();
    for c in &checks {
        c.validate()?;
    }
    let (p, q) = (p_spec.build()?, q_spec.build()?);
    let reports = checks
        .par_iter()
        .zip(&gammas)
        .map(|(c, &gamma)| Ok(check_dmle(&ch, &p, &q, gamma, &s, c)?))
        .collect::<Result<Vec<_>>>()?;

    let mut csv = Csv::new(&["gamma", "relent", "integral_rhs", "abs_gap", "error_budget", "passed"]);
    let mut summary = Vec::new();
    for (r, &gamma) in reports.iter().zip(&gammas) {
        csv.row(vec![
            gamma.into(),
            r.lhs.into(),
            r.rhs.into(),
            r.abs_gap.into(),
            r.error_budget.into(),
            r.passed.into(),
        ]);
        summary.push(summary_line(r, &format!("gamma={gamma}")));
    }
    let passed = reports.iter().all(|r| r.passed);
    let mut outputs = Outputs::new();
    outputs.add("dmle.csv", csv.render()?);
    outputs.add("dmle.json", render_json("dmle", passed, &cfg, json!(reports))?);
    Ok(Outcome { outputs, passed, summary })
}

const IDENTITY_HEADER: &[&str] = &["identity", "lhs", "rhs", "abs_gap", "error_budget", "passed"];

fn identity_outcome(name: &str, cfg: &RunConfig, reports: Vec<IdentityReport>) -> Result<Outcome> {
    let mut csv = Csv::new(IDENTITY_HEADER);
    let mut summary = Vec::new();
    for r in &reports {
        csv.row(vec![
            r.identity_id.to_string().as_str().into(),
            r.lhs.into(),
            r.rhs.into(),
            r.abs_gap.into(),
            r.error_budget.into(),
            r.passed.into(),
        ]);
        summary.push(summary_line(r, r.note.as_deref().map_or("", short_note)));
    }
    let passed = reports.iter().all(|r| r.passed);
    let mut outputs = Outputs::new();
    outputs.add(format!("{name}.csv"), csv.render()?);
    outputs.add(format!("{name}.json"), render_json(name, passed, cfg, json!(reports))?);
    Ok(Outcome { outputs, passed, summary })
}

fn short_note(note: &str) -> &str {
    note.split(',').next().unwrap_or("")
}

pub fn entropy(mut cfg: RunConfig) -> Result<Outcome> {
    let channel = *cfg.channel.get_or_insert(BuiltinChannel::Gaussian);
    let prior = cfg.prior.get_or_insert_with(|| binary_prior(channel, [0.5, 0.5])).clone();
    let check = Check::Entropy { channel, prior };
    let reports = run_check(&check, &settings(&cfg))?;
    identity_outcome("entropy", &cfg, reports)
}

pub fn relent(mut cfg: RunConfig) -> Result<Outcome> {
    let channel = *cfg.channel.get_or_insert(BuiltinChannel::Poisson);
    let p = cfg.p.get_or_insert_with(|| binary_prior(channel, [0.5, 0.5])).clone();
    let q = cfg.q.get_or_insert_with(|| binary_prior(channel, [0.9, 0.1])).clone();
    let check = Check::Relent { channel, p, q };
    let reports = run_check(&check, &settings(&cfg))?;
    identity_outcome("relent", &cfg, reports)
}

pub fn verify_all(mut cfg: RunConfig) -> Result<Outcome> {
    let mut suite = cfg.suite.get_or_insert_with(default_suite).clone();
    if let Some(m) = cfg.mutation {
        for c in &mut suite {
            if let Check::Immle { mutation, .. } = c {
                if *mutation == Mutation::None {
                    *mutation = m;
                }
            }
        }
    }
    let reports = run_suite(&suite, &settings(&cfg))?;
    identity_outcome("verify-all", &cfg, reports)
}

pub fn bregman(mut cfg: RunConfig) -> Result<Outcome> {
    let channel = *cfg.channel.get_or_insert(BuiltinChannel::Gamma);
    let x_ref = *cfg.x_ref.get_or_insert(1.0);
    let grid = cfg
        .x_grid
        .get_or_insert_with(|| {
            let shift = if channel == BuiltinChannel::Gaussian { -2.0 } else { 0.0 };
            (1..=80).map(|i| shift + 0.05 * f64::from(i)).collect()
        })
        .clone();
    if grid.is_empty() {
        bail!("x_grid is empty");
    }
    let curve = bregman_curve(&channel.model(), x_ref, &grid)?;
    let mut csv = Csv::new(&["x", "loss"]);
    for &(x, l) in &curve {
        csv.row(vec![x.into(), l.into()]);
    }
    let (argmin, min) = curve
        .iter()
        .cloned()
        .fold((f64::NAN, f64::INFINITY), |a, (x, l)| if l < a.1 { (x, l) } else { a });
    let summary = vec![format!(
        "{} curve about x_ref={x_ref}: {} points, minimum {min:.3e} at x={argmin}",
        channel.model().name(),
        curve.len()
    )];
    let points: Vec<_> = curve.iter().map(|&(x, loss)| json!({ "x": x, "loss": loss })).collect();
    let mut outputs = Outputs::new();
    outputs.add("bregman-curve.csv", csv.render()?);
    outputs.add("bregman-curve.json", render_json("bregman-curve", true, &cfg, json!(points))?);
    Ok(Outcome {
        outputs,
        passed: true,
        summary,
    })
}

pub fn describe(name: &str) -> Result<String> {
    match ChannelModel::by_name(name) {
        Some(ch) => Ok(ch.describe()),
        None => bail!("unknown channel '{name}'; expected gaussian, poisson, gamma or negative-binomial"),
    }
}
