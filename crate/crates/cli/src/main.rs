//! `levy-info`: run the information–estimation identity checks from the
//! command line and write CSV/JSON reports.
//!
//! Exit codes: 0 all identities hold, 1 an identity failed, 2 bad
//! configuration or arguments, 3 numerical non-convergence.

// `!(x > 0.0)` is deliberate throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use levy_core::harness::{BuiltinChannel, Mutation};

use crate::config::RunConfig;

#[derive(Parser)]
#[command(name = "levy-info", version, about = "Numerical checks of information-estimation identities on Levy channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory for report files [default: the config's `out`, else .]
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Absolute tolerance, overriding the config
    #[arg(long, global = true, value_name = "FLOAT")]
    tol: Option<f64>,
    /// Seed for Monte Carlo cross-checks, overriding the config
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,
    /// Worker threads [default: all cores]
    #[arg(long, global = true, value_name = "INT")]
    jobs: Option<usize>,
    /// Corrupt the loss side of I-MMLE checks: none, drop-volatility,
    /// scale-jumps=F, scale-lhs=F or scale-rhs=F
    #[arg(long, global = true, value_name = "KIND", value_parser = parse_mutation)]
    mutation: Option<Mutation>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the channel card: cumulant, dual, link, triple and domains
    Describe { channel: String },
    /// dI/dgamma against the matched expected Levy loss
    Immle,
    /// Output relative entropy against the integrated mismatch excess
    Dmle,
    /// Integrated matched loss against H(X)
    Entropy,
    /// Integrated mismatch excess against D(P||Q)
    Relent,
    /// Representative loss curve x -> loss(x_ref, x)
    BregmanCurve {
        /// Overrides the config's channel
        channel: Option<String>,
    },
    /// Run a suite of checks (the built-in battery unless the config lists one)
    VerifyAll,
}

fn parse_mutation(s: &str) -> Result<Mutation, String> {
    let (kind, arg) = match s.split_once('=') {
        Some((k, a)) => (k, Some(a)),
        None => (s, None),
    };
    let factor = || -> Result<f64, String> {
        let a = arg.ok_or_else(|| format!("'{kind}' needs a factor, e.g. {kind}=1.01"))?;
        let f: f64 = a.parse().map_err(|_| format!("bad factor '{a}'"))?;
        if f.is_finite() && f > 0.0 {
            Ok(f)
        } else {
            Err(format!("factor must be positive, got {f}"))
        }
    };
    let m = match kind {
        "none" => Mutation::None,
        "drop-volatility" => Mutation::DropVolatility,
        "scale-jumps" => Mutation::ScaleJumps { factor: factor()? },
        "scale-lhs" => Mutation::ScaleLhs { factor: factor()? },
        "scale-rhs" => Mutation::ScaleRhs { factor: factor()? },
        _ => return Err(format!("unknown mutation '{kind}'")),
    };
    if arg.is_some() && matches!(m, Mutation::None | Mutation::DropVolatility) {
        return Err(format!("'{kind}' takes no factor"));
    }
    Ok(m)
}

fn channel_by_name(name: &str) -> Result<BuiltinChannel> {
    serde_json::from_value(serde_json::Value::String(name.to_string()))
        .map_err(|_| anyhow!("unknown channel '{name}'; expected gaussian, poisson, gamma or negative-binomial"))
}

enum Failure {
    Config(anyhow::Error),
    Numerical(anyhow::Error),
}

fn classify(e: anyhow::Error) -> Failure {
    let numerical = e
        .chain()
        .any(|c| c.downcast_ref::<levy_core::Error>().is_some_and(|e| e.is_numerical()));
    if numerical {
        Failure::Numerical(e)
    } else {
        Failure::Config(e)
    }
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            bail!("--jobs must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .context("configuring the thread pool")?;
    }
    if let Command::Describe { channel } = &cli.command {
        print!("{}", commands::describe(channel)?);
        return Ok(true);
    }

    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(t) = cli.tol {
        cfg.tol = Some(t);
    }
    if let Some(s) = cli.seed {
        cfg.seed = Some(s);
    }
    if let Some(m) = cli.mutation {
        cfg.mutation = Some(m);
    }
    if let Command::BregmanCurve { channel: Some(name) } = &cli.command {
        cfg.channel = Some(channel_by_name(name)?);
    }
    cfg.tol.get_or_insert(config::DEFAULT_TOL);
    cfg.validate_common()?;
    let out_dir = cli
        .out
        .clone()
        .or_else(|| cfg.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));

    let outcome = match cli.command {
        Command::Immle => commands::immle(cfg)?,
        Command::Dmle => commands::dmle(cfg)?,
        Command::Entropy => commands::entropy(cfg)?,
        Command::Relent => commands::relent(cfg)?,
        Command::BregmanCurve { .. } => commands::bregman(cfg)?,
        Command::VerifyAll => commands::verify_all(cfg)?,
        Command::Describe { .. } => unreachable!(),
    };
    for line in &outcome.summary {
        println!("{line}");
    }
    for path in outcome.outputs.write(&out_dir)? {
        println!("wrote {}", path.display());
    }
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("levy-info: identity check failed");
            ExitCode::from(1)
        }
        Err(e) => match classify(e) {
            Failure::Config(e) => {
                eprintln!("levy-info: configuration error: {e:#}");
                ExitCode::from(2)
            }
            Failure::Numerical(e) => {
                eprintln!("levy-info: numerical failure: {e:#}");
                ExitCode::from(3)
            }
        },
    }
}
