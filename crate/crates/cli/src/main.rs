//! `mmlab`: named, seeded experiments over the multimodal learning library.
//!
//! Exit status is 0 on success, 2 when a run completes but one of its checks
//! fails, and 1 on any error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use config::{parse_connection, parse_predictor, parse_unimodal, ExperimentConfig};

#[derive(Parser, Debug)]
#[command(
    name = "mmlab",
    version,
    about = "Multimodal versus unimodal learning experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    params: Params,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Gaussian (or Rademacher) average of a class on a drawn sample.
    Gaussavg,
    /// Approximate realizability of a connection class on unlabeled data.
    Realizability,
    /// Two-stage ERM: connection on unlabeled data, predictors per task.
    FitMultimodal,
    /// Unimodal ERM on (x, z).
    FitUnimodal,
    /// Joint representation ERM.
    FitJoint,
    /// Exact shattering certificate for a sign pattern.
    Shatter,
    /// Excess-risk bound for a fitted two-stage solution.
    Bound,
    /// Heterogeneity gap of a unimodal class against a predictor class.
    Gap,
    /// Unimodal failure against the two-stage learner on sine laws.
    Separation,
    /// Boolean family: unrealizable connections and chance-level compositions.
    Necessity,
    /// Smoothed hyperplanes on collinear against basis samples.
    ReprCompare,
    /// Linear separability and label crossings of a piecewise-linear curve.
    Separability,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Gaussavg => "gaussavg",
            Command::Realizability => "realizability",
            Command::FitMultimodal => "fit-multimodal",
            Command::FitUnimodal => "fit-unimodal",
            Command::FitJoint => "fit-joint",
            Command::Shatter => "shatter",
            Command::Bound => "bound",
            Command::Gap => "gap",
            Command::Separation => "separation",
            Command::Necessity => "necessity",
            Command::ReprCompare => "repr-compare",
            Command::Separability => "separability",
        }
    }
}

#[derive(Args, Debug, Default)]
struct Params {
    /// JSON config; flags given on the command line override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo draws for complexity estimates.
    #[arg(long, global = true)]
    draws: Option<usize>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory [default: mmlab-out/<command>].
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print the summary JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Instance JSON file.
    #[arg(long, global = true)]
    instance: Option<PathBuf>,
    /// scaling, signed-scaling, boolean-maps or polynomial:D
    #[arg(long, global = true)]
    connection: Option<String>,
    /// singleton-sine, boolean-lookup, sign-complete or hyperplanes:EPS
    #[arg(long, global = true)]
    predictor: Option<String>,
    /// composed-sine, scaling or boolean-maps
    #[arg(long, global = true)]
    unimodal: Option<String>,
    /// Oracle JSON file for gaussavg.
    #[arg(long, global = true)]
    oracle: Option<PathBuf>,
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    m: Option<usize>,
    /// Number of tasks.
    #[arg(long = "T", global = true)]
    tasks: Option<usize>,
    #[arg(long, global = true)]
    delta: Option<f64>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[arg(long, global = true)]
    k: Option<usize>,
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// Sign pattern such as +-+-.
    #[arg(long, global = true, allow_hyphen_values = true)]
    signs: Option<String>,
    /// sine-sign or paper
    #[arg(long, global = true)]
    convention: Option<String>,
    #[arg(long, global = true)]
    grid: Option<usize>,
    #[arg(long, global = true)]
    budget: Option<usize>,
    #[arg(long, global = true)]
    resamples: Option<usize>,
    /// Number of fixed points of the separable curve.
    #[arg(long, global = true)]
    fixed: Option<usize>,
    #[arg(long, global = true)]
    lipschitz: Option<f64>,
    /// Monte Carlo complexities in the bound instead of closed forms.
    #[arg(long, global = true)]
    monte_carlo: bool,
    /// Rademacher rather than Gaussian coefficients.
    #[arg(long, global = true)]
    rademacher: bool,
    /// l1 residuals in connection fits.
    #[arg(long, global = true)]
    l1: bool,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &PathBuf, what: &str) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {what} {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("malformed {what} {}", path.display()))
}

fn resolve(command: Command, p: &Params) -> Result<ExperimentConfig> {
    let mut c = match &p.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    c.experiment = command.name().to_string();
    macro_rules! set {
        ($field:ident) => {
            if let Some(v) = p.$field.clone() {
                c.$field = v;
            }
        };
        (opt $field:ident) => {
            if let Some(v) = p.$field.clone() {
                c.$field = Some(v);
            }
        };
    }
    set!(seed);
    set!(draws);
    set!(workers);
    set!(delta);
    set!(grid);
    set!(budget);
    set!(resamples);
    set!(opt out);
    set!(opt n);
    set!(opt m);
    set!(opt tasks);
    set!(opt trials);
    set!(opt k);
    set!(opt eps);
    set!(opt signs);
    set!(opt fixed);
    set!(opt lipschitz);
    c.monte_carlo |= p.monte_carlo;
    c.rademacher |= p.rademacher;
    if p.l1 {
        c.norm = mmlab::hypotheses::ResidualNorm::L1;
    }
    if let Some(path) = &p.instance {
        let inst: mmlab::instances::Instance = read_json(path, "instance")?;
        inst.validate()
            .with_context(|| format!("invalid instance {}", path.display()))?;
        c.instance = Some(inst);
    }
    if let Some(path) = &p.oracle {
        c.oracle = Some(read_json(path, "oracle")?);
    }
    if let Some(s) = &p.connection {
        c.connection = Some(parse_connection(s)?);
    }
    if let Some(s) = &p.predictor {
        c.predictor = Some(parse_predictor(s)?);
    }
    if let Some(s) = &p.unimodal {
        c.unimodal = Some(parse_unimodal(s)?);
    }
    if let Some(s) = &p.convention {
        c.convention = serde_json::from_value(serde_json::Value::String(s.clone()))
            .with_context(|| format!("unknown sign convention {s:?} (sine-sign, paper)"))?;
    }
    Ok(c)
}

fn run(cli: Cli) -> Result<bool> {
    let mut cfg = resolve(cli.command, &cli.params)?;
    let workers = cfg.workers;
    let outcome = mmlab::par::with_workers(workers, || commands::run(cli.command, &mut cfg))?;
    let dir = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("mmlab-out").join(cli.command.name()));
    outcome.write(&dir, &cfg)?;
    if cli.params.json {
        println!("{}", outcome.summary.to_json());
    } else {
        println!(
            "{}: {} ({})",
            cfg.experiment,
            if outcome.summary.pass { "PASS" } else { "FAIL" },
            dir.display()
        );
        for c in outcome.summary.checks.iter().filter(|c| !c.pass) {
            println!(
                "  failed check {}: {} vs {}",
                c.name, c.estimate, c.threshold
            );
        }
    }
    Ok(outcome.summary.pass)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
