//! `heatvar` command-line tool.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use heatvar::experiments::{run_experiment, ExperimentConfig, RunOptions};
use heatvar::field_sim::{simulate_field, FieldGridSpec};
use heatvar::gaussian_sim::{build_temporal_covariance, sample_path, SeedSpec};
use heatvar::wick::{asymptotic_constants, linear_quartic_moments};
use heatvar::{Drift, Error, ModelParams};

const SCHEMA_NOTE: &str = "Experiment configs are TOML files, config schema version 1 \
(see docs/config.md). Worker threads: HEATVAR_WORKERS or --workers.";

#[derive(Parser, Debug)]
#[command(name = "heatvar", version, about = "Quartic-variation experiments for the stochastic heat equation", after_help = SCHEMA_NOTE)]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the experiment described by a config file.
    #[command(after_help = SCHEMA_NOTE)]
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        /// Worker threads (results do not depend on it).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Exact E[V_N], Var[V_N] and the limit constants.
    #[command(after_help = SCHEMA_NOTE)]
    Oracle {
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
        #[arg(long = "N")]
        n: usize,
    },
    /// Simulate one path and write it as CSV (t,value).
    #[command(after_help = SCHEMA_NOTE)]
    Simulate {
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
        #[arg(long = "N")]
        n: usize,
        #[arg(long, default_value_t = heatvar::experiments::DEFAULT_MASTER_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        replicate: u64,
        /// zero, cosine, bounded-rational or linear:<c>; nonzero drift uses the scheme.
        #[arg(long, default_value = "zero")]
        drift: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print 6/(πθ), σ_θ² and σ₁,θ².
    #[command(after_help = SCHEMA_NOTE)]
    Constants {
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
    },
    /// Check a config file (with overrides) and print the effective config.
    #[command(name = "validate-config", after_help = SCHEMA_NOTE)]
    ValidateConfig {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
}

/// Values that take precedence over the config file.
#[derive(Args, Debug, Default)]
struct Overrides {
    #[arg(long)]
    theta: Option<f64>,
    /// Comma-separated list of N.
    #[arg(long = "N", value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Replicates.
    #[arg(long = "M")]
    m: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Single selection exponent; replaces any gamma_list.
    #[arg(long)]
    gamma: Option<f64>,
    /// Output CSV path; the JSON sidecar goes next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Overrides {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(t) = self.theta {
            cfg.theta = t;
        }
        if let Some(n) = &self.n {
            cfg.n_list = n.clone();
        }
        if let Some(m) = self.m {
            cfg.replicates = m;
        }
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        if let Some(g) = self.gamma {
            cfg.selection.gamma = g;
            cfg.selection.gamma_list.clear();
        }
        if let Some(o) = &self.out {
            cfg.output = Some(o.clone());
        }
    }
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn load_config(path: &PathBuf, overrides: &Overrides) -> Result<ExperimentConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read config {}: {e}", path.display())))?;
    // parse without validating so overrides can repair file values
    let mut cfg: ExperimentConfig =
        toml::from_str(&text).map_err(|e| Failure::Config(format!("invalid config {}: {e}", path.display())))?;
    overrides.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

fn parse_drift(s: &str) -> Result<Drift, Failure> {
    match s {
        "zero" => Ok(Drift::Zero),
        "cosine" => Ok(Drift::Cosine),
        "bounded-rational" => Ok(Drift::BoundedRational),
        _ => match s.strip_prefix("linear:").map(str::parse::<f64>) {
            Some(Ok(c)) => Ok(Drift::Linear { c }),
            _ => Err(Failure::Config(format!(
                "invalid config field `drift`: unknown drift `{s}` (zero, cosine, bounded-rational, linear:<c>)"
            ))),
        },
    }
}

fn check_args(theta: f64, n: Option<usize>) -> Result<(), Failure> {
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(Failure::Config(format!(
            "invalid config field `theta`: must be positive and finite, got {theta}"
        )));
    }
    if n == Some(0) {
        return Err(Failure::Config("invalid config field `N`: must be >= 1".into()));
    }
    Ok(())
}

fn output(path: Option<&PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(std::fs::File::create(p).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display())))?),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn io_err(e: std::io::Error) -> Failure {
    Failure::Runtime(e.to_string())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run {
            config,
            overrides,
            workers,
        } => {
            let cfg = load_config(&config, &overrides)?;
            let report = run_experiment(&cfg, RunOptions { workers })?;
            match &cfg.output {
                Some(path) => {
                    let sidecar = report.write_files(path)?;
                    log::info!("wrote {} and {}", path.display(), sidecar.display());
                }
                None => report.write_csv(std::io::stdout().lock())?,
            }
        }
        Command::Oracle { theta, n } => {
            check_args(theta, Some(n))?;
            let (e, v) = linear_quartic_moments(n, theta)?;
            let k = asymptotic_constants(theta)?;
            let mut out = std::io::stdout().lock();
            writeln!(out, "N = {n}, theta = {theta}").map_err(io_err)?;
            writeln!(out, "E[V_N] = {e:.10}").map_err(io_err)?;
            writeln!(out, "Var[V_N] = {v:.10e}").map_err(io_err)?;
            writeln!(out, "N*Var[V_N] = {:.10}", n as f64 * v).map_err(io_err)?;
            writeln!(out, "limit 6/(pi*theta) = {:.10}", k.limit).map_err(io_err)?;
            writeln!(out, "sigma_theta^2 = {:.10}", k.sigma_theta_sq).map_err(io_err)?;
            writeln!(out, "sigma1_theta^2 = {:.10}", k.sigma1_theta_sq).map_err(io_err)?;
        }
        Command::Simulate {
            theta,
            n,
            seed,
            replicate,
            drift,
            out,
        } => {
            check_args(theta, Some(n))?;
            let params = ModelParams::new(theta, parse_drift(&drift)?)?;
            let seed = SeedSpec::new(seed, replicate);
            let path = if params.drift().is_zero() {
                sample_path(&build_temporal_covariance(n, theta)?, seed)
            } else {
                simulate_field(&FieldGridSpec::default_for(n), &params, seed)?
            };
            let mut w = output(out.as_ref())?;
            writeln!(w, "t,value").map_err(io_err)?;
            for (i, v) in path.values().iter().enumerate() {
                writeln!(w, "{:?},{v:?}", i as f64 / n as f64).map_err(io_err)?;
            }
            w.flush().map_err(io_err)?;
        }
        Command::Constants { theta } => {
            check_args(theta, None)?;
            let k = asymptotic_constants(theta)?;
            let mut out = std::io::stdout().lock();
            writeln!(out, "limit 6/(pi*theta) = {:.6}", k.limit).map_err(io_err)?;
            writeln!(out, "sigma_theta^2 = {:.6}", k.sigma_theta_sq).map_err(io_err)?;
            writeln!(out, "sigma1_theta^2 = {:.6}", k.sigma1_theta_sq).map_err(io_err)?;
        }
        Command::ValidateConfig { config, overrides } => {
            let cfg = load_config(&config, &overrides)?;
            let text = cfg.to_toml_string()?;
            print!("# valid; effective config\n{text}");
            let est = cfg.estimated_seconds();
            println!("# estimated single-core run time: {est:.0} s");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_env("HEATVAR_LOG").init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
