use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use renewal_rl::experiment::{
    evaluate_config, fmt_num, load_config, oracle_lines, preset, preset_names, run_experiment, run_oracle,
    write_oracle_table, ExperimentConfig, Status,
};
use renewal_rl::Error;

const OUT_ENV: &str = "RENEWAL_RL_OUT";

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_TRUNCATION: u8 = 3;

/// Renewal Monte Carlo experiment runner.
#[derive(Parser, Debug)]
#[command(name = "renewal-rl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every experiment in a config file and write CSV artifacts.
    Run(Common),
    /// Monte Carlo evaluation of a fixed policy (default: theta0).
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Comma-separated policy parameters.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        theta: Option<Vec<f64>>,
    },
    /// Reference solution: value iteration, grid search or closed form.
    Oracle(Common),
    /// List the bundled config presets.
    Presets,
}

#[derive(Args, Debug)]
struct Common {
    /// Config file, or `preset:<name>` for a bundled one.
    config: String,
    /// Only the named section(s).
    #[arg(long)]
    only: Vec<String>,
    /// Override the master seed of every section.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the worker count of every section.
    #[arg(long)]
    workers: Option<usize>,
    /// Output root (default: $RENEWAL_RL_OUT, else `results`).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::Parse(_) | Error::InvalidParameter(_) | Error::UnsupportedFamily { .. } => EXIT_CONFIG,
            Error::Truncation { .. } => EXIT_TRUNCATION,
            _ => EXIT_FAILURE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl Common {
    fn out_root(&self) -> PathBuf {
        self.out_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("results"))
    }

    /// Loads, filters, applies overrides and validates every section before
    /// anything is simulated.
    fn configs(&self) -> Result<Vec<ExperimentConfig>, Failure> {
        let mut configs = match self.config.strip_prefix("preset:") {
            Some(name) => preset(name)?,
            None => load_config(Path::new(&self.config))?,
        };
        if !self.only.is_empty() {
            if let Some(missing) = self.only.iter().find(|n| !configs.iter().any(|c| &c.name == *n)) {
                return Err(Error::Config(format!("no section named `{missing}`")).into());
            }
            configs.retain(|c| self.only.contains(&c.name));
        }
        for c in &mut configs {
            if let Some(seed) = self.seed {
                c.seed = seed;
            }
            if let Some(workers) = self.workers {
                c.workers = workers;
            }
            c.validate()?;
        }
        Ok(configs)
    }
}

fn run(common: &Common) -> Result<(), Failure> {
    let configs = common.configs()?;
    let root = common.out_root();
    let mut partial = Vec::new();
    for config in &configs {
        let report = run_experiment(config, &root)?;
        match report.status {
            Status::Complete => println!("{}: complete -> {}", report.name, report.dir.display()),
            Status::Partial => {
                println!(
                    "{}: PARTIAL ({} failed replication(s): {:?}) -> {}",
                    report.name,
                    report.failed_replications.len(),
                    report.failed_replications,
                    report.dir.display()
                );
                partial.push(report.name);
            }
        }
        if let Some(oracle) = &report.oracle {
            for (k, v) in oracle_lines(oracle) {
                println!("  {k} = {v}");
            }
        }
    }
    if partial.is_empty() {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_TRUNCATION,
            message: format!("cycle truncation in: {}", partial.join(", ")),
        })
    }
}

fn evaluate(common: &Common, theta: Option<&[f64]>) -> Result<(), Failure> {
    for config in common.configs()? {
        let e = evaluate_config(&config, theta)?;
        println!("[{}]", config.name);
        println!("theta = {}", e.theta.iter().map(|t| fmt_num(*t)).collect::<Vec<_>>().join(","));
        println!("mean = {}", fmt_num(e.mean));
        println!("std = {}", fmt_num(e.std));
        if let Some(x) = e.exact {
            println!("exact = {}", fmt_num(x));
        }
    }
    Ok(())
}

fn oracle(common: &Common) -> Result<(), Failure> {
    let root = common.out_root();
    for config in common.configs()? {
        let o = run_oracle(&config)?;
        println!("[{}]", config.name);
        for (k, v) in oracle_lines(&o) {
            println!("{k} = {v}");
        }
        let dir = root.join(&config.output);
        std::fs::create_dir_all(&dir).map_err(Error::from)?;
        let path = dir.join("oracle.csv");
        if write_oracle_table(&path, &o)? {
            println!("table = {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(c) => run(c),
        Command::Evaluate { common, theta } => evaluate(common, theta.as_deref()),
        Command::Oracle(c) => oracle(c),
        Command::Presets => {
            preset_names().iter().for_each(|n| println!("{n}"));
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
