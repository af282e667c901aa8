use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use gcn_robust::cli::{self, Config};

#[derive(Parser)]
#[command(name = "gcn-robust", version, about = "Certify and train GCNs robust to attribute perturbations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` configuration file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Extra `key=value` settings, applied after the file.
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write its checkpoint and log.
    Train(Common),
    /// Certify nodes and print one JSON line per node.
    Certify(Common),
    /// Fractions of certified nodes for Q = 0..Q_max as CSV.
    Curve(Common),
    /// Dump the dual-guided perturbation of one node.
    Attack(Common),
    /// Check the bound chain against LP and enumeration oracles.
    OracleVerify(Common),
    /// Compare loss gradients with finite differences.
    GradCheck(Common),
    /// Write a planted-partition dataset.
    Generate(Common),
}

fn config(common: &Common) -> Result<Config> {
    let mut cfg = match &common.config {
        Some(p) => Config::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => Config::default(),
    };
    for pair in &common.set {
        cfg.set_pair(pair)?;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<bool> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let ok = match &cli.command {
        Command::Train(c) => cli::cmd_train(&config(c)?, &mut out).map(|_| true)?,
        Command::Certify(c) => cli::cmd_certify(&config(c)?, &mut out, &mut io::stderr()).map(|_| true)?,
        Command::Curve(c) => cli::cmd_curve(&config(c)?, &mut out).map(|_| true)?,
        Command::Attack(c) => cli::cmd_attack(&config(c)?, &mut out).map(|_| true)?,
        Command::OracleVerify(c) => cli::cmd_oracle_verify(&config(c)?, &mut out)?,
        Command::GradCheck(c) => cli::cmd_grad_check(&config(c)?, &mut out)?,
        Command::Generate(c) => cli::cmd_generate(&config(c)?, &mut out).map(|_| true)?,
    };
    out.flush()?;
    Ok(ok)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
