//! `sgf` — experiment harness for the semi-grant-free NOMA simulator.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 for numerical
//! failures during training or evaluation.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sgf_core::config::SimConfig;
use sgf_core::harness::{run, RunMode};
use sgf_core::SgfError;

#[derive(Parser)]
#[command(name = "sgf", about = "NOMA-assisted semi-grant-free simulator and RL harness")]
struct Cli {
    #[command(subcommand)]
    mode: Mode,
}

#[derive(Args)]
struct Common {
    /// Flat key=value config file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override single config keys, e.g. --set episodes=100.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Master seed (overrides the config's `seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Output root; the run writes into <out>/<mode>-s<seed>/.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Scheduler policy: fixed:p | adaptive | state-dependent | learned:path.
    #[arg(long)]
    policy: Option<String>,
}

#[derive(Subcommand)]
enum Mode {
    /// Train the lower-level transmission-probability agent (fixed beamforming).
    TrainLower(Common),
    /// Train the hierarchical beamforming + scheduling pair.
    TrainHier(Common),
    /// Evaluate a policy under zero-forcing beamforming on the eval seeds.
    Eval(Common),
    /// Evaluate the baseline policy family, one CSV row per policy per seed.
    Sweep(Common),
    /// Compare the Monte-Carlo simulator against the exact Markov oracle.
    Oracle(Common),
    /// Grow the grant-free population from K to 5K and track throughput.
    Scale(Common),
}

impl Mode {
    fn split(&self) -> (RunMode, &Common) {
        match self {
            Mode::TrainLower(c) => (RunMode::TrainLower, c),
            Mode::TrainHier(c) => (RunMode::TrainHier, c),
            Mode::Eval(c) => (RunMode::Eval, c),
            Mode::Sweep(c) => (RunMode::Sweep, c),
            Mode::Oracle(c) => (RunMode::Oracle, c),
            Mode::Scale(c) => (RunMode::Scale, c),
        }
    }
}

fn build_config(common: &Common) -> sgf_core::Result<SimConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                SgfError::Config(format!("cannot read config {}: {e}", path.display()))
            })?;
            SimConfig::from_text(&text)?
        }
        None => SimConfig::default(),
    };
    for pair in &common.set {
        let (key, value) = pair.split_once('=').ok_or_else(|| {
            SgfError::Config(format!("--set expects key=value, got {pair:?}"))
        })?;
        cfg.set(key.trim(), value.trim())?;
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(policy) = &common.policy {
        cfg.set("policy", policy)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, common) = cli.mode.split();

    let cfg = match build_config(common) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("sgf: {e}");
            return ExitCode::from(2);
        }
    };

    match run(mode, &cfg, &common.out) {
        Ok(dir) => {
            println!("artifacts written to {}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("sgf: {e}");
            let code = match e {
                SgfError::Numerical(_) => 3,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}
