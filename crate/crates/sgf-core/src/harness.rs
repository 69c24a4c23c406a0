//! Experiment orchestration: resolves a configuration into a mode-specific
//! run, and writes the artifact directory (`config.echo`, CSV metrics,
//! checkpoints, SVG plots). Runs are deterministic: identical config and seed
//! produce byte-identical artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::baselines::BaselineKind;
use crate::checkpoint::{load_agent, save_agent, ArchDescriptor};
use crate::config::{PolicySpec, SimConfig};
use crate::env::{ContentionEnv, RadioEnv, SlotRecord};
use crate::error::{Result, SgfError};
use crate::oracle::{compare_sim_to_oracle, oracle_suite};
use crate::ppo::PpoAgent;
use crate::svg::line_plot;
use crate::train::{
    build_lower_agent, build_upper_agent, evaluate_radio, train_hierarchical, train_lower,
    Beamformer, EpisodeMetrics, TpPolicy,
};

/// Experiment mode selected on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    TrainLower,
    TrainHier,
    Eval,
    Sweep,
    Oracle,
    Scale,
}

impl RunMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "train-lower" => Ok(RunMode::TrainLower),
            "train-hier" => Ok(RunMode::TrainHier),
            "eval" => Ok(RunMode::Eval),
            "sweep" => Ok(RunMode::Sweep),
            "oracle" => Ok(RunMode::Oracle),
            "scale" => Ok(RunMode::Scale),
            other => Err(SgfError::Config(format!("unknown mode {other:?}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RunMode::TrainLower => "train-lower",
            RunMode::TrainHier => "train-hier",
            RunMode::Eval => "eval",
            RunMode::Sweep => "sweep",
            RunMode::Oracle => "oracle",
            RunMode::Scale => "scale",
        }
    }
}

/// Number of Monte-Carlo slots per oracle comparison.
pub const ORACLE_SLOTS: u64 = 1_000_000;

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

fn metrics_csv(log: &[EpisodeMetrics]) -> String {
    let mut out = String::from("episode,mean_aoi,throughput,upper_loss,lower_loss,clip_fraction\n");
    for m in log {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            m.episode, m.mean_aoi, m.throughput, m.upper_loss, m.lower_loss, m.clip_fraction
        );
    }
    out
}

fn slots_csv_header() -> &'static str {
    "slot,n_levels,n_attempts,n_success,collision,sum_gbu_rate,sum_gfu_rate\n"
}

fn slots_csv_row(out: &mut String, rec: &SlotRecord) {
    let _ = writeln!(
        out,
        "{},{},{},{},{},{},{}",
        rec.slot,
        rec.n_levels,
        rec.outcome.attempts.len(),
        rec.outcome.successes.len(),
        rec.outcome.collision as u8,
        rec.outcome.sum_gbu_rate(),
        rec.outcome.sum_gfu_rate()
    );
}

fn aoi_csv_header() -> &'static str {
    "slot,mean_age,max_age,n_waiting\n"
}

fn aoi_csv_row(out: &mut String, rec: &SlotRecord) {
    let _ = writeln!(
        out,
        "{},{},{},{}",
        rec.slot, rec.mean_age, rec.max_age, rec.n_waiting
    );
}

fn write_training_plots(dir: &Path, log: &[EpisodeMetrics]) -> Result<()> {
    let aoi: Vec<f64> = log.iter().map(|m| m.mean_aoi).collect();
    let thpt: Vec<f64> = log.iter().map(|m| m.throughput).collect();
    write_file(
        &dir.join("plots/aoi.svg"),
        &line_plot("mean AoI per episode", "episode", "mean AoI [slots]", &aoi),
    )?;
    write_file(
        &dir.join("plots/throughput.svg"),
        &line_plot(
            "episode throughput",
            "episode",
            "throughput [bits/s/Hz]",
            &thpt,
        ),
    )?;
    Ok(())
}

/// Resolve the transmission-probability policy for evaluation, loading a
/// checkpoint when the config names one.
fn resolve_policy<'a>(
    cfg: &SimConfig,
    slot: &'a mut Option<PpoAgent>,
) -> Result<TpPolicy<'a>> {
    match &cfg.policy {
        PolicySpec::Fixed(p) => Ok(TpPolicy::Baseline(BaselineKind::Fixed(*p))),
        PolicySpec::Adaptive => Ok(TpPolicy::Baseline(BaselineKind::Adaptive)),
        PolicySpec::StateDependent => Ok(TpPolicy::Baseline(BaselineKind::StateDependent)),
        PolicySpec::Learned(path) => {
            let expected = ArchDescriptor::of_actor(&build_lower_agent(cfg, 0).actor);
            *slot = Some(load_agent(Path::new(path), Some(&expected))?);
            Ok(TpPolicy::Learned(&slot.as_ref().unwrap().actor))
        }
    }
}

/// Execute the selected mode and return the artifact directory.
pub fn run(mode: RunMode, cfg: &SimConfig, out_root: &Path) -> Result<PathBuf> {
    cfg.validate()?;
    let dir = out_root.join(format!("{}-s{}", mode.name(), cfg.seed));
    fs::create_dir_all(&dir)?;
    write_file(&dir.join("config.echo"), &cfg.echo())?;

    match mode {
        RunMode::TrainLower => run_train_lower(cfg, &dir)?,
        RunMode::TrainHier => run_train_hier(cfg, &dir)?,
        RunMode::Eval => run_eval(cfg, &dir)?,
        RunMode::Sweep => run_sweep(cfg, &dir)?,
        RunMode::Oracle => run_oracle(cfg, &dir)?,
        RunMode::Scale => run_scale(cfg, &dir)?,
    }
    Ok(dir)
}

fn run_train_lower(cfg: &SimConfig, dir: &Path) -> Result<()> {
    let mut agent = build_lower_agent(cfg, cfg.seed ^ 0xa5a5_5a5a);
    let log = match cfg.fixed_levels {
        Some(n) => {
            let mut world = ContentionEnv::new(
                n,
                cfg.num_gfus,
                cfg.generation_period,
                ChaCha12Rng::seed_from_u64(cfg.seed),
            );
            train_lower(&mut world, &mut agent, cfg.episodes, cfg.episode_slots)?
        }
        None => {
            let mut world = RadioEnv::new(cfg, ChaCha12Rng::seed_from_u64(cfg.seed));
            train_lower(&mut world, &mut agent, cfg.episodes, cfg.episode_slots)?
        }
    };
    write_file(&dir.join("metrics.csv"), &metrics_csv(&log))?;
    write_training_plots(dir, &log)?;
    save_agent(&agent, cfg, &dir.join("checkpoints/lower.json"))?;
    Ok(())
}

fn run_train_hier(cfg: &SimConfig, dir: &Path) -> Result<()> {
    let mut env = RadioEnv::new(cfg, ChaCha12Rng::seed_from_u64(cfg.seed));
    let mut upper = build_upper_agent(cfg, cfg.seed ^ 0x0f0f_f0f0);
    let mut lower = build_lower_agent(cfg, cfg.seed ^ 0xa5a5_5a5a);
    let log = train_hierarchical(&mut env, &mut upper, &mut lower, cfg.episodes, cfg.episode_slots)?;
    write_file(&dir.join("metrics.csv"), &metrics_csv(&log))?;
    write_training_plots(dir, &log)?;
    save_agent(&upper, cfg, &dir.join("checkpoints/upper.json"))?;
    save_agent(&lower, cfg, &dir.join("checkpoints/lower.json"))?;
    Ok(())
}

fn run_eval(cfg: &SimConfig, dir: &Path) -> Result<()> {
    let mut loaded = None;
    let policy = resolve_policy(cfg, &mut loaded)?;
    let mut slots = String::from(slots_csv_header());
    let mut aoi = String::from(aoi_csv_header());
    let mut summary = String::from("seed,mean_aoi,throughput\n");
    let mut per_episode_all = Vec::new();
    for &seed in &cfg.eval_seeds {
        let mut env = RadioEnv::new(cfg, ChaCha12Rng::seed_from_u64(seed));
        let mut on_slot = |rec: &SlotRecord| {
            slots_csv_row(&mut slots, rec);
            aoi_csv_row(&mut aoi, rec);
        };
        let summary_result = evaluate_radio(
            &mut env,
            &Beamformer::ZeroForcing,
            &policy,
            cfg.episodes,
            cfg.episode_slots,
            Some(&mut on_slot),
        )?;
        let _ = writeln!(
            summary,
            "{},{},{}",
            seed, summary_result.mean_aoi, summary_result.episode_throughput
        );
        per_episode_all.extend(summary_result.per_episode);
    }
    write_file(&dir.join("slots.csv"), &slots)?;
    write_file(&dir.join("aoi.csv"), &aoi)?;
    write_file(&dir.join("summary.csv"), &summary)?;
    write_training_plots(dir, &per_episode_all)?;
    Ok(())
}

fn run_sweep(cfg: &SimConfig, dir: &Path) -> Result<()> {
    let policies = [
        BaselineKind::Fixed(0.2),
        BaselineKind::Adaptive,
        BaselineKind::StateDependent,
    ];
    let mut out = String::from("policy,seed,mean_aoi,throughput\n");
    for policy in policies {
        for &seed in &cfg.eval_seeds {
            let mut env = RadioEnv::new(cfg, ChaCha12Rng::seed_from_u64(seed));
            let summary = evaluate_radio(
                &mut env,
                &Beamformer::ZeroForcing,
                &TpPolicy::Baseline(policy),
                cfg.episodes,
                cfg.episode_slots,
                None,
            )?;
            let _ = writeln!(
                out,
                "{policy},{seed},{},{}",
                summary.mean_aoi, summary.episode_throughput
            );
        }
    }
    write_file(&dir.join("sweep.csv"), &out)?;
    Ok(())
}

fn run_oracle(cfg: &SimConfig, dir: &Path) -> Result<()> {
    let mut out =
        String::from("num_gfus,n_levels,policy,generation_period,exact,simulated,rel_deviation,seconds\n");
    for spec in oracle_suite() {
        let started = Instant::now();
        let cmp = compare_sim_to_oracle(&spec, ORACLE_SLOTS, cfg.seed)?;
        let seconds = started.elapsed().as_secs_f64();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{:.3}",
            spec.num_gfus,
            spec.n_levels,
            spec.policy,
            spec.generation_period,
            cmp.exact,
            cmp.simulated,
            cmp.rel_deviation,
            seconds
        );
    }
    write_file(&dir.join("oracle.csv"), &out)?;
    Ok(())
}

fn run_scale(cfg: &SimConfig, dir: &Path) -> Result<()> {
    let k = cfg.num_gbus;
    let mut out = String::from("num_gfus,throughput,gain_pct\n");
    let mut baseline = None;
    for multiple in 1..=5usize {
        let mut scaled = cfg.clone();
        scaled.num_gfus = k * multiple;
        let mut env = RadioEnv::new(&scaled, ChaCha12Rng::seed_from_u64(scaled.seed));
        let mut upper = build_upper_agent(&scaled, scaled.seed ^ 0x0f0f_f0f0);
        let mut lower = build_lower_agent(&scaled, scaled.seed ^ 0xa5a5_5a5a);
        train_hierarchical(
            &mut env,
            &mut upper,
            &mut lower,
            scaled.episodes,
            scaled.episode_slots,
        )?;
        let throughput = evaluate_trained_pair(&scaled, &upper, &lower)?;
        let gain = match baseline {
            None => {
                baseline = Some(throughput);
                0.0
            }
            Some(b) => 100.0 * (throughput - b) / b,
        };
        let _ = writeln!(out, "{},{},{}", scaled.num_gfus, throughput, gain);
    }
    write_file(&dir.join("scale.csv"), &out)?;
    Ok(())
}

/// Deterministic evaluation of a trained hierarchical pair over the config's
/// eval seeds; returns the mean episode throughput.
pub fn evaluate_trained_pair(cfg: &SimConfig, upper: &PpoAgent, lower: &PpoAgent) -> Result<f64> {
    let mut acc = 0.0;
    for &seed in &cfg.eval_seeds {
        let mut env = RadioEnv::new(cfg, ChaCha12Rng::seed_from_u64(seed));
        let summary = evaluate_radio(
            &mut env,
            &Beamformer::Learned(&upper.actor),
            &TpPolicy::Learned(&lower.actor),
            cfg.episodes.min(20),
            cfg.episode_slots,
            None,
        )?;
        acc += summary.episode_throughput;
    }
    Ok(acc / cfg.eval_seeds.len().max(1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_cfg() -> SimConfig {
        let mut cfg = SimConfig::default();
        cfg.num_gbus = 2;
        cfg.num_gfus = 3;
        cfg.antennas = 2;
        cfg.episodes = 2;
        cfg.episode_slots = 30;
        cfg.eval_seeds = vec![1, 2];
        cfg.ppo.lower_update_period = 32;
        cfg.ppo.upper_update_period = 64;
        cfg
    }

    #[test]
    fn eval_run_is_byte_reproducible() {
        let cfg = tiny_cfg();
        let root = std::env::temp_dir().join("sgf-harness-test");
        fs::remove_dir_all(&root).ok();
        let d1 = run(RunMode::Eval, &cfg, &root.join("a")).unwrap();
        let d2 = run(RunMode::Eval, &cfg, &root.join("b")).unwrap();
        for file in ["config.echo", "slots.csv", "aoi.csv", "summary.csv"] {
            let a = fs::read(d1.join(file)).unwrap();
            let b = fs::read(d2.join(file)).unwrap();
            assert_eq!(a, b, "{file} differs between identical runs");
        }
        fs::remove_dir_all(&root).ok();
    }

    #[test]
    fn config_echo_lands_in_artifact_dir() {
        let cfg = tiny_cfg();
        let root = std::env::temp_dir().join("sgf-harness-echo");
        fs::remove_dir_all(&root).ok();
        let dir = run(RunMode::Sweep, &cfg, &root).unwrap();
        let echoed = fs::read_to_string(dir.join("config.echo")).unwrap();
        let parsed = SimConfig::from_text(&echoed).unwrap();
        assert_eq!(parsed, cfg);
        let sweep = fs::read_to_string(dir.join("sweep.csv")).unwrap();
        // one row per policy per seed plus header
        assert_eq!(sweep.lines().count(), 1 + 3 * cfg.eval_seeds.len());
        fs::remove_dir_all(&root).ok();
    }

    #[test]
    fn train_lower_writes_checkpoint_and_metrics() {
        let mut cfg = tiny_cfg();
        cfg.fixed_levels = Some(2);
        let root = std::env::temp_dir().join("sgf-harness-train");
        fs::remove_dir_all(&root).ok();
        let dir = run(RunMode::TrainLower, &cfg, &root).unwrap();
        assert!(dir.join("checkpoints/lower.json").exists());
        let metrics = fs::read_to_string(dir.join("metrics.csv")).unwrap();
        assert_eq!(metrics.lines().count(), 1 + cfg.episodes as usize);
        assert!(dir.join("plots/aoi.svg").exists());
        fs::remove_dir_all(&root).ok();
    }
}
