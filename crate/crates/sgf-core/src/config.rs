//! Experiment configuration: flat `key=value` files, CLI overrides, and the
//! derived linear-unit parameter blocks used by the physics and MAC layers.
//!
//! The config struct mirrors the file format (dB/dBm values kept as written so
//! the echo round-trips losslessly); everything downstream works on the
//! [`RadioConfig`] / [`MacConfig`] blocks, which are converted to linear units
//! exactly once.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Result, SgfError};
use crate::mac::CascadeMode;

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Which transmission-probability policy drives the grant-free users.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicySpec {
    Fixed(f64),
    Adaptive,
    StateDependent,
    Learned(String),
}

impl PolicySpec {
    pub fn parse(s: &str) -> Result<Self> {
        if let Some(rest) = s.strip_prefix("fixed:") {
            let p: f64 = rest
                .parse()
                .map_err(|_| SgfError::Config(format!("bad fixed policy probability {rest:?}")))?;
            if !(0.0..=1.0).contains(&p) {
                return Err(SgfError::Config(format!(
                    "fixed policy probability {p} outside [0,1]"
                )));
            }
            return Ok(PolicySpec::Fixed(p));
        }
        if let Some(rest) = s.strip_prefix("learned:") {
            if rest.is_empty() {
                return Err(SgfError::Config("learned policy needs a checkpoint path".into()));
            }
            return Ok(PolicySpec::Learned(rest.to_string()));
        }
        match s {
            "adaptive" => Ok(PolicySpec::Adaptive),
            "state-dependent" => Ok(PolicySpec::StateDependent),
            other => Err(SgfError::Config(format!(
                "unknown policy {other:?} (expected fixed:p | adaptive | state-dependent | learned:path)"
            ))),
        }
    }
}

impl std::fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PolicySpec::Fixed(p) => write!(f, "fixed:{p}"),
            PolicySpec::Adaptive => write!(f, "adaptive"),
            PolicySpec::StateDependent => write!(f, "state-dependent"),
            PolicySpec::Learned(path) => write!(f, "learned:{path}"),
        }
    }
}

/// Hyperparameters of the clipped-surrogate policy optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct PpoConfig {
    pub clip_ratio: f64,
    pub discount: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub epochs: usize,
    pub lower_update_period: usize,
    pub upper_update_period: usize,
    pub batch_capacity: usize,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            clip_ratio: 0.1,
            discount: 0.99,
            actor_lr: 3e-4,
            critic_lr: 1e-3,
            epochs: 5,
            lower_update_period: 128,
            upper_update_period: 4096,
            batch_capacity: 8192,
        }
    }
}

/// Full experiment configuration. Field values keep the units of the config
/// file (dB/dBm where applicable); see [`SimConfig::radio`] and
/// [`SimConfig::mac`] for the linear-unit views.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    // population
    pub num_gbus: usize,
    pub num_gfus: usize,
    pub generation_period: u32,
    // radio
    pub antennas: usize,
    pub rician_factor: f64,
    pub noise_dbm: f64,
    pub gbu_power_dbm: f64,
    pub gfu_max_snr_db: f64,
    pub bandwidth_hz: f64,
    pub target_rate: f64,
    // geometry
    pub placement_std_km: f64,
    pub mobility_std_m: f64,
    pub d_min_m: f64,
    pub pathloss_alpha: f64,
    pub pathloss_ref_db: f64,
    // mac switches
    pub cascade_mode: CascadeMode,
    pub literal_eq13: bool,
    pub max_levels: usize,
    /// When set, the slot supply is a fixed number of always-feasible levels
    /// and the radio layer is bypassed (contention-only world).
    pub fixed_levels: Option<usize>,
    // learning
    pub ppo: PpoConfig,
    pub constraint_penalty: f64,
    pub episode_slots: u32,
    pub episodes: u32,
    // harness
    pub policy: PolicySpec,
    pub eval_seeds: Vec<u64>,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            num_gbus: 3,
            num_gfus: 5,
            generation_period: 3,
            antennas: 3,
            rician_factor: 1.0,
            noise_dbm: -110.0,
            gbu_power_dbm: 23.0,
            gfu_max_snr_db: 130.0,
            bandwidth_hz: 1e6,
            target_rate: 0.5,
            placement_std_km: 1.5,
            mobility_std_m: 50.0,
            d_min_m: 50.0,
            pathloss_alpha: 3.0,
            pathloss_ref_db: -120.0,
            cascade_mode: CascadeMode::PaperLiteral,
            literal_eq13: false,
            max_levels: 32,
            fixed_levels: None,
            ppo: PpoConfig::default(),
            constraint_penalty: 10.0,
            episode_slots: 100,
            episodes: 6000,
            policy: PolicySpec::Adaptive,
            eval_seeds: vec![1, 2, 3, 4, 5, 6, 7, 8, 9, 10],
            seed: 1,
        }
    }
}

/// Linear-unit radio parameters shared by the channel and MAC layers.
#[derive(Debug, Clone)]
pub struct RadioConfig {
    pub antennas: usize,
    pub rician_factor: f64,
    /// Noise power in watts.
    pub noise: f64,
    /// Grant-based user transmit power in watts.
    pub gbu_power: f64,
    /// Grant-free user's maximum transmit SNR, linear.
    pub gfu_max_snr: f64,
    pub bandwidth_hz: f64,
    /// Target rate R-hat in bits/s/Hz.
    pub target_rate: f64,
    pub placement_std_km: f64,
    pub mobility_std_km: f64,
    pub d_min_km: f64,
    pub pathloss_alpha: f64,
    /// Linear path gain at the reference distance.
    pub pathloss_ref: f64,
    pub pathloss_ref_km: f64,
}

/// MAC-layer switches, in linear units.
#[derive(Debug, Clone)]
pub struct MacConfig {
    pub noise: f64,
    pub gbu_power: f64,
    pub target_rate: f64,
    pub gfu_max_snr: f64,
    pub cascade_mode: CascadeMode,
    pub literal_eq13: bool,
    pub max_levels: usize,
}

impl SimConfig {
    pub fn radio(&self) -> RadioConfig {
        RadioConfig {
            antennas: self.antennas,
            rician_factor: self.rician_factor,
            noise: dbm_to_watts(self.noise_dbm),
            gbu_power: dbm_to_watts(self.gbu_power_dbm),
            gfu_max_snr: db_to_linear(self.gfu_max_snr_db),
            bandwidth_hz: self.bandwidth_hz,
            target_rate: self.target_rate,
            placement_std_km: self.placement_std_km,
            mobility_std_km: self.mobility_std_m / 1000.0,
            d_min_km: self.d_min_m / 1000.0,
            pathloss_alpha: self.pathloss_alpha,
            pathloss_ref: db_to_linear(self.pathloss_ref_db),
            pathloss_ref_km: 1.0,
        }
    }

    pub fn mac(&self) -> MacConfig {
        MacConfig {
            noise: dbm_to_watts(self.noise_dbm),
            gbu_power: dbm_to_watts(self.gbu_power_dbm),
            target_rate: self.target_rate,
            gfu_max_snr: db_to_linear(self.gfu_max_snr_db),
            cascade_mode: self.cascade_mode,
            literal_eq13: self.literal_eq13,
            max_levels: self.max_levels,
        }
    }

    /// Parse a flat `key=value` config file. `#` starts a comment; blank lines
    /// are ignored. Unknown keys are rejected.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = SimConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                SgfError::Config(format!("line {}: expected key=value, got {raw:?}", lineno + 1))
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Apply a single `key=value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| SgfError::Config(format!("bad value {value:?} for key {key}")))
        }
        match key {
            "num_gbus" => self.num_gbus = num(key, value)?,
            "num_gfus" => self.num_gfus = num(key, value)?,
            "generation_period" => self.generation_period = num(key, value)?,
            "antennas" => self.antennas = num(key, value)?,
            "rician_factor" => self.rician_factor = num(key, value)?,
            "noise_dbm" => self.noise_dbm = num(key, value)?,
            "gbu_power_dbm" => self.gbu_power_dbm = num(key, value)?,
            "gfu_max_snr_db" => self.gfu_max_snr_db = num(key, value)?,
            "bandwidth_hz" => self.bandwidth_hz = num(key, value)?,
            "target_rate" => self.target_rate = num(key, value)?,
            "placement_std_km" => self.placement_std_km = num(key, value)?,
            "mobility_std_m" => self.mobility_std_m = num(key, value)?,
            "d_min_m" => self.d_min_m = num(key, value)?,
            "pathloss_alpha" => self.pathloss_alpha = num(key, value)?,
            "pathloss_ref_db" => self.pathloss_ref_db = num(key, value)?,
            "cascade_mode" => self.cascade_mode = CascadeMode::parse(value)?,
            "literal_eq13" => self.literal_eq13 = num(key, value)?,
            "max_levels" => self.max_levels = num(key, value)?,
            "fixed_levels" => {
                self.fixed_levels = if value == "none" {
                    None
                } else {
                    Some(num(key, value)?)
                }
            }
            "clip_ratio" => self.ppo.clip_ratio = num(key, value)?,
            "discount" => self.ppo.discount = num(key, value)?,
            "actor_lr" => self.ppo.actor_lr = num(key, value)?,
            "critic_lr" => self.ppo.critic_lr = num(key, value)?,
            "epochs" => self.ppo.epochs = num(key, value)?,
            "lower_update_period" => self.ppo.lower_update_period = num(key, value)?,
            "upper_update_period" => self.ppo.upper_update_period = num(key, value)?,
            "batch_capacity" => self.ppo.batch_capacity = num(key, value)?,
            "constraint_penalty" => self.constraint_penalty = num(key, value)?,
            "episode_slots" => self.episode_slots = num(key, value)?,
            "episodes" => self.episodes = num(key, value)?,
            "policy" => self.policy = PolicySpec::parse(value)?,
            "eval_seeds" => {
                let mut seeds = Vec::new();
                for part in value.split(',').filter(|p| !p.trim().is_empty()) {
                    seeds.push(num::<u64>(key, part.trim())?);
                }
                self.eval_seeds = seeds;
            }
            "seed" => self.seed = num(key, value)?,
            other => return Err(SgfError::Config(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(SgfError::Config(msg));
        if self.num_gbus == 0 {
            return fail("num_gbus must be >= 1".into());
        }
        if self.num_gfus == 0 {
            return fail("num_gfus must be >= 1".into());
        }
        if self.generation_period == 0 {
            return fail("generation_period must be >= 1".into());
        }
        if self.antennas == 0 {
            return fail("antennas must be >= 1".into());
        }
        if self.rician_factor < 0.0 {
            return fail("rician_factor must be >= 0".into());
        }
        if self.placement_std_km <= 0.0 {
            return fail("placement_std_km must be > 0".into());
        }
        if self.mobility_std_m < 0.0 || self.d_min_m < 0.0 {
            return fail("mobility_std_m and d_min_m must be >= 0".into());
        }
        if self.target_rate <= 0.0 {
            return fail("target_rate must be > 0".into());
        }
        if !(0.0 < self.ppo.clip_ratio && self.ppo.clip_ratio < 1.0) {
            return fail(format!("clip_ratio {} outside (0,1)", self.ppo.clip_ratio));
        }
        if !(0.0 < self.ppo.discount && self.ppo.discount <= 1.0) {
            return fail(format!("discount {} outside (0,1]", self.ppo.discount));
        }
        if self.ppo.actor_lr <= 0.0 || self.ppo.critic_lr <= 0.0 {
            return fail("learning rates must be > 0".into());
        }
        if self.ppo.epochs == 0
            || self.ppo.lower_update_period == 0
            || self.ppo.upper_update_period == 0
        {
            return fail("epochs and update periods must be >= 1".into());
        }
        if self.episode_slots == 0 {
            return fail("episode_slots must be >= 1".into());
        }
        if self.ppo.batch_capacity < self.ppo.lower_update_period.max(self.ppo.upper_update_period)
        {
            return fail(format!(
                "batch_capacity {} below the largest update period",
                self.ppo.batch_capacity
            ));
        }
        if let PolicySpec::Fixed(p) = self.policy {
            if !(0.0..=1.0).contains(&p) {
                return fail(format!("fixed policy probability {p} outside [0,1]"));
            }
        }
        Ok(())
    }

    /// Canonical serialization: sorted `key=value` lines. Parsing the echo
    /// reproduces the config exactly.
    pub fn echo(&self) -> String {
        let mut map: BTreeMap<&str, String> = BTreeMap::new();
        map.insert("num_gbus", self.num_gbus.to_string());
        map.insert("num_gfus", self.num_gfus.to_string());
        map.insert("generation_period", self.generation_period.to_string());
        map.insert("antennas", self.antennas.to_string());
        map.insert("rician_factor", self.rician_factor.to_string());
        map.insert("noise_dbm", self.noise_dbm.to_string());
        map.insert("gbu_power_dbm", self.gbu_power_dbm.to_string());
        map.insert("gfu_max_snr_db", self.gfu_max_snr_db.to_string());
        map.insert("bandwidth_hz", self.bandwidth_hz.to_string());
        map.insert("target_rate", self.target_rate.to_string());
        map.insert("placement_std_km", self.placement_std_km.to_string());
        map.insert("mobility_std_m", self.mobility_std_m.to_string());
        map.insert("d_min_m", self.d_min_m.to_string());
        map.insert("pathloss_alpha", self.pathloss_alpha.to_string());
        map.insert("pathloss_ref_db", self.pathloss_ref_db.to_string());
        map.insert("cascade_mode", self.cascade_mode.to_string());
        map.insert("literal_eq13", self.literal_eq13.to_string());
        map.insert("max_levels", self.max_levels.to_string());
        map.insert(
            "fixed_levels",
            self.fixed_levels.map_or("none".to_string(), |n| n.to_string()),
        );
        map.insert("clip_ratio", self.ppo.clip_ratio.to_string());
        map.insert("discount", self.ppo.discount.to_string());
        map.insert("actor_lr", self.ppo.actor_lr.to_string());
        map.insert("critic_lr", self.ppo.critic_lr.to_string());
        map.insert("epochs", self.ppo.epochs.to_string());
        map.insert("lower_update_period", self.ppo.lower_update_period.to_string());
        map.insert("upper_update_period", self.ppo.upper_update_period.to_string());
        map.insert("batch_capacity", self.ppo.batch_capacity.to_string());
        map.insert("constraint_penalty", self.constraint_penalty.to_string());
        map.insert("episode_slots", self.episode_slots.to_string());
        map.insert("episodes", self.episodes.to_string());
        map.insert("policy", self.policy.to_string());
        map.insert(
            "eval_seeds",
            self.eval_seeds
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        map.insert("seed", self.seed.to_string());
        let mut out = String::new();
        for (k, v) in map {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    /// FNV-1a hash of the canonical echo, stored in checkpoints so runs can be
    /// traced back to the exact configuration that produced them.
    pub fn hash(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        for b in self.echo().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }
}
