//! Versioned agent checkpoints: architecture descriptor, all weights as f64,
//! optimizer state, config hash, and the agent's random-stream position.
//! Loading rejects version or architecture mismatches.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::config::{PpoConfig, SimConfig};
use crate::error::{Result, SgfError};
use crate::nn::{Featurize, GaussianActor, Squash, ValueNet};
use crate::ppo::PpoAgent;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchDescriptor {
    pub state_dim: usize,
    pub action_dim: usize,
    pub hidden: Vec<usize>,
    pub squash: Squash,
    pub featurize: Featurize,
}

impl ArchDescriptor {
    pub fn of_actor(actor: &GaussianActor) -> Self {
        let sizes = &actor.net.sizes;
        ArchDescriptor {
            state_dim: sizes[0],
            action_dim: *sizes.last().unwrap(),
            hidden: sizes[1..sizes.len() - 1].to_vec(),
            squash: actor.squash,
            featurize: actor.featurize,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RngState {
    seed: [u8; 32],
    word_pos: u128,
    stream: u64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    version: u32,
    arch: ArchDescriptor,
    actor: GaussianActor,
    critic: ValueNet,
    opt_actor: crate::nn::Adam,
    opt_critic: crate::nn::Adam,
    ppo: PpoSnapshot,
    update_period: usize,
    updates_done: u64,
    config_hash: u64,
    rng: RngState,
}

/// Serializable mirror of the live PPO configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct PpoSnapshot {
    clip_ratio: f64,
    discount: f64,
    actor_lr: f64,
    critic_lr: f64,
    epochs: usize,
    lower_update_period: usize,
    upper_update_period: usize,
    batch_capacity: usize,
}

impl From<&PpoConfig> for PpoSnapshot {
    fn from(c: &PpoConfig) -> Self {
        PpoSnapshot {
            clip_ratio: c.clip_ratio,
            discount: c.discount,
            actor_lr: c.actor_lr,
            critic_lr: c.critic_lr,
            epochs: c.epochs,
            lower_update_period: c.lower_update_period,
            upper_update_period: c.upper_update_period,
            batch_capacity: c.batch_capacity,
        }
    }
}

impl From<&PpoSnapshot> for PpoConfig {
    fn from(s: &PpoSnapshot) -> Self {
        PpoConfig {
            clip_ratio: s.clip_ratio,
            discount: s.discount,
            actor_lr: s.actor_lr,
            critic_lr: s.critic_lr,
            epochs: s.epochs,
            lower_update_period: s.lower_update_period,
            upper_update_period: s.upper_update_period,
            batch_capacity: s.batch_capacity,
        }
    }
}

/// Write the agent to `path` as a self-describing JSON container.
pub fn save_agent(agent: &PpoAgent, cfg: &SimConfig, path: &Path) -> Result<()> {
    let ckpt = Checkpoint {
        version: CHECKPOINT_VERSION,
        arch: ArchDescriptor::of_actor(&agent.actor),
        actor: agent.actor.clone(),
        critic: agent.critic.clone(),
        opt_actor: agent.opt_actor.clone(),
        opt_critic: agent.opt_critic.clone(),
        ppo: PpoSnapshot::from(&agent.cfg),
        update_period: agent.update_period,
        updates_done: agent.updates_done,
        config_hash: cfg.hash(),
        rng: RngState {
            seed: agent.rng.get_seed(),
            word_pos: agent.rng.get_word_pos(),
            stream: agent.rng.get_stream(),
        },
    };
    let json = serde_json::to_string(&ckpt)
        .map_err(|e| SgfError::Checkpoint(format!("serialize failed: {e}")))?;
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, json)?;
    Ok(())
}

/// Load an agent, verifying the container version and that the stored
/// architecture matches `expected` when one is supplied.
pub fn load_agent(path: &Path, expected: Option<&ArchDescriptor>) -> Result<PpoAgent> {
    let raw = std::fs::read_to_string(path)?;
    let ckpt: Checkpoint = serde_json::from_str(&raw)
        .map_err(|e| SgfError::Checkpoint(format!("parse failed for {}: {e}", path.display())))?;
    if ckpt.version != CHECKPOINT_VERSION {
        return Err(SgfError::Checkpoint(format!(
            "unsupported checkpoint version {} (expected {})",
            ckpt.version, CHECKPOINT_VERSION
        )));
    }
    if let Some(expected) = expected {
        if *expected != ckpt.arch {
            return Err(SgfError::Checkpoint(format!(
                "architecture mismatch: checkpoint {:?} vs expected {:?}",
                ckpt.arch, expected
            )));
        }
    }
    let mut rng = ChaCha12Rng::from_seed(ckpt.rng.seed);
    rng.set_stream(ckpt.rng.stream);
    rng.set_word_pos(ckpt.rng.word_pos);
    let mut agent = PpoAgent::new(
        ckpt.actor,
        ckpt.critic,
        PpoConfig::from(&ckpt.ppo),
        ckpt.update_period,
        rng,
    );
    agent.opt_actor = ckpt.opt_actor;
    agent.opt_critic = ckpt.opt_critic;
    agent.updates_done = ckpt.updates_done;
    Ok(agent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::train::build_lower_agent;

    #[test]
    fn checkpoint_round_trip_preserves_everything() {
        let cfg = SimConfig::default();
        let mut agent = build_lower_agent(&cfg, 42);
        // Move the rng and optimizer state off their initial values.
        let _ = agent.act(&vec![1.0; cfg.num_gfus]);
        let dir = std::env::temp_dir().join("sgf-ckpt-test");
        let path = dir.join("lower.json");
        save_agent(&agent, &cfg, &path).unwrap();
        let loaded = load_agent(&path, Some(&ArchDescriptor::of_actor(&agent.actor))).unwrap();
        assert_eq!(agent.actor, loaded.actor);
        assert_eq!(agent.critic, loaded.critic);
        assert_eq!(agent.opt_actor, loaded.opt_actor);
        // The restored stream continues identically.
        let mut a = agent;
        let mut b = loaded;
        let sa = a.act(&vec![2.0; cfg.num_gfus]);
        let sb = b.act(&vec![2.0; cfg.num_gfus]);
        assert_eq!(sa.action, sb.action);
        std::fs::remove_dir_all(dir).ok();
    }

    #[test]
    fn mismatched_architecture_is_rejected() {
        let cfg = SimConfig::default();
        let agent = build_lower_agent(&cfg, 1);
        let dir = std::env::temp_dir().join("sgf-ckpt-test-mismatch");
        let path = dir.join("lower.json");
        save_agent(&agent, &cfg, &path).unwrap();
        let mut wrong = ArchDescriptor::of_actor(&agent.actor);
        wrong.state_dim += 1;
        assert!(matches!(
            load_agent(&path, Some(&wrong)),
            Err(SgfError::Checkpoint(_))
        ));
        std::fs::remove_dir_all(dir).ok();
    }
}
