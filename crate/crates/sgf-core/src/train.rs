//! Training loops: the standalone lower-level scheduler (fixed zero-forcing
//! combiner or a fixed level supply) and the hierarchical two-agent scheme
//! where an upper-level policy maps CSI to the detection matrix every slot and
//! a lower-level policy schedules grant-free attempts, each updated at its own
//! period.

use rand_chacha::ChaCha12Rng;

use crate::baselines::BaselineKind;
use crate::config::SimConfig;
use crate::env::{LowerObs, LowerWorld, RadioEnv};
use crate::error::Result;
use crate::mac::DetectionMatrix;
use crate::nn::{Featurize, GaussianActor, Squash, ValueNet};
use crate::ppo::{PpoAgent, Transition};

/// Hidden architecture shared by every actor and critic.
pub const HIDDEN: [usize; 2] = [64, 64];

/// Per-episode training/evaluation metrics.
#[derive(Debug, Clone, Copy)]
pub struct EpisodeMetrics {
    pub episode: u32,
    /// Mean over slots of the post-update population mean age.
    pub mean_aoi: f64,
    /// Episode throughput: sum over slots of the slot throughput, bits/s/Hz.
    pub throughput: f64,
    pub upper_loss: f64,
    pub lower_loss: f64,
    pub clip_fraction: f64,
}

/// Lower-agent factory: state is the per-user age vector, action a single
/// probability. Users are exchangeable, so the front end sorts the ages into
/// canonical order and compresses them by a fixed 1/10 scale to keep the tanh
/// layers responsive over the usual age range.
pub fn build_lower_agent(cfg: &SimConfig, seed: u64) -> PpoAgent {
    let featurize = Featurize::SortedScale(0.1);
    let mut init_rng = ChaCha12Rng::seed_from_u64(seed);
    let mut actor = GaussianActor::new(
        cfg.num_gfus,
        1,
        &HIDDEN,
        Squash::UnitInterval,
        featurize,
        &mut init_rng,
    );
    // Start near always-transmit (the sensible default for a fresh
    // scheduler); training moves the probability down where collisions bite.
    *actor.net.biases.last_mut().unwrap() = vec![3.0];
    let critic = ValueNet::new(cfg.num_gfus, &HIDDEN, featurize, &mut init_rng);
    PpoAgent::new(
        actor,
        critic,
        cfg.ppo.clone(),
        cfg.ppo.lower_update_period,
        ChaCha12Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15),
    )
}

/// Upper-agent factory: state is the flattened GBU CSI (2*K*A reals whose
/// magnitude spans the path-loss dynamic range). The front end compresses the
/// raw entries and adds the per-user MMSE combiner computed from the same CSI
/// as pass-through features; the policy emits the detection matrix entries.
pub fn build_upper_agent(cfg: &SimConfig, seed: u64) -> PpoAgent {
    let dim = 2 * cfg.num_gbus * cfg.antennas;
    let radio = cfg.radio();
    let featurize = Featurize::BeamContext {
        num_gbus: cfg.num_gbus,
        antennas: cfg.antennas,
        csi_scale: radio.pathloss_ref.sqrt(),
        gbu_power: radio.gbu_power,
        noise: radio.noise,
    };
    let mut init_rng = ChaCha12Rng::seed_from_u64(seed);
    let actor = GaussianActor::new(
        dim,
        dim,
        &HIDDEN,
        Squash::SymmetricUnit,
        featurize,
        &mut init_rng,
    );
    let critic = ValueNet::new(dim, &HIDDEN, featurize, &mut init_rng);
    let mut agent = PpoAgent::new(
        actor,
        critic,
        cfg.ppo.clone(),
        cfg.ppo.upper_update_period,
        ChaCha12Rng::seed_from_u64(seed ^ 0x6a09e667f3bcc909),
    );
    warm_start_passthrough(&mut agent.actor);
    agent
}

use rand::SeedableRng;

/// Point the upper policy's mean at the MMSE pass-through before training:
/// the first-layer rows 0..d read the combiner features with a small gain
/// (keeping the tanh layers near their linear range), the second layer relays
/// them, and the output layer rescales so the initial policy mean reproduces
/// the classical combiner. Training then refines from a working receiver
/// instead of a random one. Rows and columns outside the relay keep their
/// random initialization so gradient ascent can recruit them.
pub fn warm_start_passthrough(actor: &mut GaussianActor) {
    let dim = actor.action_dim();
    let sizes = actor.net.sizes.clone();
    assert_eq!(sizes[0], 2 * dim, "pass-through expects [csi, combiner] features");
    assert!(sizes[1] >= dim && sizes[2] >= dim);
    let gain = 0.2;
    let relay = {
        let ref_point: f64 = 1.5;
        ref_point / (gain * ref_point).tanh().tanh()
    };

    // layer 0: hidden unit i relays combiner feature i (offset dim)
    let n_in = sizes[0];
    for i in 0..dim {
        for j in 0..n_in {
            actor.net.weights[0][i * n_in + j] = if j == dim + i { gain } else { 0.0 };
        }
    }
    // layer 1: identity relay on the first dim units
    let n_in = sizes[1];
    for i in 0..dim {
        for j in 0..n_in {
            actor.net.weights[1][i * n_in + j] = if j == i { 1.0 } else { 0.0 };
        }
    }
    // output layer: rescale the doubly-compressed relay back to feature scale
    let n_in = sizes[2];
    let last = actor.net.num_layers() - 1;
    for i in 0..dim {
        for j in 0..n_in {
            actor.net.weights[last][i * n_in + j] = if j == i { relay } else { 0.0 };
        }
    }
}

/// Train the lower-level scheduler alone. Returns one metrics row per episode.
pub fn train_lower<W: LowerWorld>(
    world: &mut W,
    agent: &mut PpoAgent,
    episodes: u32,
    slots_per_episode: u32,
) -> Result<Vec<EpisodeMetrics>> {
    let mut log = Vec::with_capacity(episodes as usize);
    for episode in 0..episodes {
        world.reset();
        let mut age_acc = 0.0;
        let mut thpt_acc = 0.0;
        for _ in 0..slots_per_episode {
            let obs = world.begin_slot();
            let state = obs.ages;
            let sample = agent.act(&state);
            let rec = world.finish_slot(sample.action[0])?;
            let next_state: Vec<f64> = rec_ages(world);
            agent.record(Transition {
                state,
                action: sample.action,
                presquash: sample.presquash,
                reward: rec.lower_reward,
                next_state,
                log_prob_old: sample.log_prob,
            });
            agent.maybe_update()?;
            age_acc += rec.mean_age;
            thpt_acc += rec.throughput;
        }
        log.push(EpisodeMetrics {
            episode,
            mean_aoi: age_acc / slots_per_episode as f64,
            throughput: thpt_acc,
            upper_loss: 0.0,
            lower_loss: agent.last_stats.critic_loss,
            clip_fraction: agent.last_stats.clip_fraction,
        });
    }
    Ok(log)
}

fn rec_ages<W: LowerWorld>(world: &W) -> Vec<f64> {
    world.ages()
}

/// Held-out seeds used to score checkpoints during hierarchical training;
/// disjoint from the default evaluation seeds.
const VALIDATION_SEEDS: [u64; 5] = [1001, 1002, 1003, 1004, 1005];
const VALIDATION_EPISODES: u32 = 10;
/// Episodes between checkpoint scorings.
const VALIDATION_PERIOD: u32 = 250;

pub fn validation_score(cfg_env: &RadioEnv, upper: &PpoAgent, lower: &PpoAgent) -> Result<(f64, f64)> {
    let cfg = cfg_env.sim_config();
    let (mut aoi, mut thpt) = (0.0, 0.0);
    for &seed in &VALIDATION_SEEDS {
        let mut env = RadioEnv::new(&cfg, ChaCha12Rng::seed_from_u64(seed));
        let s = evaluate_radio(
            &mut env,
            &Beamformer::Learned(&upper.actor),
            &TpPolicy::Learned(&lower.actor),
            VALIDATION_EPISODES,
            cfg.episode_slots,
            None,
        )?;
        aoi += s.mean_aoi / VALIDATION_SEEDS.len() as f64;
        thpt += s.episode_throughput / VALIDATION_SEEDS.len() as f64;
    }
    Ok((aoi, thpt))
}

/// Train the hierarchical pair on the full radio environment. Policy-gradient
/// updates on a near-optimal combiner are maintenance under noise, so the
/// loop scores the deterministic policies on held-out validation seeds at a
/// fixed cadence and returns the best-scoring checkpoint (throughput, with
/// the freshness target as a hard gate) rather than whatever the final
/// update left behind.
pub fn train_hierarchical(
    env: &mut RadioEnv,
    upper: &mut PpoAgent,
    lower: &mut PpoAgent,
    episodes: u32,
    slots_per_episode: u32,
) -> Result<Vec<EpisodeMetrics>> {
    let mut log = Vec::with_capacity(episodes as usize);
    let mut best: Option<(f64, Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> = None;
    let score_and_keep =
        |env: &RadioEnv, upper: &PpoAgent, lower: &PpoAgent, best: &mut Option<(f64, Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)>| -> Result<()> {
            let (aoi, thpt) = validation_score(env, upper, lower)?;
            let score = thpt - 1e4 * (aoi - 2.0).max(0.0);
            if best.as_ref().is_none_or(|(s, ..)| score > *s) {
                let mut upper_critic = Vec::new();
                upper.critic.net.flatten_into(&mut upper_critic);
                let mut lower_critic = Vec::new();
                lower.critic.net.flatten_into(&mut lower_critic);
                *best = Some((
                    score,
                    upper.actor.flatten(),
                    lower.actor.flatten(),
                    upper_critic,
                    lower_critic,
                ));
            }
            Ok(())
        };

    if episodes > 0 {
        // The pre-training policy is checkpoint zero.
        score_and_keep(env, upper, lower, &mut best)?;
    }

    for episode in 0..episodes {
        LowerWorld::reset(env);
        let mut age_acc = 0.0;
        let mut thpt_acc = 0.0;
        for _ in 0..slots_per_episode {
            env.gar_tick();
            let upper_state = env.csi_flat();
            let upper_sample = upper.act(&upper_state);
            let v = DetectionMatrix::from_flat_action(
                &upper_sample.action,
                env.num_gbus,
                env.radio.antennas,
            );
            let (budgets, plan) = env.plan_for(&v);
            let lower_state = env.ages_f64();
            let lower_sample = lower.act(&lower_state);
            let rec = env.commit_slot(&v, &budgets, &plan, lower_sample.action[0]);

            upper.record(Transition {
                state: upper_state,
                action: upper_sample.action,
                presquash: upper_sample.presquash,
                reward: rec.upper_reward,
                next_state: env.csi_flat(),
                log_prob_old: upper_sample.log_prob,
            });
            lower.record(Transition {
                state: lower_state,
                action: lower_sample.action,
                presquash: lower_sample.presquash,
                reward: rec.lower_reward,
                next_state: env.ages_f64(),
                log_prob_old: lower_sample.log_prob,
            });
            upper.maybe_update()?;
            lower.maybe_update()?;

            age_acc += rec.mean_age;
            thpt_acc += rec.throughput;
        }
        log.push(EpisodeMetrics {
            episode,
            mean_aoi: age_acc / slots_per_episode as f64,
            throughput: thpt_acc,
            upper_loss: upper.last_stats.critic_loss,
            lower_loss: lower.last_stats.critic_loss,
            clip_fraction: lower.last_stats.clip_fraction,
        });
        if (episode + 1) % VALIDATION_PERIOD == 0 || episode + 1 == episodes {
            score_and_keep(env, upper, lower, &mut best)?;
        }
    }

    if let Some((_, upper_actor, lower_actor, upper_critic, lower_critic)) = best {
        upper.actor.load_flat(&upper_actor);
        lower.actor.load_flat(&lower_actor);
        upper.critic.net.load_flat(&upper_critic);
        lower.critic.net.load_flat(&lower_critic);
    }
    Ok(log)
}

/// Transmission-probability policy used at evaluation time. Learned policies
/// act deterministically through the squashed mean.
pub enum TpPolicy<'a> {
    Baseline(BaselineKind),
    Learned(&'a GaussianActor),
}

impl TpPolicy<'_> {
    pub fn tp(&self, obs: &LowerObs, num_gfus: usize) -> f64 {
        match self {
            TpPolicy::Baseline(kind) => kind.tp(obs.n_levels, num_gfus, obs.n_served),
            TpPolicy::Learned(actor) => actor.mean_action(&obs.ages)[0],
        }
    }
}

/// Beamformer used at evaluation time.
pub enum Beamformer<'a> {
    ZeroForcing,
    Learned(&'a GaussianActor),
}

/// Evaluation outcome plus the raw per-slot records of the last episode.
#[derive(Debug, Clone)]
pub struct EvalSummary {
    /// Mean over episodes of the per-episode mean AoI.
    pub mean_aoi: f64,
    /// Mean over episodes of the episode throughput.
    pub episode_throughput: f64,
    pub per_episode: Vec<EpisodeMetrics>,
}

/// Evaluate a (beamformer, scheduler) pair on the radio environment.
pub fn evaluate_radio(
    env: &mut RadioEnv,
    beamformer: &Beamformer<'_>,
    policy: &TpPolicy<'_>,
    episodes: u32,
    slots_per_episode: u32,
    mut on_slot: Option<&mut dyn FnMut(&crate::env::SlotRecord)>,
) -> Result<EvalSummary> {
    let mut per_episode = Vec::with_capacity(episodes as usize);
    for episode in 0..episodes {
        LowerWorld::reset(env);
        let mut age_acc = 0.0;
        let mut thpt_acc = 0.0;
        for _ in 0..slots_per_episode {
            env.gar_tick();
            let v = match beamformer {
                Beamformer::ZeroForcing => env.zero_forcing()?,
                Beamformer::Learned(actor) => DetectionMatrix::from_flat_action(
                    &actor.mean_action(&env.csi_flat()),
                    env.num_gbus,
                    env.radio.antennas,
                ),
            };
            let (budgets, plan) = env.plan_for(&v);
            let n_waiting = env.waiting_count();
            let obs = LowerObs {
                ages: env.ages_f64(),
                n_levels: plan.total_levels(),
                n_waiting,
                n_served: env.num_gfus - n_waiting,
            };
            let tp = policy.tp(&obs, env.num_gfus);
            let rec = env.commit_slot(&v, &budgets, &plan, tp);
            if let Some(cb) = on_slot.as_mut() {
                cb(&rec);
            }
            age_acc += rec.mean_age;
            thpt_acc += rec.throughput;
        }
        per_episode.push(EpisodeMetrics {
            episode,
            mean_aoi: age_acc / slots_per_episode as f64,
            throughput: thpt_acc,
            upper_loss: 0.0,
            lower_loss: 0.0,
            clip_fraction: 0.0,
        });
    }
    let n = per_episode.len().max(1) as f64;
    Ok(EvalSummary {
        mean_aoi: per_episode.iter().map(|m| m.mean_aoi).sum::<f64>() / n,
        episode_throughput: per_episode.iter().map(|m| m.throughput).sum::<f64>() / n,
        per_episode,
    })
}
