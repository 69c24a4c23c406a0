//! Clipped-surrogate policy optimization: one-step advantages, the clip
//! objective and critic loss with hand-derived gradients, and the update
//! procedure that snapshots the collection-time policy implicitly via stored
//! log-probabilities.

use rand_chacha::ChaCha12Rng;

use crate::config::PpoConfig;
use crate::error::{Result, SgfError};
use crate::nn::{Adam, GaussianActor, MlpGrads, ValueNet};

/// One environment step as stored in the sample batch.
#[derive(Debug, Clone)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    /// Pre-squash Gaussian sample; keeping it avoids inverting the squash when
    /// the likelihood is replayed at update time.
    pub presquash: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub log_prob_old: f64,
}

/// One-step advantage estimate r + gamma V(s') - V(s).
pub fn advantage(reward: f64, value: f64, next_value: f64, discount: f64) -> f64 {
    reward + discount * next_value - value
}

pub fn batch_advantages(critic: &ValueNet, batch: &[Transition], discount: f64) -> Vec<f64> {
    batch
        .iter()
        .map(|t| {
            advantage(
                t.reward,
                critic.value(&t.state),
                critic.value(&t.next_state),
                discount,
            )
        })
        .collect()
}

/// Gradients for the Gaussian actor (network parameters plus log-std).
#[derive(Debug, Clone)]
pub struct ActorGrads {
    pub net: MlpGrads,
    pub log_std: Vec<f64>,
}

impl ActorGrads {
    pub fn zeros_like(actor: &GaussianActor) -> Self {
        ActorGrads {
            net: MlpGrads::zeros_like(&actor.net),
            log_std: vec![0.0; actor.log_std.len()],
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.net.flatten_into(&mut out);
        out.extend_from_slice(&self.log_std);
        out
    }

    pub fn all_finite(&self) -> bool {
        self.net.all_finite() && self.log_std.iter().all(|x| x.is_finite())
    }
}

/// Value and gradient of the clipped surrogate objective (to be maximized).
#[derive(Debug, Clone)]
pub struct ClipObjective {
    pub value: f64,
    pub grads: ActorGrads,
    /// Fraction of samples whose ratio left the clip band.
    pub clip_fraction: f64,
}

/// Mean over the batch of min(rho A, clip(rho) A) with
/// rho = exp(log pi - log pi_old). Advantages are treated as constants.
pub fn clip_objective(
    actor: &GaussianActor,
    batch: &[Transition],
    advantages: &[f64],
    clip_ratio: f64,
) -> ClipObjective {
    assert!(!batch.is_empty(), "clip objective over empty batch");
    assert_eq!(batch.len(), advantages.len());
    let n = batch.len() as f64;
    let mut grads = ActorGrads::zeros_like(actor);
    let mut value = 0.0;
    let mut clipped = 0usize;

    for (t, &adv) in batch.iter().zip(advantages) {
        let features = actor.featurize.apply(&t.state);
        let (mean, cache) = actor.net.forward_cached(&features);
        let log_prob = actor.log_prob_given_mean(&mean, &t.presquash);
        let ratio = (log_prob - t.log_prob_old).exp();
        let surr1 = ratio * adv;
        let surr2 = ratio.clamp(1.0 - clip_ratio, 1.0 + clip_ratio) * adv;
        value += surr1.min(surr2) / n;
        if ratio < 1.0 - clip_ratio || ratio > 1.0 + clip_ratio {
            clipped += 1;
        }
        // d/dtheta min(surr1, surr2): the clipped branch is flat in theta, so
        // only samples where the unclipped term attains the min contribute.
        if surr1 <= surr2 {
            let coeff = ratio * adv / n;
            let mut grad_mean = vec![0.0; mean.len()];
            for d in 0..mean.len() {
                let sigma = actor.log_std[d].exp();
                let u = (t.presquash[d] - mean[d]) / sigma;
                grad_mean[d] = coeff * u / sigma;
                grads.log_std[d] += coeff * (u * u - 1.0);
            }
            actor.net.backward(&cache, &grad_mean, &mut grads.net);
        }
    }

    ClipObjective {
        value,
        grads,
        clip_fraction: clipped as f64 / n,
    }
}

/// Mean squared one-step advantage, differentiated through both V(s) and
/// V(s'). Returns the loss and its gradient.
pub fn critic_loss(
    critic: &ValueNet,
    batch: &[Transition],
    discount: f64,
) -> (f64, MlpGrads) {
    assert!(!batch.is_empty(), "critic loss over empty batch");
    let n = batch.len() as f64;
    let mut grads = MlpGrads::zeros_like(&critic.net);
    let mut loss = 0.0;
    for t in batch {
        let (v, cache) = critic.value_cached(&t.state);
        let (v_next, cache_next) = critic.value_cached(&t.next_state);
        let adv = advantage(t.reward, v, v_next, discount);
        loss += adv * adv / n;
        let d = 2.0 * adv / n;
        critic.net.backward(&cache, &[-d], &mut grads);
        critic.net.backward(&cache_next, &[d * discount], &mut grads);
    }
    (loss, grads)
}

/// Per-update diagnostics.
#[derive(Debug, Clone, Copy, Default)]
pub struct UpdateStats {
    pub actor_objective: f64,
    pub critic_loss: f64,
    pub clip_fraction: f64,
}

/// Run the configured number of epochs: ascent on the clip objective, descent
/// on the critic loss. Advantages for the actor are frozen at the snapshot
/// taken before the first epoch and centered on their batch mean — a constant
/// baseline leaves the expected policy gradient unchanged while removing the
/// noise floor a lagging critic would otherwise inject. The batch is cleared
/// by the caller.
pub fn update_policy(
    actor: &mut GaussianActor,
    critic: &mut ValueNet,
    opt_actor: &mut Adam,
    opt_critic: &mut Adam,
    batch: &[Transition],
    cfg: &PpoConfig,
) -> Result<UpdateStats> {
    assert!(!batch.is_empty(), "update_policy on empty batch");
    let mut advantages = batch_advantages(critic, batch, cfg.discount);
    let mean_adv = advantages.iter().sum::<f64>() / advantages.len() as f64;
    for a in &mut advantages {
        *a -= mean_adv;
    }
    let mut stats = UpdateStats::default();

    for _ in 0..cfg.epochs {
        let obj = clip_objective(actor, batch, &advantages, cfg.clip_ratio);
        if !obj.value.is_finite() || !obj.grads.all_finite() {
            return Err(SgfError::Numerical(format!(
                "non-finite actor objective {} during update",
                obj.value
            )));
        }
        // Maximize the objective: descend its negation.
        let mut flat = actor.flatten();
        let grad: Vec<f64> = obj.grads.flatten().iter().map(|g| -g).collect();
        opt_actor.step(&mut flat, &grad);
        actor.load_flat(&flat);
        actor.clamp_log_std();

        let (closs, cgrads) = critic_loss(critic, batch, cfg.discount);
        if !closs.is_finite() || !cgrads.all_finite() {
            return Err(SgfError::Numerical(format!(
                "non-finite critic loss {closs} during update"
            )));
        }
        let mut cflat = Vec::new();
        critic.net.flatten_into(&mut cflat);
        let mut cgrad = Vec::new();
        cgrads.flatten_into(&mut cgrad);
        opt_critic.step(&mut cflat, &cgrad);
        critic.net.load_flat(&cflat);

        stats = UpdateStats {
            actor_objective: obj.value,
            critic_loss: closs,
            clip_fraction: obj.clip_fraction,
        };
    }
    Ok(stats)
}

/// Actor-critic pair with its optimizers, sample batch, and private action
/// stream. Updates fire every `update_period` recorded transitions.
pub struct PpoAgent {
    pub actor: GaussianActor,
    pub critic: ValueNet,
    pub opt_actor: Adam,
    pub opt_critic: Adam,
    pub cfg: PpoConfig,
    pub update_period: usize,
    pub batch: Vec<Transition>,
    pub rng: ChaCha12Rng,
    pub last_stats: UpdateStats,
    pub updates_done: u64,
}

impl PpoAgent {
    pub fn new(
        actor: GaussianActor,
        critic: ValueNet,
        cfg: PpoConfig,
        update_period: usize,
        rng: ChaCha12Rng,
    ) -> Self {
        let opt_actor = Adam::new(cfg.actor_lr, actor.param_count());
        let opt_critic = Adam::new(cfg.critic_lr, critic.net.param_count());
        PpoAgent {
            actor,
            critic,
            opt_actor,
            opt_critic,
            cfg,
            update_period,
            batch: Vec::new(),
            rng,
            last_stats: UpdateStats::default(),
            updates_done: 0,
        }
    }

    pub fn act(&mut self, state: &[f64]) -> crate::nn::ActionSample {
        self.actor.sample(state, &mut self.rng)
    }

    pub fn record(&mut self, transition: Transition) {
        if self.batch.len() < self.cfg.batch_capacity {
            self.batch.push(transition);
        }
    }

    /// Update once the batch has reached the period; clears the batch.
    pub fn maybe_update(&mut self) -> Result<Option<UpdateStats>> {
        if self.batch.len() < self.update_period {
            return Ok(None);
        }
        let stats = update_policy(
            &mut self.actor,
            &mut self.critic,
            &mut self.opt_actor,
            &mut self.opt_critic,
            &self.batch,
            &self.cfg,
        )?;
        self.batch.clear();
        self.last_stats = stats;
        self.updates_done += 1;
        Ok(Some(stats))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Featurize, Mlp, Squash};
    use rand::SeedableRng;

    fn small_actor(seed: u64) -> GaussianActor {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        GaussianActor::new(8, 1, &[16, 16], Squash::UnitInterval, Featurize::Identity, &mut rng)
    }

    fn small_critic(seed: u64) -> ValueNet {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        ValueNet::new(8, &[16, 16], Featurize::Identity, &mut rng)
    }

    fn random_batch(actor: &GaussianActor, n: usize, seed: u64) -> Vec<Transition> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        use rand::Rng;
        (0..n)
            .map(|_| {
                let state: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
                let next_state: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
                let sample = actor.sample(&state, &mut rng);
                Transition {
                    state,
                    action: sample.action,
                    presquash: sample.presquash,
                    reward: rng.random_range(-1.0..1.0),
                    next_state,
                    log_prob_old: sample.log_prob,
                }
            })
            .collect()
    }

    #[test]
    fn advantage_hand_arithmetic() {
        assert_eq!(advantage(1.0, 0.0, 0.0, 0.99), 1.0);
        assert_eq!(advantage(0.0, 0.7, 0.7, 1.0), 0.0);
        assert_eq!(advantage(2.0, 1.0, 3.0, 0.5), 2.5);
    }

    #[test]
    fn ratio_is_one_at_collection_parameters() {
        // theta == theta_old: every ratio is 1, objective equals mean(A).
        let actor = small_actor(1);
        let batch = random_batch(&actor, 32, 2);
        let advantages: Vec<f64> = (0..32).map(|i| (i as f64 - 16.0) / 8.0).collect();
        let obj = clip_objective(&actor, &batch, &advantages, 0.1);
        let mean_adv = advantages.iter().sum::<f64>() / 32.0;
        assert!((obj.value - mean_adv).abs() < 1e-12);
        assert_eq!(obj.clip_fraction, 0.0);
    }

    #[test]
    fn zero_advantages_give_zero_objective_and_gradient() {
        let actor = small_actor(3);
        let batch = random_batch(&actor, 16, 4);
        let obj = clip_objective(&actor, &batch, &vec![0.0; 16], 0.1);
        assert_eq!(obj.value, 0.0);
        assert!(obj.grads.flatten().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn clip_bound_holds_per_sample() {
        // The per-sample clipped objective never exceeds
        // max((1-eps) A, (1+eps) A).
        let actor = small_actor(5);
        let mut perturbed = actor.clone();
        let mut flat = perturbed.flatten();
        for (i, p) in flat.iter_mut().enumerate() {
            *p += 0.05 * ((i % 7) as f64 - 3.0);
        }
        perturbed.load_flat(&flat);
        let batch = random_batch(&actor, 64, 6);
        let eps = 0.1;
        for t in &batch {
            let lp = perturbed.log_prob(&t.state, &t.presquash);
            let ratio = (lp - t.log_prob_old).exp();
            for adv in [-1.5, 0.3, 2.0] {
                let obj = (ratio * adv).min(ratio.clamp(1.0 - eps, 1.0 + eps) * adv);
                let bound = ((1.0 - eps) * adv).max((1.0 + eps) * adv);
                assert!(obj <= bound + 1e-12);
            }
        }
    }

    #[test]
    fn clip_gradient_matches_finite_differences() {
        let actor = small_actor(7);
        // Perturb so ratios are spread away from 1.
        let mut theta = small_actor(7);
        let mut flat = theta.flatten();
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        use rand::Rng;
        for p in flat.iter_mut() {
            *p += rng.random_range(-0.05..0.05);
        }
        theta.load_flat(&flat);

        let batch = random_batch(&actor, 8, 9);
        let advantages: Vec<f64> = (0..8).map(|i| ((i * 37) % 11) as f64 / 5.0 - 1.0).collect();
        let obj = clip_objective(&theta, &batch, &advantages, 0.1);
        let analytic = obj.grads.flatten();

        let mut params = theta.flatten();
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for i in (0..params.len()).step_by(11) {
            let orig = params[i];
            params[i] = orig + h;
            theta.load_flat(&params);
            let up = clip_objective(&theta, &batch, &advantages, 0.1).value;
            params[i] = orig - h;
            theta.load_flat(&params);
            let down = clip_objective(&theta, &batch, &advantages, 0.1).value;
            params[i] = orig;
            theta.load_flat(&params);
            let numeric = (up - down) / (2.0 * h);
            let denom = numeric.abs().max(analytic[i].abs()).max(1e-6);
            worst = worst.max((numeric - analytic[i]).abs() / denom);
        }
        assert!(worst < 1e-4, "worst relative error {worst}");
    }

    #[test]
    fn critic_gradient_matches_finite_differences() {
        let actor = small_actor(10);
        let mut critic = small_critic(11);
        let batch = random_batch(&actor, 8, 12);
        let (_, grads) = critic_loss(&critic, &batch, 0.99);
        let mut analytic = Vec::new();
        grads.flatten_into(&mut analytic);

        let mut params = Vec::new();
        critic.net.flatten_into(&mut params);
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for i in (0..params.len()).step_by(13) {
            let orig = params[i];
            params[i] = orig + h;
            critic.net.load_flat(&params);
            let up = critic_loss(&critic, &batch, 0.99).0;
            params[i] = orig - h;
            critic.net.load_flat(&params);
            let down = critic_loss(&critic, &batch, 0.99).0;
            params[i] = orig;
            critic.net.load_flat(&params);
            let numeric = (up - down) / (2.0 * h);
            let denom = numeric.abs().max(analytic[i].abs()).max(1e-6);
            worst = worst.max((numeric - analytic[i]).abs() / denom);
        }
        assert!(worst < 1e-4, "worst relative error {worst}");
    }

    #[test]
    fn critic_loss_trivial_cases() {
        let critic = ValueNet {
            net: Mlp::zeroed(&[8, 4, 1]),
            featurize: Featurize::Identity,
        };
        // Zero critic, zero rewards: perfect on deterministic zero returns.
        let actor = small_actor(13);
        let mut batch = random_batch(&actor, 4, 14);
        for t in &mut batch {
            t.reward = 0.0;
        }
        let (loss, _) = critic_loss(&critic, &batch, 0.99);
        assert!(loss.abs() < 1e-30);
        // Single transition with advantage 2 -> loss 4.
        batch.truncate(1);
        batch[0].reward = 2.0;
        let (loss, _) = critic_loss(&critic, &batch, 0.99);
        assert!((loss - 4.0).abs() < 1e-12);
    }

    #[test]
    fn zero_advantage_batch_leaves_actor_unchanged() {
        let mut actor = small_actor(15);
        // Zero critic and zero rewards make every advantage exactly zero.
        let mut critic = ValueNet {
            net: Mlp::zeroed(&[8, 4, 1]),
            featurize: Featurize::Identity,
        };
        let mut batch = random_batch(&actor, 16, 16);
        for t in &mut batch {
            t.reward = 0.0;
        }
        let before = actor.flatten();
        let cfg = PpoConfig::default();
        let mut oa = Adam::new(cfg.actor_lr, actor.param_count());
        let mut oc = Adam::new(cfg.critic_lr, critic.net.param_count());
        update_policy(&mut actor, &mut critic, &mut oa, &mut oc, &batch, &cfg).unwrap();
        assert_eq!(before, actor.flatten());
    }

    #[test]
    fn bandit_update_moves_action_toward_reward() {
        // Single-state continuous bandit: reward 1 when the action exceeds
        // 0.5, -1 otherwise. Repeated updates must push the mean action up.
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let actor = GaussianActor::new(1, 1, &[16, 16], Squash::UnitInterval, Featurize::Identity, &mut rng);
        let critic = ValueNet::new(1, &[16, 16], Featurize::Identity, &mut rng);
        let cfg = PpoConfig {
            actor_lr: 3e-3,
            critic_lr: 1e-2,
            ..PpoConfig::default()
        };
        let mut agent = PpoAgent::new(actor, critic, cfg, 64, ChaCha12Rng::seed_from_u64(18));
        let state = vec![1.0];
        let initial = agent.actor.mean_action(&state)[0];
        for _ in 0..150 * 64 {
            let sample = agent.act(&state);
            let reward = if sample.action[0] > 0.5 { 1.0 } else { -1.0 };
            agent.record(Transition {
                state: state.clone(),
                action: sample.action,
                presquash: sample.presquash,
                reward,
                next_state: state.clone(),
                log_prob_old: sample.log_prob,
            });
            agent.maybe_update().unwrap();
        }
        let trained = agent.actor.mean_action(&state)[0];
        assert!(
            trained > 0.6 && trained > initial,
            "mean action {initial} -> {trained}"
        );
    }
}
