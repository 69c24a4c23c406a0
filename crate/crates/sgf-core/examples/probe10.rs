//! Scratch probe: per-update damage to the warm-started upper policy.
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sgf_core::config::SimConfig;
use sgf_core::env::{LowerWorld, RadioEnv};
use sgf_core::mac::DetectionMatrix;
use sgf_core::ppo::Transition;
use sgf_core::train::*;

fn eval_upper(cfg: &SimConfig, upper: &sgf_core::nn::GaussianActor) -> f64 {
    let mut acc = 0.0;
    for seed in 1..=5u64 {
        let mut e = RadioEnv::new(cfg, ChaCha12Rng::seed_from_u64(seed));
        let s = evaluate_radio(&mut e, &Beamformer::Learned(upper), &TpPolicy::Baseline(sgf_core::baselines::BaselineKind::Fixed(1.0)), 10, 100, None).unwrap();
        acc += s.episode_throughput / 5.0;
    }
    acc
}

fn main() {
    let eps: f64 = std::env::args().nth(1).unwrap().parse().unwrap();
    let batch: usize = std::env::args().nth(2).unwrap().parse().unwrap();
    let mut cfg = SimConfig::default();
    cfg.ppo.upper_update_period = batch;
    cfg.ppo.batch_capacity = batch;

    let mut env = RadioEnv::new(&cfg, ChaCha12Rng::seed_from_u64(1));
    let mut upper = build_upper_agent(&cfg, 0x22);
    upper.opt_actor.eps = eps;
    upper.opt_critic.eps = eps;
    let mut lower = build_lower_agent(&cfg, 0x33);
    println!("adam_eps {eps} batch {batch}: init eval {:.1}", eval_upper(&cfg, &upper.actor));

    let mut slot = 0u32;
    for update in 1..=6 {
        while upper.batch.len() < batch {
            if slot % cfg.episode_slots == 0 { LowerWorld::reset(&mut env); }
            slot += 1;
            env.gar_tick();
            let su = env.csi_flat();
            let us = upper.act(&su);
            let v = DetectionMatrix::from_flat_action(&us.action, env.num_gbus, env.radio.antennas);
            let (budgets, plan) = env.plan_for(&v);
            let ls = lower.act(&env.ages_f64());
            let rec = env.commit_slot(&v, &budgets, &plan, ls.action[0]);
            upper.record(Transition { state: su, action: us.action, presquash: us.presquash, reward: rec.upper_reward, next_state: env.csi_flat(), log_prob_old: us.log_prob });
        }
        upper.maybe_update().unwrap();
        println!("  after update {update}: eval {:.1}", eval_upper(&cfg, &upper.actor));
    }
}
