//! Scratch probe: validation trace across hierarchical training checkpoints.
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sgf_core::config::SimConfig;
use sgf_core::env::{LowerWorld, RadioEnv};
use sgf_core::mac::DetectionMatrix;
use sgf_core::ppo::Transition;
use sgf_core::train::*;

fn main() {
    let cfg = SimConfig::default();
    let mut env = RadioEnv::new(&cfg, ChaCha12Rng::seed_from_u64(1));
    let mut upper = build_upper_agent(&cfg, 0x22);
    let mut lower = build_lower_agent(&cfg, 0x33);
    let (a0, t0) = validation_score(&env, &upper, &lower).unwrap();
    println!("ep 0: val aoi {a0:.3} thpt {t0:.1}");
    for episode in 0..3000u32 {
        LowerWorld::reset(&mut env);
        for _ in 0..100 {
            env.gar_tick();
            let su = env.csi_flat();
            let us = upper.act(&su);
            let v = DetectionMatrix::from_flat_action(&us.action, env.num_gbus, env.radio.antennas);
            let (budgets, plan) = env.plan_for(&v);
            let sl = env.ages_f64();
            let ls = lower.act(&sl);
            let rec = env.commit_slot(&v, &budgets, &plan, ls.action[0]);
            upper.record(Transition { state: su, action: us.action, presquash: us.presquash, reward: rec.upper_reward, next_state: env.csi_flat(), log_prob_old: us.log_prob });
            lower.record(Transition { state: sl, action: ls.action, presquash: ls.presquash, reward: rec.lower_reward, next_state: env.ages_f64(), log_prob_old: ls.log_prob });
            upper.maybe_update().unwrap();
            lower.maybe_update().unwrap();
        }
        if (episode + 1) % 250 == 0 {
            let (a, t) = validation_score(&env, &upper, &lower).unwrap();
            println!("ep {}: val aoi {a:.3} thpt {t:.1}", episode + 1);
        }
    }
}
