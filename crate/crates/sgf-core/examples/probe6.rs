//! Scratch probe: why does the upper policy walk away from the MMSE init?
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sgf_core::config::SimConfig;
use sgf_core::env::{LowerWorld, RadioEnv};
use sgf_core::mac::DetectionMatrix;
use sgf_core::ppo::Transition;
use sgf_core::train::*;

fn main() {
    let mode = std::env::args().nth(1).unwrap(); // frozen | lam0 | lam2 | lam10
    let episodes: u32 = std::env::args().nth(2).unwrap().parse().unwrap();
    let mut cfg = SimConfig::default();
    cfg.target_rate = 0.5;
    cfg.constraint_penalty = match mode.as_str() { "lam0" => 0.0, "lam2" => 2.0, _ => 10.0 };
    let frozen = mode == "frozen";

    let mut env = RadioEnv::new(&cfg, ChaCha12Rng::seed_from_u64(1));
    let mut upper = build_upper_agent(&cfg, 0x22);
    warm_start_passthrough(&mut upper.actor);
    let mut lower = build_lower_agent(&cfg, 0x33);

    for ep in 0..episodes {
        LowerWorld::reset(&mut env);
        let mut thpt = 0.0;
        let mut deficit = 0.0;
        for _ in 0..100 {
            env.gar_tick();
            let su = env.csi_flat();
            let us = upper.act(&su);
            let v = DetectionMatrix::from_flat_action(&us.action, env.num_gbus, env.radio.antennas);
            let (budgets, plan) = env.plan_for(&v);
            let sl = env.ages_f64();
            let ls = lower.act(&sl);
            let rec = env.commit_slot(&v, &budgets, &plan, ls.action[0]);
            if !frozen {
                upper.record(Transition { state: su, action: us.action, presquash: us.presquash, reward: rec.upper_reward, next_state: env.csi_flat(), log_prob_old: us.log_prob });
                upper.maybe_update().unwrap();
            }
            lower.record(Transition { state: sl, action: ls.action, presquash: ls.presquash, reward: rec.lower_reward, next_state: env.ages_f64(), log_prob_old: ls.log_prob });
            lower.maybe_update().unwrap();
            thpt += rec.throughput;
            deficit += rec.rate_deficit;
        }
        if ep % 500 == 0 || ep + 1 == episodes {
            let sig: f64 = upper.actor.log_std.iter().map(|l| l.exp()).sum::<f64>() / 18.0;
            println!("ep {ep}: thpt {thpt:.0} deficit/slot {:.3} upper_sigma {sig:.3} clipfrac {:.3} closs {:.1}",
                deficit / 100.0, upper.last_stats.clip_fraction, upper.last_stats.critic_loss);
        }
    }
    let (mut h_aoi, mut h_thpt) = (0.0, 0.0);
    for seed in 1..=10u64 {
        let mut e = RadioEnv::new(&cfg, ChaCha12Rng::seed_from_u64(seed));
        let s = evaluate_radio(&mut e, &Beamformer::Learned(&upper.actor), &TpPolicy::Learned(&lower.actor), 20, 100, None).unwrap();
        h_aoi += s.mean_aoi / 10.0; h_thpt += s.episode_throughput / 10.0;
    }
    println!("{mode}: eval aoi {h_aoi:.3} thpt {h_thpt:.1}");
}
