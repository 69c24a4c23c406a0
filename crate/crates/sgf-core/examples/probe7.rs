//! Scratch probe: upper update period sweep with warm start.
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sgf_core::config::SimConfig;
use sgf_core::env::RadioEnv;
use sgf_core::train::*;

fn main() {
    let period: usize = std::env::args().nth(1).unwrap().parse().unwrap();
    let lam: f64 = std::env::args().nth(2).unwrap().parse().unwrap();
    let episodes: u32 = std::env::args().nth(3).unwrap().parse().unwrap();
    let mut cfg = SimConfig::default();
    cfg.target_rate = 0.5;
    cfg.constraint_penalty = lam;
    cfg.ppo.upper_update_period = period;
    cfg.ppo.batch_capacity = cfg.ppo.batch_capacity.max(period);

    let mut env = RadioEnv::new(&cfg, ChaCha12Rng::seed_from_u64(1));
    let mut upper = build_upper_agent(&cfg, 0x22);
    warm_start_passthrough(&mut upper.actor);
    let mut lower = build_lower_agent(&cfg, 0x33);
    let log = train_hierarchical(&mut env, &mut upper, &mut lower, episodes, 100).unwrap();
    let tail: f64 = log[log.len()-100..].iter().map(|m| m.throughput).sum::<f64>() / 100.0;
    let sig: f64 = upper.actor.log_std.iter().map(|l| l.exp()).sum::<f64>() / 18.0;

    let (mut h_aoi, mut h_thpt) = (0.0, 0.0);
    for seed in 1..=10u64 {
        let mut e = RadioEnv::new(&cfg, ChaCha12Rng::seed_from_u64(seed));
        let s = evaluate_radio(&mut e, &Beamformer::Learned(&upper.actor), &TpPolicy::Learned(&lower.actor), 20, 100, None).unwrap();
        h_aoi += s.mean_aoi / 10.0; h_thpt += s.episode_throughput / 10.0;
    }
    println!("period {period} lam {lam}: tail100 {tail:.0} sigma {sig:.3} | eval aoi {h_aoi:.3} thpt {h_thpt:.1} ratio_vs_720 {:.3}", h_thpt / 720.2);
}
