//! Scratch probe: hier training speed variants.
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sgf_core::config::SimConfig;
use sgf_core::env::RadioEnv;
use sgf_core::train::*;

fn main() {
    let period: usize = std::env::args().nth(1).unwrap().parse().unwrap();
    let episodes: u32 = std::env::args().nth(2).unwrap().parse().unwrap();
    let warm: bool = std::env::args().nth(3).map(|s| s == "warm").unwrap_or(false);
    let mut cfg = SimConfig::default();
    cfg.target_rate = 0.5;
    cfg.ppo.upper_update_period = period;

    let mut env = RadioEnv::new(&cfg, ChaCha12Rng::seed_from_u64(1));
    let mut upper = build_upper_agent(&cfg, 0x22);
    if warm {
        warm_start_passthrough(&mut upper.actor);
    }
    let mut lower = build_lower_agent(&cfg, 0x33);
    let log = train_hierarchical(&mut env, &mut upper, &mut lower, episodes, 100).unwrap();
    for window in [500, 100] {
        let tail: Vec<_> = log[log.len()-window..].iter().collect();
        let aoi: f64 = tail.iter().map(|m| m.mean_aoi).sum::<f64>() / window as f64;
        let thpt: f64 = tail.iter().map(|m| m.throughput).sum::<f64>() / window as f64;
        println!("period {period} warm={warm} tail{window}: aoi {aoi:.3} thpt {thpt:.1}");
    }

    let (mut h_aoi, mut h_thpt) = (0.0, 0.0);
    for seed in 1..=10u64 {
        let mut e = RadioEnv::new(&cfg, ChaCha12Rng::seed_from_u64(seed));
        let s = evaluate_radio(&mut e, &Beamformer::Learned(&upper.actor), &TpPolicy::Learned(&lower.actor), 20, 100, None).unwrap();
        h_aoi += s.mean_aoi / 10.0; h_thpt += s.episode_throughput / 10.0;
    }
    println!("period {period} warm={warm} eval: aoi {h_aoi:.3} thpt {h_thpt:.1} (ZF+lower ref 720.2, need >= 828)");
}
