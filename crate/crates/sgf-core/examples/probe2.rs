//! Scratch probe: hierarchical training headroom over zero-forcing.
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sgf_core::config::SimConfig;
use sgf_core::env::RadioEnv;
use sgf_core::train::*;

fn main() {
    let rate: f64 = std::env::args().nth(1).unwrap().parse().unwrap();
    let episodes: u32 = std::env::args().nth(2).unwrap().parse().unwrap();
    let mut cfg = SimConfig::default();
    cfg.target_rate = rate;

    // lower agent trained under ZF first (the comparison baseline)
    let mut env = RadioEnv::new(&cfg, ChaCha12Rng::seed_from_u64(1));
    let mut zf_lower = build_lower_agent(&cfg, 0x11);
    train_lower(&mut env, &mut zf_lower, episodes, 100).unwrap();

    // hierarchical pair
    let mut env2 = RadioEnv::new(&cfg, ChaCha12Rng::seed_from_u64(1));
    let mut upper = build_upper_agent(&cfg, 0x22);
    let mut lower = build_lower_agent(&cfg, 0x33);
    let log = train_hierarchical(&mut env2, &mut upper, &mut lower, episodes, 100).unwrap();
    let tail_aoi: f64 = log[log.len()-100..].iter().map(|m| m.mean_aoi).sum::<f64>() / 100.0;
    let tail_thpt: f64 = log[log.len()-100..].iter().map(|m| m.throughput).sum::<f64>() / 100.0;
    println!("hier training tail: aoi {tail_aoi:.3} thpt {tail_thpt:.1}");

    // matched-seed eval
    let (mut zf_aoi, mut zf_thpt, mut h_aoi, mut h_thpt) = (0.0, 0.0, 0.0, 0.0);
    for seed in 1..=10u64 {
        let mut e = RadioEnv::new(&cfg, ChaCha12Rng::seed_from_u64(seed));
        let s = evaluate_radio(&mut e, &Beamformer::ZeroForcing, &TpPolicy::Learned(&zf_lower.actor), 20, 100, None).unwrap();
        zf_aoi += s.mean_aoi / 10.0; zf_thpt += s.episode_throughput / 10.0;
        let mut e = RadioEnv::new(&cfg, ChaCha12Rng::seed_from_u64(seed));
        let s = evaluate_radio(&mut e, &Beamformer::Learned(&upper.actor), &TpPolicy::Learned(&lower.actor), 20, 100, None).unwrap();
        h_aoi += s.mean_aoi / 10.0; h_thpt += s.episode_throughput / 10.0;
    }
    println!("rate {rate} eps {episodes}: ZF+lower aoi {zf_aoi:.3} thpt {zf_thpt:.1} | hier aoi {h_aoi:.3} thpt {h_thpt:.1} | ratio {:.3}", h_thpt / zf_thpt);
}
