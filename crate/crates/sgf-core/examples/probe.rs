//! Scratch probe: train the lower agent at candidate target rates, then
//! compare against baselines on held-out seeds.
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sgf_core::baselines::BaselineKind;
use sgf_core::config::SimConfig;
use sgf_core::env::RadioEnv;
use sgf_core::train::*;

fn main() {
    let rate: f64 = std::env::args().nth(1).unwrap().parse().unwrap();
    let episodes: u32 = std::env::args().nth(2).unwrap().parse().unwrap();
    let mut cfg = SimConfig::default();
    cfg.target_rate = rate;
    cfg.episodes = episodes;

    let mut env = RadioEnv::new(&cfg, ChaCha12Rng::seed_from_u64(cfg.seed));
    let mut agent = build_lower_agent(&cfg, cfg.seed ^ 0xa5a5_5a5a);
    let log = train_lower(&mut env, &mut agent, cfg.episodes, cfg.episode_slots).unwrap();
    let tail: f64 = log[log.len() - 100..].iter().map(|m| m.mean_aoi).sum::<f64>() / 100.0;
    println!("rate {rate}: final-100 training AoI {tail:.3}");

    let eval = |policy: &TpPolicy| -> f64 {
        let mut acc = 0.0;
        for seed in 1..=10u64 {
            let mut e = RadioEnv::new(&cfg, ChaCha12Rng::seed_from_u64(seed));
            let s = evaluate_radio(&mut e, &Beamformer::ZeroForcing, policy, 20, cfg.episode_slots, None).unwrap();
            acc += s.mean_aoi;
        }
        acc / 10.0
    };
    let learned = eval(&TpPolicy::Learned(&agent.actor));
    let adaptive = eval(&TpPolicy::Baseline(BaselineKind::Adaptive));
    let state_dep = eval(&TpPolicy::Baseline(BaselineKind::StateDependent));
    println!("rate {rate}: eval learned {learned:.3}  adaptive {adaptive:.3}  state-dep {state_dep:.3}  pass5b={}", learned <= adaptive && learned <= state_dep);
}
