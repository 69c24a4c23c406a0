//! Scratch probe: lower-agent training-quality variations at rate 0.5.
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sgf_core::baselines::BaselineKind;
use sgf_core::config::SimConfig;
use sgf_core::env::RadioEnv;
use sgf_core::train::*;

fn eval_policy(cfg: &SimConfig, policy: &TpPolicy) -> f64 {
    let mut acc = 0.0;
    for seed in 1..=10u64 {
        let mut e = RadioEnv::new(cfg, ChaCha12Rng::seed_from_u64(seed));
        let s = evaluate_radio(&mut e, &Beamformer::ZeroForcing, policy, 20, 100, None).unwrap();
        acc += s.mean_aoi;
    }
    acc / 10.0
}

fn main() {
    let mut cfg = SimConfig::default();
    cfg.target_rate = 0.5;
    println!("fixed1   : {:.4}", eval_policy(&cfg, &TpPolicy::Baseline(BaselineKind::Fixed(1.0))));
    println!("fixed0.9 : {:.4}", eval_policy(&cfg, &TpPolicy::Baseline(BaselineKind::Fixed(0.9))));
    println!("adaptive : {:.4}", eval_policy(&cfg, &TpPolicy::Baseline(BaselineKind::Adaptive)));
    println!("statedep : {:.4}", eval_policy(&cfg, &TpPolicy::Baseline(BaselineKind::StateDependent)));

    for (label, period, seed) in [
        ("p64  s1", 64usize, 0xa5a5_5a5au64),
        ("p128 s1", 128, 0xa5a5_5a5a),
        ("p64  s2", 64, 0x777),
        ("p64  s3", 64, 0x999),
    ] {
        let mut c = cfg.clone();
        c.ppo.lower_update_period = period;
        let mut env = RadioEnv::new(&c, ChaCha12Rng::seed_from_u64(1));
        let mut agent = build_lower_agent(&c, seed);
        let log = train_lower(&mut env, &mut agent, 6000, 100).unwrap();
        let tail: f64 = log[log.len()-100..].iter().map(|m| m.mean_aoi).sum::<f64>() / 100.0;
        println!("{label}: eval {:.4}  tail {tail:.3}", eval_policy(&c, &TpPolicy::Learned(&agent.actor)));
    }
}
