//! Scratch probe: sorted-age featurization for the lower agent.
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sgf_core::baselines::BaselineKind;
use sgf_core::config::SimConfig;
use sgf_core::env::RadioEnv;
use sgf_core::nn::{Featurize, GaussianActor, Squash, ValueNet};
use sgf_core::ppo::PpoAgent;
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

fn sorted_lower(cfg: &SimConfig, seed: u64) -> PpoAgent {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let actor = GaussianActor::new(cfg.num_gfus, 1, &HIDDEN, Squash::UnitInterval, Featurize::SortedScale(0.1), &mut rng);
    let critic = ValueNet::new(cfg.num_gfus, &HIDDEN, Featurize::SortedScale(0.1), &mut rng);
    PpoAgent::new(actor, critic, cfg.ppo.clone(), cfg.ppo.lower_update_period, ChaCha12Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15))
}

fn main() {
    let period: usize = std::env::args().nth(1).unwrap().parse().unwrap();
    let mut cfg = SimConfig::default();
    cfg.target_rate = 0.5;
    cfg.ppo.lower_update_period = period;
    let adaptive = eval_policy(&cfg, &TpPolicy::Baseline(BaselineKind::Adaptive));
    for (label, env_seed, agent_seed) in [("a", 1u64, 0xa5a5_5a5au64), ("b", 1, 0x1234), ("c", 2, 0xa5a5_5a5a)] {
        let mut env = RadioEnv::new(&cfg, ChaCha12Rng::seed_from_u64(env_seed));
        let mut agent = sorted_lower(&cfg, agent_seed);
        let log = train_lower(&mut env, &mut agent, 6000, 100).unwrap();
        let tail: f64 = log[log.len()-100..].iter().map(|m| m.mean_aoi).sum::<f64>() / 100.0;
        let learned = eval_policy(&cfg, &TpPolicy::Learned(&agent.actor));
        println!("sorted p{period} {label}: tail {tail:.3} eval {learned:.4} adaptive {adaptive:.4} margin {:+.4}", adaptive - learned);
    }
}
