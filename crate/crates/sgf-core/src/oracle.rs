//! Exact finite-state analysis of the contention-only age process, used to
//! validate the Monte-Carlo simulator. The joint chain over (capped age,
//! waiting flag) per user is enumerated exactly; the distribution is iterated
//! over one generation period until stationarity and the long-run expected
//! mean age is read off.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::baselines::BaselineKind;
use crate::env::{CollisionRule, ContentionEnv, LowerWorld};
use crate::error::{Result, SgfError};

const MAX_STATES: usize = 100_000;
const TV_TOLERANCE: f64 = 1e-10;
const MAX_CYCLES: usize = 1_000_000;

/// Policy the oracle (and the mirrored simulator run) follows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OraclePolicy {
    Fixed(f64),
    StateDependent,
}

impl std::fmt::Display for OraclePolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OraclePolicy::Fixed(p) => write!(f, "fixed:{p}"),
            OraclePolicy::StateDependent => write!(f, "state-dependent"),
        }
    }
}

/// A contention spec small enough for exact enumeration.
#[derive(Debug, Clone, Copy)]
pub struct MarkovOracleSpec {
    pub num_gfus: usize,
    pub n_levels: usize,
    pub policy: OraclePolicy,
    pub generation_period: u32,
    /// Ages are capped here in the oracle's state space; the tail mass beyond
    /// the cap is negligible for every spec in the suite.
    pub age_cap: u32,
}

impl MarkovOracleSpec {
    pub fn state_count(&self) -> usize {
        let per_user = 2 * self.age_cap as usize;
        per_user.checked_pow(self.num_gfus as u32).unwrap_or(usize::MAX)
    }

    pub fn label(&self) -> String {
        format!(
            "K'={} N={} policy={} f={}",
            self.num_gfus, self.n_levels, self.policy, self.generation_period
        )
    }
}

struct OracleChain {
    spec: MarkovOracleSpec,
    base: usize,
}

impl OracleChain {
    fn new(spec: MarkovOracleSpec) -> Result<Self> {
        if spec.num_gfus == 0 || spec.age_cap == 0 || spec.generation_period == 0 {
            return Err(SgfError::Config("degenerate oracle spec".into()));
        }
        if spec.state_count() > MAX_STATES {
            return Err(SgfError::OracleOverflow(format!(
                "{} states exceed the {} bound",
                spec.state_count(),
                MAX_STATES
            )));
        }
        Ok(OracleChain {
            base: 2 * spec.age_cap as usize,
            spec,
        })
    }

    fn decode(&self, mut index: usize) -> Vec<(u32, bool)> {
        (0..self.spec.num_gfus)
            .map(|_| {
                let sub = index % self.base;
                index /= self.base;
                ((sub / 2 + 1) as u32, sub % 2 == 1)
            })
            .collect()
    }

    fn encode(&self, users: &[(u32, bool)]) -> usize {
        users.iter().rev().fold(0usize, |acc, &(age, waiting)| {
            acc * self.base + ((age - 1) as usize * 2 + waiting as usize)
        })
    }

    fn mean_age(&self, users: &[(u32, bool)]) -> f64 {
        users.iter().map(|&(a, _)| a as f64).sum::<f64>() / users.len() as f64
    }

    /// Push the distribution through one slot at cycle phase `phase`.
    fn step_phase(&self, dist: &[f64], phase: u32) -> Vec<f64> {
        let mut next = vec![0.0; dist.len()];
        for (state, &mass) in dist.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let mut users = self.decode(state);
            if phase == 0 {
                for u in &mut users {
                    u.1 = true;
                }
            }
            let waiting: Vec<usize> = users
                .iter()
                .enumerate()
                .filter(|(_, u)| u.1)
                .map(|(i, _)| i)
                .collect();
            let p = match self.spec.policy {
                OraclePolicy::Fixed(p) => p,
                OraclePolicy::StateDependent => {
                    if waiting.is_empty() {
                        0.0
                    } else {
                        1.0 / waiting.len() as f64
                    }
                }
            };
            // Enumerate every attempt subset of the waiting users.
            for subset in 0..(1u32 << waiting.len()) {
                let n_attempts = subset.count_ones() as usize;
                let prob = p.powi(n_attempts as i32)
                    * (1.0 - p).powi((waiting.len() - n_attempts) as i32);
                if prob == 0.0 {
                    continue;
                }
                let all_fail = n_attempts > self.spec.n_levels;
                let mut out = users.clone();
                for (slot, &user) in waiting.iter().enumerate() {
                    let attempted = subset & (1 << slot) != 0;
                    if attempted && !all_fail {
                        out[user] = (1, false);
                    } else {
                        out[user].0 = (out[user].0 + 1).min(self.spec.age_cap);
                    }
                }
                // Non-attempting silent users also age.
                for (i, u) in out.iter_mut().enumerate() {
                    if !users[i].1 {
                        u.0 = (users[i].0 + 1).min(self.spec.age_cap);
                    }
                }
                next[self.encode(&out)] += mass * prob;
            }
        }
        next
    }
}

/// Exact long-run expected mean age of the contention process.
pub fn markov_oracle_expected_aoi(spec: &MarkovOracleSpec) -> Result<f64> {
    let chain = OracleChain::new(*spec)?;
    let f = spec.generation_period;

    // Start as the simulator does: every user at age 1, update pending.
    let mut dist = vec![0.0; spec.state_count()];
    let start: Vec<(u32, bool)> = vec![(1, true); spec.num_gfus];
    dist[chain.encode(&start)] = 1.0;

    let mut converged = false;
    for _ in 0..MAX_CYCLES {
        let mut next = dist.clone();
        for phase in 0..f {
            next = chain.step_phase(&next, phase);
        }
        let tv: f64 = dist
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / 2.0;
        dist = next;
        if tv < TV_TOLERANCE {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(SgfError::Numerical(
            "oracle distribution failed to reach stationarity".into(),
        ));
    }

    // One more cycle, averaging the post-update expected mean age per phase.
    let mut total = 0.0;
    for phase in 0..f {
        dist = chain.step_phase(&dist, phase);
        let expected: f64 = dist
            .iter()
            .enumerate()
            .filter(|(_, &m)| m > 0.0)
            .map(|(s, &m)| m * chain.mean_age(&chain.decode(s)))
            .sum();
        total += expected;
    }
    Ok(total / f as f64)
}

/// Outcome of one oracle-versus-simulator comparison.
#[derive(Debug, Clone, Copy)]
pub struct OracleComparison {
    pub exact: f64,
    pub simulated: f64,
    pub rel_deviation: f64,
}

fn run_contention_sim(
    spec: &MarkovOracleSpec,
    slots: u64,
    seed: u64,
    rule: CollisionRule,
) -> Result<f64> {
    let mut env = ContentionEnv::new(
        spec.n_levels,
        spec.num_gfus,
        spec.generation_period,
        ChaCha12Rng::seed_from_u64(seed),
    );
    env.rule = rule;
    let policy = match spec.policy {
        OraclePolicy::Fixed(p) => BaselineKind::Fixed(p),
        OraclePolicy::StateDependent => BaselineKind::StateDependent,
    };
    let mut acc = 0.0;
    for _ in 0..slots {
        let obs = env.begin_slot();
        let tp = policy.tp(obs.n_levels, spec.num_gfus, obs.n_served);
        let rec = env.finish_slot(tp)?;
        acc += rec.mean_age;
    }
    Ok(acc / slots as f64)
}

/// Run the Monte-Carlo simulator with the oracle's mechanics and report the
/// relative deviation of the long-run mean age.
pub fn compare_sim_to_oracle(
    spec: &MarkovOracleSpec,
    slots: u64,
    seed: u64,
) -> Result<OracleComparison> {
    let exact = markov_oracle_expected_aoi(spec)?;
    let simulated = run_contention_sim(spec, slots, seed, CollisionRule::AllFail)?;
    Ok(OracleComparison {
        exact,
        simulated,
        rel_deviation: (simulated - exact).abs() / exact,
    })
}

/// Same comparison with a deliberately wrong collision rule on the simulator
/// side; verification plumbing for the negative control.
pub fn compare_perturbed_sim_to_oracle(
    spec: &MarkovOracleSpec,
    slots: u64,
    seed: u64,
) -> Result<OracleComparison> {
    let exact = markov_oracle_expected_aoi(spec)?;
    let simulated = run_contention_sim(spec, slots, seed, CollisionRule::OverflowRandomWinner)?;
    Ok(OracleComparison {
        exact,
        simulated,
        rel_deviation: (simulated - exact).abs() / exact,
    })
}

/// The standard verification suite: every combination of one or two users, one
/// or two levels, fixed and state-dependent policies, generation period 3.
pub fn oracle_suite() -> Vec<MarkovOracleSpec> {
    let mut specs = Vec::new();
    for num_gfus in [1usize, 2] {
        for n_levels in [1usize, 2] {
            for policy in [OraclePolicy::Fixed(0.5), OraclePolicy::StateDependent] {
                specs.push(MarkovOracleSpec {
                    num_gfus,
                    n_levels,
                    policy,
                    generation_period: 3,
                    age_cap: 50,
                });
            }
        }
    }
    specs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_single_user_has_age_one() {
        // One user, at least one level, always transmit, regenerate every
        // slot: every slot succeeds and the age is pinned at 1.
        let spec = MarkovOracleSpec {
            num_gfus: 1,
            n_levels: 1,
            policy: OraclePolicy::Fixed(1.0),
            generation_period: 1,
            age_cap: 20,
        };
        let age = markov_oracle_expected_aoi(&spec).unwrap();
        assert!((age - 1.0).abs() < 1e-12, "expected 1, got {age}");
    }

    #[test]
    fn always_transmit_period_three_matches_cycle_mean() {
        let spec = MarkovOracleSpec {
            num_gfus: 1,
            n_levels: 1,
            policy: OraclePolicy::Fixed(1.0),
            generation_period: 3,
            age_cap: 20,
        };
        let age = markov_oracle_expected_aoi(&spec).unwrap();
        assert!((age - 2.0).abs() < 1e-10, "expected 2, got {age}");
    }

    /// Closed-form long-run mean age for a single user with fixed attempt
    /// probability: renewal-reward over the success gaps, where the gap is
    /// G = (f - 1 - phi) + T with T geometric and phi the success position in
    /// its cycle, distributed as a truncated geometric independently of T.
    fn geometric_delay_mean_age(p: f64, f: u32) -> f64 {
        let f = f as f64;
        let q = 1.0 - p;
        let z = 1.0 - q.powf(f);
        // Moments of phi: P(phi = j) = p q^j / z for j = 0..f-1.
        let (mut e_phi, mut e_phi2) = (0.0, 0.0);
        for j in 0..f as u32 {
            let w = p * q.powi(j as i32) / z;
            e_phi += w * j as f64;
            e_phi2 += w * (j as f64) * (j as f64);
        }
        let e_c = f - 1.0 - e_phi;
        let e_c2 = (f - 1.0) * (f - 1.0) - 2.0 * (f - 1.0) * e_phi + e_phi2;
        let e_t = 1.0 / p;
        let e_t2 = (2.0 - p) / (p * p);
        let e_g = e_c + e_t;
        let e_g2 = e_c2 + 2.0 * e_c * e_t + e_t2;
        (e_g2 + e_g) / (2.0 * e_g)
    }

    #[test]
    fn matrix_oracle_matches_closed_form_geometric_delay() {
        for (p, f) in [(0.5, 7u32), (0.3, 5), (0.8, 4)] {
            let spec = MarkovOracleSpec {
                num_gfus: 1,
                n_levels: 1,
                policy: OraclePolicy::Fixed(p),
                generation_period: f,
                age_cap: 120,
            };
            let matrix = markov_oracle_expected_aoi(&spec).unwrap();
            let closed = geometric_delay_mean_age(p, f);
            assert!(
                (matrix - closed).abs() < 1e-8,
                "p={p} f={f}: matrix {matrix} vs closed form {closed}"
            );
        }
    }

    #[test]
    fn state_space_overflow_is_an_error() {
        let spec = MarkovOracleSpec {
            num_gfus: 3,
            n_levels: 1,
            policy: OraclePolicy::Fixed(0.5),
            generation_period: 3,
            age_cap: 50,
        };
        assert!(matches!(
            markov_oracle_expected_aoi(&spec),
            Err(SgfError::OracleOverflow(_))
        ));
    }

    #[test]
    fn three_users_fit_with_smaller_cap() {
        let spec = MarkovOracleSpec {
            num_gfus: 3,
            n_levels: 2,
            policy: OraclePolicy::StateDependent,
            generation_period: 3,
            age_cap: 18,
        };
        let age = markov_oracle_expected_aoi(&spec).unwrap();
        assert!(age >= 1.0 && age < 10.0, "age {age}");
    }

    #[test]
    fn deterministic_spec_simulates_exactly() {
        let spec = MarkovOracleSpec {
            num_gfus: 1,
            n_levels: 1,
            policy: OraclePolicy::Fixed(1.0),
            generation_period: 1,
            age_cap: 20,
        };
        let cmp = compare_sim_to_oracle(&spec, 10_000, 3).unwrap();
        assert_eq!(cmp.rel_deviation, 0.0);
    }

    #[test]
    fn two_user_state_dependent_sim_tracks_enumeration() {
        let spec = MarkovOracleSpec {
            num_gfus: 2,
            n_levels: 1,
            policy: OraclePolicy::StateDependent,
            generation_period: 3,
            age_cap: 50,
        };
        let cmp = compare_sim_to_oracle(&spec, 1_000_000, 7).unwrap();
        assert!(
            cmp.rel_deviation < 0.01,
            "deviation {} (exact {}, sim {})",
            cmp.rel_deviation,
            cmp.exact,
            cmp.simulated
        );
    }

    #[test]
    fn perturbed_contention_rule_is_detected() {
        // Injecting a wrong collision rule must push the simulator visibly
        // away from the oracle.
        let spec = MarkovOracleSpec {
            num_gfus: 2,
            n_levels: 1,
            policy: OraclePolicy::Fixed(0.5),
            generation_period: 3,
            age_cap: 50,
        };
        let cmp = compare_perturbed_sim_to_oracle(&spec, 200_000, 11).unwrap();
        assert!(
            cmp.rel_deviation > 0.05,
            "negative control deviation {} too small",
            cmp.rel_deviation
        );
    }
}
