//! Slot-stepped environments. [`RadioEnv`] carries the full physics: user
//! mobility, Rician channels, combiner-dependent budgets and level cascades,
//! contention, SIC, and rate accounting. [`ContentionEnv`] strips the radio
//! layer away and offers a fixed number of always-feasible levels, which is
//! the setting the exact Markov oracle can enumerate.
//!
//! A slot proceeds as: generation tick (every f slots all users re-arm),
//! observation, combiner + transmission-probability choice, contention
//! resolution, age update, rewards. Channel state for the next slot is drawn
//! when the current slot commits, so the upper agent's next observation is
//! already available at the transition boundary.

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::aoi::{average_aoi, maybe_generate, update_aoi, GarConfig, GfuAoiState};
use crate::channel::{place_users, sample_snapshot, step_mobility, ChannelSnapshot, UserPosition};
use crate::config::{MacConfig, RadioConfig, SimConfig};
use crate::error::Result;
use crate::mac::{
    build_plan, resolve_slot, slot_throughput, DetectionMatrix, InterferenceBudget, SlotOutcome,
    SnrLevelPlan,
};

/// Observation handed to the lower-level scheduler at the start of a slot.
#[derive(Debug, Clone)]
pub struct LowerObs {
    /// Per-user instantaneous ages (the lower agent's state).
    pub ages: Vec<f64>,
    /// Level supply for the slot, when already known at observation time.
    pub n_levels: usize,
    pub n_waiting: usize,
    pub n_served: usize,
}

/// Everything produced by one committed slot.
#[derive(Debug, Clone)]
pub struct SlotRecord {
    pub slot: u32,
    pub outcome: SlotOutcome,
    pub n_levels: usize,
    /// Post-update population ages.
    pub mean_age: f64,
    pub max_age: u32,
    pub n_waiting: usize,
    pub throughput: f64,
    pub lower_reward: f64,
    pub upper_reward: f64,
    /// Sum over GBUs of max(0, target - rate); scaled by the penalty weight
    /// inside the upper reward.
    pub rate_deficit: f64,
}

/// Common interface the lower-level training loop needs.
pub trait LowerWorld {
    fn reset(&mut self);
    fn num_gfus(&self) -> usize;
    /// Current per-user ages (the lower agent's state vector).
    fn ages(&self) -> Vec<f64>;
    /// Generation tick plus observation; must be called once per slot.
    fn begin_slot(&mut self) -> LowerObs;
    /// Resolve the slot under the chosen transmission probability.
    fn finish_slot(&mut self, tp: f64) -> Result<SlotRecord>;
}

// ---------------------------------------------------------------------------
// Full radio environment
// ---------------------------------------------------------------------------

pub struct RadioEnv {
    cfg: SimConfig,
    pub radio: RadioConfig,
    pub mac: MacConfig,
    pub gar: GarConfig,
    pub num_gbus: usize,
    pub num_gfus: usize,
    pub constraint_penalty: f64,
    gbu_positions: Vec<UserPosition>,
    gfu_positions: Vec<UserPosition>,
    states: Vec<GfuAoiState>,
    snapshot: ChannelSnapshot,
    t: u32,
    rng: ChaCha12Rng,
    ticked_at: Option<u32>,
    /// Plan stashed by the ZF lower-world path between begin and finish.
    pending_zf: Option<(DetectionMatrix, InterferenceBudget, SnrLevelPlan)>,
}

impl RadioEnv {
    pub fn new(cfg: &SimConfig, rng: ChaCha12Rng) -> Self {
        let radio = cfg.radio();
        let mac = cfg.mac();
        let gar = GarConfig {
            generation_period: cfg.generation_period,
            horizon: cfg.episode_slots,
        };
        let mut env = RadioEnv {
            cfg: cfg.clone(),
            radio,
            mac,
            gar,
            num_gbus: cfg.num_gbus,
            num_gfus: cfg.num_gfus,
            constraint_penalty: cfg.constraint_penalty,
            gbu_positions: Vec::new(),
            gfu_positions: Vec::new(),
            states: Vec::new(),
            snapshot: ChannelSnapshot {
                gbu_channels: vec![],
                gfu_channels: vec![],
                slot_index: 0,
            },
            t: 0,
            rng,
            ticked_at: None,
            pending_zf: None,
        };
        env.reset_inner();
        env
    }

    fn reset_inner(&mut self) {
        self.gbu_positions = place_users(
            self.num_gbus,
            self.radio.placement_std_km,
            self.radio.d_min_km,
            &mut self.rng,
        );
        self.gfu_positions = place_users(
            self.num_gfus,
            self.radio.placement_std_km,
            self.radio.d_min_km,
            &mut self.rng,
        );
        self.states = vec![GfuAoiState::initial(); self.num_gfus];
        self.t = 0;
        self.ticked_at = None;
        self.pending_zf = None;
        self.snapshot = sample_snapshot(
            &self.gbu_positions,
            &self.gfu_positions,
            &self.radio,
            0,
            &mut self.rng,
        );
    }

    pub fn slot(&self) -> u32 {
        self.t
    }

    /// The configuration this environment was built from.
    pub fn sim_config(&self) -> SimConfig {
        self.cfg.clone()
    }

    pub fn snapshot(&self) -> &ChannelSnapshot {
        &self.snapshot
    }

    pub fn aoi_states(&self) -> &[GfuAoiState] {
        &self.states
    }

    pub fn ages_f64(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.age as f64).collect()
    }

    /// Flattened real/imaginary parts of all GBU channel vectors (the upper
    /// agent's state, dimension 2*K*A).
    pub fn csi_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.num_gbus * self.radio.antennas);
        for h in &self.snapshot.gbu_channels {
            for z in h {
                out.push(z.re);
                out.push(z.im);
            }
        }
        out
    }

    pub fn waiting_count(&self) -> usize {
        self.states.iter().filter(|s| s.waiting).count()
    }

    /// Generation tick for the current slot; idempotence is a bug, so a second
    /// call within the same slot panics.
    pub fn gar_tick(&mut self) {
        assert_ne!(self.ticked_at, Some(self.t), "gar_tick called twice in slot");
        maybe_generate(self.t, &mut self.states, &self.gar);
        self.ticked_at = Some(self.t);
    }

    pub fn zero_forcing(&self) -> Result<DetectionMatrix> {
        DetectionMatrix::zero_forcing(&self.snapshot)
    }

    pub fn plan_for(&self, v: &DetectionMatrix) -> (InterferenceBudget, SnrLevelPlan) {
        build_plan(&self.snapshot, v, &self.mac)
    }

    /// Resolve the slot: draw attempts, match, update ages, compute rewards,
    /// then advance mobility and channels to the next slot.
    pub fn commit_slot(
        &mut self,
        v: &DetectionMatrix,
        budgets: &InterferenceBudget,
        plan: &SnrLevelPlan,
        tp: f64,
    ) -> SlotRecord {
        assert_eq!(
            self.ticked_at,
            Some(self.t),
            "commit_slot without gar_tick for slot {}",
            self.t
        );
        assert!((0.0..=1.0).contains(&tp), "transmission probability {tp}");

        let attempts: Vec<usize> = (0..self.num_gfus)
            .filter(|&i| self.states[i].waiting && self.rng.random_bool(tp))
            .collect();
        let outcome = resolve_slot(
            plan,
            budgets,
            &attempts,
            &self.snapshot,
            v,
            &self.mac,
            &mut self.rng,
        );

        for (i, s) in self.states.iter_mut().enumerate() {
            update_aoi(s, outcome.successes.contains(&i));
        }

        let mean_age = average_aoi(&self.states);
        let max_age = self.states.iter().map(|s| s.age).max().unwrap_or(0);
        let throughput = slot_throughput(&outcome);
        let rate_deficit: f64 = outcome
            .gbu_rates
            .iter()
            .map(|&r| (self.mac.target_rate - r).max(0.0))
            .sum();
        let record = SlotRecord {
            slot: self.t,
            n_levels: plan.total_levels(),
            mean_age,
            max_age,
            n_waiting: self.states.iter().filter(|s| s.waiting).count(),
            throughput,
            lower_reward: -mean_age,
            upper_reward: throughput - self.constraint_penalty * rate_deficit,
            rate_deficit,
            outcome,
        };

        // Advance to the next slot: everyone roams, channels re-fade.
        self.t += 1;
        step_mobility(
            &mut self.gbu_positions,
            self.radio.mobility_std_km,
            self.radio.d_min_km,
            &mut self.rng,
        );
        step_mobility(
            &mut self.gfu_positions,
            self.radio.mobility_std_km,
            self.radio.d_min_km,
            &mut self.rng,
        );
        self.snapshot = sample_snapshot(
            &self.gbu_positions,
            &self.gfu_positions,
            &self.radio,
            self.t,
            &mut self.rng,
        );
        record
    }
}

impl LowerWorld for RadioEnv {
    fn reset(&mut self) {
        self.reset_inner();
    }

    fn num_gfus(&self) -> usize {
        self.num_gfus
    }

    fn ages(&self) -> Vec<f64> {
        self.ages_f64()
    }

    /// Zero-forcing lower world: the combiner and level plan are fixed by the
    /// slot's channels, so the supply is known at observation time.
    fn begin_slot(&mut self) -> LowerObs {
        self.gar_tick();
        let v = self
            .zero_forcing()
            .expect("zero-forcing combiner for continuous channel draw");
        let (budgets, plan) = self.plan_for(&v);
        let n_waiting = self.waiting_count();
        let obs = LowerObs {
            ages: self.ages_f64(),
            n_levels: plan.total_levels(),
            n_waiting,
            n_served: self.num_gfus - n_waiting,
        };
        self.pending_zf = Some((v, budgets, plan));
        obs
    }

    fn finish_slot(&mut self, tp: f64) -> Result<SlotRecord> {
        let (v, budgets, plan) = self
            .pending_zf
            .take()
            .expect("finish_slot before begin_slot");
        Ok(self.commit_slot(&v, &budgets, &plan, tp))
    }
}

// ---------------------------------------------------------------------------
// Contention-only environment
// ---------------------------------------------------------------------------

/// What happens when more users attempt than levels exist. `AllFail` is the
/// modeled behavior; `OverflowRandomWinner` is a deliberately wrong variant
/// kept for negative-control verification against the exact oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollisionRule {
    AllFail,
    OverflowRandomWinner,
}

pub struct ContentionEnv {
    pub n_levels: usize,
    pub num_gfus: usize,
    pub gar: GarConfig,
    pub rule: CollisionRule,
    states: Vec<GfuAoiState>,
    t: u32,
    rng: ChaCha12Rng,
    ticked_at: Option<u32>,
}

impl ContentionEnv {
    pub fn new(
        n_levels: usize,
        num_gfus: usize,
        generation_period: u32,
        rng: ChaCha12Rng,
    ) -> Self {
        ContentionEnv {
            n_levels,
            num_gfus,
            gar: GarConfig {
                generation_period,
                horizon: u32::MAX,
            },
            rule: CollisionRule::AllFail,
            states: vec![GfuAoiState::initial(); num_gfus],
            t: 0,
            rng,
            ticked_at: None,
        }
    }

    pub fn aoi_states(&self) -> &[GfuAoiState] {
        &self.states
    }

    pub fn slot(&self) -> u32 {
        self.t
    }
}

impl LowerWorld for ContentionEnv {
    fn reset(&mut self) {
        self.states = vec![GfuAoiState::initial(); self.num_gfus];
        self.t = 0;
        self.ticked_at = None;
    }

    fn num_gfus(&self) -> usize {
        self.num_gfus
    }

    fn ages(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.age as f64).collect()
    }

    fn begin_slot(&mut self) -> LowerObs {
        assert_ne!(self.ticked_at, Some(self.t), "gar_tick called twice in slot");
        maybe_generate(self.t, &mut self.states, &self.gar);
        self.ticked_at = Some(self.t);
        let n_waiting = self.states.iter().filter(|s| s.waiting).count();
        LowerObs {
            ages: self.states.iter().map(|s| s.age as f64).collect(),
            n_levels: self.n_levels,
            n_waiting,
            n_served: self.num_gfus - n_waiting,
        }
    }

    fn finish_slot(&mut self, tp: f64) -> Result<SlotRecord> {
        assert_eq!(self.ticked_at, Some(self.t), "finish_slot before begin_slot");
        assert!((0.0..=1.0).contains(&tp), "transmission probability {tp}");
        let attempts: Vec<usize> = (0..self.num_gfus)
            .filter(|&i| self.states[i].waiting && self.rng.random_bool(tp))
            .collect();
        let mut successes: Vec<usize> = Vec::new();
        let mut collision = false;
        if attempts.len() > self.n_levels {
            collision = true;
            if self.rule == CollisionRule::OverflowRandomWinner && !attempts.is_empty() {
                let winner = attempts[self.rng.random_range(0..attempts.len())];
                successes.push(winner);
            }
        } else {
            successes = attempts.clone();
        }
        for (i, s) in self.states.iter_mut().enumerate() {
            update_aoi(s, successes.contains(&i));
        }
        let mean_age = average_aoi(&self.states);
        let record = SlotRecord {
            slot: self.t,
            outcome: SlotOutcome {
                attempts,
                admissions: Vec::new(),
                successes,
                failed_sic: Vec::new(),
                collision,
                gbu_rates: vec![],
                gfu_rates: vec![0.0; self.num_gfus],
            },
            n_levels: self.n_levels,
            mean_age,
            max_age: self.states.iter().map(|s| s.age).max().unwrap_or(0),
            n_waiting: self.states.iter().filter(|s| s.waiting).count(),
            throughput: 0.0,
            lower_reward: -mean_age,
            upper_reward: 0.0,
            rate_deficit: 0.0,
        };
        self.t += 1;
        self.ticked_at = None;
        Ok(record)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn small_cfg() -> SimConfig {
        let mut cfg = SimConfig::default();
        cfg.num_gbus = 2;
        cfg.num_gfus = 3;
        cfg.antennas = 2;
        cfg
    }

    fn run_slots(env: &mut RadioEnv, tp: f64, n: u32) -> Vec<SlotRecord> {
        (0..n)
            .map(|_| {
                env.gar_tick();
                let v = env.zero_forcing().unwrap();
                let (budgets, plan) = env.plan_for(&v);
                env.commit_slot(&v, &budgets, &plan, tp)
            })
            .collect()
    }

    #[test]
    fn never_transmit_sawtooth_and_zero_gf_throughput() {
        let cfg = small_cfg();
        let mut env = RadioEnv::new(&cfg, ChaCha12Rng::seed_from_u64(1));
        let f = cfg.generation_period;
        for _ in 0..30 {
            let t = env.slot();
            env.gar_tick();
            // Pending-update age sawtooths with the generation period.
            for s in env.aoi_states() {
                assert_eq!(s.update_age(t), t % f);
            }
            let v = env.zero_forcing().unwrap();
            let (budgets, plan) = env.plan_for(&v);
            let rec = env.commit_slot(&v, &budgets, &plan, 0.0);
            assert!(rec.outcome.successes.is_empty());
            assert_eq!(rec.outcome.sum_gfu_rate(), 0.0);
            // Delivered-information age grows by one per slot.
            assert_eq!(rec.mean_age, (t + 2) as f64);
        }
    }

    #[test]
    fn trajectories_are_deterministic_per_seed() {
        let cfg = small_cfg();
        let mut a = RadioEnv::new(&cfg, ChaCha12Rng::seed_from_u64(7));
        let mut b = RadioEnv::new(&cfg, ChaCha12Rng::seed_from_u64(7));
        let ra = run_slots(&mut a, 0.5, 40);
        let rb = run_slots(&mut b, 0.5, 40);
        for (x, y) in ra.iter().zip(&rb) {
            assert_eq!(x.mean_age, y.mean_age);
            assert_eq!(x.throughput, y.throughput);
            assert_eq!(x.outcome.successes, y.outcome.successes);
        }
    }

    #[test]
    fn attempt_partition_holds_every_slot() {
        let cfg = small_cfg();
        let mut env = RadioEnv::new(&cfg, ChaCha12Rng::seed_from_u64(3));
        for _ in 0..300 {
            env.gar_tick();
            let v = env.zero_forcing().unwrap();
            let (budgets, plan) = env.plan_for(&v);
            let rec = env.commit_slot(&v, &budgets, &plan, 0.7);
            let o = &rec.outcome;
            if o.collision {
                assert!(o.successes.is_empty());
                assert!(o.admissions.is_empty());
            } else {
                assert_eq!(o.successes.len() + o.failed_sic.len(), o.attempts.len());
            }
            for s in &o.successes {
                assert!(o.attempts.contains(s));
            }
        }
    }

    #[test]
    fn served_users_do_not_attempt_until_next_generation() {
        let cfg = small_cfg();
        let mut env = RadioEnv::new(&cfg, ChaCha12Rng::seed_from_u64(5));
        for _ in 0..200 {
            let served: Vec<usize> = env
                .aoi_states()
                .iter()
                .enumerate()
                .filter(|(_, s)| !s.waiting)
                .map(|(i, _)| i)
                .collect();
            let t = env.slot();
            env.gar_tick();
            let v = env.zero_forcing().unwrap();
            let (budgets, plan) = env.plan_for(&v);
            let rec = env.commit_slot(&v, &budgets, &plan, 1.0);
            if t % cfg.generation_period != 0 {
                for s in served {
                    assert!(!rec.outcome.attempts.contains(&s));
                }
            }
        }
    }

    #[test]
    fn contention_env_collision_kills_all_attempts() {
        let mut env = ContentionEnv::new(1, 4, 3, ChaCha12Rng::seed_from_u64(2));
        let mut saw_collision = false;
        for _ in 0..200 {
            env.begin_slot();
            let rec = env.finish_slot(1.0).unwrap();
            if rec.outcome.collision {
                saw_collision = true;
                assert!(rec.outcome.successes.is_empty());
            }
        }
        assert!(saw_collision);
    }

    #[test]
    fn contention_env_single_user_always_succeeds() {
        let mut env = ContentionEnv::new(1, 1, 1, ChaCha12Rng::seed_from_u64(4));
        for _ in 0..50 {
            env.begin_slot();
            let rec = env.finish_slot(1.0).unwrap();
            assert_eq!(rec.mean_age, 1.0);
        }
    }
}
