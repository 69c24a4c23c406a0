//! Per-slot semi-grant-free mechanics: interference tolerance of grant-based
//! users, the residual budget handed to grant-free users, the pre-configured
//! receive-SNR level cascade, SIC feasibility, contention resolution, and rate
//! accounting.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::channel::ChannelSnapshot;
use crate::config::MacConfig;
use crate::error::{Result, SgfError};
use crate::linalg::{combining_gain, norm_sqr};

/// Target rates below this threshold make the tolerance formula diverge; the
/// tolerance is reported as infinite instead.
const MIN_TARGET_RATE: f64 = 1e-9;

/// How the SNR-level cascade accounts for interference from lower levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CascadeMode {
    /// Each level covers only the next level's interference (the recursion as
    /// published).
    PaperLiteral,
    /// Each level covers the sum of all lower levels, so every level decodes
    /// at exactly the target rate under full admission.
    FullSum,
}

impl CascadeMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "paper-literal" => Ok(CascadeMode::PaperLiteral),
            "full-sum" => Ok(CascadeMode::FullSum),
            other => Err(SgfError::Config(format!(
                "unknown cascade_mode {other:?} (expected paper-literal | full-sum)"
            ))),
        }
    }
}

impl std::fmt::Display for CascadeMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CascadeMode::PaperLiteral => write!(f, "paper-literal"),
            CascadeMode::FullSum => write!(f, "full-sum"),
        }
    }
}

/// Receive combining vectors, one unit-norm column per grant-based user.
#[derive(Debug, Clone)]
pub struct DetectionMatrix {
    pub columns: Vec<Vec<Complex64>>,
}

impl DetectionMatrix {
    /// Wrap pre-normalized columns, enforcing the unit-norm invariant.
    pub fn new(columns: Vec<Vec<Complex64>>) -> Result<Self> {
        for (k, col) in columns.iter().enumerate() {
            let n = norm_sqr(col);
            if (n - 1.0).abs() > 1e-9 {
                return Err(SgfError::Numerical(format!(
                    "detection column {k} has norm^2 {n}, expected 1"
                )));
            }
        }
        Ok(DetectionMatrix { columns })
    }

    /// Zero-forcing combiner for the snapshot's grant-based channels.
    pub fn zero_forcing(snapshot: &ChannelSnapshot) -> Result<Self> {
        Ok(DetectionMatrix {
            columns: crate::linalg::zero_forcing(&snapshot.gbu_channels)?,
        })
    }

    /// Reshape a flat action of 2*K*A reals (interleaved re/im) into K
    /// unit-normalized combining columns of length A.
    pub fn from_flat_action(action: &[f64], num_gbus: usize, antennas: usize) -> Self {
        assert_eq!(action.len(), 2 * num_gbus * antennas, "action length mismatch");
        let columns = (0..num_gbus)
            .map(|k| {
                let mut col: Vec<Complex64> = (0..antennas)
                    .map(|a| {
                        let base = 2 * (k * antennas + a);
                        Complex64::new(action[base], action[base + 1])
                    })
                    .collect();
                crate::linalg::normalize(&mut col);
                col
            })
            .collect();
        DetectionMatrix { columns }
    }
}

/// Per-GBU interference accounting, linear watts.
#[derive(Debug, Clone)]
pub struct InterferenceBudget {
    pub per_gbu_max: Vec<f64>,
    pub per_gbu_gb: Vec<f64>,
    pub per_gbu_gf: Vec<f64>,
}

/// Pre-configured receive-SNR levels, one descending list per GBU.
#[derive(Debug, Clone)]
pub struct SnrLevelPlan {
    pub per_gbu_levels: Vec<Vec<f64>>,
    pub cascade_mode: CascadeMode,
}

impl SnrLevelPlan {
    pub fn total_levels(&self) -> usize {
        self.per_gbu_levels.iter().map(|l| l.len()).sum()
    }

    /// All (gbu, level) slots in canonical order.
    pub fn slots(&self) -> Vec<(usize, usize)> {
        self.per_gbu_levels
            .iter()
            .enumerate()
            .flat_map(|(k, levels)| (0..levels.len()).map(move |n| (k, n)))
            .collect()
    }
}

/// Result of one contention slot.
#[derive(Debug, Clone)]
pub struct SlotOutcome {
    pub attempts: Vec<usize>,
    /// gfu id -> (gbu index, level index) for every matched attempt.
    pub admissions: Vec<(usize, (usize, usize))>,
    pub successes: Vec<usize>,
    /// Admitted attempts whose SIC power check failed.
    pub failed_sic: Vec<usize>,
    pub collision: bool,
    pub gbu_rates: Vec<f64>,
    pub gfu_rates: Vec<f64>,
}

impl SlotOutcome {
    pub fn sum_gbu_rate(&self) -> f64 {
        self.gbu_rates.iter().sum()
    }

    pub fn sum_gfu_rate(&self) -> f64 {
        self.gfu_rates.iter().sum()
    }
}

/// Maximum interference GBU `k` can absorb while still decoding at the target
/// rate: P |h_k^H v_k|^2 / (2^R - 1) - n0. May be negative when the GBU cannot
/// meet the target even alone; diverges to +inf as the target rate vanishes.
pub fn max_tolerable_interference(
    gbu_index: usize,
    snapshot: &ChannelSnapshot,
    v: &DetectionMatrix,
    mac: &MacConfig,
) -> f64 {
    if mac.target_rate < MIN_TARGET_RATE {
        return f64::INFINITY;
    }
    let signal = mac.gbu_power
        * combining_gain(&v.columns[gbu_index], &snapshot.gbu_channels[gbu_index]);
    signal / (2f64.powf(mac.target_rate) - 1.0) - mac.noise
}

/// Residual inter-GBU interference seen on GBU `k`'s detection column.
pub fn gb_interference(
    gbu_index: usize,
    snapshot: &ChannelSnapshot,
    v: &DetectionMatrix,
    mac: &MacConfig,
) -> f64 {
    (0..snapshot.gbu_channels.len())
        .filter(|&j| j != gbu_index)
        .map(|j| mac.gbu_power * combining_gain(&v.columns[j], &snapshot.gbu_channels[gbu_index]))
        .sum()
}

/// Interference budget left for grant-free users, clamped at zero: a GBU that
/// is already in outage admits nobody.
pub fn gf_budget(i_max: f64, i_gb: f64) -> f64 {
    (i_max - i_gb).max(0.0)
}

/// Build the level cascade of exactly `n` levels, largest first.
pub fn cascade_levels(epsilon: f64, n: usize, mode: CascadeMode) -> Vec<f64> {
    let mut levels = vec![0.0; n];
    match mode {
        CascadeMode::PaperLiteral => {
            if n > 0 {
                levels[n - 1] = epsilon;
                for i in (0..n.saturating_sub(1)).rev() {
                    levels[i] = epsilon * (1.0 + levels[i + 1]);
                }
            }
        }
        CascadeMode::FullSum => {
            let mut below = 0.0;
            for i in (0..n).rev() {
                levels[i] = epsilon * (1.0 + below);
                below += levels[i];
            }
        }
    }
    levels
}

/// Largest cascade that fits the budget: returns the level list (descending),
/// empty when even a single level does not fit.
pub fn configure_snr_levels(target_rate: f64, gf_budget_linear: f64, mac: &MacConfig) -> Vec<f64> {
    assert!(target_rate > 0.0, "target rate must be positive");
    let epsilon = 2f64.powf(target_rate) - 1.0;
    let budget_snr = gf_budget_linear / mac.noise;
    let mut best = Vec::new();
    for n in 1..=mac.max_levels {
        let cand = cascade_levels(epsilon, n, mac.cascade_mode);
        if cand.iter().sum::<f64>() <= budget_snr {
            best = cand;
        } else {
            break;
        }
    }
    best
}

/// Eq-style admission check: the transmit scaling needed to hit the level must
/// not exceed the grant-free user's maximum transmit SNR. An orthogonal
/// channel (zero gain) needs infinite power and is never feasible.
pub fn sic_feasible(
    level_snr: f64,
    gfu_channel: &[Complex64],
    v_k: &[Complex64],
    mac: &MacConfig,
) -> bool {
    let gain = combining_gain(v_k, gfu_channel);
    if gain <= 0.0 {
        return false;
    }
    level_snr * mac.noise / gain <= mac.gfu_max_snr
}

/// Throughput of GBU `k` given the realized grant-free interference on its
/// column.
pub fn gbu_rate(
    gbu_index: usize,
    realized_gf_interference: f64,
    snapshot: &ChannelSnapshot,
    v: &DetectionMatrix,
    mac: &MacConfig,
) -> f64 {
    let signal = mac.gbu_power
        * combining_gain(&v.columns[gbu_index], &snapshot.gbu_channels[gbu_index]);
    let i_gb = gb_interference(gbu_index, snapshot, v, mac);
    (1.0 + signal / (i_gb + realized_gf_interference + mac.noise)).log2()
}

/// Rate of an admitted grant-free user on level `level_index` of `levels`,
/// with SIC interference from the later-decoded co-admitted levels.
pub fn gfu_rate(level_index: usize, levels: &[f64], co_admitted: &[usize]) -> f64 {
    let interference: f64 = co_admitted
        .iter()
        .filter(|&&m| m > level_index)
        .map(|&m| levels[m])
        .sum();
    (1.0 + levels[level_index] / (1.0 + interference)).log2()
}

/// Total slot throughput in bits/s/Hz.
pub fn slot_throughput(outcome: &SlotOutcome) -> f64 {
    outcome.sum_gbu_rate() + outcome.sum_gfu_rate()
}

/// Resolve one contention slot.
///
/// More attempts than available levels is a collision and every attempt fails.
/// Otherwise each attempting user is matched to a distinct (GBU, level) slot
/// uniformly at random and succeeds iff the SIC power check passes for the
/// matched slot. Rates are then computed over the realized admissions.
pub fn resolve_slot<R: Rng>(
    plan: &SnrLevelPlan,
    budgets: &InterferenceBudget,
    attempting: &[usize],
    snapshot: &ChannelSnapshot,
    v: &DetectionMatrix,
    mac: &MacConfig,
    rng: &mut R,
) -> SlotOutcome {
    let num_gbus = snapshot.gbu_channels.len();
    let num_gfus = snapshot.gfu_channels.len();
    let total = plan.total_levels();

    let mut outcome = SlotOutcome {
        attempts: attempting.to_vec(),
        admissions: Vec::new(),
        successes: Vec::new(),
        failed_sic: Vec::new(),
        collision: false,
        gbu_rates: vec![0.0; num_gbus],
        gfu_rates: vec![0.0; num_gfus],
    };

    if attempting.len() > total {
        outcome.collision = true;
    } else if !attempting.is_empty() {
        let mut slots = plan.slots();
        slots.shuffle(rng);
        for (&gfu, &slot) in attempting.iter().zip(&slots) {
            outcome.admissions.push((gfu, slot));
            let (k, n) = slot;
            let level = plan.per_gbu_levels[k][n];
            if sic_feasible(level, &snapshot.gfu_channels[gfu], &v.columns[k], mac) {
                outcome.successes.push(gfu);
            } else {
                outcome.failed_sic.push(gfu);
            }
        }
    }

    // Successful levels per GBU, needed both for the realized interference on
    // the grant-based streams and for the grant-free SIC rates.
    let mut admitted_levels: Vec<Vec<usize>> = vec![Vec::new(); num_gbus];
    for &(gfu, (k, n)) in &outcome.admissions {
        if outcome.successes.contains(&gfu) {
            admitted_levels[k].push(n);
        }
    }

    for k in 0..num_gbus {
        let i_gf = if mac.literal_eq13 {
            budgets.per_gbu_gf[k]
        } else {
            mac.noise
                * admitted_levels[k]
                    .iter()
                    .map(|&n| plan.per_gbu_levels[k][n])
                    .sum::<f64>()
        };
        outcome.gbu_rates[k] = gbu_rate(k, i_gf, snapshot, v, mac);
    }

    for &(gfu, (k, n)) in &outcome.admissions {
        if outcome.successes.contains(&gfu) {
            outcome.gfu_rates[gfu] = gfu_rate(n, &plan.per_gbu_levels[k], &admitted_levels[k]);
        }
    }

    outcome
}

/// Budgets and level plan for a snapshot under the given combiner.
pub fn build_plan(
    snapshot: &ChannelSnapshot,
    v: &DetectionMatrix,
    mac: &MacConfig,
) -> (InterferenceBudget, SnrLevelPlan) {
    let num_gbus = snapshot.gbu_channels.len();
    let mut budgets = InterferenceBudget {
        per_gbu_max: Vec::with_capacity(num_gbus),
        per_gbu_gb: Vec::with_capacity(num_gbus),
        per_gbu_gf: Vec::with_capacity(num_gbus),
    };
    let mut plan = SnrLevelPlan {
        per_gbu_levels: Vec::with_capacity(num_gbus),
        cascade_mode: mac.cascade_mode,
    };
    for k in 0..num_gbus {
        let i_max = max_tolerable_interference(k, snapshot, v, mac);
        let i_gb = gb_interference(k, snapshot, v, mac);
        let budget = gf_budget(i_max, i_gb);
        budgets.per_gbu_max.push(i_max);
        budgets.per_gbu_gb.push(i_gb);
        budgets.per_gbu_gf.push(budget);
        plan.per_gbu_levels
            .push(configure_snr_levels(mac.target_rate, budget, mac));
    }
    (budgets, plan)
}
