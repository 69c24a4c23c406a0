//! User geometry and the Rician multi-antenna channel model.
//!
//! Users are dropped around the base station (at the origin) from a zero-mean
//! normal in each coordinate and roam with a small normal step per slot. The
//! channel to the A-antenna BS combines a log-distance path gain, a
//! deterministic steering component from the user's bearing, and i.i.d.
//! complex-normal scattering weighted by the Rician factor.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::config::RadioConfig;

/// Planar user position in km; the base station sits at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserPosition {
    pub x_km: f64,
    pub y_km: f64,
}

impl UserPosition {
    pub fn distance_km(&self) -> f64 {
        self.x_km.hypot(self.y_km)
    }

    pub fn bearing(&self) -> f64 {
        self.y_km.atan2(self.x_km)
    }
}

/// Per-slot channel vectors for every user, plus the slot they belong to.
#[derive(Debug, Clone)]
pub struct ChannelSnapshot {
    pub gbu_channels: Vec<Vec<Complex64>>,
    pub gfu_channels: Vec<Vec<Complex64>>,
    pub slot_index: u32,
}

/// Draw `count` user positions, re-drawing any that land inside the minimum
/// distance from the BS.
pub fn place_users<R: Rng>(count: usize, std_km: f64, d_min_km: f64, rng: &mut R) -> Vec<UserPosition> {
    let normal = Normal::new(0.0, std_km).expect("std_km > 0");
    (0..count)
        .map(|_| loop {
            let pos = UserPosition {
                x_km: normal.sample(rng),
                y_km: normal.sample(rng),
            };
            if pos.distance_km() >= d_min_km {
                break pos;
            }
        })
        .collect()
}

/// Perturb every position by an independent zero-mean normal step; the
/// minimum-distance re-draw applies to the stepped position.
pub fn step_mobility<R: Rng>(
    positions: &mut [UserPosition],
    step_std_km: f64,
    d_min_km: f64,
    rng: &mut R,
) {
    if step_std_km == 0.0 {
        return;
    }
    let normal = Normal::new(0.0, step_std_km).expect("step_std_km >= 0");
    for pos in positions.iter_mut() {
        loop {
            let cand = UserPosition {
                x_km: pos.x_km + normal.sample(rng),
                y_km: pos.y_km + normal.sample(rng),
            };
            if cand.distance_km() >= d_min_km {
                *pos = cand;
                break;
            }
        }
    }
}

/// Log-distance path gain g(d) = g0 * (d/d0)^(-alpha), linear.
pub fn path_gain(distance_km: f64, radio: &RadioConfig) -> f64 {
    radio.pathloss_ref * (distance_km / radio.pathloss_ref_km).powf(-radio.pathloss_alpha)
}

/// Uniform-linear-array steering vector for a user at the given bearing:
/// unit-modulus phase ramp with half-wavelength element spacing.
pub fn steering_vector(bearing: f64, antennas: usize) -> Vec<Complex64> {
    let phase_step = std::f64::consts::PI * bearing.sin();
    (0..antennas)
        .map(|n| Complex64::from_polar(1.0, phase_step * n as f64))
        .collect()
}

/// Sample one Rician channel vector:
/// sqrt(g(d)) * ( sqrt(R/(R+1)) * a + sqrt(1/(R+1)) * w )
/// with `a` the steering vector and `w` i.i.d. standard complex normal.
pub fn sample_channel<R: Rng>(
    position: &UserPosition,
    radio: &RadioConfig,
    rng: &mut R,
) -> Vec<Complex64> {
    let g = path_gain(position.distance_km(), radio);
    let r = radio.rician_factor;
    let los_scale = (r / (r + 1.0)).sqrt();
    let scatter_scale = (1.0 / (r + 1.0)).sqrt();
    let amp = g.sqrt();
    steering_vector(position.bearing(), radio.antennas)
        .into_iter()
        .map(|a| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            // complex normal with unit total power per entry
            let w = Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
            amp * (los_scale * a + scatter_scale * w)
        })
        .collect()
}

/// Sample the full per-slot snapshot for both user populations.
pub fn sample_snapshot<R: Rng>(
    gbu_positions: &[UserPosition],
    gfu_positions: &[UserPosition],
    radio: &RadioConfig,
    slot_index: u32,
    rng: &mut R,
) -> ChannelSnapshot {
    ChannelSnapshot {
        gbu_channels: gbu_positions
            .iter()
            .map(|p| sample_channel(p, radio, rng))
            .collect(),
        gfu_channels: gfu_positions
            .iter()
            .map(|p| sample_channel(p, radio, rng))
            .collect(),
        slot_index,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SimConfig;
    use crate::linalg::norm_sqr;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn radio() -> RadioConfig {
        SimConfig::default().radio()
    }

    #[test]
    fn place_zero_users_is_empty() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        assert!(place_users(0, 1.5, 0.05, &mut rng).is_empty());
    }

    #[test]
    fn placement_is_deterministic_under_fixed_seed() {
        let a = place_users(5, 1.5, 0.05, &mut ChaCha12Rng::seed_from_u64(9));
        let b = place_users(5, 1.5, 0.05, &mut ChaCha12Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn placement_std_matches_generator_law() {
        // 1e5 draws: sample std of x must sit within 1.5 +/- 0.02.
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let users = place_users(100_000, 1.5, 0.05, &mut rng);
        let n = users.len() as f64;
        let mean = users.iter().map(|u| u.x_km).sum::<f64>() / n;
        let var = users.iter().map(|u| (u.x_km - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt();
        assert!((std - 1.5).abs() < 0.02, "sample std {std}");
    }

    #[test]
    fn no_position_violates_d_min() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let mut users = place_users(2000, 0.2, 0.05, &mut rng);
        assert!(users.iter().all(|u| u.distance_km() >= 0.05));
        for _ in 0..50 {
            step_mobility(&mut users, 0.05, 0.05, &mut rng);
            assert!(users.iter().all(|u| u.distance_km() >= 0.05));
        }
    }

    #[test]
    fn zero_step_leaves_positions_unchanged() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let mut users = place_users(10, 1.5, 0.05, &mut rng);
        let before = users.clone();
        step_mobility(&mut users, 0.0, 0.05, &mut rng);
        assert_eq!(before, users);
    }

    #[test]
    fn mobility_step_std_matches_config() {
        // Far from the origin the re-draw never triggers, so observed per-step
        // deltas follow the configured normal. 1e5 steps, 2% tolerance.
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let mut pos = vec![UserPosition { x_km: 40.0, y_km: 40.0 }];
        let step = 0.05;
        let mut deltas = Vec::with_capacity(100_000);
        for _ in 0..100_000 {
            let old = pos[0];
            step_mobility(&mut pos, step, 0.05, &mut rng);
            deltas.push(pos[0].x_km - old.x_km);
        }
        let n = deltas.len() as f64;
        let mean = deltas.iter().sum::<f64>() / n;
        let std = (deltas.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!((std - step).abs() / step < 0.02, "empirical step std {std}");
    }

    #[test]
    fn channel_length_matches_antenna_count() {
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        for antennas in [1, 3, 8] {
            let mut r = radio();
            r.antennas = antennas;
            let pos = UserPosition { x_km: 1.0, y_km: 0.5 };
            let h = sample_channel(&pos, &r, &mut rng);
            assert_eq!(h.len(), antennas);
            assert!(h.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
        }
    }

    #[test]
    fn los_limit_collapses_fading() {
        // R -> infinity: two draws at the same position agree to < 1e-3
        // relative norm.
        let mut r = radio();
        r.rician_factor = 1e9;
        let pos = UserPosition { x_km: 1.0, y_km: 1.0 };
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let h1 = sample_channel(&pos, &r, &mut rng);
        let h2 = sample_channel(&pos, &r, &mut rng);
        let diff: f64 = h1
            .iter()
            .zip(&h2)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let rel = diff / norm_sqr(&h1).sqrt();
        assert!(rel < 1e-3, "relative difference {rel}");
    }

    #[test]
    fn rayleigh_limit_entry_power_matches_path_gain() {
        // R = 0: per-entry power over 1e5 draws equals g(d) within 2%.
        let mut r = radio();
        r.rician_factor = 0.0;
        let pos = UserPosition { x_km: 1.0, y_km: 0.0 };
        let g = path_gain(pos.distance_km(), &r);
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let mut acc = 0.0;
        let draws = 100_000;
        for _ in 0..draws {
            let h = sample_channel(&pos, &r, &mut rng);
            acc += h[0].norm_sqr();
        }
        let mean = acc / draws as f64;
        assert!((mean - g).abs() / g < 0.02, "mean {mean} vs g {g}");
    }

    #[test]
    fn total_power_decomposition_any_rician_factor() {
        // E[|h|^2] = A * g(d) for any R, Monte-Carlo 1e5 draws at 2%.
        for rf in [0.0, 1.0, 5.0] {
            let mut r = radio();
            r.rician_factor = rf;
            let pos = UserPosition { x_km: 0.8, y_km: -0.6 };
            let g = path_gain(pos.distance_km(), &r);
            let mut rng = ChaCha12Rng::seed_from_u64(100 + rf as u64);
            let draws = 100_000;
            let mut acc = 0.0;
            for _ in 0..draws {
                acc += norm_sqr(&sample_channel(&pos, &r, &mut rng));
            }
            let mean = acc / draws as f64;
            let expect = r.antennas as f64 * g;
            assert!(
                (mean - expect).abs() / expect < 0.02,
                "R={rf}: mean {mean} vs {expect}"
            );
        }
    }
}
