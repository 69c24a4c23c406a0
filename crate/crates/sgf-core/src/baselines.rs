//! Reference transmission-probability policies used as comparison points for
//! the learned scheduler.

/// Baseline policy selector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaselineKind {
    Fixed(f64),
    Adaptive,
    StateDependent,
}

impl BaselineKind {
    /// Transmission probability for the current slot. `num_levels` is the
    /// slot's level supply, `num_gfus` the population size, and `num_served`
    /// the users already delivered in the current generation cycle.
    pub fn tp(&self, num_levels: usize, num_gfus: usize, num_served: usize) -> f64 {
        match *self {
            BaselineKind::Fixed(p) => fixed_tp(p),
            BaselineKind::Adaptive => adaptive_tp(num_levels, num_gfus),
            BaselineKind::StateDependent => state_dependent_tp(num_gfus, num_served),
        }
    }
}

impl std::fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BaselineKind::Fixed(p) => write!(f, "fixed:{p}"),
            BaselineKind::Adaptive => write!(f, "adaptive"),
            BaselineKind::StateDependent => write!(f, "state-dependent"),
        }
    }
}

/// min(1, L/M): spread the population over the available levels.
pub fn adaptive_tp(num_levels: usize, num_gfus: usize) -> f64 {
    assert!(num_gfus >= 1);
    (num_levels as f64 / num_gfus as f64).min(1.0)
}

/// 1/(M - j): ramp up as users finish. With everyone served no waiting user
/// exists to consult the value, so it degenerates to zero rather than divide.
pub fn state_dependent_tp(num_gfus: usize, num_served: usize) -> f64 {
    assert!(num_served <= num_gfus);
    if num_served == num_gfus {
        0.0
    } else {
        1.0 / (num_gfus - num_served) as f64
    }
}

/// Constant probability control baseline.
pub fn fixed_tp(p: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p));
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn adaptive_examples() {
        assert_eq!(adaptive_tp(2, 4), 0.5);
        assert_eq!(adaptive_tp(7, 4), 1.0);
        assert_eq!(adaptive_tp(0, 4), 0.0);
    }

    #[test]
    fn state_dependent_examples() {
        assert!((state_dependent_tp(5, 2) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(state_dependent_tp(5, 4), 1.0);
        assert_eq!(state_dependent_tp(5, 5), 0.0);
    }

    #[test]
    fn fixed_endpoints() {
        assert_eq!(fixed_tp(0.0), 0.0);
        assert_eq!(fixed_tp(1.0), 1.0);
    }

    #[test]
    fn fixed_bernoulli_frequency() {
        // 1e6 draws at p = 0.3: empirical mean within 0.002.
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let p = fixed_tp(0.3);
        let hits = (0..1_000_000).filter(|_| rng.random_bool(p)).count();
        let freq = hits as f64 / 1e6;
        assert!((freq - 0.3).abs() < 0.002, "frequency {freq}");
    }

    #[test]
    fn monotonicity() {
        for l in 0..10 {
            assert!(adaptive_tp(l + 1, 7) >= adaptive_tp(l, 7));
        }
        for m in 2..10 {
            assert!(adaptive_tp(3, m) >= adaptive_tp(3, m + 1));
        }
        for j in 0..6 {
            assert!(state_dependent_tp(7, j + 1) >= state_dependent_tp(7, j) || j + 1 == 7);
        }
    }
}
