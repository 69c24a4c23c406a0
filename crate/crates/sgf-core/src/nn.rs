//! Minimal fully-connected network with hand-written backpropagation, plus the
//! Gaussian policy head and the moment-based optimizer. Everything is f64 and
//! deterministic given the caller's random stream.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Fully-connected network: tanh hidden layers, linear output.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Mlp {
    pub sizes: Vec<usize>,
    /// Per layer, row-major `out x in`.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

/// Post-activation values for every layer, kept for the backward pass.
pub struct MlpCache {
    /// activations[0] is the input; activations[l+1] the output of layer l.
    activations: Vec<Vec<f64>>,
}

/// Gradient accumulator with the same shape as the network.
#[derive(Debug, Clone)]
pub struct MlpGrads {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Mlp {
    /// Fresh network with N(0, 1/fan_in) weights and zero biases.
    pub fn new<R: Rng>(sizes: &[usize], rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output sizes");
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..sizes.len() - 1 {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let scale = 1.0 / (fan_in as f64).sqrt();
            weights.push(
                (0..fan_in * fan_out)
                    .map(|_| {
                        let g: f64 = StandardNormal.sample(rng);
                        g * scale
                    })
                    .collect(),
            );
            biases.push(vec![0.0; fan_out]);
        }
        Mlp {
            sizes: sizes.to_vec(),
            weights,
            biases,
        }
    }

    pub fn zeroed(sizes: &[usize]) -> Self {
        Mlp {
            sizes: sizes.to_vec(),
            weights: sizes.windows(2).map(|w| vec![0.0; w[0] * w[1]]).collect(),
            biases: sizes[1..].iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn num_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        self.forward_cached(input).0
    }

    pub fn forward_cached(&self, input: &[f64]) -> (Vec<f64>, MlpCache) {
        assert_eq!(input.len(), self.sizes[0], "input dimension mismatch");
        let mut activations = Vec::with_capacity(self.num_layers() + 1);
        activations.push(input.to_vec());
        for l in 0..self.num_layers() {
            let n_in = self.sizes[l];
            let x = &activations[l];
            let w = &self.weights[l];
            let mut y = self.biases[l].clone();
            for (i, yi) in y.iter_mut().enumerate() {
                let row = &w[i * n_in..(i + 1) * n_in];
                *yi += row.iter().zip(x).map(|(wij, xj)| wij * xj).sum::<f64>();
                if l + 1 < self.num_layers() {
                    *yi = yi.tanh();
                }
            }
            activations.push(y);
        }
        let out = activations.last().unwrap().clone();
        (out, MlpCache { activations })
    }

    /// Accumulate parameter gradients for one sample given dL/d(output).
    /// Returns dL/d(input) as well.
    pub fn backward(&self, cache: &MlpCache, grad_out: &[f64], grads: &mut MlpGrads) -> Vec<f64> {
        let layers = self.num_layers();
        let mut delta = grad_out.to_vec();
        for l in (0..layers).rev() {
            let n_in = self.sizes[l];
            let n_out = self.sizes[l + 1];
            let x = &cache.activations[l];
            // tanh derivative for hidden layers (output layer is linear)
            if l + 1 < layers {
                let a = &cache.activations[l + 1];
                for (d, ai) in delta.iter_mut().zip(a) {
                    *d *= 1.0 - ai * ai;
                }
            }
            let gw = &mut grads.weights[l];
            for i in 0..n_out {
                grads.biases[l][i] += delta[i];
                let row = &mut gw[i * n_in..(i + 1) * n_in];
                for (gj, xj) in row.iter_mut().zip(x) {
                    *gj += delta[i] * xj;
                }
            }
            let mut next = vec![0.0; n_in];
            let w = &self.weights[l];
            for i in 0..n_out {
                let row = &w[i * n_in..(i + 1) * n_in];
                for (nj, wij) in next.iter_mut().zip(row) {
                    *nj += delta[i] * wij;
                }
            }
            delta = next;
        }
        delta
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>()
            + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    pub fn flatten_into(&self, out: &mut Vec<f64>) {
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
    }

    pub fn load_flat(&mut self, flat: &[f64]) {
        let mut pos = 0;
        for (w, b) in self.weights.iter_mut().zip(&mut self.biases) {
            let (wn, bn) = (w.len(), b.len());
            w.copy_from_slice(&flat[pos..pos + wn]);
            pos += wn;
            b.copy_from_slice(&flat[pos..pos + bn]);
            pos += bn;
        }
        assert_eq!(pos, flat.len(), "flat parameter length mismatch");
    }

    pub fn all_finite(&self) -> bool {
        self.weights
            .iter()
            .chain(&self.biases)
            .all(|v| v.iter().all(|x| x.is_finite()))
    }
}

impl MlpGrads {
    pub fn zeros_like(net: &Mlp) -> Self {
        MlpGrads {
            weights: net.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn flatten_into(&self, out: &mut Vec<f64>) {
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
    }

    pub fn all_finite(&self) -> bool {
        self.weights
            .iter()
            .chain(&self.biases)
            .all(|v| v.iter().all(|x| x.is_finite()))
    }
}

/// Adaptive per-parameter moment-based stepping on a flat parameter vector.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl Adam {
    pub fn new(lr: f64, param_count: usize) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
        }
    }

    /// One descent step on the supplied gradient of the loss to minimize.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), grads.len());
        assert_eq!(params.len(), self.m.len());
        self.t += 1;
        let b1t = 1.0 - self.beta1.powi(self.t as i32);
        let b2t = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grads[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grads[i] * grads[i];
            let mhat = self.m[i] / b1t;
            let vhat = self.v[i] / b2t;
            params[i] -= self.lr * mhat / (vhat.sqrt() + self.eps);
        }
    }
}

/// Squashing applied to the Gaussian sample to land in the action range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Squash {
    /// sigmoid(z) in (0, 1) — scalar probabilities.
    UnitInterval,
    /// 2 sigmoid(z) - 1 in (-1, 1) — signed combiner components.
    SymmetricUnit,
}

impl Squash {
    pub fn apply(&self, z: f64) -> f64 {
        match self {
            Squash::UnitInterval => sigmoid(z),
            Squash::SymmetricUnit => 2.0 * sigmoid(z) - 1.0,
        }
    }

    /// log |da/dz| at the pre-squash value.
    pub fn log_jacobian(&self, z: f64) -> f64 {
        let base = -softplus(z) - softplus(-z);
        match self {
            Squash::UnitInterval => base,
            Squash::SymmetricUnit => std::f64::consts::LN_2 + base,
        }
    }
}

/// Fixed input featurization: a deterministic transform of the state that is
/// part of the network architecture, not of the state definition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Featurize {
    Identity,
    /// x -> x * scale
    Scale(f64),
    /// x -> asinh(x / scale): sign-preserving log compression for inputs that
    /// span orders of magnitude.
    Asinh(f64),
    /// Sort the entries descending, then scale. Canonical form for states
    /// whose components are exchangeable (one value per interchangeable
    /// user), so the network need not learn the permutation symmetry.
    SortedScale(f64),
    /// Beamforming front end for a flattened-CSI state: compressed channel
    /// entries plus the per-user MMSE combiner computed from the same CSI,
    /// expressed in the pre-squash domain so the policy head can pass it
    /// through. Standard receive-DSP features; the policy remains free to
    /// deviate from them.
    BeamContext {
        num_gbus: usize,
        antennas: usize,
        csi_scale: f64,
        gbu_power: f64,
        noise: f64,
    },
}

impl Featurize {
    pub fn apply(&self, state: &[f64]) -> Vec<f64> {
        match *self {
            Featurize::Identity => state.to_vec(),
            Featurize::Scale(s) => state.iter().map(|x| x * s).collect(),
            Featurize::Asinh(s) => state.iter().map(|x| (x / s).asinh()).collect(),
            Featurize::SortedScale(s) => {
                let mut out: Vec<f64> = state.iter().map(|x| x * s).collect();
                out.sort_by(|a, b| b.partial_cmp(a).unwrap());
                out
            }
            Featurize::BeamContext {
                num_gbus,
                antennas,
                csi_scale,
                gbu_power,
                noise,
            } => {
                let mut out: Vec<f64> = state.iter().map(|x| (x / csi_scale).asinh()).collect();
                out.extend(mmse_presquash_features(
                    state, num_gbus, antennas, gbu_power, noise,
                ));
                out
            }
        }
    }

    pub fn feature_dim(&self, state_dim: usize) -> usize {
        match self {
            Featurize::BeamContext { .. } => 2 * state_dim,
            _ => state_dim,
        }
    }
}

/// Per-user MMSE receive combiner entries for a flattened-CSI state, mapped
/// through the inverse of the symmetric squash so that copying a feature to
/// the policy output reproduces the combiner entry exactly.
fn mmse_presquash_features(
    state: &[f64],
    num_gbus: usize,
    antennas: usize,
    gbu_power: f64,
    noise: f64,
) -> Vec<f64> {
    use num_complex::Complex64;
    assert_eq!(state.len(), 2 * num_gbus * antennas);
    let channels: Vec<Vec<Complex64>> = (0..num_gbus)
        .map(|k| {
            (0..antennas)
                .map(|a| {
                    let base = 2 * (k * antennas + a);
                    Complex64::new(state[base], state[base + 1])
                })
                .collect()
        })
        .collect();

    let mut features = Vec::with_capacity(2 * num_gbus * antennas);
    for target in 0..num_gbus {
        // Interference-plus-noise covariance for this user's stream.
        let mut cov = vec![vec![Complex64::new(0.0, 0.0); antennas]; antennas];
        for (j, h) in channels.iter().enumerate() {
            if j == target {
                continue;
            }
            for x in 0..antennas {
                for y in 0..antennas {
                    cov[x][y] += gbu_power * h[x] * h[y].conj();
                }
            }
        }
        for (x, row) in cov.iter_mut().enumerate() {
            row[x] += noise;
        }
        let col = match crate::linalg::invert(&cov) {
            Ok(inv) => {
                let h = &channels[target];
                let mut v: Vec<Complex64> = (0..antennas)
                    .map(|x| (0..antennas).map(|y| inv[x][y] * h[y]).sum())
                    .collect();
                crate::linalg::normalize(&mut v);
                v
            }
            Err(_) => {
                let mut v = channels[target].clone();
                crate::linalg::normalize(&mut v);
                v
            }
        };
        for z in col {
            features.push(presquash_symmetric(z.re));
            features.push(presquash_symmetric(z.im));
        }
    }
    features
}

/// Inverse of the symmetric squash 2*sigmoid(z)-1, clamped away from the
/// saturation poles.
fn presquash_symmetric(a: f64) -> f64 {
    let a = a.clamp(-0.995, 0.995);
    ((1.0 + a) / (1.0 - a)).ln()
}

/// Drawn action with everything needed to replay its likelihood later.
#[derive(Debug, Clone)]
pub struct ActionSample {
    pub action: Vec<f64>,
    pub presquash: Vec<f64>,
    pub log_prob: f64,
}

/// Diagonal-Gaussian policy: the network emits the mean, a state-independent
/// learned log-std controls exploration, and the sample is squashed into the
/// action range.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GaussianActor {
    pub net: Mlp,
    pub log_std: Vec<f64>,
    pub squash: Squash,
    pub featurize: Featurize,
}

pub const LOG_STD_INIT: f64 = -0.6931471805599453; // ln 0.5
pub const LOG_STD_FLOOR: f64 = -4.605170185988091; // ln 0.01

impl GaussianActor {
    pub fn new<R: Rng>(
        state_dim: usize,
        action_dim: usize,
        hidden: &[usize],
        squash: Squash,
        featurize: Featurize,
        rng: &mut R,
    ) -> Self {
        let mut sizes = vec![featurize.feature_dim(state_dim)];
        sizes.extend_from_slice(hidden);
        sizes.push(action_dim);
        GaussianActor {
            net: Mlp::new(&sizes, rng),
            log_std: vec![LOG_STD_INIT; action_dim],
            squash,
            featurize,
        }
    }

    pub fn action_dim(&self) -> usize {
        *self.net.sizes.last().unwrap()
    }

    pub fn mean(&self, state: &[f64]) -> Vec<f64> {
        self.net.forward(&self.featurize.apply(state))
    }

    /// Deterministic action: the squashed mean.
    pub fn mean_action(&self, state: &[f64]) -> Vec<f64> {
        self.mean(state).iter().map(|&m| self.squash.apply(m)).collect()
    }

    pub fn sample<R: Rng>(&self, state: &[f64], rng: &mut R) -> ActionSample {
        let mean = self.mean(state);
        let presquash: Vec<f64> = mean
            .iter()
            .zip(&self.log_std)
            .map(|(&m, &ls)| {
                let g: f64 = StandardNormal.sample(rng);
                m + ls.exp() * g
            })
            .collect();
        let action = presquash.iter().map(|&z| self.squash.apply(z)).collect();
        let log_prob = self.log_prob_given_mean(&mean, &presquash);
        ActionSample {
            action,
            presquash,
            log_prob,
        }
    }

    /// log pi(a|s) for a stored pre-squash sample.
    pub fn log_prob(&self, state: &[f64], presquash: &[f64]) -> f64 {
        self.log_prob_given_mean(&self.mean(state), presquash)
    }

    pub fn log_prob_given_mean(&self, mean: &[f64], presquash: &[f64]) -> f64 {
        const HALF_LN_2PI: f64 = 0.9189385332046727;
        mean.iter()
            .zip(presquash)
            .zip(&self.log_std)
            .map(|((&m, &z), &ls)| {
                let sigma = ls.exp();
                let u = (z - m) / sigma;
                -0.5 * u * u - ls - HALF_LN_2PI - self.squash.log_jacobian(z)
            })
            .sum()
    }

    pub fn param_count(&self) -> usize {
        self.net.param_count() + self.log_std.len()
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        self.net.flatten_into(&mut out);
        out.extend_from_slice(&self.log_std);
        out
    }

    pub fn load_flat(&mut self, flat: &[f64]) {
        let split = flat.len() - self.log_std.len();
        self.net.load_flat(&flat[..split]);
        self.log_std.copy_from_slice(&flat[split..]);
    }

    pub fn clamp_log_std(&mut self) {
        for ls in &mut self.log_std {
            *ls = ls.max(LOG_STD_FLOOR);
        }
    }
}

/// State-value network.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ValueNet {
    pub net: Mlp,
    pub featurize: Featurize,
}

impl ValueNet {
    pub fn new<R: Rng>(state_dim: usize, hidden: &[usize], featurize: Featurize, rng: &mut R) -> Self {
        let mut sizes = vec![featurize.feature_dim(state_dim)];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        ValueNet {
            net: Mlp::new(&sizes, rng),
            featurize,
        }
    }

    pub fn value(&self, state: &[f64]) -> f64 {
        self.net.forward(&self.featurize.apply(state))[0]
    }

    pub fn value_cached(&self, state: &[f64]) -> (f64, MlpCache) {
        let (out, cache) = self.net.forward_cached(&self.featurize.apply(state));
        (out[0], cache)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn zero_network_outputs_zero() {
        let net = Mlp::zeroed(&[4, 8, 8, 2]);
        assert_eq!(net.forward(&[1.0, -2.0, 0.5, 3.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn flatten_round_trip() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let net = Mlp::new(&[3, 5, 2], &mut rng);
        let mut flat = Vec::new();
        net.flatten_into(&mut flat);
        assert_eq!(flat.len(), net.param_count());
        let mut other = Mlp::zeroed(&[3, 5, 2]);
        other.load_flat(&flat);
        assert_eq!(net, other);
    }

    #[test]
    fn backward_matches_finite_differences() {
        // Quadratic loss L = 0.5 |y - target|^2 against central differences.
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let mut net = Mlp::new(&[3, 6, 6, 2], &mut rng);
        let x = [0.3, -1.2, 0.7];
        let target = [0.5, -0.25];

        let loss = |net: &Mlp| -> f64 {
            let y = net.forward(&x);
            0.5 * y.iter().zip(&target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
        };

        let (y, cache) = net.forward_cached(&x);
        let grad_out: Vec<f64> = y.iter().zip(&target).map(|(a, b)| a - b).collect();
        let mut grads = MlpGrads::zeros_like(&net);
        net.backward(&cache, &grad_out, &mut grads);

        let mut flat_g = Vec::new();
        grads.flatten_into(&mut flat_g);
        let mut flat_p = Vec::new();
        net.flatten_into(&mut flat_p);

        let h = 1e-6;
        for i in (0..flat_p.len()).step_by(7) {
            let orig = flat_p[i];
            flat_p[i] = orig + h;
            net.load_flat(&flat_p);
            let up = loss(&net);
            flat_p[i] = orig - h;
            net.load_flat(&flat_p);
            let down = loss(&net);
            flat_p[i] = orig;
            net.load_flat(&flat_p);
            let numeric = (up - down) / (2.0 * h);
            let denom = numeric.abs().max(flat_g[i].abs()).max(1e-8);
            assert!(
                (numeric - flat_g[i]).abs() / denom < 1e-5,
                "param {i}: numeric {numeric}, analytic {}",
                flat_g[i]
            );
        }
    }

    #[test]
    fn adam_descends_a_quadratic() {
        let mut params = vec![5.0, -3.0];
        let mut opt = Adam::new(0.05, 2);
        for _ in 0..2000 {
            let grads: Vec<f64> = params.iter().map(|&p| 2.0 * p).collect();
            opt.step(&mut params, &grads);
        }
        assert!(params.iter().all(|p| p.abs() < 1e-3), "{params:?}");
    }

    #[test]
    fn zero_actor_emits_half() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let mut actor = GaussianActor::new(4, 1, &[8, 8], Squash::UnitInterval, Featurize::Identity, &mut rng);
        actor.net = Mlp::zeroed(&[4, 8, 8, 1]);
        let a = actor.mean_action(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(a, vec![0.5]);
    }

    #[test]
    fn sampling_is_deterministic_under_fixed_seed() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let actor = GaussianActor::new(3, 2, &[8], Squash::UnitInterval, Featurize::Identity, &mut rng);
        let s = [0.1, 0.2, 0.3];
        let a1 = actor.sample(&s, &mut ChaCha12Rng::seed_from_u64(99));
        let a2 = actor.sample(&s, &mut ChaCha12Rng::seed_from_u64(99));
        assert_eq!(a1.action, a2.action);
        assert_eq!(a1.log_prob, a2.log_prob);
    }

    #[test]
    fn sample_statistics_match_network_outputs() {
        // 1e5 pre-squash samples at a fixed state: empirical mean and std
        // match the network mean and exp(log_std) within 2%.
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let actor = GaussianActor::new(3, 1, &[16, 16], Squash::UnitInterval, Featurize::Identity, &mut rng);
        let s = [0.4, -0.7, 1.1];
        let mu = actor.mean(&s)[0];
        let sigma = actor.log_std[0].exp();
        let n = 100_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        let mut srng = ChaCha12Rng::seed_from_u64(6);
        for _ in 0..n {
            let z = actor.sample(&s, &mut srng).presquash[0];
            sum += z;
            sumsq += z * z;
        }
        let m = sum / n as f64;
        let sd = (sumsq / n as f64 - m * m).sqrt();
        assert!((m - mu).abs() < 0.02 * mu.abs().max(sigma), "mean {m} vs {mu}");
        assert!((sd - sigma).abs() / sigma < 0.02, "std {sd} vs {sigma}");
    }

    #[test]
    fn squashed_actions_stay_in_range() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let unit = GaussianActor::new(2, 3, &[8], Squash::UnitInterval, Featurize::Identity, &mut rng);
        let sym = GaussianActor::new(2, 3, &[8], Squash::SymmetricUnit, Featurize::Identity, &mut rng);
        let mut srng = ChaCha12Rng::seed_from_u64(8);
        for _ in 0..200 {
            for a in unit.sample(&[5.0, -5.0], &mut srng).action {
                assert!((0.0..=1.0).contains(&a));
            }
            for a in sym.sample(&[5.0, -5.0], &mut srng).action {
                assert!((-1.0..=1.0).contains(&a));
            }
        }
    }

    #[test]
    fn log_jacobian_matches_numeric_derivative() {
        for squash in [Squash::UnitInterval, Squash::SymmetricUnit] {
            for z in [-3.0, -0.5, 0.0, 0.7, 2.5] {
                let h = 1e-6;
                let numeric = ((squash.apply(z + h) - squash.apply(z - h)) / (2.0 * h)).ln();
                assert!(
                    (numeric - squash.log_jacobian(z)).abs() < 1e-8,
                    "{squash:?} at {z}"
                );
            }
        }
    }
}
