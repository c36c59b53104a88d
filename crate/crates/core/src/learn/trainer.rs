//! Double-DQN targets, minibatch SGD with Adam, and policy snapshots.

use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::Rng;

use super::network::{QNetwork, Trace, NUM_ACTIONS};
use super::replay::Experience;
use super::select_action;
use crate::config::LearnerConfig;
use crate::env::Action;
use crate::error::{Error, Result};
use crate::math;
use crate::safety::ActionMask;

/// Index of the largest value among legal entries; ties go to the earlier
/// action. `None` if nothing is legal.
pub fn masked_argmax(q: &[f64; NUM_ACTIONS], mask: &ActionMask) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in q.iter().enumerate() {
        if mask.legal[i] && best.is_none_or(|b| v > q[b]) {
            best = Some(i);
        }
    }
    best
}

/// `y = s r + gamma Q_target(o', argmax_{a legal} Q_online(o', a))`, or
/// `y = s r` for terminal transitions, where `s` is the reward scale.
pub fn double_target(
    batch: &[&Experience],
    online: &QNetwork,
    target: &QNetwork,
    gamma: f64,
    reward_scale: f64,
) -> Result<Vec<f64>> {
    batch
        .iter()
        .map(|e| {
            let r = reward_scale * e.reward;
            if e.terminal || gamma == 0.0 {
                return Ok(r);
            }
            let q_online = online.forward(&e.next_obs)?;
            let Some(a_star) = masked_argmax(&q_online, &e.next_mask) else {
                return Ok(r);
            };
            let q_target = target.forward(&e.next_obs)?;
            Ok(r + gamma * q_target[a_star])
        })
        .collect()
}

/// Mean squared TD error over the batch and its gradient, accumulated into
/// `grad` (which is overwritten).
pub fn loss_and_gradient(
    net: &QNetwork,
    inputs: &[&[f64]],
    actions: &[Action],
    targets: &[f64],
    grad: &mut [f64],
) -> Result<f64> {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let n = inputs.len() as f64;
    let mut trace = Trace::default();
    let mut loss = 0.0;
    for ((x, a), y) in inputs.iter().zip(actions).zip(targets) {
        let q = net.forward_trace(x, &mut trace)?;
        let err = q[a.index()] - y;
        loss += err * err;
        let mut dq = [0.0; NUM_ACTIONS];
        dq[a.index()] = 2.0 * err / n;
        net.backward(&trace, &dq, grad);
    }
    Ok(loss / n)
}

#[derive(Debug, Clone)]
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl Adam {
    pub fn new(n: usize, cfg: &LearnerConfig) -> Self {
        Self {
            m: alloc::vec![0.0; n],
            v: alloc::vec![0.0; n],
            t: 0,
            lr: cfg.learning_rate,
            beta1: cfg.adam_beta1,
            beta2: cfg.adam_beta2,
            eps: cfg.adam_eps,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let t = self.t as i32;
        let c1 = 1.0 - libm::pow(self.beta1, t as f64);
        let c2 = 1.0 - libm::pow(self.beta2, t as f64);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.lr * m_hat / (math::sqrt(v_hat) + self.eps);
        }
    }
}

/// Immutable copy of the policy network, shareable across threads.
#[derive(Debug, Clone)]
pub struct PolicySnapshot(Arc<QNetwork>);

impl PolicySnapshot {
    pub fn new(net: QNetwork) -> Self {
        Self(Arc::new(net))
    }

    pub fn network(&self) -> &QNetwork {
        &self.0
    }

    pub fn q_values(&self, features: &[f64]) -> Result<[f64; NUM_ACTIONS]> {
        self.0.forward(features)
    }

    pub fn act<R: Rng + ?Sized>(&self, features: &[f64], mask: &ActionMask, epsilon: f64, rng: &mut R) -> Result<Action> {
        select_action(&self.0, features, mask, epsilon, rng)
    }
}

/// Learner state owned by the (single) training writer.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub online: QNetwork,
    pub target: QNetwork,
    pub adam: Adam,
    pub grad_steps: u64,
    pub epsilon: f64,
    pub cfg: LearnerConfig,
    grad: Vec<f64>,
}

impl TrainState {
    pub fn new<R: Rng + ?Sized>(input_dim: usize, cfg: &LearnerConfig, rng: &mut R) -> Self {
        let online = QNetwork::new(input_dim, &cfg.hidden_layers, rng);
        Self::from_network(online, cfg)
    }

    pub fn from_network(online: QNetwork, cfg: &LearnerConfig) -> Self {
        let n = online.num_params();
        Self {
            target: online.clone(),
            online,
            adam: Adam::new(n, cfg),
            grad_steps: 0,
            epsilon: cfg.eps_start,
            cfg: cfg.clone(),
            grad: alloc::vec![0.0; n],
        }
    }

    /// One gradient step on `batch`. Returns the loss before the update.
    pub fn sgd_update(&mut self, batch: &[&Experience]) -> Result<f64> {
        let targets = double_target(batch, &self.online, &self.target, self.cfg.gamma, self.cfg.reward_scale)?;
        let inputs: Vec<&[f64]> = batch.iter().map(|e| e.obs.as_slice()).collect();
        let actions: Vec<Action> = batch.iter().map(|e| e.action).collect();
        let loss = loss_and_gradient(&self.online, &inputs, &actions, &targets, &mut self.grad)?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { loss, step: self.grad_steps });
        }
        if let Some(max_norm) = self.cfg.grad_clip {
            let norm = math::sqrt(self.grad.iter().map(|g| g * g).sum());
            if norm > max_norm {
                let s = max_norm / norm;
                self.grad.iter_mut().for_each(|g| *g *= s);
            }
        }
        self.adam.step(self.online.params_mut(), &self.grad);
        self.grad_steps += 1;
        if self.grad_steps % self.cfg.target_sync_steps == 0 {
            self.sync_target();
        }
        Ok(loss)
    }

    pub fn sync_target(&mut self) {
        self.target.params_mut().copy_from_slice(self.online.params());
    }

    /// Snapshot of the online network for the acting agents.
    pub fn snapshot(&self) -> PolicySnapshot {
        PolicySnapshot::new(self.online.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};

    fn exp(obs: Vec<f64>, action: Action, reward: f64, next: Vec<f64>, terminal: bool) -> Experience {
        Experience { obs, action, reward, next_obs: next, next_mask: ActionMask::ALL, terminal }
    }

    /// Network whose Q-values ignore the input: value 0, advantage biases
    /// chosen so Q equals `q`.
    fn constant_net(q: [f64; 4]) -> QNetwork {
        let mean = q.iter().sum::<f64>() / 4.0;
        // 1 input, 1 hidden unit with zero weights
        let mut p = alloc::vec![0.0, 0.0, 0.0, mean];
        p.extend_from_slice(&[0.0; 4]);
        p.extend(q.iter().map(|v| v - mean));
        QNetwork::from_params(1, &[1], p).unwrap()
    }

    #[test]
    fn double_target_hand_example() {
        // online prefers the second action, target evaluates it at 3.0
        let online = constant_net([1.0, 2.0, -5.0, -5.0]);
        let target = constant_net([5.0, 3.0, 9.0, 9.0]);
        let mut e = exp(alloc::vec![0.0], Action::Up, 1.5, alloc::vec![0.0], false);
        e.next_mask = ActionMask { legal: [true, true, false, false] };
        let y = double_target(&[&e], &online, &target, 0.9, 1.0).unwrap();
        assert_eq!(y, [1.5 + 0.9 * 3.0]);

        let term = exp(alloc::vec![0.0], Action::Up, 37.0, alloc::vec![0.0], true);
        assert_eq!(double_target(&[&term], &online, &target, 0.9, 1.0).unwrap(), [37.0]);
        assert_eq!(double_target(&[&e, &term], &online, &target, 0.0, 1.0).unwrap(), [1.5, 37.0]);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        use rand::Rng;
        let mut rng = stream_rng(11, Stream::NetworkInit, 0);
        let (mut checked, mut skipped, mut total) = (0, 0, 0);
        for trial in 0..24 {
            let dim = 2 + trial % 4;
            let hidden: Vec<usize> = if trial % 2 == 0 { alloc::vec![5] } else { alloc::vec![4, 3] };
            let net = QNetwork::new(dim, &hidden, &mut rng);
            let xs: Vec<Vec<f64>> = (0..3).map(|_| (0..dim).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()).collect();
            let inputs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
            let actions: Vec<Action> = (0..3).map(|i| Action::ALL[(trial + i) % 4]).collect();
            let targets: Vec<f64> = (0..3).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
            let mut grad = alloc::vec![0.0; net.num_params()];
            loss_and_gradient(&net, &inputs, &actions, &targets, &mut grad).unwrap();
            let mut scratch = alloc::vec![0.0; net.num_params()];
            let h = 1e-5;
            total += net.num_params();
            for k in 0..net.num_params() {
                let mut plus = net.clone();
                plus.params_mut()[k] += h;
                let mut minus = net.clone();
                minus.params_mut()[k] -= h;
                let lp = loss_and_gradient(&plus, &inputs, &actions, &targets, &mut scratch).unwrap();
                let lm = loss_and_gradient(&minus, &inputs, &actions, &targets, &mut scratch).unwrap();
                let l0 = loss_and_gradient(&net, &inputs, &actions, &targets, &mut scratch).unwrap();
                let (fwd, bwd) = ((lp - l0) / h, (l0 - lm) / h);
                if (fwd - bwd).abs() > 1e-3 * fwd.abs().max(bwd.abs()).max(1.0) {
                    // the perturbation crosses a ReLU kink
                    skipped += 1;
                    continue;
                }
                let numeric = (lp - lm) / (2.0 * h);
                let scale = numeric.abs().max(grad[k].abs()).max(1e-6);
                let err = (numeric - grad[k]).abs();
                assert!(err / scale < 1e-4 || err < 1e-9, "trial {trial} param {k}: {numeric} vs {}", grad[k]);
            }
            checked += 1;
        }
        assert!(checked >= 20);
        assert!(skipped * 100 < total, "{skipped} of {total} skipped");
    }

    #[test]
    fn zero_error_batch_leaves_parameters() {
        let cfg = LearnerConfig { hidden_layers: alloc::vec![4], gamma: 0.0, ..LearnerConfig::default() };
        let mut st = TrainState::new(3, &cfg, &mut stream_rng(0, Stream::NetworkInit, 0));
        let x = alloc::vec![0.2, -0.4, 0.9];
        let q = st.online.forward(&x).unwrap();
        let e = exp(x.clone(), Action::Down, q[2], x, false);
        let before = st.online.clone();
        let loss = st.sgd_update(&[&e, &e, &e]).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(st.online, before);
    }

    #[test]
    fn single_experience_regression_converges() {
        let cfg = LearnerConfig { hidden_layers: alloc::vec![8], gamma: 0.0, learning_rate: 1e-2, ..LearnerConfig::default() };
        let mut st = TrainState::new(2, &cfg, &mut stream_rng(3, Stream::NetworkInit, 0));
        let e = exp(alloc::vec![0.5, 0.25], Action::Right, 4.0, alloc::vec![0.0, 0.0], true);
        let first = st.sgd_update(&[&e]).unwrap();
        let mut prev = first;
        for i in 1..100 {
            let loss = st.sgd_update(&[&e]).unwrap();
            if i < 20 {
                assert!(loss < prev, "{loss} >= {prev}");
            }
            prev = loss;
        }
        assert!(prev < 1e-2 * first, "{prev} vs {first}");
    }

    #[test]
    fn target_sync_period() {
        let cfg = LearnerConfig { hidden_layers: alloc::vec![4], target_sync_steps: 3, learning_rate: 1e-2, ..LearnerConfig::default() };
        let mut st = TrainState::new(2, &cfg, &mut stream_rng(0, Stream::NetworkInit, 0));
        let e = exp(alloc::vec![0.5, 0.5], Action::Up, 1.0, alloc::vec![0.1, 0.1], false);
        st.sgd_update(&[&e]).unwrap();
        st.sgd_update(&[&e]).unwrap();
        assert_ne!(st.online, st.target);
        st.sgd_update(&[&e]).unwrap();
        assert_eq!(st.online, st.target);
    }

    #[test]
    fn non_finite_loss_aborts() {
        let cfg = LearnerConfig { hidden_layers: alloc::vec![2], gamma: 0.0, ..LearnerConfig::default() };
        let mut st = TrainState::new(1, &cfg, &mut stream_rng(0, Stream::NetworkInit, 0));
        let e = exp(alloc::vec![1.0], Action::Up, f64::NAN, alloc::vec![1.0], true);
        assert!(matches!(st.sgd_update(&[&e]), Err(Error::NonFiniteLoss { .. })));
    }

    #[test]
    fn snapshot_is_immutable() {
        let cfg = LearnerConfig { hidden_layers: alloc::vec![4], learning_rate: 1e-1, ..LearnerConfig::default() };
        let mut st = TrainState::new(2, &cfg, &mut stream_rng(0, Stream::NetworkInit, 0));
        let snap = st.snapshot();
        let x = [0.3, 0.7];
        let before = snap.q_values(&x).unwrap();
        let e = exp(x.to_vec(), Action::Up, 10.0, x.to_vec(), true);
        for _ in 0..5 {
            st.sgd_update(&[&e]).unwrap();
        }
        assert_ne!(st.online.forward(&x).unwrap(), before);
        assert_eq!(snap.q_values(&x).unwrap(), before);
    }

    #[test]
    fn snapshot_concurrent_reads_match_serial() {
        let cfg = LearnerConfig { hidden_layers: alloc::vec![16, 16], ..LearnerConfig::default() };
        let st = TrainState::new(6, &cfg, &mut stream_rng(1, Stream::NetworkInit, 0));
        let snap = st.snapshot();
        let inputs: Vec<Vec<f64>> = (0..8).map(|i| (0..6).map(|j| ((i * 7 + j) % 5) as f64 / 5.0).collect()).collect();
        let serial: Vec<[f64; 4]> = inputs.iter().map(|x| snap.q_values(x).unwrap()).collect();
        let handles: Vec<_> = inputs
            .clone()
            .into_iter()
            .map(|x| {
                let s = snap.clone();
                std::thread::spawn(move || s.q_values(&x).unwrap())
            })
            .collect();
        let parallel: Vec<[f64; 4]> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        assert_eq!(serial, parallel);
    }
}
