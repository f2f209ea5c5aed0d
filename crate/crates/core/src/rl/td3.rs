//! Twin Delayed Deep Deterministic policy gradient: deterministic tanh
//! policy, twin critics with clipped double-Q targets, target-policy
//! smoothing, and delayed policy/target updates.

use super::agent::{critic_input, soft_update, stack_actions, stack_states, Agent, LossReport};
use super::buffer::Transition;
use crate::numcore::{AdamState, Mlp};
use crate::{Error, Result};
use ndarray::Array2;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// TD3 hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Td3Hyper {
    /// Discount γ.
    pub gamma: f64,
    /// Polyak soft-update rate τ.
    pub tau: f64,
    /// Adam learning rate for every network.
    pub learning_rate: f64,
    /// Hidden layer widths shared by policy and critics.
    pub hidden: Vec<usize>,
    /// Std-dev of the exploration noise added to actions.
    pub explore_noise: f64,
    /// Std-dev of the target-policy smoothing noise.
    pub smoothing_noise: f64,
    /// Symmetric clip applied to the smoothing noise.
    pub noise_clip: f64,
    /// Critic updates per policy/target update.
    pub policy_delay: usize,
}

impl Default for Td3Hyper {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            tau: 0.005,
            learning_rate: 1e-4,
            hidden: vec![128, 128],
            explore_noise: 0.1,
            smoothing_noise: 0.2,
            noise_clip: 0.5,
            policy_delay: 2,
        }
    }
}

/// TD3 agent over normalized actions.
#[derive(Debug)]
pub struct Td3Agent {
    obs_dim: usize,
    act_dim: usize,
    hyper: Td3Hyper,
    policy: Mlp,
    policy_target: Mlp,
    q1: Mlp,
    q2: Mlp,
    q1_target: Mlp,
    q2_target: Mlp,
    policy_opt: AdamState,
    q1_opt: AdamState,
    q2_opt: AdamState,
    rng: ChaCha8Rng,
    seed: u64,
    updates: usize,
}

impl Td3Agent {
    /// Fresh agent with Xavier-initialized networks.
    pub fn new(obs_dim: usize, act_dim: usize, hyper: Td3Hyper, seed: u64) -> Result<Self> {
        if obs_dim == 0 || act_dim == 0 {
            return Err(Error::Config("observation/action dims must be positive".into()));
        }
        if hyper.policy_delay == 0 {
            return Err(Error::Config("policy_delay must be at least 1".into()));
        }
        let mut policy_sizes = vec![obs_dim];
        policy_sizes.extend_from_slice(&hyper.hidden);
        policy_sizes.push(act_dim);
        let mut critic_sizes = vec![obs_dim + act_dim];
        critic_sizes.extend_from_slice(&hyper.hidden);
        critic_sizes.push(1);
        let policy = Mlp::xavier(&policy_sizes, seed ^ 0x11)?;
        let q1 = Mlp::xavier(&critic_sizes, seed ^ 0x12)?;
        let q2 = Mlp::xavier(&critic_sizes, seed ^ 0x13)?;
        let policy_target = policy.clone();
        let q1_target = q1.clone();
        let q2_target = q2.clone();
        let lr = hyper.learning_rate;
        Ok(Self {
            obs_dim,
            act_dim,
            policy_opt: AdamState::with_hyperparams(policy.param_count(), lr, 0.9, 0.999, 1e-8),
            q1_opt: AdamState::with_hyperparams(q1.param_count(), lr, 0.9, 0.999, 1e-8),
            q2_opt: AdamState::with_hyperparams(q2.param_count(), lr, 0.9, 0.999, 1e-8),
            hyper,
            policy,
            policy_target,
            q1,
            q2,
            q1_target,
            q2_target,
            rng: ChaCha8Rng::seed_from_u64(seed),
            seed,
            updates: 0,
        })
    }

    /// Number of completed critic updates.
    pub fn update_count(&self) -> usize {
        self.updates
    }

    /// Deterministic policy for a batch: `tanh(P(s))`, `act × B`.
    fn policy_actions(net: &Mlp, states: &Array2<f64>) -> Result<Array2<f64>> {
        Ok(net.forward_batch(states.view())?.mapv(f64::tanh))
    }

    /// Clipped Gaussian smoothing noise, `act × B`.
    fn draw_clipped_noise(&mut self, b: usize) -> Array2<f64> {
        let normal = Normal::new(0.0, self.hyper.smoothing_noise)
            .expect("positive std-dev by construction");
        let clip = self.hyper.noise_clip;
        Array2::from_shape_fn((self.act_dim, b), |_| {
            let e: f64 = normal.sample(&mut self.rng);
            e.clamp(-clip, clip)
        })
    }

    /// Clipped double-Q bootstrap with externally supplied smoothed next
    /// actions: `y = r + γ(1−done)·min(Qt1, Qt2)(s′, a′)`.
    pub fn critic_targets(
        &self,
        batch: &[&Transition],
        next_actions: &Array2<f64>,
    ) -> Result<Vec<f64>> {
        let next_states = stack_states(batch, true);
        let x = critic_input(&next_states, next_actions);
        let qt1 = self.q1_target.forward_batch(x.view())?;
        let qt2 = self.q2_target.forward_batch(x.view())?;
        Ok(batch
            .iter()
            .enumerate()
            .map(|(j, t)| {
                let not_done = if t.done { 0.0 } else { 1.0 };
                t.reward + self.hyper.gamma * not_done * qt1[(0, j)].min(qt2[(0, j)])
            })
            .collect())
    }

    /// Policy objective `−mean Q1(s, tanh(P(s)))` and its gradient with
    /// respect to the policy parameters. Deterministic.
    fn policy_objective_and_grad(&self, states: &Array2<f64>) -> Result<(f64, Vec<f64>)> {
        let b = states.ncols();
        let bf = b as f64;
        let actions = Self::policy_actions(&self.policy, states)?;
        let x = critic_input(states, &actions);
        let q = self.q1.forward_batch(x.view())?;
        let objective = -q.row(0).sum() / bf;
        let cot = Array2::from_elem((1, b), -1.0 / bf);
        let (_, ig) = self.q1.backprop_batch(x.view(), cot.view())?;
        let mut cot_policy = Array2::zeros((self.act_dim, b));
        for j in 0..b {
            for k in 0..self.act_dim {
                let a = actions[(k, j)];
                cot_policy[(k, j)] = ig[(self.obs_dim + k, j)] * (1.0 - a * a);
            }
        }
        let (grad, _) = self.policy.backprop_batch(states.view(), cot_policy.view())?;
        Ok((objective, grad))
    }

    /// Apply one Adam step to `net` given a parameter gradient.
    fn apply(net: &mut Mlp, opt: &mut AdamState, grad: &[f64]) -> Result<()> {
        let mut params = net.params();
        opt.update(&mut params, grad)?;
        net.set_params(&params)
    }

    /// Load an agent previously written with [`Agent::save`].
    pub fn load(dir: &Path) -> Result<Self> {
        let meta: Td3Meta =
            serde_json::from_str(&std::fs::read_to_string(dir.join("td3_meta.json"))?)?;
        let mut agent = Self::new(meta.obs_dim, meta.act_dim, meta.hyper, meta.seed)?;
        agent.policy = Mlp::load(&dir.join("policy.json"))?;
        agent.policy_target = Mlp::load(&dir.join("policy_target.json"))?;
        agent.q1 = Mlp::load(&dir.join("q1.json"))?;
        agent.q2 = Mlp::load(&dir.join("q2.json"))?;
        agent.q1_target = Mlp::load(&dir.join("q1_target.json"))?;
        agent.q2_target = Mlp::load(&dir.join("q2_target.json"))?;
        agent.updates = meta.updates;
        Ok(agent)
    }
}

/// Sidecar metadata for agent checkpoints.
#[derive(Debug, Serialize, Deserialize)]
struct Td3Meta {
    algorithm: String,
    obs_dim: usize,
    act_dim: usize,
    hyper: Td3Hyper,
    seed: u64,
    updates: usize,
}

impl Agent for Td3Agent {
    fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    fn action_dim(&self) -> usize {
        self.act_dim
    }

    fn act(&mut self, state: &[f64], explore: bool) -> Result<Vec<f64>> {
        if state.len() != self.obs_dim {
            return Err(Error::DimensionMismatch(format!(
                "state length {} != observation dim {}",
                state.len(),
                self.obs_dim
            )));
        }
        let s = Array2::from_shape_vec((self.obs_dim, 1), state.to_vec())
            .expect("shape follows from the length check");
        let mut a = Self::policy_actions(&self.policy, &s)?.column(0).to_vec();
        if explore {
            let normal = Normal::new(0.0, self.hyper.explore_noise)
                .expect("positive std-dev by construction");
            for v in &mut a {
                let e: f64 = normal.sample(&mut self.rng);
                *v = (*v + e).clamp(-1.0, 1.0);
            }
        }
        Ok(a)
    }

    fn update(&mut self, batch: &[&Transition]) -> Result<LossReport> {
        if batch.len() < 2 {
            return Err(Error::Contract(format!(
                "TD3 update needs a batch of at least 2, got {}",
                batch.len()
            )));
        }
        let b = batch.len();
        let bf = b as f64;

        // Smoothed target actions: clamp(tanh(P_t(s′)) + clip(ε, ±c), −1, 1).
        let next_states = stack_states(batch, true);
        let mut next_actions = Self::policy_actions(&self.policy_target, &next_states)?;
        let noise = self.draw_clipped_noise(b);
        next_actions.zip_mut_with(&noise, |a, e| *a = (*a + e).clamp(-1.0, 1.0));
        let y = self.critic_targets(batch, &next_actions)?;

        // Critic step (every call).
        let states = stack_states(batch, false);
        let actions = stack_actions(batch);
        let x = critic_input(&states, &actions);
        let mut critic_loss = 0.0;
        for (net, opt) in [
            (&mut self.q1, &mut self.q1_opt),
            (&mut self.q2, &mut self.q2_opt),
        ] {
            let q = net.forward_batch(x.view())?;
            let mut cot = Array2::zeros((1, b));
            for j in 0..b {
                let d = q[(0, j)] - y[j];
                critic_loss += d * d / bf;
                cot[(0, j)] = 2.0 * d / bf;
            }
            let (grad, _) = net.backprop_batch(x.view(), cot.view())?;
            Self::apply(net, opt, &grad)?;
        }

        // Delayed policy and target updates.
        self.updates += 1;
        let mut policy_loss = None;
        if self.updates.is_multiple_of(self.hyper.policy_delay) {
            let (obj, grad) = self.policy_objective_and_grad(&states)?;
            Self::apply(&mut self.policy, &mut self.policy_opt, &grad)?;
            policy_loss = Some(obj);
            soft_update(&self.policy, &mut self.policy_target, self.hyper.tau);
            soft_update(&self.q1, &mut self.q1_target, self.hyper.tau);
            soft_update(&self.q2, &mut self.q2_target, self.hyper.tau);
        }

        let report = LossReport {
            critic_loss,
            policy_loss,
            mean_target: y.iter().sum::<f64>() / bf,
        };
        if let Some(term) = report.first_non_finite() {
            return Err(Error::Diverged {
                term: term.into(),
                step: self.updates,
            });
        }
        Ok(report)
    }

    fn set_learning_rate(&mut self, lr: f64) {
        self.hyper.learning_rate = lr;
        self.policy_opt.lr = lr;
        self.q1_opt.lr = lr;
        self.q2_opt.lr = lr;
    }

    fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.policy.save(&dir.join("policy.json"))?;
        self.policy_target.save(&dir.join("policy_target.json"))?;
        self.q1.save(&dir.join("q1.json"))?;
        self.q2.save(&dir.join("q2.json"))?;
        self.q1_target.save(&dir.join("q1_target.json"))?;
        self.q2_target.save(&dir.join("q2_target.json"))?;
        let meta = Td3Meta {
            algorithm: "td3".into(),
            obs_dim: self.obs_dim,
            act_dim: self.act_dim,
            hyper: self.hyper.clone(),
            seed: self.seed,
            updates: self.updates,
        };
        std::fs::write(
            dir.join("td3_meta.json"),
            serde_json::to_string_pretty(&meta)?,
        )?;
        Ok(())
    }

    fn name(&self) -> &'static str {
        "td3"
    }
}
