//! Soft Actor-Critic with a squashed-Gaussian policy, twin critics and
//! Polyak-averaged targets, all gradients assembled by hand on top of the
//! network reverse pass.

use super::agent::{critic_input, soft_update, stack_actions, stack_states, Agent, LossReport};
use super::buffer::Transition;
use crate::numcore::{AdamState, Mlp};
use crate::{Error, Result};
use ndarray::Array2;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Lower clamp on the policy's log standard deviation.
pub const LOG_SIGMA_MIN: f64 = -5.0;
/// Upper clamp on the policy's log standard deviation.
pub const LOG_SIGMA_MAX: f64 = 2.0;
/// Stabilizer inside `log(1 − tanh²(u) + ε)`.
const SQUASH_EPS: f64 = 1e-6;
const LN_2PI: f64 = 1.8378770664093453;

/// SAC hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SacHyper {
    /// Discount γ.
    pub gamma: f64,
    /// Polyak soft-update rate τ.
    pub tau: f64,
    /// Fixed entropy temperature α.
    pub temperature: f64,
    /// Adam learning rate for every network.
    pub learning_rate: f64,
    /// Hidden layer widths shared by policy and critics.
    pub hidden: Vec<usize>,
}

impl Default for SacHyper {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            tau: 0.005,
            temperature: 0.2,
            learning_rate: 1e-4,
            hidden: vec![128, 128],
        }
    }
}

/// Everything the squashed-Gaussian head produces for a batch of states.
struct PolicySample {
    /// Squashed actions, `act × B`, strictly inside (−1, 1).
    actions: Array2<f64>,
    /// Per-sample log-probability of the squashed action.
    logp: Vec<f64>,
    /// Gaussian means.
    mu: Array2<f64>,
    /// Pre-squash draws `u = μ + σ·ε`.
    u: Array2<f64>,
    /// 1.0 where the log-σ clamp is inactive (gradient flows), else 0.0.
    live: Array2<f64>,
}

/// Soft Actor-Critic agent over normalized actions.
#[derive(Debug)]
pub struct SacAgent {
    obs_dim: usize,
    act_dim: usize,
    hyper: SacHyper,
    policy: Mlp,
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

impl SacAgent {
    /// Fresh agent with Xavier-initialized networks.
    pub fn new(obs_dim: usize, act_dim: usize, hyper: SacHyper, seed: u64) -> Result<Self> {
        if obs_dim == 0 || act_dim == 0 {
            return Err(Error::Config("observation/action dims must be positive".into()));
        }
        let mut policy_sizes = vec![obs_dim];
        policy_sizes.extend_from_slice(&hyper.hidden);
        policy_sizes.push(2 * act_dim);
        let mut critic_sizes = vec![obs_dim + act_dim];
        critic_sizes.extend_from_slice(&hyper.hidden);
        critic_sizes.push(1);
        let policy = Mlp::xavier(&policy_sizes, seed ^ 0x01)?;
        let q1 = Mlp::xavier(&critic_sizes, seed ^ 0x02)?;
        let q2 = Mlp::xavier(&critic_sizes, seed ^ 0x03)?;
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
            q1,
            q2,
            q1_target,
            q2_target,
            rng: ChaCha8Rng::seed_from_u64(seed),
            seed,
            updates: 0,
        })
    }

    /// Number of completed gradient updates.
    pub fn update_count(&self) -> usize {
        self.updates
    }

    /// Gaussian head: means, clamped log-σ, and the clamp-liveness mask.
    fn policy_stats(&self, states: &Array2<f64>) -> Result<(Array2<f64>, Array2<f64>, Array2<f64>)> {
        let out = self.policy.forward_batch(states.view())?;
        let b = out.ncols();
        let mut mu = Array2::zeros((self.act_dim, b));
        let mut log_sigma = Array2::zeros((self.act_dim, b));
        let mut live = Array2::zeros((self.act_dim, b));
        for j in 0..b {
            for k in 0..self.act_dim {
                mu[(k, j)] = out[(k, j)];
                let raw = out[(self.act_dim + k, j)];
                log_sigma[(k, j)] = raw.clamp(LOG_SIGMA_MIN, LOG_SIGMA_MAX);
                live[(k, j)] = if (LOG_SIGMA_MIN..LOG_SIGMA_MAX).contains(&raw) {
                    1.0
                } else {
                    0.0
                };
            }
        }
        Ok((mu, log_sigma, live))
    }

    /// Reparameterized draw with explicit noise: `a = tanh(μ + σ·ε)` and its
    /// squashed log-probability. Pure given `eps`.
    fn sample_with_noise(&self, states: &Array2<f64>, eps: &Array2<f64>) -> Result<PolicySample> {
        let (mu, log_sigma, live) = self.policy_stats(states)?;
        let b = mu.ncols();
        let mut actions = Array2::zeros((self.act_dim, b));
        let mut u = Array2::zeros((self.act_dim, b));
        let mut logp = vec![0.0; b];
        for j in 0..b {
            for k in 0..self.act_dim {
                let s = log_sigma[(k, j)].exp();
                let e = eps[(k, j)];
                let uu = mu[(k, j)] + s * e;
                let a = uu.tanh();
                u[(k, j)] = uu;
                actions[(k, j)] = a;
                logp[j] += -0.5 * e * e - log_sigma[(k, j)] - 0.5 * LN_2PI
                    - (1.0 - a * a + SQUASH_EPS).ln();
            }
        }
        Ok(PolicySample {
            actions,
            logp,
            mu,
            u,
            live,
        })
    }

    /// Draw standard-normal noise for a batch.
    fn draw_eps(&mut self, b: usize) -> Array2<f64> {
        Array2::from_shape_fn((self.act_dim, b), |_| {
            StandardNormal.sample(&mut self.rng)
        })
    }

    /// Bellman bootstrap: `y = r + γ(1−done)·(min twin target Q(s′,a′) −
    /// α·log π(a′|s′))`, for externally supplied next actions/log-probs.
    pub fn critic_targets(
        &self,
        batch: &[&Transition],
        next_actions: &Array2<f64>,
        next_logp: &[f64],
    ) -> Result<Vec<f64>> {
        let next_states = stack_states(batch, true);
        let x = critic_input(&next_states, next_actions);
        let qt1 = self.q1_target.forward_batch(x.view())?;
        let qt2 = self.q2_target.forward_batch(x.view())?;
        Ok(batch
            .iter()
            .enumerate()
            .map(|(j, t)| {
                let qmin = qt1[(0, j)].min(qt2[(0, j)]);
                let not_done = if t.done { 0.0 } else { 1.0 };
                t.reward
                    + self.hyper.gamma
                        * not_done
                        * (qmin - self.hyper.temperature * next_logp[j])
            })
            .collect())
    }

    /// Policy objective `mean(α·log π − min Q)` at fixed noise, with its
    /// gradient with respect to the policy parameters.
    fn policy_objective_and_grad(
        &self,
        states: &Array2<f64>,
        eps: &Array2<f64>,
    ) -> Result<(f64, Vec<f64>)> {
        let b = states.ncols();
        let bf = b as f64;
        let alpha = self.hyper.temperature;
        let sample = self.sample_with_noise(states, eps)?;
        let x = critic_input(states, &sample.actions);
        let q1v = self.q1.forward_batch(x.view())?;
        let q2v = self.q2.forward_batch(x.view())?;

        let mut objective = 0.0;
        let mut cot1 = Array2::zeros((1, b));
        let mut cot2 = Array2::zeros((1, b));
        for j in 0..b {
            let (v1, v2) = (q1v[(0, j)], q2v[(0, j)]);
            let qmin = v1.min(v2);
            objective += (alpha * sample.logp[j] - qmin) / bf;
            if v1 <= v2 {
                cot1[(0, j)] = -1.0 / bf;
            } else {
                cot2[(0, j)] = -1.0 / bf;
            }
        }
        // ∂(−mean min Q)/∂(state, action): input gradients of the chosen
        // critic; only the action rows matter for the policy.
        let (_, ig1) = self.q1.backprop_batch(x.view(), cot1.view())?;
        let (_, ig2) = self.q2.backprop_batch(x.view(), cot2.view())?;

        let mut cot_policy = Array2::zeros((2 * self.act_dim, b));
        for j in 0..b {
            for k in 0..self.act_dim {
                let a = sample.actions[(k, j)];
                let one_m_a2 = 1.0 - a * a;
                let g_q = ig1[(self.obs_dim + k, j)] + ig2[(self.obs_dim + k, j)];
                // α/B · ∂logπ/∂a  +  ∂(−mean min Q)/∂a.
                let g_a = alpha / bf * (2.0 * a / (one_m_a2 + SQUASH_EPS)) + g_q;
                let g_u = g_a * one_m_a2;
                cot_policy[(k, j)] = g_u;
                // ℓ-path: u = μ + e^ℓ·ε so ∂u/∂ℓ = u − μ, plus the direct
                // −α/B from the −ℓ entropy term; both die where clamped.
                let sig_eps = sample.u[(k, j)] - sample.mu[(k, j)];
                cot_policy[(self.act_dim + k, j)] =
                    sample.live[(k, j)] * (g_u * sig_eps - alpha / bf);
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
        let meta: SacMeta =
            serde_json::from_str(&std::fs::read_to_string(dir.join("sac_meta.json"))?)?;
        let mut agent = Self::new(meta.obs_dim, meta.act_dim, meta.hyper, meta.seed)?;
        agent.policy = Mlp::load(&dir.join("policy.json"))?;
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
struct SacMeta {
    algorithm: String,
    obs_dim: usize,
    act_dim: usize,
    hyper: SacHyper,
    seed: u64,
    updates: usize,
}

impl Agent for SacAgent {
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
        if explore {
            let eps = self.draw_eps(1);
            let sample = self.sample_with_noise(&s, &eps)?;
            Ok(sample.actions.column(0).to_vec())
        } else {
            let (mu, _, _) = self.policy_stats(&s)?;
            Ok(mu.column(0).iter().map(|m| m.tanh()).collect())
        }
    }

    fn update(&mut self, batch: &[&Transition]) -> Result<LossReport> {
        if batch.len() < 2 {
            return Err(Error::Contract(format!(
                "SAC update needs a batch of at least 2, got {}",
                batch.len()
            )));
        }
        let b = batch.len();
        let bf = b as f64;

        // Critic step.
        let eps_next = self.draw_eps(b);
        let next_states = stack_states(batch, true);
        let next_sample = self.sample_with_noise(&next_states, &eps_next)?;
        let y = self.critic_targets(batch, &next_sample.actions, &next_sample.logp)?;

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

        // Policy step (reparameterized, fresh noise).
        let eps = self.draw_eps(b);
        let (policy_loss, grad) = self.policy_objective_and_grad(&states, &eps)?;
        Self::apply(&mut self.policy, &mut self.policy_opt, &grad)?;

        // Target tracking.
        soft_update(&self.q1, &mut self.q1_target, self.hyper.tau);
        soft_update(&self.q2, &mut self.q2_target, self.hyper.tau);

        self.updates += 1;
        let report = LossReport {
            critic_loss,
            policy_loss: Some(policy_loss),
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
        self.q1.save(&dir.join("q1.json"))?;
        self.q2.save(&dir.join("q2.json"))?;
        self.q1_target.save(&dir.join("q1_target.json"))?;
        self.q2_target.save(&dir.join("q2_target.json"))?;
        let meta = SacMeta {
            algorithm: "sac".into(),
            obs_dim: self.obs_dim,
            act_dim: self.act_dim,
            hyper: self.hyper.clone(),
            seed: self.seed,
            updates: self.updates,
        };
        std::fs::write(
            dir.join("sac_meta.json"),
            serde_json::to_string_pretty(&meta)?,
        )?;
        Ok(())
    }

    fn name(&self) -> &'static str {
        "sac"
    }
}
