//! The common agent interface shared by SAC and TD3, plus small batch
//! helpers used by both updates.

use super::buffer::Transition;
use crate::env::Action;
use crate::{Error, Result};
use ndarray::Array2;
use std::path::Path;

/// Losses and diagnostics from one gradient update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossReport {
    /// Mean squared Bellman error summed over the twin critics.
    pub critic_loss: f64,
    /// Policy objective value, when the policy was updated this call.
    pub policy_loss: Option<f64>,
    /// Mean bootstrap target of the batch.
    pub mean_target: f64,
}

impl LossReport {
    /// Name of the first non-finite term, if any.
    pub fn first_non_finite(&self) -> Option<&'static str> {
        if !self.critic_loss.is_finite() {
            return Some("critic_loss");
        }
        if let Some(p) = self.policy_loss {
            if !p.is_finite() {
                return Some("policy_loss");
            }
        }
        if !self.mean_target.is_finite() {
            return Some("mean_target");
        }
        None
    }
}

/// An off-policy actor-critic agent over normalized actions in `[-1, 1]^d`.
pub trait Agent {
    /// Observation length the agent was built for.
    fn obs_dim(&self) -> usize;
    /// Action dimensionality (normalized coordinates).
    fn action_dim(&self) -> usize;
    /// Choose a normalized action. `explore = false` must be deterministic.
    fn act(&mut self, state: &[f64], explore: bool) -> Result<Vec<f64>>;
    /// One gradient update from a replay minibatch.
    fn update(&mut self, batch: &[&Transition]) -> Result<LossReport>;
    /// Override every optimizer's learning rate.
    fn set_learning_rate(&mut self, lr: f64);
    /// Persist all networks (numcore checkpoint format) plus metadata.
    fn save(&self, dir: &Path) -> Result<()>;
    /// Algorithm name for reports.
    fn name(&self) -> &'static str;
}

/// Which learning algorithm to instantiate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RlAlgo {
    Sac,
    Td3,
}

impl RlAlgo {
    /// Parse the CLI spelling of the algorithm name.
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "sac" => Ok(RlAlgo::Sac),
            "td3" => Ok(RlAlgo::Td3),
            other => Err(Error::Config(format!(
                "unknown algorithm {other:?} (expected \"sac\" or \"td3\")"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RlAlgo::Sac => "sac",
            RlAlgo::Td3 => "td3",
        }
    }
}

/// Build a fresh agent of the given algorithm with the given hidden-layer
/// widths and otherwise default hyperparameters.
pub fn make_agent(
    algo: RlAlgo,
    obs_dim: usize,
    action_dim: usize,
    hidden: &[usize],
    seed: u64,
) -> Result<Box<dyn Agent>> {
    match algo {
        RlAlgo::Sac => {
            let hyper = super::sac::SacHyper {
                hidden: hidden.to_vec(),
                ..Default::default()
            };
            Ok(Box::new(super::sac::SacAgent::new(
                obs_dim, action_dim, hyper, seed,
            )?))
        }
        RlAlgo::Td3 => {
            let hyper = super::td3::Td3Hyper {
                hidden: hidden.to_vec(),
                ..Default::default()
            };
            Ok(Box::new(super::td3::Td3Agent::new(
                obs_dim, action_dim, hyper, seed,
            )?))
        }
    }
}

/// Select a physical environment action from a flat state using `agent`.
/// Requires a 3-component action space (speed, yaw, pitch).
pub fn select_action<A: Agent + ?Sized>(
    agent: &mut A,
    state: &[f64],
    explore: bool,
) -> Result<Action> {
    if agent.action_dim() != 3 {
        return Err(Error::Config(format!(
            "environment actions need 3 components, agent has {}",
            agent.action_dim()
        )));
    }
    let u = agent.act(state, explore)?;
    Ok(Action::from_normalized([u[0], u[1], u[2]]))
}

/// Stack batch states column-wise into a `dim × B` matrix.
pub(crate) fn stack_states(batch: &[&Transition], next: bool) -> Array2<f64> {
    let dim = batch[0].state.len();
    let mut out = Array2::zeros((dim, batch.len()));
    for (j, t) in batch.iter().enumerate() {
        let src = if next { &t.next_state } else { &t.state };
        for (i, &v) in src.iter().enumerate() {
            out[(i, j)] = v;
        }
    }
    out
}

/// Stack states and actions into the `(obs+act) × B` critic input.
pub(crate) fn critic_input(states: &Array2<f64>, actions: &Array2<f64>) -> Array2<f64> {
    let (obs, b) = states.dim();
    let (act, b2) = actions.dim();
    debug_assert_eq!(b, b2);
    let mut x = Array2::zeros((obs + act, b));
    for j in 0..b {
        for i in 0..obs {
            x[(i, j)] = states[(i, j)];
        }
        for i in 0..act {
            x[(obs + i, j)] = actions[(i, j)];
        }
    }
    x
}

/// Stack batch actions column-wise into an `act × B` matrix.
pub(crate) fn stack_actions(batch: &[&Transition]) -> Array2<f64> {
    let dim = batch[0].action.len();
    let mut out = Array2::zeros((dim, batch.len()));
    for (j, t) in batch.iter().enumerate() {
        for (i, &v) in t.action.iter().enumerate() {
            out[(i, j)] = v;
        }
    }
    out
}

/// Soft update: `target ← τ·main + (1−τ)·target`, elementwise.
pub(crate) fn soft_update(main: &crate::numcore::Mlp, target: &mut crate::numcore::Mlp, tau: f64) {
    let m = main.params();
    let mut t = target.params();
    for (ti, mi) in t.iter_mut().zip(&m) {
        *ti = tau * mi + (1.0 - tau) * *ti;
    }
    target
        .set_params(&t)
        .expect("target net has the same architecture as the main net");
}
