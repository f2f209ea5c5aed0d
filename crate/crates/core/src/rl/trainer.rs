//! Off-policy training loop shared by SAC and TD3: warmup with uniform
//! random actions, replay-buffer updates, per-episode metric curves, and a
//! greedy evaluation pass. Multi-vehicle environments train one shared
//! policy on per-vehicle transitions (decentralized execution).

use super::agent::Agent;
use super::buffer::{ReplayBuffer, Transition, REPLAY_CAPACITY};
use crate::env::{Action, AuvEnv, EpisodeMetrics};
use crate::{Error, Result};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// Knobs for one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Episodes to run.
    pub episodes: usize,
    /// Adam learning rate pushed into the agent before training.
    pub learning_rate: f64,
    /// Minibatch size per gradient update.
    pub batch_size: usize,
    /// Environment steps driven by uniform random actions before learning.
    pub warmup_steps: usize,
    /// Gradient updates per environment step once learning starts.
    pub updates_per_step: usize,
    /// Replay buffer capacity.
    pub buffer_capacity: usize,
    /// Seed for action warmup and replay sampling.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            episodes: 300,
            learning_rate: 1e-4,
            batch_size: 128,
            warmup_steps: 1000,
            updates_per_step: 1,
            buffer_capacity: REPLAY_CAPACITY,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Reject configurations the loop cannot honor.
    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 {
            return Err(Error::Config("episodes must be positive".into()));
        }
        if self.batch_size < 2 {
            return Err(Error::Config("batch_size must be at least 2".into()));
        }
        if self.buffer_capacity < self.batch_size {
            return Err(Error::Config(
                "buffer_capacity must be at least batch_size".into(),
            ));
        }
        if self.updates_per_step == 0 {
            return Err(Error::Config("updates_per_step must be positive".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        Ok(())
    }
}

/// What one environment step returns to the trainer.
#[derive(Debug, Clone)]
pub struct EnvStepOutcome {
    /// Next per-actor observations.
    pub states: Vec<Vec<f64>>,
    /// Per-actor rewards.
    pub rewards: Vec<f64>,
    /// Episode finished.
    pub done: bool,
}

/// Minimal environment surface the trainer drives. All actions are
/// normalized to `[−1, 1]` per component.
pub trait EnvInterface {
    /// Observation length per actor.
    fn obs_dim(&self) -> usize;
    /// Action length per actor.
    fn action_dim(&self) -> usize;
    /// Number of actors stepping simultaneously.
    fn num_actors(&self) -> usize;
    /// Start a fresh episode and return initial observations.
    fn reset(&mut self) -> Result<Vec<Vec<f64>>>;
    /// Advance one step with one normalized action per actor.
    fn step(&mut self, actions: &[Vec<f64>]) -> Result<EnvStepOutcome>;
    /// Metrics accumulated over the episode in progress (or just finished).
    fn metrics(&self) -> EpisodeMetrics;
}

/// Adapter exposing [`AuvEnv`] through [`EnvInterface`].
#[derive(Debug)]
pub struct AuvEnvAdapter {
    env: AuvEnv,
}

impl AuvEnvAdapter {
    pub fn new(env: AuvEnv) -> Self {
        Self { env }
    }

    /// The wrapped environment.
    pub fn inner(&self) -> &AuvEnv {
        &self.env
    }

    pub fn into_inner(self) -> AuvEnv {
        self.env
    }
}

impl EnvInterface for AuvEnvAdapter {
    fn obs_dim(&self) -> usize {
        self.env.observation_dim()
    }

    fn action_dim(&self) -> usize {
        3
    }

    fn num_actors(&self) -> usize {
        self.env.n_auvs()
    }

    fn reset(&mut self) -> Result<Vec<Vec<f64>>> {
        Ok(self.env.reset()?.iter().map(|s| s.flat()).collect())
    }

    fn step(&mut self, actions: &[Vec<f64>]) -> Result<EnvStepOutcome> {
        let mapped: Result<Vec<Action>> = actions
            .iter()
            .map(|a| {
                if a.len() != 3 {
                    return Err(Error::DimensionMismatch(format!(
                        "expected 3 action components, got {}",
                        a.len()
                    )));
                }
                Ok(Action::from_normalized([a[0], a[1], a[2]]))
            })
            .collect();
        let outcome = self.env.step(&mapped?)?;
        Ok(EnvStepOutcome {
            states: outcome.states.iter().map(|s| s.flat()).collect(),
            rewards: outcome.rewards,
            done: outcome.done,
        })
    }

    fn metrics(&self) -> EpisodeMetrics {
        self.env.metrics()
    }
}

/// One row of the learning curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub episode: usize,
    pub metrics: EpisodeMetrics,
    /// Mean critic loss over the episode's updates, if any ran.
    pub critic_loss: Option<f64>,
    /// Mean policy loss over the episode's updates that reported one.
    pub policy_loss: Option<f64>,
}

/// Train `agent` on `env`. Returns one record per episode.
pub fn train(
    agent: &mut dyn Agent,
    env: &mut dyn EnvInterface,
    cfg: &TrainConfig,
) -> Result<Vec<TrainRecord>> {
    cfg.validate()?;
    if agent.obs_dim() != env.obs_dim() {
        return Err(Error::Config(format!(
            "agent expects {}-dim observations, environment yields {}",
            agent.obs_dim(),
            env.obs_dim()
        )));
    }
    if agent.action_dim() != env.action_dim() {
        return Err(Error::Config(format!(
            "agent emits {}-dim actions, environment expects {}",
            agent.action_dim(),
            env.action_dim()
        )));
    }
    agent.set_learning_rate(cfg.learning_rate);
    let mut buffer = ReplayBuffer::with_capacity(cfg.buffer_capacity);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(0x9e37_79b9).wrapping_add(1));
    let act_dim = env.action_dim();
    let mut curve = Vec::with_capacity(cfg.episodes);
    let mut env_steps = 0usize;

    for episode in 0..cfg.episodes {
        let mut states = env.reset()?;
        let mut critic_sum = 0.0;
        let mut critic_n = 0usize;
        let mut policy_sum = 0.0;
        let mut policy_n = 0usize;
        loop {
            let actions: Vec<Vec<f64>> = if env_steps < cfg.warmup_steps {
                (0..states.len())
                    .map(|_| (0..act_dim).map(|_| rng.gen_range(-1.0..=1.0)).collect())
                    .collect()
            } else {
                states
                    .iter()
                    .map(|s| agent.act(s, true))
                    .collect::<Result<_>>()?
            };
            let outcome = env.step(&actions)?;
            for i in 0..states.len() {
                buffer.push(Transition {
                    state: states[i].clone(),
                    action: actions[i].clone(),
                    reward: outcome.rewards[i],
                    next_state: outcome.states[i].clone(),
                    done: outcome.done,
                })?;
            }
            env_steps += 1;
            if env_steps >= cfg.warmup_steps && buffer.len() >= cfg.batch_size {
                for _ in 0..cfg.updates_per_step {
                    let batch = buffer.sample(cfg.batch_size, &mut rng)?;
                    let report = agent.update(&batch)?;
                    critic_sum += report.critic_loss;
                    critic_n += 1;
                    if let Some(p) = report.policy_loss {
                        policy_sum += p;
                        policy_n += 1;
                    }
                }
            }
            states = outcome.states;
            if outcome.done {
                break;
            }
        }
        curve.push(TrainRecord {
            episode,
            metrics: env.metrics(),
            critic_loss: (critic_n > 0).then(|| critic_sum / critic_n as f64),
            policy_loss: (policy_n > 0).then(|| policy_sum / policy_n as f64),
        });
    }
    Ok(curve)
}

/// Run `episodes` greedy (no exploration, no learning) episodes and collect
/// their metrics.
pub fn evaluate(
    agent: &mut dyn Agent,
    env: &mut dyn EnvInterface,
    episodes: usize,
) -> Result<Vec<EpisodeMetrics>> {
    let mut out = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let mut states = env.reset()?;
        loop {
            let actions: Vec<Vec<f64>> = states
                .iter()
                .map(|s| agent.act(s, false))
                .collect::<Result<_>>()?;
            let outcome = env.step(&actions)?;
            states = outcome.states;
            if outcome.done {
                break;
            }
        }
        out.push(env.metrics());
    }
    Ok(out)
}

/// Write a learning curve as CSV with a fixed header.
pub fn write_curve_csv(path: &Path, curve: &[TrainRecord]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "episode,cr,sdr,ec,success_rate,critic_loss,policy_loss")?;
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in curve {
        writeln!(
            f,
            "{},{},{},{},{},{},{}",
            r.episode,
            r.metrics.cumulative_reward,
            r.metrics.sum_data_rate,
            r.metrics.energy_consumption,
            r.metrics.success_rate,
            cell(r.critic_loss),
            cell(r.policy_loss),
        )?;
    }
    f.flush()?;
    Ok(())
}

/// One-dimensional sanity environment: state `x`, action `a ∈ [−1, 1]`,
/// dynamics `x′ = clamp(x + 0.4a, −2, 2)`, reward `−x′²`, horizon 25.
/// An optimal policy drives `x` to the origin and holds it there.
#[derive(Debug)]
pub struct ToyMoveToOrigin {
    x: f64,
    t: usize,
    horizon: usize,
    reward_sum: f64,
    rng: ChaCha8Rng,
}

impl ToyMoveToOrigin {
    pub fn new(seed: u64) -> Self {
        Self {
            x: 0.0,
            t: 0,
            horizon: 25,
            reward_sum: 0.0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Current scalar state.
    pub fn x(&self) -> f64 {
        self.x
    }
}

impl EnvInterface for ToyMoveToOrigin {
    fn obs_dim(&self) -> usize {
        1
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn num_actors(&self) -> usize {
        1
    }

    fn reset(&mut self) -> Result<Vec<Vec<f64>>> {
        self.x = self.rng.gen_range(-1.5..1.5);
        self.t = 0;
        self.reward_sum = 0.0;
        Ok(vec![vec![self.x]])
    }

    fn step(&mut self, actions: &[Vec<f64>]) -> Result<EnvStepOutcome> {
        if actions.len() != 1 || actions[0].len() != 1 {
            return Err(Error::DimensionMismatch(
                "toy environment expects a single scalar action".into(),
            ));
        }
        let a = actions[0][0].clamp(-1.0, 1.0);
        self.x = (self.x + 0.4 * a).clamp(-2.0, 2.0);
        self.t += 1;
        let reward = -self.x * self.x;
        self.reward_sum += reward;
        Ok(EnvStepOutcome {
            states: vec![vec![self.x]],
            rewards: vec![reward],
            done: self.t >= self.horizon,
        })
    }

    fn metrics(&self) -> EpisodeMetrics {
        EpisodeMetrics {
            cumulative_reward: self.reward_sum,
            sum_data_rate: 0.0,
            energy_consumption: 0.0,
            success_rate: if self.x.abs() < 0.1 { 1.0 } else { 0.0 },
        }
    }
}
