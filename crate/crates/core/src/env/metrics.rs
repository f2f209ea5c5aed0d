//! Episode accounting: per-step reward decomposition, the CR/SDR/EC metrics,
//! tracking success, and JSON-lines episode logs.

use super::kinematics::Action;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// Weights of the multi-objective reward. The collision penalty is stored as
/// the (negative) value added to the reward when a crash happens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    /// Gain on task progress (data collected / distance-to-target closed).
    pub task_gain: f64,
    /// Cost per unit of energy spent.
    pub energy_cost: f64,
    /// Added to the reward on a crash; must be negative.
    pub collision_penalty: f64,
    /// Bonus for productive cooperation (distinct nodes / bracketing).
    pub cooperation_bonus: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            task_gain: 1.0,
            energy_cost: 0.01,
            collision_penalty: -100.0,
            cooperation_bonus: 0.2,
        }
    }
}

impl RewardWeights {
    /// Check the sign conventions.
    pub fn validate(&self) -> Result<()> {
        if !(self.collision_penalty < 0.0) {
            return Err(Error::Config(format!(
                "collision penalty must be negative, got {}",
                self.collision_penalty
            )));
        }
        for (name, v) in [
            ("task_gain", self.task_gain),
            ("energy_cost", self.energy_cost),
            ("cooperation_bonus", self.cooperation_bonus),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Config(format!(
                    "reward weight {name} must be a non-negative finite number, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Signed contributions making up one vehicle's reward for one step.
/// The total reward is exactly the sum of the four terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardTerms {
    /// `task_gain · progress` (data Mb collected, or metres of approach).
    pub task: f64,
    /// `−energy_cost · ΔEC`.
    pub energy: f64,
    /// `collision_penalty` when this step crashed, else 0.
    pub collision: f64,
    /// `cooperation_bonus` when the team cooperated productively, else 0.
    pub cooperation: f64,
}

impl RewardTerms {
    /// The reward is defined as the exact sum of its terms.
    pub fn total(&self) -> f64 {
        self.task + self.energy + self.collision + self.cooperation
    }
}

/// Per-vehicle slice of a step record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuvStepRecord {
    pub position: [f64; 3],
    pub action: Action,
    pub reward: f64,
    pub reward_terms: RewardTerms,
    /// Sum of instantaneous data rates seen this step (Mb/s).
    pub data_rate: f64,
    /// Energy spent this step.
    pub energy: f64,
    /// Tracking tasks: was the target inside this vehicle's detection range?
    pub target_in_range: bool,
}

/// One line of the episode log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Simulation time at the *end* of the step (s).
    pub t: f64,
    pub auvs: Vec<AuvStepRecord>,
    pub done: bool,
    pub collision: bool,
    /// Tracking tasks: where the target is at the end of the step.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_position: Option<[f64; 3]>,
}

/// Aggregate episode metrics: cumulative reward, sum data rate, energy
/// consumption, and the task success ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    /// CR: sum of all per-step, per-vehicle rewards.
    pub cumulative_reward: f64,
    /// SDR: sum of all per-step, per-vehicle data rates.
    pub sum_data_rate: f64,
    /// EC: sum of all per-step, per-vehicle energy increments.
    pub energy_consumption: f64,
    /// Tracking: mean per-vehicle in-range ratio. Collection: fraction of
    /// nodes fully drained.
    pub success_rate: f64,
}

impl EpisodeMetrics {
    pub fn zero() -> Self {
        Self {
            cumulative_reward: 0.0,
            sum_data_rate: 0.0,
            energy_consumption: 0.0,
            success_rate: 0.0,
        }
    }

    /// Fold one step record into the running totals (success is set
    /// separately at episode end).
    pub fn absorb(&mut self, rec: &StepRecord) {
        for a in &rec.auvs {
            self.cumulative_reward += a.reward;
            self.sum_data_rate += a.data_rate;
            self.energy_consumption += a.energy;
        }
    }
}

/// Per-vehicle tracking success: the ratio of steps with the target inside
/// the vehicle's detection range to total steps. Errors on an empty log.
pub fn per_auv_success_rates(log: &[StepRecord]) -> Result<Vec<f64>> {
    if log.is_empty() {
        return Err(Error::Contract(
            "tracking success rate is undefined for an empty episode".into(),
        ));
    }
    let n_auvs = log[0].auvs.len();
    let mut hits = vec![0usize; n_auvs];
    for rec in log {
        for (i, a) in rec.auvs.iter().enumerate() {
            if a.target_in_range {
                hits[i] += 1;
            }
        }
    }
    Ok(hits
        .into_iter()
        .map(|h| h as f64 / log.len() as f64)
        .collect())
}

/// Team tracking success: mean of the per-vehicle ratios.
pub fn tracking_success_rate(log: &[StepRecord]) -> Result<f64> {
    let rates = per_auv_success_rates(log)?;
    Ok(rates.iter().sum::<f64>() / rates.len() as f64)
}

/// Write an episode log as JSON lines, one step record per line.
pub fn write_episode_log(path: &Path, log: &[StepRecord]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    for rec in log {
        serde_json::to_writer(&mut w, rec)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Read an episode log written by [`write_episode_log`].
pub fn read_episode_log(path: &Path) -> Result<Vec<StepRecord>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(line)?);
    }
    Ok(out)
}
