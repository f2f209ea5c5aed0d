//! Experiment profiles: desk-scale `ci` budgets for fast verification and
//! the full `paper` budgets, plus the scenario adjustments each applies.

use clap::ValueEnum;
use hydrorl::env::{Mode, ScenarioConfig, TargetPattern, TaskKind};
use hydrorl::flowfield::{BoundaryCounts, FlowTrainConfig};
use hydrorl::hull::{HullFamily, HullShape};
use hydrorl::rl::TrainConfig;
use serde::{Deserialize, Serialize};

/// Which budget table an experiment runs under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// Reduced budgets sized for a single desk machine: shorter horizons,
    /// 100-episode runs, smaller networks, leaner flow training.
    Ci,
    /// Full-scale budgets: 300-episode runs, full flow-training schedule.
    Paper,
}

impl Profile {
    pub fn name(self) -> &'static str {
        match self {
            Profile::Ci => "ci",
            Profile::Paper => "paper",
        }
    }
}

/// Budgets for one reinforcement-learning training run.
#[derive(Debug, Clone)]
pub struct RlBudget {
    /// Trainer knobs; `seed` is a placeholder overwritten per run.
    pub train: TrainConfig,
    /// Hidden widths of the agent networks.
    pub hidden: Vec<usize>,
    /// Greedy evaluation episodes after training.
    pub eval_episodes: usize,
    /// Final-window length for learning-curve summaries.
    pub summary_window: usize,
}

/// CI episode counts differ by task. Data-collection comparisons are driven
/// by energy and coverage statistics that stabilise within ~100 episodes,
/// while pursuit in target tracking is genuinely learned from the dense
/// progress reward and needs the extra steps to converge.
pub const CI_COLLECTION_EPISODES: usize = 100;
pub const CI_TRACKING_EPISODES: usize = 600;

pub fn rl_budget(profile: Profile, tracking: bool) -> RlBudget {
    match profile {
        Profile::Ci => RlBudget {
            train: TrainConfig {
                episodes: if tracking {
                    CI_TRACKING_EPISODES
                } else {
                    CI_COLLECTION_EPISODES
                },
                learning_rate: 1e-3,
                batch_size: 64,
                warmup_steps: 1000,
                updates_per_step: 1,
                buffer_capacity: 20_000,
                seed: 0,
            },
            hidden: vec![48, 48],
            eval_episodes: 20,
            summary_window: 30,
        },
        Profile::Paper => RlBudget {
            train: TrainConfig {
                episodes: 300,
                learning_rate: 1e-4,
                batch_size: 128,
                warmup_steps: 1000,
                updates_per_step: 1,
                buffer_capacity: 20_000,
                seed: 0,
            },
            hidden: vec![128, 128],
            eval_episodes: 50,
            summary_window: 30,
        },
    }
}

/// Budgets for one flow-field (PINN) training run.
#[derive(Debug, Clone)]
pub struct FlowBudget {
    /// Optimizer schedule; `groups` is replaced by the scenario's groups.
    pub cfg: FlowTrainConfig,
    /// Interior collocation points.
    pub n_interior: usize,
    /// Boundary sample counts per segment.
    pub boundary: BoundaryCounts,
    /// Held-out interior points for the continuity check.
    pub holdout: usize,
}

pub fn flow_budget(profile: Profile) -> FlowBudget {
    match profile {
        Profile::Ci => FlowBudget {
            cfg: FlowTrainConfig {
                hidden: vec![32, 32],
                adam_steps: 800,
                minibatch: 128,
                lbfgs_steps: 50,
                ..FlowTrainConfig::default()
            },
            n_interior: 600,
            boundary: BoundaryCounts {
                inlet: 32,
                outlet: 32,
                wall: 48,
                hull: 80,
            },
            holdout: 500,
        },
        Profile::Paper => FlowBudget {
            cfg: FlowTrainConfig::default(),
            n_interior: 2000,
            boundary: BoundaryCounts::default(),
            holdout: 1000,
        },
    }
}

/// CI horizon for the data-collection scenarios.
pub const CI_COLLECTION_HORIZON: usize = 150;
/// CI horizon for target tracking. With the faster CI target the track must
/// stay inside the world box: origin x plus speed times horizon stays below
/// the 200 m edge.
pub const CI_TRACKING_HORIZON: usize = 85;
/// CI target ground speed (m/s). Fast enough that exploiting the ambient
/// current matters for the pursuit, while the full-scale profile keeps the
/// slow survey target.
pub const CI_TRACKING_SPEED: f64 = 1.9;
/// CI track line offset (m). The published survey line runs along the wake
/// centreline where the mean current is weakest; CI shifts it into the free
/// stream so pursuers ride the full ambient current.
pub const CI_TRACKING_ORIGIN_Y: f64 = 60.0;

/// Apply the profile's scenario adjustments in place. The `paper` profile
/// keeps the scenario exactly as published; `ci` shortens horizons and
/// speeds the tracked target up so differences show within small budgets.
pub fn apply_profile(scenario: &mut ScenarioConfig, profile: Profile) {
    if profile != Profile::Ci {
        return;
    }
    match &mut scenario.task.kind {
        TaskKind::DataCollection { .. } => {
            scenario.task.horizon = CI_COLLECTION_HORIZON;
        }
        TaskKind::TargetTracking { pattern } => {
            scenario.task.horizon = CI_TRACKING_HORIZON;
            if let TargetPattern::StraightLine { origin, speed, .. } = pattern {
                *speed = CI_TRACKING_SPEED;
                origin[1] = CI_TRACKING_ORIGIN_Y;
            }
        }
    }
}

/// Hull paired with each control mode: the latest design generation for
/// environment-aware vehicles, the first-generation baseline otherwise.
pub fn hull_for_mode(mode: Mode) -> HullShape {
    match mode {
        Mode::EnvAware => HullShape::standard(HullFamily::ParabolicTail),
        Mode::Traditional => HullShape::standard(HullFamily::Capsule),
    }
}
