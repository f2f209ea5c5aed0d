//! Multi-AUV underwater environment.
//!
//! This module is the decision process the agents learn in: a team of
//! three-degree-of-freedom vehicles moving through an ambient flow field
//! inside a 200 m cube, performing either cooperative data collection from
//! anchored sensor nodes or tracking of a moving target.
//!
//! The pieces:
//! * [`kinematics`] — vehicle motion, actuator bounds, energy accounting;
//! * [`task`] — sensor nodes, data-rate channel, target trajectories;
//! * [`world`] — assembly of the ambient velocity from a trained flow
//!   network plus optional wave/current disturbance layers;
//! * [`metrics`] — reward decomposition, CR/SDR/EC metrics, episode logs;
//! * [`environment`] — the environment itself.
//!
//! Two sensing modes share one code path: `EnvAware` feeds flow features
//! sampled from the trained flow network and swims through its velocity
//! field; `Traditional` zeroes both, recovering the classical baseline.

pub mod environment;
pub mod kinematics;
pub mod metrics;
pub mod task;
pub mod world;

pub use environment::{AuvEnv, EnvConfig, Mode, ScenarioConfig, StateVector, StepOutcome};
pub use kinematics::{
    angle_distance, clamp_to_box, distance, energy_step, heading, kinematics_update,
    relative_flow_speed, wrap_angle, Action, AuvState, CRASH_DISTANCE, DETECTION_RANGE,
    MANEUVER_COEFF, SPEED_MAX, SPEED_MIN, WORLD_SIZE,
};
pub use metrics::{
    per_auv_success_rates, read_episode_log, tracking_success_rate, write_episode_log,
    AuvStepRecord, EpisodeMetrics, RewardTerms, RewardWeights, StepRecord,
};
pub use task::{
    data_rate, target_position, target_velocity, SensorNode, TargetPattern, TaskConfig, TaskKind,
    DATA_RATE_D0, DATA_RATE_R0,
};
pub use world::{
    AmbientField, CurrentConfig, DisturbanceConfig, FrozenCurrent, WaveConfig, WorldPlaneMap,
};
