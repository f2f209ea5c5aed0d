//! Task definitions: sensor nodes for data collection, moving targets for
//! tracking, and the task configuration consumed by the environment.

use super::kinematics::{distance, DETECTION_RANGE};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Baseline data rate at zero distance for urgency 1 (Mb/s).
pub const DATA_RATE_R0: f64 = 1.0;
/// Half-rate distance scale in the inverse-square falloff (m).
pub const DATA_RATE_D0: f64 = 8.0;

/// An anchored sensor node holding data to be collected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorNode {
    /// Anchor position (m).
    pub position: [f64; 3],
    /// Urgency priority ∈ {1, 2, 3}; higher is more urgent.
    pub urgency: u8,
    /// Remaining data volume (Mb); non-negative.
    pub data_volume: f64,
    /// Data volume the node started the episode with (Mb).
    pub initial_volume: f64,
    /// Set once the node has been fully drained.
    pub collected: bool,
}

impl SensorNode {
    /// A fresh node with `volume` Mb to offer.
    pub fn new(position: [f64; 3], urgency: u8, volume: f64) -> Result<Self> {
        if !(1..=3).contains(&urgency) {
            return Err(Error::Domain(format!(
                "node urgency must be 1, 2 or 3, got {urgency}"
            )));
        }
        if !(volume > 0.0) || !volume.is_finite() {
            return Err(Error::Domain(format!(
                "node data volume must be positive and finite, got {volume}"
            )));
        }
        Ok(Self {
            position,
            urgency,
            data_volume: volume,
            initial_volume: volume,
            collected: false,
        })
    }

    /// Restore the node to its start-of-episode state.
    pub fn reset(&mut self) {
        self.data_volume = self.initial_volume;
        self.collected = false;
    }
}

/// Instantaneous uplink rate between a vehicle at `auv_position` and `node`:
/// `r₀·urgency / (1 + (d/d₀)²)` inside the detection range, zero outside.
/// Urgent nodes transmit proportionally faster, so prioritizing them pays.
pub fn data_rate(auv_position: [f64; 3], node: &SensorNode) -> f64 {
    if node.collected {
        return 0.0;
    }
    let d = distance(auv_position, node.position);
    if d > DETECTION_RANGE {
        return 0.0;
    }
    let ratio = d / DATA_RATE_D0;
    DATA_RATE_R0 * f64::from(node.urgency) / (1.0 + ratio * ratio)
}

/// Trajectory family a tracked target follows (Fig.-7-style patterns).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "pattern")]
pub enum TargetPattern {
    /// `p(t) = p₀ + û·s·t`.
    StraightLine {
        origin: [f64; 3],
        /// Unit direction of travel.
        direction: [f64; 3],
        /// Ground speed s (m/s).
        speed: f64,
    },
    /// Advance along +x at `axis_speed` with lateral `A·sin(ω_p t)` in y.
    Sinusoid {
        origin: [f64; 3],
        axis_speed: f64,
        amplitude: f64,
        angular_rate: f64,
    },
    /// Horizontal circle of radius R about `center` plus a constant climb.
    SpiralLine {
        center: [f64; 2],
        radius: f64,
        angular_rate: f64,
        phase: f64,
        start_z: f64,
        vertical_rate: f64,
    },
}

impl TargetPattern {
    /// A straight-line run along +x through the middle of the area.
    pub fn straight_line(speed: f64) -> Self {
        Self::StraightLine {
            origin: [30.0, 100.0, 100.0],
            direction: [1.0, 0.0, 0.0],
            speed,
        }
    }

    /// A sinusoidal sweep along +x through the middle of the area.
    pub fn sinusoid(axis_speed: f64) -> Self {
        Self::Sinusoid {
            origin: [30.0, 100.0, 100.0],
            axis_speed,
            amplitude: 20.0,
            angular_rate: 0.05,
        }
    }

    /// A gentle climb around the area center.
    pub fn spiral_line(tangential_speed: f64) -> Self {
        let radius = 40.0;
        Self::SpiralLine {
            center: [100.0, 100.0],
            radius,
            angular_rate: tangential_speed / radius,
            phase: 0.0,
            start_z: 60.0,
            vertical_rate: 0.1,
        }
    }

    /// Short machine-readable name of the pattern family.
    pub fn name(&self) -> &'static str {
        match self {
            Self::StraightLine { .. } => "straight-line",
            Self::Sinusoid { .. } => "sinusoid",
            Self::SpiralLine { .. } => "spiral-line",
        }
    }
}

/// Target position at time `t ≥ 0` seconds. Positions are not clamped to the
/// experiment box; choose pattern parameters so the target stays inside for
/// the intended horizon.
pub fn target_position(pattern: &TargetPattern, t: f64) -> [f64; 3] {
    match *pattern {
        TargetPattern::StraightLine {
            origin,
            direction,
            speed,
        } => [
            origin[0] + direction[0] * speed * t,
            origin[1] + direction[1] * speed * t,
            origin[2] + direction[2] * speed * t,
        ],
        TargetPattern::Sinusoid {
            origin,
            axis_speed,
            amplitude,
            angular_rate,
        } => [
            origin[0] + axis_speed * t,
            origin[1] + amplitude * (angular_rate * t).sin(),
            origin[2],
        ],
        TargetPattern::SpiralLine {
            center,
            radius,
            angular_rate,
            phase,
            start_z,
            vertical_rate,
        } => {
            let a = angular_rate * t + phase;
            [
                center[0] + radius * a.cos(),
                center[1] + radius * a.sin(),
                start_z + vertical_rate * t,
            ]
        }
    }
}

/// Target velocity at time `t`, by exact differentiation of the pattern.
pub fn target_velocity(pattern: &TargetPattern, t: f64) -> [f64; 3] {
    match *pattern {
        TargetPattern::StraightLine {
            direction, speed, ..
        } => [
            direction[0] * speed,
            direction[1] * speed,
            direction[2] * speed,
        ],
        TargetPattern::Sinusoid {
            axis_speed,
            amplitude,
            angular_rate,
            ..
        } => [
            axis_speed,
            amplitude * angular_rate * (angular_rate * t).cos(),
            0.0,
        ],
        TargetPattern::SpiralLine {
            radius,
            angular_rate,
            phase,
            vertical_rate,
            ..
        } => {
            let a = angular_rate * t + phase;
            [
                -radius * angular_rate * a.sin(),
                radius * angular_rate * a.cos(),
                vertical_rate,
            ]
        }
    }
}

/// What the team is asked to do this episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task")]
pub enum TaskKind {
    /// Drain a set of anchored sensor nodes.
    DataCollection { nodes: Vec<SensorNode> },
    /// Keep a moving target within detection range.
    TargetTracking { pattern: TargetPattern },
}

/// Full task configuration: the task itself, team size, horizon and control
/// interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskConfig {
    pub kind: TaskKind,
    /// Number of vehicles in the team.
    pub n_auvs: usize,
    /// Episode length in control steps.
    pub horizon: usize,
    /// Control interval (s).
    pub dt: f64,
}

impl TaskConfig {
    /// Validated constructor.
    pub fn new(kind: TaskKind, n_auvs: usize, horizon: usize, dt: f64) -> Result<Self> {
        if n_auvs < 1 {
            return Err(Error::Config("need at least one AUV".into()));
        }
        if horizon == 0 {
            return Err(Error::Config("episode horizon must be positive".into()));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Config(format!("control interval must be positive, got {dt}")));
        }
        if let TaskKind::DataCollection { nodes } = &kind {
            if nodes.is_empty() {
                return Err(Error::Config("data collection needs at least one node".into()));
            }
        }
        Ok(Self {
            kind,
            n_auvs,
            horizon,
            dt,
        })
    }

    /// Number of sensor nodes (zero for tracking tasks).
    pub fn node_count(&self) -> usize {
        match &self.kind {
            TaskKind::DataCollection { nodes } => nodes.len(),
            TaskKind::TargetTracking { .. } => 0,
        }
    }

    /// Whether this is a tracking task.
    pub fn is_tracking(&self) -> bool {
        matches!(self.kind, TaskKind::TargetTracking { .. })
    }
}
