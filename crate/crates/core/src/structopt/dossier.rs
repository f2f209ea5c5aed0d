//! The design dossier: everything the structure-optimization pipeline is
//! given about the incumbent hull — its geometry, how the retrained policy
//! performed, and what the reconstructed flow looks like around it.

use crate::env::EpisodeMetrics;
use crate::flowfield::{continuity_rms, FlowModel, FlowQuery};
use crate::hull::HullShape;
use crate::rl::TrainRecord;
use crate::{Error, Result};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

/// Final-window means of an RL learning curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSummary {
    /// Episodes averaged (the tail of the curve).
    pub window: usize,
    pub mean_cr: f64,
    pub mean_sdr: f64,
    pub mean_ec: f64,
    pub mean_success: f64,
}

impl CurveSummary {
    /// Average the last `window` episodes of a learning curve (or the whole
    /// curve when it is shorter).
    pub fn from_records(curve: &[TrainRecord], window: usize) -> Result<Self> {
        if curve.is_empty() {
            return Err(Error::Contract("cannot summarize an empty curve".into()));
        }
        if window == 0 {
            return Err(Error::Config("summary window must be positive".into()));
        }
        let w = window.min(curve.len());
        let tail = &curve[curve.len() - w..];
        let n = w as f64;
        Ok(Self {
            window: w,
            mean_cr: tail.iter().map(|r| r.metrics.cumulative_reward).sum::<f64>() / n,
            mean_sdr: tail.iter().map(|r| r.metrics.sum_data_rate).sum::<f64>() / n,
            mean_ec: tail.iter().map(|r| r.metrics.energy_consumption).sum::<f64>() / n,
            mean_success: tail.iter().map(|r| r.metrics.success_rate).sum::<f64>() / n,
        })
    }

    /// The same means viewed as an episode-metrics record.
    pub fn as_metrics(&self) -> EpisodeMetrics {
        EpisodeMetrics {
            cumulative_reward: self.mean_cr,
            sum_data_rate: self.mean_sdr,
            energy_consumption: self.mean_ec,
            success_rate: self.mean_success,
        }
    }

    fn is_finite(&self) -> bool {
        self.mean_cr.is_finite()
            && self.mean_sdr.is_finite()
            && self.mean_ec.is_finite()
            && self.mean_success.is_finite()
    }
}

/// Flow-field characteristics around the hull, in plane (dimensionless)
/// units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowSummary {
    /// Mean speed on a ring offset from the hull surface.
    pub mean_speed_near_hull: f64,
    /// Maximum speed on that ring.
    pub max_speed_near_hull: f64,
    /// RMS continuity residual over a wake-region grid behind the hull.
    pub wake_residual_rms: f64,
}

impl FlowSummary {
    fn is_finite(&self) -> bool {
        self.mean_speed_near_hull.is_finite()
            && self.max_speed_near_hull.is_finite()
            && self.wake_residual_rms.is_finite()
    }
}

/// Summarize a reconstructed flow around a plane-scale hull: speeds on a
/// ring 1.3× the hull radius, and the continuity residual over a wake grid
/// one hull-length downstream. Deterministic (no sampling noise).
pub fn summarize_flow(model: &FlowModel, hull: &HullShape, n_ring: usize) -> Result<FlowSummary> {
    if n_ring == 0 {
        return Err(Error::Config("ring sample count must be positive".into()));
    }
    let t = model.domain().t.0;
    let mut mean = 0.0;
    let mut max: f64 = 0.0;
    for (x, y) in hull.boundary_points(n_ring)? {
        let q = FlowQuery {
            x: hull.cx + 1.3 * (x - hull.cx),
            y: hull.cy + 1.3 * (y - hull.cy),
            t,
        };
        let s = model.sample(&q)?;
        let speed = (s.velocity[0] * s.velocity[0] + s.velocity[1] * s.velocity[1]).sqrt();
        mean += speed / n_ring as f64;
        max = max.max(speed);
    }

    // Wake grid: one hull length downstream of the stern, within the hull's
    // width band, clipped to the model domain.
    let stern = hull.cx + hull.length / 2.0;
    let x_hi = (stern + hull.length).min(model.domain().x.1);
    let (nx, ny) = (12, 8);
    let mut pts = Array2::zeros((3, nx * ny));
    for i in 0..nx {
        for j in 0..ny {
            let c = i * ny + j;
            pts[(0, c)] = stern + (x_hi - stern) * (i as f64 + 0.5) / nx as f64;
            pts[(1, c)] = hull.cy - hull.width + 2.0 * hull.width * (j as f64 + 0.5) / ny as f64;
            pts[(2, c)] = t;
        }
    }
    let wake = continuity_rms(model.net(), pts.view())?;
    Ok(FlowSummary {
        mean_speed_near_hull: mean,
        max_speed_near_hull: max,
        wake_residual_rms: wake,
    })
}

/// Everything submitted to the optimization pipeline for one generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignDossier {
    /// Incumbent hull (full scale, meters).
    pub hull: HullShape,
    /// Generation index of the incumbent, 1-based.
    pub generation: u32,
    /// Learning-curve summary of the retrained policy.
    pub curve: CurveSummary,
    /// Flow characteristics around the hull.
    pub flow: FlowSummary,
    /// Free-text optimization objectives.
    pub objectives: String,
}

impl DesignDossier {
    /// Enforce the dossier invariants: generation ≥ 1, all metrics finite.
    pub fn validate(&self) -> Result<()> {
        if self.generation == 0 {
            return Err(Error::Contract("generation index must be ≥ 1".into()));
        }
        if !self.curve.is_finite() {
            return Err(Error::Contract("curve summary has non-finite terms".into()));
        }
        if !self.flow.is_finite() {
            return Err(Error::Contract("flow summary has non-finite terms".into()));
        }
        if self.objectives.trim().is_empty() {
            return Err(Error::Contract("objectives text is empty".into()));
        }
        Ok(())
    }
}
