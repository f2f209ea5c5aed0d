//! Assembly of the ambient water velocity the vehicles swim through: the
//! trained flow network mapped into world coordinates, optionally layered
//! with wave-orbital and shallow-water-current disturbances for the complex
//! sea state.

use super::kinematics::WORLD_SIZE;
use crate::flowfield::{FlowModel, FlowQuery, StokesWaveParams, SweGrid};
use crate::{Error, Result};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Similarity transform from world metres to the dimensionless plane the
/// flow network was trained on: `plane = offset + scale·world`. The single
/// scale for both axes keeps the map angle-preserving, so body-frame
/// rotations commute with it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldPlaneMap {
    /// Plane units per metre.
    pub scale: f64,
    /// Plane coordinates of the world origin.
    pub offset: [f64; 2],
}

impl Default for WorldPlaneMap {
    /// Places the 200 m × 200 m horizontal area over the wake half of the
    /// standard channel: x ∈ [0.5, 2.5], y ∈ [−1, 1].
    fn default() -> Self {
        Self {
            scale: 1.0 / WORLD_SIZE * 2.0,
            offset: [0.5, -1.0],
        }
    }
}

impl WorldPlaneMap {
    /// Map a world horizontal position (m) to plane coordinates.
    pub fn to_plane(&self, world_xy: [f64; 2]) -> [f64; 2] {
        [
            self.offset[0] + self.scale * world_xy[0],
            self.offset[1] + self.scale * world_xy[1],
        ]
    }
}

/// A shallow-water current field frozen at a fixed instant: a deterministic
/// simulation is run once at construction and then queried bilinearly. Keeps
/// environment stepping cheap and bit-reproducible.
#[derive(Debug, Clone)]
pub struct FrozenCurrent {
    grid: SweGrid,
    gain: f64,
}

impl FrozenCurrent {
    /// Number of solver steps taken before freezing.
    const SPINUP_STEPS: usize = 12;

    /// Build the standard frozen current: random smooth surface bumps
    /// relaxing under gravity for a short spin-up, scaled by `gain`.
    pub fn standard(seed: u64, gain: f64) -> Result<Self> {
        if !(gain >= 0.0) || !gain.is_finite() {
            return Err(Error::Config(format!(
                "current gain must be non-negative, got {gain}"
            )));
        }
        let mut grid = SweGrid::flat(50, 50, WORLD_SIZE / 50.0, 10.0, 9.81)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..3 {
            let cx = rng.gen_range(40.0..160.0);
            let cy = rng.gen_range(40.0..160.0);
            let radius = rng.gen_range(15.0..30.0);
            let height = rng.gen_range(1.0..2.0);
            grid.add_bump(cx, cy, radius, height)?;
        }
        for _ in 0..Self::SPINUP_STEPS {
            let dt = grid.max_dt();
            grid.step(dt)?;
        }
        Ok(Self { grid, gain })
    }

    /// Horizontal current (m/s) at a world position.
    pub fn velocity_at(&self, x: f64, y: f64) -> [f64; 2] {
        let [u, v] = self.grid.current_at(x, y);
        [self.gain * u, self.gain * v]
    }
}

/// Serializable description of the disturbance layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct DisturbanceConfig {
    /// Second-order Stokes wave travelling along +x, if present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wave: Option<WaveConfig>,
    /// Frozen shallow-water current, if present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub current: Option<CurrentConfig>,
}

/// Parameters of the wave disturbance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveConfig {
    /// Wave amplitude (m).
    pub amplitude: f64,
    /// Wavelength (m).
    pub wavelength: f64,
}

impl Default for WaveConfig {
    fn default() -> Self {
        Self {
            amplitude: 1.0,
            wavelength: 60.0,
        }
    }
}

/// Parameters of the frozen-current disturbance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurrentConfig {
    /// Seed of the deterministic spin-up simulation.
    pub seed: u64,
    /// Multiplier applied to the simulated current.
    pub gain: f64,
}

impl Default for CurrentConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            gain: 0.15,
        }
    }
}

/// The full ambient velocity field: trained flow network plus optional
/// disturbance layers. Immutable after construction and cheap to query.
#[derive(Debug, Clone, Default)]
pub struct AmbientField {
    flow: Option<Arc<FlowModel>>,
    map: WorldPlaneMap,
    wave: Option<StokesWaveParams>,
    current: Option<FrozenCurrent>,
}

impl AmbientField {
    /// Still water: the traditional-baseline environment.
    pub fn still() -> Self {
        Self::default()
    }

    /// Ambient field driven by a trained flow network (no disturbances).
    pub fn from_flow(flow: Arc<FlowModel>) -> Self {
        Self {
            flow: Some(flow),
            ..Self::default()
        }
    }

    /// Add disturbance layers described by `cfg`. The standing water depth
    /// for the wave model is the experiment-box height.
    pub fn with_disturbances(mut self, cfg: &DisturbanceConfig) -> Result<Self> {
        if let Some(w) = &cfg.wave {
            self.wave = Some(StokesWaveParams::from_wavelength(
                w.amplitude,
                w.wavelength,
                WORLD_SIZE,
                9.81,
            )?);
        }
        if let Some(c) = &cfg.current {
            self.current = Some(FrozenCurrent::standard(c.seed, c.gain)?);
        }
        Ok(self)
    }

    /// The trained flow network, if any.
    pub fn flow(&self) -> Option<&Arc<FlowModel>> {
        self.flow.as_ref()
    }

    /// The world-to-plane map used for flow queries.
    pub fn map(&self) -> &WorldPlaneMap {
        &self.map
    }

    /// `true` when every query returns exactly zero.
    pub fn is_still(&self) -> bool {
        self.flow.is_none() && self.wave.is_none() && self.current.is_none()
    }

    /// Ambient water velocity (m/s) at world position `p` and time `t`.
    /// The water surface sits at the top of the experiment box.
    pub fn velocity(&self, p: [f64; 3], t: f64) -> Result<[f64; 3]> {
        let mut v = [0.0, 0.0, 0.0];
        if let Some(flow) = &self.flow {
            let xy = self.map.to_plane([p[0], p[1]]);
            let sample = flow.sample(&FlowQuery {
                x: xy[0],
                y: xy[1],
                t,
            })?;
            let s = flow.meta().velocity_scale;
            v[0] += s * sample.velocity[0];
            v[1] += s * sample.velocity[1];
        }
        if let Some(wave) = &self.wave {
            let depth = (WORLD_SIZE - p[2]).max(0.0);
            let [u, w] = wave.velocity(p[0], depth, t);
            v[0] += u;
            v[2] += w;
        }
        if let Some(current) = &self.current {
            let [u, w] = current.velocity_at(p[0], p[1]);
            v[0] += u;
            v[1] += w;
        }
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flowfield::{
        DimensionlessGroups, Domain, FlowMeta, FlowModel, LossWeights,
    };
    use crate::numcore::Mlp;

    fn uniform_flow_model(u: f64, v: f64) -> FlowModel {
        // A zero network with output biases set produces a constant field.
        let mut net = Mlp::zeros(&[3, 3]).unwrap();
        let mut params = net.params();
        params[9] = u;
        params[10] = v;
        net.set_params(&params).unwrap();
        FlowModel::new(
            net,
            FlowMeta {
                domain: Domain::new((-1.5, 2.5), (-1.0, 1.0), (0.0, 0.0)).unwrap(),
                groups: DimensionlessGroups::steady(1.0, 100.0).unwrap(),
                weights: LossWeights::default(),
                final_losses: None,
                length_scale: 100.0,
                velocity_scale: 0.35,
            },
        )
        .unwrap()
    }

    #[test]
    fn still_water_is_exactly_zero() {
        let f = AmbientField::still();
        assert!(f.is_still());
        let v = f.velocity([10.0, 20.0, 30.0], 5.0).unwrap();
        assert_eq!(v, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn world_box_maps_inside_the_channel_domain() {
        let m = WorldPlaneMap::default();
        for (wx, wy) in [(0.0, 0.0), (200.0, 200.0), (0.0, 200.0), (137.0, 52.0)] {
            let p = m.to_plane([wx, wy]);
            assert!((0.5..=2.5).contains(&p[0]), "{p:?}");
            assert!((-1.0..=1.0).contains(&p[1]), "{p:?}");
        }
    }

    #[test]
    fn flow_velocity_is_scaled_to_metres_per_second() {
        let f = AmbientField::from_flow(Arc::new(uniform_flow_model(1.0, -0.5)));
        let v = f.velocity([100.0, 100.0, 50.0], 0.0).unwrap();
        assert!((v[0] - 0.35).abs() < 1e-12);
        assert!((v[1] + 0.175).abs() < 1e-12);
        assert_eq!(v[2], 0.0);
    }

    #[test]
    fn wave_layer_decays_with_depth() {
        let f = AmbientField::still()
            .with_disturbances(&DisturbanceConfig {
                wave: Some(WaveConfig::default()),
                current: None,
            })
            .unwrap();
        let near_surface = f.velocity([50.0, 50.0, 199.0], 3.0).unwrap();
        let deep = f.velocity([50.0, 50.0, 20.0], 3.0).unwrap();
        let mag = |v: [f64; 3]| (v[0] * v[0] + v[2] * v[2]).sqrt();
        assert!(mag(near_surface) > 10.0 * mag(deep).max(1e-12), "{near_surface:?} {deep:?}");
        // The wave never moves water across the horizontal y axis.
        assert_eq!(near_surface[1], 0.0);
    }

    #[test]
    fn frozen_current_is_deterministic_and_bounded() {
        let a = FrozenCurrent::standard(7, 0.15).unwrap();
        let b = FrozenCurrent::standard(7, 0.15).unwrap();
        let mut max_mag: f64 = 0.0;
        for i in 0..20 {
            for j in 0..20 {
                let (x, y) = (i as f64 * 10.0, j as f64 * 10.0);
                let va = a.velocity_at(x, y);
                let vb = b.velocity_at(x, y);
                assert_eq!(va, vb);
                max_mag = max_mag.max((va[0] * va[0] + va[1] * va[1]).sqrt());
            }
        }
        assert!(max_mag > 0.0, "spin-up produced no motion");
        assert!(max_mag < 1.0, "current unreasonably fast: {max_mag} m/s");
    }

    #[test]
    fn layers_superpose() {
        let flow = Arc::new(uniform_flow_model(1.0, 0.0));
        let base = AmbientField::from_flow(flow.clone());
        let layered = AmbientField::from_flow(flow)
            .with_disturbances(&DisturbanceConfig {
                wave: None,
                current: Some(CurrentConfig::default()),
            })
            .unwrap();
        let p = [80.0, 120.0, 100.0];
        let v0 = base.velocity(p, 0.0).unwrap();
        let v1 = layered.velocity(p, 0.0).unwrap();
        let cur = FrozenCurrent::standard(7, 0.15).unwrap().velocity_at(p[0], p[1]);
        assert!((v1[0] - (v0[0] + cur[0])).abs() < 1e-12);
        assert!((v1[1] - (v0[1] + cur[1])).abs() < 1e-12);
    }
}
