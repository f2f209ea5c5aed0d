//! Flow features: body-frame probe samples fed into the RL observation.

use crate::error::{Error, Result};

use super::model::{FlowModel, FlowQuery};

/// Probe positions in the vehicle body frame (x forward, y port), in the
/// flow model's dimensionless length units.
#[derive(Debug, Clone)]
pub struct ProbeLayout {
    pub offsets: Vec<[f64; 2]>,
}

impl ProbeLayout {
    /// Standard layout for a vehicle of dimensionless length `l`: one probe
    /// at the nose (l/2, 0) followed by 8 probes on a ring of radius 1.2·l/2.
    pub fn standard(l: f64) -> Self {
        let mut offsets = vec![[l / 2.0, 0.0]];
        let r = 1.2 * l / 2.0;
        for k in 0..8 {
            let ang = 2.0 * std::f64::consts::PI * k as f64 / 8.0;
            offsets.push([r * ang.cos(), r * ang.sin()]);
        }
        Self { offsets }
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// Features per probe: body-frame (u, v) and pressure.
    pub const COMPONENTS: usize = 3;

    pub fn feature_len(&self) -> usize {
        self.len() * Self::COMPONENTS
    }
}

/// Sample the flow at every probe around a vehicle at plane `position` with
/// heading `yaw`, and express the sampled velocities in the body frame.
/// Output layout: [u, v, p] per probe, probes in layout order.
pub fn flow_features(
    model: &FlowModel,
    position: [f64; 2],
    yaw: f64,
    t: f64,
    layout: &ProbeLayout,
) -> Result<Vec<f64>> {
    if layout.is_empty() {
        return Err(Error::Config("probe layout is empty".into()));
    }
    let (s, c) = yaw.sin_cos();
    let mut out = Vec::with_capacity(layout.feature_len());
    for off in &layout.offsets {
        // Body -> plane rotation.
        let wx = position[0] + c * off[0] - s * off[1];
        let wy = position[1] + s * off[0] + c * off[1];
        let sample = model.sample(&FlowQuery { x: wx, y: wy, t })?;
        let [u, v] = sample.velocity;
        // Plane -> body rotation (by -yaw).
        out.push(c * u + s * v);
        out.push(-s * u + c * v);
        out.push(sample.pressure);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flowfield::loss::LossWeights;
    use crate::flowfield::model::{Domain, FlowMeta};
    use crate::flowfield::residual::DimensionlessGroups;
    use crate::numcore::Mlp;

    fn constant_model(u: f64, v: f64, p: f64) -> FlowModel {
        // Single linear layer with zero weights: output = bias.
        let mut net = Mlp::zeros(&[3, 3]).unwrap();
        let mut params = net.params();
        // Layout: 9 weights then 3 biases.
        params[9] = u;
        params[10] = v;
        params[11] = p;
        net.set_params(&params).unwrap();
        FlowModel::new(
            net,
            FlowMeta {
                domain: Domain::new((-10.0, 10.0), (-10.0, 10.0), (0.0, 0.0)).unwrap(),
                groups: DimensionlessGroups::default(),
                weights: LossWeights::default(),
                final_losses: None,
                length_scale: 1.0,
                velocity_scale: 1.0,
            },
        )
        .unwrap()
    }

    #[test]
    fn standard_layout_gives_27_features() {
        let layout = ProbeLayout::standard(1.0);
        assert_eq!(layout.len(), 9);
        assert_eq!(layout.feature_len(), 27);
        let model = constant_model(0.0, 0.0, 0.0);
        let f = flow_features(&model, [0.0, 0.0], 0.3, 0.0, &layout).unwrap();
        assert_eq!(f.len(), 27);
        assert!(f.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn uniform_flow_rotates_into_body_frame() {
        let (u, v) = (0.8, -0.3);
        let model = constant_model(u, v, 0.25);
        let layout = ProbeLayout::standard(1.0);
        let yaw = std::f64::consts::FRAC_PI_2;
        let f = flow_features(&model, [1.0, 2.0], yaw, 0.0, &layout).unwrap();
        // At yaw 90°, body-frame velocity is (v, -u) at every probe.
        for probe in f.chunks(3) {
            assert!((probe[0] - v).abs() < 1e-12, "{probe:?}");
            assert!((probe[1] + u).abs() < 1e-12, "{probe:?}");
            assert!((probe[2] - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn features_are_deterministic() {
        let model = constant_model(0.1, 0.2, 0.3);
        let layout = ProbeLayout::standard(0.05);
        let a = flow_features(&model, [0.4, -0.2], 1.1, 0.0, &layout).unwrap();
        let b = flow_features(&model, [0.4, -0.2], 1.1, 0.0, &layout).unwrap();
        assert_eq!(a, b);
    }
}
