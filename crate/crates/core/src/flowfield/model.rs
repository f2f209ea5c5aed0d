//! Trained flow model: domain box, dimensionless scaling, sampling, and
//! persistence (network checkpoint plus JSON sidecar).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::Mlp;

use super::loss::LossWeights;
use super::residual::DimensionlessGroups;

/// Dimensionless space-time query into the flow model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowQuery {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

/// A flow sample: dimensionless planar velocity and pressure. `clamped` is
/// set when the query was outside the training box and had to be projected
/// onto it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowSample {
    pub velocity: [f64; 2],
    pub pressure: f64,
    pub clamped: bool,
}

/// Axis-aligned space-time box the model was trained on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub x: (f64, f64),
    pub y: (f64, f64),
    pub t: (f64, f64),
}

impl Domain {
    pub fn new(x: (f64, f64), y: (f64, f64), t: (f64, f64)) -> Result<Self> {
        for (name, (lo, hi)) in [("x", x), ("y", y), ("t", t)] {
            if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::Domain(format!(
                    "invalid {name} range ({lo}, {hi})"
                )));
            }
        }
        Ok(Self { x, y, t })
    }

    pub fn contains(&self, q: &FlowQuery) -> bool {
        let inside = |v: f64, (lo, hi): (f64, f64)| v >= lo && v <= hi;
        inside(q.x, self.x) && inside(q.y, self.y) && inside(q.t, self.t)
    }

    /// Project a query onto the box; the flag reports whether anything moved.
    pub fn clamp(&self, q: &FlowQuery) -> (FlowQuery, bool) {
        let c = FlowQuery {
            x: q.x.clamp(self.x.0, self.x.1),
            y: q.y.clamp(self.y.0, self.y.1),
            t: q.t.clamp(self.t.0, self.t.1),
        };
        let moved = c != *q;
        (c, moved)
    }
}

/// Sidecar metadata persisted next to the network checkpoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowMeta {
    pub domain: Domain,
    pub groups: DimensionlessGroups,
    pub weights: LossWeights,
    /// Final per-term losses of the training run, if this model was trained
    /// (as opposed to constructed directly).
    pub final_losses: Option<FinalLosses>,
    /// Meters per dimensionless length unit.
    pub length_scale: f64,
    /// m/s per dimensionless velocity unit.
    pub velocity_scale: f64,
}

/// Unweighted per-term losses at the end of training.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FinalLosses {
    pub navier_stokes: f64,
    pub continuity: f64,
    pub boundary: f64,
    pub initial: f64,
    pub total: f64,
}

/// A trained (or otherwise constructed) flow network with its domain and
/// physical scaling. Immutable after construction; sampling never mutates.
#[derive(Debug, Clone)]
pub struct FlowModel {
    net: Mlp,
    meta: FlowMeta,
}

const NET_FILE: &str = "flow_net.json";
const META_FILE: &str = "flow_meta.json";

impl FlowModel {
    pub fn new(net: Mlp, meta: FlowMeta) -> Result<Self> {
        if net.input_dim() != 3 || net.output_dim() != 3 {
            return Err(Error::DimensionMismatch(format!(
                "flow net must map (x, y, t) to (u, v, p); got {} -> {}",
                net.input_dim(),
                net.output_dim()
            )));
        }
        if !(meta.length_scale > 0.0) || !(meta.velocity_scale >= 0.0) {
            return Err(Error::Domain(format!(
                "invalid scales: length {}, velocity {}",
                meta.length_scale, meta.velocity_scale
            )));
        }
        Ok(Self { net, meta })
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn meta(&self) -> &FlowMeta {
        &self.meta
    }

    pub fn domain(&self) -> &Domain {
        &self.meta.domain
    }

    /// Sample the flow at a query. Queries outside the training box are
    /// clamped onto it and the sample is flagged.
    pub fn sample(&self, q: &FlowQuery) -> Result<FlowSample> {
        let (cq, clamped) = self.meta.domain.clamp(q);
        let out = self.net.forward(&[cq.x, cq.y, cq.t])?;
        if !out.iter().all(|v| v.is_finite()) {
            return Err(Error::Backend(format!(
                "non-finite flow sample at ({}, {}, {})",
                cq.x, cq.y, cq.t
            )));
        }
        Ok(FlowSample {
            velocity: [out[0], out[1]],
            pressure: out[2],
            clamped,
        })
    }

    /// Persist to `dir` as a network checkpoint plus a JSON sidecar.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.net.save(&dir.join(NET_FILE))?;
        let file = std::fs::File::create(dir.join(META_FILE))?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), &self.meta)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let net = Mlp::load(&dir.join(NET_FILE))?;
        let file = std::fs::File::open(dir.join(META_FILE))?;
        let meta: FlowMeta = serde_json::from_reader(std::io::BufReader::new(file))?;
        Self::new(net, meta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_model() -> FlowModel {
        FlowModel::new(
            Mlp::zeros(&[3, 4, 3]).unwrap(),
            FlowMeta {
                domain: Domain::new((-1.0, 1.0), (-1.0, 1.0), (0.0, 2.0)).unwrap(),
                groups: DimensionlessGroups::default(),
                weights: LossWeights::default(),
                final_losses: None,
                length_scale: 5.0,
                velocity_scale: 0.4,
            },
        )
        .unwrap()
    }

    #[test]
    fn zero_net_samples_zero() {
        let m = zero_model();
        let s = m
            .sample(&FlowQuery {
                x: 0.1,
                y: 0.2,
                t: 1.0,
            })
            .unwrap();
        assert_eq!(s.velocity, [0.0, 0.0]);
        assert_eq!(s.pressure, 0.0);
        assert!(!s.clamped);
    }

    #[test]
    fn outside_queries_are_clamped_and_flagged() {
        let m = zero_model();
        let s = m
            .sample(&FlowQuery {
                x: 5.0,
                y: 0.0,
                t: -1.0,
            })
            .unwrap();
        assert!(s.clamped);
        // Clamped query equals the sample at the projected point.
        let s2 = m
            .sample(&FlowQuery {
                x: 1.0,
                y: 0.0,
                t: 0.0,
            })
            .unwrap();
        assert_eq!(s.velocity, s2.velocity);
    }

    #[test]
    fn sampling_is_deterministic() {
        let m = zero_model();
        let q = FlowQuery {
            x: 0.5,
            y: -0.5,
            t: 0.7,
        };
        assert_eq!(m.sample(&q).unwrap(), m.sample(&q).unwrap());
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = zero_model();
        m.save(dir.path()).unwrap();
        let back = FlowModel::load(dir.path()).unwrap();
        assert_eq!(back.net().params(), m.net().params());
        assert_eq!(back.domain(), m.domain());
        assert_eq!(back.meta().length_scale, m.meta().length_scale);
    }

    #[test]
    fn invalid_domain_rejected() {
        assert!(Domain::new((1.0, -1.0), (0.0, 1.0), (0.0, 0.0)).is_err());
        assert!(Domain::new((0.0, 1.0), (0.0, f64::NAN), (0.0, 0.0)).is_err());
    }
}
