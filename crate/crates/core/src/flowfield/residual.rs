//! Navier-Stokes and continuity residual operators.
//!
//! The flow network maps a dimensionless space-time query (x, y, t) to
//! (u, v, p). The momentum residual of the dimensionless system is
//!
//! ```text
//! r = St·∂U/∂t + (U·∇)U + Eu·∇p − (1/Re)·∇²U
//! ```
//!
//! and the continuity residual is ∇·U. Both are algebraic in the value /
//! first-derivative / second-derivative jet of the field, so they accept jets
//! from any source: the network (exact derivative propagation) or an analytic
//! field used as a test oracle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::Mlp;

use super::model::FlowQuery;

/// Dimensionless groups scaling the unsteady (St), pressure (Eu) and viscous
/// (1/Re) terms.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DimensionlessGroups {
    pub strouhal: f64,
    pub euler: f64,
    pub reynolds: f64,
}

impl Default for DimensionlessGroups {
    fn default() -> Self {
        Self {
            strouhal: 1.0,
            euler: 1.0,
            reynolds: 100.0,
        }
    }
}

impl DimensionlessGroups {
    pub fn new(strouhal: f64, euler: f64, reynolds: f64) -> Result<Self> {
        if !(reynolds > 0.0) {
            return Err(Error::Domain(format!("Re must be positive, got {reynolds}")));
        }
        if !(strouhal >= 0.0) || !(euler >= 0.0) {
            return Err(Error::Domain(format!(
                "St and Eu must be non-negative, got St={strouhal}, Eu={euler}"
            )));
        }
        Ok(Self {
            strouhal,
            euler,
            reynolds,
        })
    }

    /// Steady variant: no unsteady term (St = 0).
    pub fn steady(euler: f64, reynolds: f64) -> Result<Self> {
        Self::new(0.0, euler, reynolds)
    }
}

/// Value and exact input derivatives of a 2-D unsteady field at one point.
///
/// Rows index the outputs (u, v, p), columns the inputs (x, y, t); `second`
/// holds per-coordinate (unmixed) second derivatives.
#[derive(Debug, Clone, Copy)]
pub struct PointJet {
    pub value: [f64; 3],
    pub jacobian: [[f64; 3]; 3],
    pub second: [[f64; 3]; 3],
}

/// A field with analytically known derivatives, used as a residual oracle.
pub trait DifferentiableField {
    fn jet(&self, x: f64, y: f64, t: f64) -> PointJet;
}

/// Momentum residuals (r_u, r_v) from a point jet.
pub fn momentum_residual_from_jet(j: &PointJet, g: &DimensionlessGroups) -> [f64; 2] {
    let (u, v) = (j.value[0], j.value[1]);
    let inv_re = 1.0 / g.reynolds;
    let mut r = [0.0; 2];
    for (i, ri) in r.iter_mut().enumerate() {
        *ri = g.strouhal * j.jacobian[i][2]
            + u * j.jacobian[i][0]
            + v * j.jacobian[i][1]
            + g.euler * j.jacobian[2][i]
            - inv_re * (j.second[i][0] + j.second[i][1]);
    }
    r
}

/// Velocity divergence ∇·U from a point jet.
pub fn divergence_from_jet(j: &PointJet) -> f64 {
    j.jacobian[0][0] + j.jacobian[1][1]
}

fn point_jet(net: &Mlp, q: &FlowQuery) -> Result<PointJet> {
    if net.input_dim() != 3 || net.output_dim() != 3 {
        return Err(Error::DimensionMismatch(format!(
            "flow net must map 3 inputs to 3 outputs, got {} -> {}",
            net.input_dim(),
            net.output_dim()
        )));
    }
    let value_v = net.forward(&[q.x, q.y, q.t])?;
    let der = net.input_derivatives(&[q.x, q.y, q.t])?;
    let mut value = [0.0; 3];
    let mut jacobian = [[0.0; 3]; 3];
    let mut second = [[0.0; 3]; 3];
    for i in 0..3 {
        value[i] = value_v[i];
        for j in 0..3 {
            jacobian[i][j] = der.jacobian[(i, j)];
            second[i][j] = der.second[(i, j)];
        }
    }
    Ok(PointJet {
        value,
        jacobian,
        second,
    })
}

/// Momentum residual of the network field at one query.
pub fn ns_residual(net: &Mlp, q: &FlowQuery, g: &DimensionlessGroups) -> Result<[f64; 2]> {
    Ok(momentum_residual_from_jet(&point_jet(net, q)?, g))
}

/// Continuity residual (velocity divergence) of the network field at one query.
pub fn continuity_residual(net: &Mlp, q: &FlowQuery) -> Result<f64> {
    Ok(divergence_from_jet(&point_jet(net, q)?))
}

/// The 2-D Taylor-Green vortex, an exact unsteady Navier-Stokes solution
/// (with St = 1, Eu = 1):
///
/// ```text
/// u = −cos x sin y · e^{−2t/Re}
/// v =  sin x cos y · e^{−2t/Re}
/// p = −¼ (cos 2x + cos 2y) · e^{−4t/Re}
/// ```
pub struct TaylorGreen {
    pub reynolds: f64,
}

impl DifferentiableField for TaylorGreen {
    fn jet(&self, x: f64, y: f64, t: f64) -> PointJet {
        let re = self.reynolds;
        let e = (-2.0 * t / re).exp();
        let f = (-4.0 * t / re).exp();
        let (sx, cx) = x.sin_cos();
        let (sy, cy) = y.sin_cos();
        let u = -cx * sy * e;
        let v = sx * cy * e;
        let p = -0.25 * ((2.0 * x).cos() + (2.0 * y).cos()) * f;
        PointJet {
            value: [u, v, p],
            jacobian: [
                [sx * sy * e, -cx * cy * e, -2.0 / re * u],
                [cx * cy * e, -sx * sy * e, -2.0 / re * v],
                [0.5 * (2.0 * x).sin() * f, 0.5 * (2.0 * y).sin() * f, -4.0 / re * p],
            ],
            second: [
                [-u, -u, 4.0 / (re * re) * u],
                [-v, -v, 4.0 / (re * re) * v],
                [(2.0 * x).cos() * f, (2.0 * y).cos() * f, 16.0 / (re * re) * p],
            ],
        }
    }
}

#[cfg(test)]
pub(crate) mod test_fields {
    use super::*;

    /// Uniform velocity, constant pressure.
    pub struct Uniform(pub [f64; 2]);

    impl DifferentiableField for Uniform {
        fn jet(&self, _x: f64, _y: f64, _t: f64) -> PointJet {
            PointJet {
                value: [self.0[0], self.0[1], 0.0],
                jacobian: [[0.0; 3]; 3],
                second: [[0.0; 3]; 3],
            }
        }
    }

    /// v⃗ = (x, 0), p = 0: divergence exactly 1.
    pub struct LinearX;

    impl DifferentiableField for LinearX {
        fn jet(&self, x: f64, _y: f64, _t: f64) -> PointJet {
            let mut jacobian = [[0.0; 3]; 3];
            jacobian[0][0] = 1.0;
            PointJet {
                value: [x, 0.0, 0.0],
                jacobian,
                second: [[0.0; 3]; 3],
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::test_fields::*;
    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_net_has_zero_residuals() {
        let net = Mlp::zeros(&[3, 8, 3]).unwrap();
        let g = DimensionlessGroups::default();
        let q = FlowQuery {
            x: 0.3,
            y: -0.2,
            t: 0.1,
        };
        assert_eq!(ns_residual(&net, &q, &g).unwrap(), [0.0, 0.0]);
        assert_eq!(continuity_residual(&net, &q).unwrap(), 0.0);
    }

    #[test]
    fn uniform_flow_is_residual_free() {
        let g = DimensionlessGroups::default();
        let j = Uniform([1.3, -0.4]).jet(0.1, 0.2, 0.3);
        assert_eq!(momentum_residual_from_jet(&j, &g), [0.0, 0.0]);
        assert_eq!(divergence_from_jet(&j), 0.0);
    }

    #[test]
    fn linear_field_has_unit_divergence() {
        let j = LinearX.jet(0.7, -0.1, 0.0);
        assert!((divergence_from_jet(&j) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn taylor_green_satisfies_navier_stokes() {
        let g = DimensionlessGroups::new(1.0, 1.0, 100.0).unwrap();
        let tg = TaylorGreen { reynolds: 100.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..1000 {
            let x = rng.gen_range(-3.0..3.0);
            let y = rng.gen_range(-3.0..3.0);
            let t = rng.gen_range(0.0..5.0);
            let j = tg.jet(x, y, t);
            let r = momentum_residual_from_jet(&j, &g);
            let rn = (r[0] * r[0] + r[1] * r[1]).sqrt();
            assert!(rn < 1e-3, "momentum residual {rn} at ({x}, {y}, {t})");
            assert!(divergence_from_jet(&j).abs() < 1e-3);
        }
    }

    #[test]
    fn taylor_green_jet_matches_finite_differences() {
        // Guard the oracle itself: analytic derivatives vs central differences.
        let tg = TaylorGreen { reynolds: 50.0 };
        let h = 1e-5;
        let (x, y, t) = (0.37, -1.1, 0.6);
        let j = tg.jet(x, y, t);
        let val = |x: f64, y: f64, t: f64| tg.jet(x, y, t).value;
        for i in 0..3 {
            let args = [(x + h, y, t), (x - h, y, t)];
            let fd = (val(args[0].0, args[0].1, args[0].2)[i]
                - val(args[1].0, args[1].1, args[1].2)[i])
                / (2.0 * h);
            assert!((j.jacobian[i][0] - fd).abs() < 1e-8);
            let fdy = (val(x, y + h, t)[i] - val(x, y - h, t)[i]) / (2.0 * h);
            assert!((j.jacobian[i][1] - fdy).abs() < 1e-8);
            let fdt = (val(x, y, t + h)[i] - val(x, y, t - h)[i]) / (2.0 * h);
            assert!((j.jacobian[i][2] - fdt).abs() < 1e-8);
            let f0 = val(x, y, t)[i];
            let sxx = (val(x + h, y, t)[i] - 2.0 * f0 + val(x - h, y, t)[i]) / (h * h);
            assert!((j.second[i][0] - sxx).abs() < 1e-4);
        }
    }

    #[test]
    fn viscous_term_scales_inversely_with_reynolds() {
        // On a fixed field, the difference of residuals at Re and 2Re is the
        // viscous term halved: r(Re) − r(2Re) = −(1/Re − 1/(2Re))·∇²U.
        let tg = TaylorGreen { reynolds: 100.0 };
        let j = tg.jet(0.4, 0.9, 0.2);
        let g1 = DimensionlessGroups::new(1.0, 1.0, 50.0).unwrap();
        let g2 = DimensionlessGroups::new(1.0, 1.0, 100.0).unwrap();
        let r1 = momentum_residual_from_jet(&j, &g1);
        let r2 = momentum_residual_from_jet(&j, &g2);
        for i in 0..2 {
            let lap = j.second[i][0] + j.second[i][1];
            let want = -(1.0 / 50.0 - 1.0 / 100.0) * lap;
            assert!((r1[i] - r2[i] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_groups_rejected() {
        assert!(DimensionlessGroups::new(1.0, 1.0, 0.0).is_err());
        assert!(DimensionlessGroups::new(-0.1, 1.0, 10.0).is_err());
        assert!(DimensionlessGroups::steady(1.0, 100.0).is_ok());
    }
}
