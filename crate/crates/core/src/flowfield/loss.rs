//! The composite physics-informed training objective
//!
//! ```text
//! L = α₁·L_N + α₂·L_C + α₃·L_B + α₄·L_I
//! ```
//!
//! where L_N is the mean squared momentum residual over interior collocation
//! points, L_C the mean squared continuity residual, and L_B / L_I the mean
//! squared mismatch against prescribed boundary / initial values. The exact
//! parameter gradient is assembled by seeding residual cotangents into the
//! jet reverse pass (interior terms) and the plain reverse pass (value
//! constraints).

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::{JetCotangent, Mlp};

use super::residual::DimensionlessGroups;

/// Non-negative weights (α₁ NS, α₂ continuity, α₃ boundary, α₄ initial);
/// defaults (1, 1, 10, 10).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LossWeights {
    pub navier_stokes: f64,
    pub continuity: f64,
    pub boundary: f64,
    pub initial: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            navier_stokes: 1.0,
            continuity: 1.0,
            boundary: 10.0,
            initial: 10.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.navier_stokes,
            self.continuity,
            self.boundary,
            self.initial,
        ];
        if all.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::Config(format!("negative loss weight in {self:?}")));
        }
        if !all.iter().any(|w| *w > 0.0) {
            return Err(Error::Config("all loss weights are zero".into()));
        }
        Ok(())
    }
}

/// Points with prescribed values on a subset of the (u, v, p) components.
///
/// `points` is 3×N with rows (x, y, t); `targets` is 3×N with rows (u, v, p);
/// `mask` is 3×N of {0, 1} selecting which components are prescribed.
#[derive(Debug, Clone)]
pub struct ValueConstraints {
    pub points: Array2<f64>,
    pub targets: Array2<f64>,
    pub mask: Array2<f64>,
}

impl ValueConstraints {
    pub fn new(points: Array2<f64>, targets: Array2<f64>, mask: Array2<f64>) -> Result<Self> {
        let n = points.ncols();
        for (name, a) in [("points", &points), ("targets", &targets), ("mask", &mask)] {
            if a.nrows() != 3 || a.ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "{name} must be 3x{n}, got {}x{}",
                    a.nrows(),
                    a.ncols()
                )));
            }
        }
        if mask.iter().any(|m| *m != 0.0 && *m != 1.0) {
            return Err(Error::Config("constraint mask entries must be 0 or 1".into()));
        }
        Ok(Self {
            points,
            targets,
            mask,
        })
    }

    pub fn empty() -> Self {
        Self {
            points: Array2::zeros((3, 0)),
            targets: Array2::zeros((3, 0)),
            mask: Array2::zeros((3, 0)),
        }
    }

    pub fn len(&self) -> usize {
        self.points.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Concatenate several constraint sets.
    pub fn concat(sets: &[&ValueConstraints]) -> Self {
        let n: usize = sets.iter().map(|s| s.len()).sum();
        let mut points = Array2::zeros((3, n));
        let mut targets = Array2::zeros((3, n));
        let mut mask = Array2::zeros((3, n));
        let mut at = 0;
        for s in sets {
            let w = s.len();
            points
                .slice_mut(ndarray::s![.., at..at + w])
                .assign(&s.points);
            targets
                .slice_mut(ndarray::s![.., at..at + w])
                .assign(&s.targets);
            mask.slice_mut(ndarray::s![.., at..at + w]).assign(&s.mask);
            at += w;
        }
        Self {
            points,
            targets,
            mask,
        }
    }
}

/// Boundary-condition prescription (hull no-slip, inlet, outlet, walls).
#[derive(Debug, Clone)]
pub struct BoundarySpec(pub ValueConstraints);

/// Initial-condition prescription at the initial time t_I (= domain t_min).
#[derive(Debug, Clone)]
pub struct InitialSpec {
    pub t_initial: f64,
    pub constraints: ValueConstraints,
}

impl InitialSpec {
    pub fn new(t_initial: f64, constraints: ValueConstraints) -> Result<Self> {
        if constraints
            .points
            .row(2)
            .iter()
            .any(|t| (*t - t_initial).abs() > 1e-12)
        {
            return Err(Error::Config(format!(
                "initial-condition points must all sit at t_I = {t_initial}"
            )));
        }
        Ok(Self {
            t_initial,
            constraints,
        })
    }
}

/// Interior space-time collocation points (3×N, rows x, y, t) where the PDE
/// residuals are evaluated.
#[derive(Debug, Clone)]
pub struct CollocationSet {
    pub interior: Array2<f64>,
}

impl CollocationSet {
    pub fn new(interior: Array2<f64>) -> Result<Self> {
        if interior.nrows() != 3 {
            return Err(Error::DimensionMismatch(format!(
                "collocation points must be 3xN, got {}xN",
                interior.nrows()
            )));
        }
        Ok(Self { interior })
    }

    pub fn len(&self) -> usize {
        self.interior.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Owned copy of a subset of columns (for minibatching).
    pub fn select(&self, idx: &[usize]) -> CollocationSet {
        CollocationSet {
            interior: self.interior.select(Axis(1), idx),
        }
    }
}

/// Unweighted per-term losses. The weighted total is
/// `w.navier_stokes*navier_stokes + w.continuity*continuity +
/// w.boundary*boundary + w.initial*initial`, computed exactly once in
/// [`LossBreakdown::total`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub navier_stokes: f64,
    pub continuity: f64,
    pub boundary: f64,
    pub initial: f64,
}

impl LossBreakdown {
    pub fn total(&self, w: &LossWeights) -> f64 {
        w.navier_stokes * self.navier_stokes
            + w.continuity * self.continuity
            + w.boundary * self.boundary
            + w.initial * self.initial
    }

    /// Name of the first non-finite term, if any (for divergence diagnostics).
    pub fn first_non_finite(&self) -> Option<&'static str> {
        [
            ("navier_stokes", self.navier_stokes),
            ("continuity", self.continuity),
            ("boundary", self.boundary),
            ("initial", self.initial),
        ]
        .into_iter()
        .find(|(_, v)| !v.is_finite())
        .map(|(n, _)| n)
    }
}

fn check_categories(
    coll: &CollocationSet,
    bc: &BoundarySpec,
    ic: &InitialSpec,
    w: &LossWeights,
) -> Result<()> {
    w.validate()?;
    if (w.navier_stokes > 0.0 || w.continuity > 0.0) && coll.is_empty() {
        return Err(Error::Config(
            "interior collocation set is empty but a residual weight is positive".into(),
        ));
    }
    if w.boundary > 0.0 && bc.0.is_empty() {
        return Err(Error::Config(
            "boundary set is empty but the boundary weight is positive".into(),
        ));
    }
    if w.initial > 0.0 && ic.constraints.is_empty() {
        return Err(Error::Config(
            "initial set is empty but the initial weight is positive".into(),
        ));
    }
    Ok(())
}

/// Mean squared masked mismatch and (optionally) its value cotangents.
fn value_loss(
    net: &Mlp,
    set: &ValueConstraints,
    weight: f64,
    want_grad: bool,
) -> Result<(f64, Option<Array2<f64>>)> {
    if set.is_empty() {
        return Ok((0.0, None));
    }
    let out = net.forward_batch(set.points.view())?;
    let diff = (&out - &set.targets) * &set.mask;
    let n = set.len() as f64;
    let loss = diff.iter().map(|d| d * d).sum::<f64>() / n;
    let cot = want_grad.then(|| diff.mapv(|d| 2.0 * weight * d / n));
    Ok((loss, cot))
}

struct InteriorTerms {
    navier_stokes: f64,
    continuity: f64,
    grad: Option<Vec<f64>>,
}

/// Residual losses over interior points, with the parameter gradient of
/// (α₁·L_N + α₂·L_C) when requested.
fn interior_loss(
    net: &Mlp,
    interior: ArrayView2<f64>,
    w: &LossWeights,
    g: &DimensionlessGroups,
    want_grad: bool,
) -> Result<InteriorTerms> {
    let n = interior.ncols();
    if n == 0 {
        return Ok(InteriorTerms {
            navier_stokes: 0.0,
            continuity: 0.0,
            grad: None,
        });
    }
    let (jet, trace) = net.jet_batch_traced(interior)?;
    let mut cot = want_grad.then(|| JetCotangent::zeros_like(&jet));
    let inv_re = 1.0 / g.reynolds;
    let nf = n as f64;
    let mut l_ns = 0.0;
    let mut l_c = 0.0;
    for p in 0..n {
        let u = jet.values[(0, p)];
        let v = jet.values[(1, p)];
        let col = |j: usize| p * 3 + j;
        // Momentum residuals r_i, i = 0 (u), 1 (v).
        let mut r = [0.0; 2];
        for (i, ri) in r.iter_mut().enumerate() {
            *ri = g.strouhal * jet.jacobian[(i, col(2))]
                + u * jet.jacobian[(i, col(0))]
                + v * jet.jacobian[(i, col(1))]
                + g.euler * jet.jacobian[(2, col(i))]
                - inv_re * (jet.second[(i, col(0))] + jet.second[(i, col(1))]);
        }
        let c = jet.jacobian[(0, col(0))] + jet.jacobian[(1, col(1))];
        l_ns += (r[0] * r[0] + r[1] * r[1]) / nf;
        l_c += c * c / nf;

        if let Some(cot) = cot.as_mut() {
            for (i, ri) in r.iter().enumerate() {
                let gr = 2.0 * w.navier_stokes * ri / nf;
                cot.jacobian[(i, col(2))] += gr * g.strouhal;
                cot.jacobian[(i, col(0))] += gr * u;
                cot.jacobian[(i, col(1))] += gr * v;
                cot.jacobian[(2, col(i))] += gr * g.euler;
                cot.second[(i, col(0))] -= gr * inv_re;
                cot.second[(i, col(1))] -= gr * inv_re;
                // Advection coefficients depend on the values themselves.
                cot.values[(0, p)] += gr * jet.jacobian[(i, col(0))];
                cot.values[(1, p)] += gr * jet.jacobian[(i, col(1))];
            }
            let gc = 2.0 * w.continuity * c / nf;
            cot.jacobian[(0, col(0))] += gc;
            cot.jacobian[(1, col(1))] += gc;
        }
    }
    let grad = match cot {
        Some(cot) => Some(net.jet_backprop(&trace, &cot)?),
        None => None,
    };
    Ok(InteriorTerms {
        navier_stokes: l_ns,
        continuity: l_c,
        grad,
    })
}

/// Weighted composite loss with per-term breakdown.
pub fn composite_loss(
    net: &Mlp,
    coll: &CollocationSet,
    bc: &BoundarySpec,
    ic: &InitialSpec,
    w: &LossWeights,
    g: &DimensionlessGroups,
) -> Result<(f64, LossBreakdown)> {
    let (breakdown, _) = loss_impl(net, coll, bc, ic, w, g, false)?;
    Ok((breakdown.total(w), breakdown))
}

/// Composite loss together with the exact parameter gradient of the weighted
/// total.
pub fn composite_loss_grad(
    net: &Mlp,
    coll: &CollocationSet,
    bc: &BoundarySpec,
    ic: &InitialSpec,
    w: &LossWeights,
    g: &DimensionlessGroups,
) -> Result<(f64, LossBreakdown, Vec<f64>)> {
    let (breakdown, grad) = loss_impl(net, coll, bc, ic, w, g, true)?;
    Ok((breakdown.total(w), breakdown, grad.expect("grad requested")))
}

fn loss_impl(
    net: &Mlp,
    coll: &CollocationSet,
    bc: &BoundarySpec,
    ic: &InitialSpec,
    w: &LossWeights,
    g: &DimensionlessGroups,
    want_grad: bool,
) -> Result<(LossBreakdown, Option<Vec<f64>>)> {
    check_categories(coll, bc, ic, w)?;
    let interior = interior_loss(net, coll.interior.view(), w, g, want_grad)?;
    let (l_b, cot_b) = value_loss(net, &bc.0, w.boundary, want_grad)?;
    let (l_i, cot_i) = value_loss(net, &ic.constraints, w.initial, want_grad)?;

    let grad = if want_grad {
        let mut acc = interior
            .grad
            .unwrap_or_else(|| vec![0.0; net.param_count()]);
        for (set, cot) in [(&bc.0, cot_b), (&ic.constraints, cot_i)] {
            if let Some(cot) = cot {
                let (pg, _) = net.backprop_batch(set.points.view(), cot.view())?;
                for (a, b) in acc.iter_mut().zip(pg) {
                    *a += b;
                }
            }
        }
        Some(acc)
    } else {
        None
    };

    Ok((
        LossBreakdown {
            navier_stokes: interior.navier_stokes,
            continuity: interior.continuity,
            boundary: l_b,
            initial: l_i,
        },
        grad,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny_problem(seed: u64) -> (CollocationSet, BoundarySpec, InitialSpec) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let interior = Array2::from_shape_fn((3, 6), |_| rng.gen_range(-1.0..1.0));
        let bpts = Array2::from_shape_fn((3, 4), |_| rng.gen_range(-1.0..1.0));
        let btgt = Array2::from_shape_fn((3, 4), |_| rng.gen_range(-0.5..0.5));
        let bmask = array![[1.0, 1.0, 1.0, 0.0], [1.0, 1.0, 0.0, 1.0], [0.0, 1.0, 0.0, 0.0]];
        let mut ipts = Array2::from_shape_fn((3, 3), |_| rng.gen_range(-1.0..1.0));
        ipts.row_mut(2).fill(0.0);
        let itgt = Array2::from_shape_fn((3, 3), |_| rng.gen_range(-0.5..0.5));
        let imask = Array2::ones((3, 3));
        (
            CollocationSet::new(interior).unwrap(),
            BoundarySpec(ValueConstraints::new(bpts, btgt, bmask).unwrap()),
            InitialSpec::new(0.0, ValueConstraints::new(ipts, itgt, imask).unwrap()).unwrap(),
        )
    }

    #[test]
    fn zero_weights_except_continuity_on_divergence_free_net() {
        // A zero network is trivially divergence-free.
        let net = Mlp::zeros(&[3, 5, 3]).unwrap();
        let (coll, bc, ic) = tiny_problem(1);
        let w = LossWeights {
            navier_stokes: 0.0,
            continuity: 1.0,
            boundary: 0.0,
            initial: 0.0,
        };
        let (total, bd) = composite_loss(&net, &coll, &bc, &ic, &w, &Default::default()).unwrap();
        assert_eq!(total, 0.0);
        assert_eq!(bd.continuity, 0.0);
    }

    #[test]
    fn exact_bc_match_zeroes_the_boundary_terms() {
        // Zero net, zero targets: boundary and initial losses vanish.
        let net = Mlp::zeros(&[3, 5, 3]).unwrap();
        let (coll, mut bc, mut ic) = tiny_problem(2);
        bc.0.targets.fill(0.0);
        ic.constraints.targets.fill(0.0);
        let w = LossWeights::default();
        let (_, bd) = composite_loss(&net, &coll, &bc, &ic, &w, &Default::default()).unwrap();
        assert_eq!(bd.boundary, 0.0);
        assert_eq!(bd.initial, 0.0);
    }

    #[test]
    fn doubling_a_weight_doubles_its_contribution() {
        let net = Mlp::xavier(&[3, 8, 3], 5).unwrap();
        let (coll, bc, ic) = tiny_problem(3);
        let w1 = LossWeights::default();
        let mut w2 = w1;
        w2.navier_stokes *= 2.0;
        let g = DimensionlessGroups::default();
        let (t1, b1) = composite_loss(&net, &coll, &bc, &ic, &w1, &g).unwrap();
        let (t2, b2) = composite_loss(&net, &coll, &bc, &ic, &w2, &g).unwrap();
        // Per-term values are weight-independent; the total shifts by exactly
        // the extra α₁·L_N.
        assert_eq!(b1.navier_stokes, b2.navier_stokes);
        let extra = t2 - t1;
        let want = w1.navier_stokes * b1.navier_stokes;
        assert!((extra - want).abs() <= 1e-12 * t1.abs().max(1.0), "{extra} vs {want}");
    }

    #[test]
    fn total_is_the_exact_weighted_sum() {
        let net = Mlp::xavier(&[3, 8, 3], 6).unwrap();
        let (coll, bc, ic) = tiny_problem(4);
        let w = LossWeights::default();
        let g = DimensionlessGroups::default();
        let (total, bd) = composite_loss(&net, &coll, &bc, &ic, &w, &g).unwrap();
        assert_eq!(total, bd.total(&w));
    }

    #[test]
    fn empty_category_with_positive_weight_is_config_error() {
        let net = Mlp::zeros(&[3, 5, 3]).unwrap();
        let (coll, bc, _) = tiny_problem(7);
        let ic = InitialSpec::new(0.0, ValueConstraints::empty()).unwrap();
        let err = composite_loss(
            &net,
            &coll,
            &bc,
            &ic,
            &LossWeights::default(),
            &Default::default(),
        );
        assert!(err.is_err());
        // With the initial weight zeroed the same sets are fine.
        let w = LossWeights {
            initial: 0.0,
            ..Default::default()
        };
        assert!(composite_loss(&net, &coll, &bc, &ic, &w, &Default::default()).is_ok());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let net = Mlp::xavier(&[3, 6, 5, 3], 9).unwrap();
        let (coll, bc, ic) = tiny_problem(11);
        let w = LossWeights::default();
        let g = DimensionlessGroups::default();
        let (_, _, grad) = composite_loss_grad(&net, &coll, &bc, &ic, &w, &g).unwrap();
        let base = net.params();
        let loss_at = |p: &[f64]| {
            let n = Mlp::from_params(net.layer_sizes(), p).unwrap();
            composite_loss(&n, &coll, &bc, &ic, &w, &g).unwrap().0
        };
        let h = 1e-6;
        for i in (0..base.len()).step_by(11) {
            let mut pp = base.clone();
            pp[i] += h;
            let mut pm = base.clone();
            pm[i] -= h;
            let fd = (loss_at(&pp) - loss_at(&pm)) / (2.0 * h);
            let denom = fd.abs().max(1e-6);
            assert!(
                (grad[i] - fd).abs() / denom < 1e-4,
                "param {i}: grad {} vs fd {fd}",
                grad[i]
            );
        }
    }

    #[test]
    fn initial_points_must_sit_at_t_initial() {
        let mut pts = Array2::zeros((3, 2));
        pts[(2, 1)] = 0.5;
        let res = InitialSpec::new(0.0, ValueConstraints::new(pts, Array2::zeros((3, 2)), Array2::ones((3, 2))).unwrap());
        assert!(res.is_err());
    }
}
