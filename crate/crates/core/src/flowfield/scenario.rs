//! Default flow training scenario: steady 2-D channel flow past a hull
//! cross-section. Uniform inflow at the inlet, zero pressure at the outlet,
//! impermeable side walls, no-slip on the hull outline.

use ndarray::Array2;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::hull::{HullFamily, HullShape};

use super::loss::{BoundarySpec, CollocationSet, InitialSpec, ValueConstraints};
use super::model::Domain;
use super::residual::DimensionlessGroups;

/// Channel geometry and flow parameters, all dimensionless (length scale =
/// hull length, velocity scale = inflow speed).
#[derive(Debug, Clone)]
pub struct ChannelScenario {
    pub domain: Domain,
    pub hull: HullShape,
    pub inflow: f64,
    pub groups: DimensionlessGroups,
}

/// Boundary sample counts per boundary piece.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryCounts {
    pub inlet: usize,
    pub outlet: usize,
    pub wall: usize,
    pub hull: usize,
}

impl Default for BoundaryCounts {
    fn default() -> Self {
        Self {
            inlet: 64,
            outlet: 64,
            wall: 96,
            hull: 160,
        }
    }
}

impl ChannelScenario {
    /// Steady channel past the given hull family: domain x ∈ [−1.5, 2.5],
    /// y ∈ [−1, 1], unit hull at the origin region, unit inflow, Re = 100.
    pub fn standard(family: HullFamily) -> Self {
        Self {
            domain: Domain::new((-1.5, 2.5), (-1.0, 1.0), (0.0, 0.0)).expect("valid box"),
            hull: HullShape::new(family, 0.5, 0.0, 1.0, 0.3).expect("valid hull"),
            inflow: 1.0,
            groups: DimensionlessGroups::steady(1.0, 100.0).expect("valid groups"),
        }
    }

    fn t_mid(&self) -> f64 {
        self.domain.t.0
    }

    /// Latin-hypercube interior collocation points, excluding the hull
    /// interior. Deterministic per (n, seed).
    pub fn collocation(&self, n: usize, seed: u64) -> Result<CollocationSet> {
        let mut pts: Vec<(f64, f64)> = Vec::with_capacity(n);
        let mut round = 0u64;
        while pts.len() < n {
            let want = n - pts.len();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x4c4853 + round));
            // Latin hypercube: one stratified sample per stratum per axis,
            // with independently permuted strata.
            let mut xs: Vec<f64> = (0..want)
                .map(|i| {
                    let u: f64 = rng.gen();
                    (i as f64 + u) / want as f64
                })
                .collect();
            let mut ys: Vec<f64> = (0..want)
                .map(|i| {
                    let u: f64 = rng.gen();
                    (i as f64 + u) / want as f64
                })
                .collect();
            permute(&mut xs, &mut rng);
            permute(&mut ys, &mut rng);
            for (sx, sy) in xs.iter().zip(&ys) {
                let x = self.domain.x.0 + sx * (self.domain.x.1 - self.domain.x.0);
                let y = self.domain.y.0 + sy * (self.domain.y.1 - self.domain.y.0);
                if !self.hull.contains(x, y) {
                    pts.push((x, y));
                }
            }
            round += 1;
        }
        pts.truncate(n);
        let mut interior = Array2::zeros((3, n));
        for (c, (x, y)) in pts.iter().enumerate() {
            interior[(0, c)] = *x;
            interior[(1, c)] = *y;
            interior[(2, c)] = self.t_mid();
        }
        CollocationSet::new(interior)
    }

    /// Boundary prescription: inlet velocity, outlet pressure, wall
    /// impermeability, hull no-slip.
    pub fn boundary(&self, counts: &BoundaryCounts) -> Result<BoundarySpec> {
        let t = self.t_mid();
        let (x0, x1) = self.domain.x;
        let (y0, y1) = self.domain.y;
        let mut sets = Vec::new();

        // Inlet x = x0: (u, v) = (inflow, 0).
        sets.push(constraints(
            (0..counts.inlet).map(|i| {
                let y = lerp_mid(y0, y1, i, counts.inlet);
                ([x0, y, t], [self.inflow, 0.0, 0.0], [1.0, 1.0, 0.0])
            }),
        )?);
        // Outlet x = x1: p = 0.
        sets.push(constraints((0..counts.outlet).map(|i| {
            let y = lerp_mid(y0, y1, i, counts.outlet);
            ([x1, y, t], [0.0, 0.0, 0.0], [0.0, 0.0, 1.0])
        }))?);
        // Walls y = y0, y1: impermeable free-slip (v = 0).
        for wall_y in [y0, y1] {
            sets.push(constraints((0..counts.wall).map(|i| {
                let x = lerp_mid(x0, x1, i, counts.wall);
                ([x, wall_y, t], [0.0, 0.0, 0.0], [0.0, 1.0, 0.0])
            }))?);
        }
        // Hull outline (including end caps): no-slip.
        let mut hull_pts = self.hull.boundary_points(counts.hull)?;
        hull_pts.extend(self.hull.end_cap_points(counts.hull / 16));
        sets.push(constraints(hull_pts.into_iter().map(|(x, y)| {
            ([x, y, t], [0.0, 0.0, 0.0], [1.0, 1.0, 0.0])
        }))?);

        let refs: Vec<&ValueConstraints> = sets.iter().collect();
        Ok(BoundarySpec(ValueConstraints::concat(&refs)))
    }

    /// Steady scenario: the initial prescription mirrors the boundary
    /// prescription at t_I = t_min.
    pub fn initial(&self, counts: &BoundaryCounts) -> Result<InitialSpec> {
        let bc = self.boundary(counts)?;
        InitialSpec::new(self.domain.t.0, bc.0)
    }

    /// Full training data (collocation, boundary, initial).
    pub fn training_data(
        &self,
        n_interior: usize,
        counts: &BoundaryCounts,
        seed: u64,
    ) -> Result<(CollocationSet, BoundarySpec, InitialSpec)> {
        Ok((
            self.collocation(n_interior, seed)?,
            self.boundary(counts)?,
            self.initial(counts)?,
        ))
    }
}

fn lerp_mid(lo: f64, hi: f64, i: usize, n: usize) -> f64 {
    lo + (hi - lo) * (i as f64 + 0.5) / n as f64
}

fn permute(v: &mut [f64], rng: &mut ChaCha8Rng) {
    for i in (1..v.len()).rev() {
        let j = rng.gen_range(0..=i);
        v.swap(i, j);
    }
}

fn constraints(
    it: impl Iterator<Item = ([f64; 3], [f64; 3], [f64; 3])>,
) -> Result<ValueConstraints> {
    let rows: Vec<_> = it.collect();
    let n = rows.len();
    let mut points = Array2::zeros((3, n));
    let mut targets = Array2::zeros((3, n));
    let mut mask = Array2::zeros((3, n));
    for (c, (p, tg, m)) in rows.iter().enumerate() {
        for r in 0..3 {
            points[(r, c)] = p[r];
            targets[(r, c)] = tg[r];
            mask[(r, c)] = m[r];
        }
    }
    ValueConstraints::new(points, targets, mask)
}
