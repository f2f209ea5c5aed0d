//! Parametric hull geometry.
//!
//! Hulls are slender bodies described in the vertical center plane by a
//! half-width profile about a centerline: upper/lower curves y = C_y ±
//! half_width(ζ) over the normalized station ζ ∈ [0, 1]. Three generations
//! are supported, from a blunt constant-width capsule to a streamlined
//! parabolic-tail form, plus a quick drag proxy based on the longitudinal
//! area gradient so optimization can compare shapes without a flow solve.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Hull family, in increasing order of streamlining (generations 1..3).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HullFamily {
    /// Gen 1: constant-width capsule.
    Capsule,
    /// Gen 2: linear taper to a point at the stern.
    IceCreamCone,
    /// Gen 3: parabolic taper at the stern.
    ParabolicTail,
}

impl HullFamily {
    /// Generation index: 1 → Capsule, 2 → IceCreamCone, 3 → ParabolicTail.
    pub fn generation(self) -> u32 {
        match self {
            HullFamily::Capsule => 1,
            HullFamily::IceCreamCone => 2,
            HullFamily::ParabolicTail => 3,
        }
    }

    pub fn from_generation(generation: u32) -> Result<Self> {
        match generation {
            1 => Ok(HullFamily::Capsule),
            2 => Ok(HullFamily::IceCreamCone),
            3 => Ok(HullFamily::ParabolicTail),
            g => Err(Error::Domain(format!("unknown hull generation {g}"))),
        }
    }
}

/// Qualitative curvature of the profile, one label per family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurvatureClass {
    /// Square-cut width change at the ends (capsule).
    Abrupt,
    /// Constant taper slope (ice-cream cone).
    Constant,
    /// Smoothly varying taper slope (parabolic tail).
    Gradient,
}

/// A hull placed in the plane: center `(cx, cy)` in meters, length along x,
/// maximum width `width`.
#[derive(Debug, Clone, PartialEq)]
pub struct HullShape {
    pub family: HullFamily,
    pub cx: f64,
    pub cy: f64,
    pub length: f64,
    pub width: f64,
    /// Taper exponent for the parabolic family (2.0 for the stock gen 3).
    pub taper_exponent: f64,
}

impl HullShape {
    /// Standard hull of the given family: length 5 m, width 1.5 m, centered
    /// at the origin.
    pub fn standard(family: HullFamily) -> Self {
        Self::new(family, 0.0, 0.0, 5.0, 1.5).expect("standard dims are valid")
    }

    pub fn new(family: HullFamily, cx: f64, cy: f64, length: f64, width: f64) -> Result<Self> {
        if !(length > 0.0) || !(width > 0.0) {
            return Err(Error::Domain(format!(
                "hull dimensions must be positive (length {length}, width {width})"
            )));
        }
        if width > length {
            return Err(Error::Domain(format!(
                "hull width {width} exceeds length {length}"
            )));
        }
        Ok(Self {
            family,
            cx,
            cy,
            length,
            width,
            taper_exponent: 2.0,
        })
    }

    /// Same hull with a different parabolic taper exponent (>= 1).
    pub fn with_taper_exponent(mut self, k: f64) -> Result<Self> {
        if !(k >= 1.0) {
            return Err(Error::Domain(format!("taper exponent {k} must be >= 1")));
        }
        self.taper_exponent = k;
        Ok(self)
    }

    /// Normalized station of a plane abscissa: ζ = (x − (C_x − L/2)) / L.
    pub fn zeta(&self, x: f64) -> f64 {
        (x - (self.cx - self.length / 2.0)) / self.length
    }

    fn half_width_unchecked(&self, zeta: f64) -> f64 {
        let w2 = self.width / 2.0;
        match self.family {
            HullFamily::Capsule => w2,
            HullFamily::IceCreamCone => w2 * (1.0 - zeta),
            HullFamily::ParabolicTail => w2 * (1.0 - zeta.powf(self.taper_exponent)),
        }
    }

    /// Half-width of the profile at station ζ ∈ [0, 1].
    pub fn half_width(&self, zeta: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&zeta) {
            return Err(Error::Domain(format!("station {zeta} outside [0, 1]")));
        }
        Ok(self.half_width_unchecked(zeta))
    }

    /// Upper and lower profile ordinates at plane abscissa `x`; `None`
    /// outside the hull extent.
    pub fn profile_at(&self, x: f64) -> Option<(f64, f64)> {
        let zeta = self.zeta(x);
        if !(0.0..=1.0).contains(&zeta) {
            return None;
        }
        let hw = self.half_width_unchecked(zeta);
        Some((self.cy + hw, self.cy - hw))
    }

    /// True if the plane point lies inside (or on) the profile.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        match self.profile_at(x) {
            Some((top, bot)) => y <= top && y >= bot,
            None => false,
        }
    }

    /// At least `n` points (n >= 8) on the hull outline: stations uniformly
    /// spaced over ζ ∈ [0, 1] including both endpoints, one point on each of
    /// the upper and lower curves per station. Output is deterministic and
    /// symmetric about the centerline; every point satisfies
    /// |y − C_y| = half_width(ζ).
    pub fn boundary_points(&self, n: usize) -> Result<Vec<(f64, f64)>> {
        if n < 8 {
            return Err(Error::Domain(format!(
                "boundary sampling needs n >= 8, got {n}"
            )));
        }
        let stations = n.div_ceil(2);
        let x0 = self.cx - self.length / 2.0;
        let mut pts = Vec::with_capacity(stations * 2);
        for i in 0..stations {
            let zeta = i as f64 / (stations - 1) as f64;
            let x = x0 + zeta * self.length;
            let hw = self.half_width_unchecked(zeta);
            pts.push((x, self.cy + hw));
            pts.push((x, self.cy - hw));
        }
        Ok(pts)
    }

    /// Points on the vertical closure segments at ζ = 0 and ζ = 1 wherever
    /// the profile has positive width there (nose of every family, stern of
    /// the capsule). These close the outline into a watertight curve for
    /// no-slip boundary sampling.
    pub fn end_cap_points(&self, per_cap: usize) -> Vec<(f64, f64)> {
        let mut pts = Vec::new();
        let x0 = self.cx - self.length / 2.0;
        for (zeta, x) in [(0.0, x0), (1.0, x0 + self.length)] {
            let hw = self.half_width_unchecked(zeta);
            if hw <= 0.0 {
                continue;
            }
            for i in 0..per_cap {
                // Interior samples only; the corners are covered by boundary_points.
                let frac = (i as f64 + 1.0) / (per_cap as f64 + 1.0);
                pts.push((x, self.cy - hw + 2.0 * hw * frac));
            }
        }
        pts
    }

    /// Qualitative curvature label per family.
    pub fn curvature_class(&self) -> CurvatureClass {
        match self.family {
            HullFamily::Capsule => CurvatureClass::Abrupt,
            HullFamily::IceCreamCone => CurvatureClass::Constant,
            HullFamily::ParabolicTail => CurvatureClass::Gradient,
        }
    }

    /// Normalized area-gradient integral J = ∫₀¹ (d/dζ [hw(ζ)/(W/2)]²)² dζ.
    ///
    /// Penalizes rapid longitudinal change of cross-section, the dominant
    /// driver of form drag for slender bodies. Closed forms: capsule 0,
    /// linear taper 4/3, parabolic taper with exponent k:
    /// 4k² [1/(2k−1) − 2/(3k−1) + 1/(4k−1)] (128/105 at k=2).
    pub fn area_gradient_integral(&self) -> f64 {
        match self.family {
            HullFamily::Capsule => 0.0,
            HullFamily::IceCreamCone => 4.0 / 3.0,
            HullFamily::ParabolicTail => {
                let k = self.taper_exponent;
                4.0 * k * k
                    * (1.0 / (2.0 * k - 1.0) - 2.0 / (3.0 * k - 1.0) + 1.0 / (4.0 * k - 1.0))
            }
        }
    }

    /// Drag-coefficient proxy: c_d = c_base·(1 + λ·J) + β·hw(1)/(W/2), with
    /// c_base = 0.2, λ = 0.5 and bluntness penalty β = 0.35 for a square-cut
    /// stern. Strictly decreasing across the three standard generations.
    pub fn drag_coefficient(&self) -> f64 {
        const C_BASE: f64 = 0.2;
        const LAMBDA: f64 = 0.5;
        const BETA: f64 = 0.35;
        let blunt = self.half_width_unchecked(1.0) / (self.width / 2.0);
        C_BASE * (1.0 + LAMBDA * self.area_gradient_integral()) + BETA * blunt
    }
}

/// Serialized record shape: {family, C_x, C_y, L, W, generation}.
#[derive(Serialize, Deserialize)]
struct HullRecord {
    family: HullFamily,
    #[serde(rename = "C_x")]
    cx: f64,
    #[serde(rename = "C_y")]
    cy: f64,
    #[serde(rename = "L")]
    length: f64,
    #[serde(rename = "W")]
    width: f64,
    generation: u32,
    #[serde(default = "stock_taper", skip_serializing_if = "is_stock_taper")]
    taper_exponent: f64,
}

fn stock_taper() -> f64 {
    2.0
}

fn is_stock_taper(k: &f64) -> bool {
    *k == 2.0
}

impl Serialize for HullShape {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        HullRecord {
            family: self.family,
            cx: self.cx,
            cy: self.cy,
            length: self.length,
            width: self.width,
            generation: self.family.generation(),
            taper_exponent: self.taper_exponent,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for HullShape {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = HullRecord::deserialize(d)?;
        if r.generation != r.family.generation() {
            return Err(D::Error::custom(format!(
                "generation {} does not match family {:?}",
                r.generation, r.family
            )));
        }
        let shape = HullShape::new(r.family, r.cx, r.cy, r.length, r.width)
            .and_then(|h| h.with_taper_exponent(r.taper_exponent))
            .map_err(D::Error::custom)?;
        Ok(shape)
    }
}
