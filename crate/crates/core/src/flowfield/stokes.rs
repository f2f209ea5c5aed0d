//! Second-order Stokes wave orbital velocities.
//!
//! Weakly nonlinear surface gravity wave over finite depth `h`. The orbital
//! velocity at depth `d` below the mean surface (z = −d) is the linear term
//! plus the second-order bound harmonic:
//!
//! ```text
//! u = a·ω·C₁(z)·cos θ + ¾·a·ω·(a·k)·C₂(z)·cos 2θ
//! w = a·ω·S₁(z)·sin θ + ¾·a·ω·(a·k)·S₂(z)·sin 2θ
//! θ = k·x − ω·t
//! C₁ = cosh k(z+h)/sinh kh      S₁ = sinh k(z+h)/sinh kh
//! C₂ = cosh 2k(z+h)/sinh⁴ kh    S₂ = sinh 2k(z+h)/sinh⁴ kh
//! ```
//!
//! The hyperbolic ratios are evaluated with negative-exponent forms only, so
//! deep water (k·h ≫ 1) neither overflows nor loses the surface-decay
//! structure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum steepness a·k before wave breaking invalidates the expansion.
pub const MAX_STEEPNESS: f64 = 0.44;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StokesWaveParams {
    /// Wave amplitude a (m).
    pub amplitude: f64,
    /// Wavenumber k (1/m).
    pub wavenumber: f64,
    /// Angular frequency ω (1/s).
    pub omega: f64,
    /// Water depth h (m).
    pub depth: f64,
}

impl StokesWaveParams {
    pub fn new(amplitude: f64, wavenumber: f64, omega: f64, depth: f64) -> Result<Self> {
        if !(amplitude >= 0.0) || !(wavenumber > 0.0) || !(omega > 0.0) || !(depth > 0.0) {
            return Err(Error::Domain(format!(
                "invalid wave parameters a={amplitude}, k={wavenumber}, omega={omega}, h={depth}"
            )));
        }
        let steepness = amplitude * wavenumber;
        if steepness >= MAX_STEEPNESS {
            return Err(Error::Domain(format!(
                "steepness a*k = {steepness} exceeds the breaking limit {MAX_STEEPNESS}"
            )));
        }
        Ok(Self {
            amplitude,
            wavenumber,
            omega,
            depth,
        })
    }

    /// Construct from wavelength via the linear dispersion relation
    /// ω² = g·k·tanh(k·h).
    pub fn from_wavelength(amplitude: f64, wavelength: f64, depth: f64, gravity: f64) -> Result<Self> {
        if !(wavelength > 0.0) || !(gravity > 0.0) {
            return Err(Error::Domain(format!(
                "invalid wavelength {wavelength} or gravity {gravity}"
            )));
        }
        let k = 2.0 * std::f64::consts::PI / wavelength;
        let omega = (gravity * k * (k * depth).tanh()).sqrt();
        Self::new(amplitude, k, omega, depth)
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega
    }

    /// Orbital velocity (u horizontal along the propagation axis, w vertical
    /// positive up) at horizontal position `x`, `depth_below_surface` ≥ 0,
    /// time `t`. Depths beyond the water column are clamped to the seabed.
    pub fn velocity(&self, x: f64, depth_below_surface: f64, t: f64) -> [f64; 2] {
        let a = self.amplitude;
        if a == 0.0 {
            return [0.0, 0.0];
        }
        let k = self.wavenumber;
        let h = self.depth;
        let z = -depth_below_surface.clamp(0.0, h);
        let theta = k * x - self.omega * t;

        // First-harmonic ratios via negative exponents:
        // cosh k(z+h)/sinh kh = (e^{kz} ± e^{-k(z+2h)}) / (1 − e^{-2kh}).
        let e1p = (k * z).exp();
        let e1m = (-k * (z + 2.0 * h)).exp();
        let denom1 = 1.0 - (-2.0 * k * h).exp();
        let c1 = (e1p + e1m) / denom1;
        let s1 = (e1p - e1m) / denom1;

        // Second harmonic: cosh 2k(z+h)/sinh⁴ kh
        //  = 8 (e^{2kz-2kh} ± e^{-2kz-6kh}) / (1 − e^{-2kh})⁴.
        let e2p = (2.0 * k * z - 2.0 * k * h).exp();
        let e2m = (-2.0 * k * z - 6.0 * k * h).exp();
        let denom4 = denom1.powi(4);
        let c2 = 8.0 * (e2p + e2m) / denom4;
        let s2 = 8.0 * (e2p - e2m) / denom4;

        let lead = a * self.omega;
        let second = 0.75 * lead * (a * k);
        [
            lead * c1 * theta.cos() + second * c2 * (2.0 * theta).cos(),
            lead * s1 * theta.sin() + second * s2 * (2.0 * theta).sin(),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wave() -> StokesWaveParams {
        StokesWaveParams::from_wavelength(0.4, 30.0, 60.0, 9.81).unwrap()
    }

    #[test]
    fn zero_amplitude_is_still_water() {
        let w = StokesWaveParams::new(0.0, 0.2, 1.0, 50.0).unwrap();
        assert_eq!(w.velocity(3.0, 5.0, 2.0), [0.0, 0.0]);
    }

    #[test]
    fn magnitude_decays_with_depth() {
        let w = wave();
        // At phase zero the horizontal component carries the whole magnitude
        // with positive coefficients on both harmonics.
        let mut prev = f64::INFINITY;
        for d in [0.0, 1.0, 2.0, 5.0, 10.0, 20.0, 40.0] {
            let [u, wv] = w.velocity(0.0, d, 0.0);
            let mag = (u * u + wv * wv).sqrt();
            assert!(mag < prev, "magnitude {mag} at depth {d} not below {prev}");
            prev = mag;
        }
    }

    #[test]
    fn velocity_is_periodic_in_time() {
        let w = wave();
        let t0 = 1.7;
        let a = w.velocity(3.0, 2.0, t0);
        let b = w.velocity(3.0, 2.0, t0 + w.period());
        assert!((a[0] - b[0]).abs() < 1e-12);
        assert!((a[1] - b[1]).abs() < 1e-12);
    }

    #[test]
    fn ratios_match_naive_hyperbolics_at_moderate_depth() {
        // Where the naive cosh/sinh forms are numerically safe, the
        // exponential forms must agree with them.
        let w = StokesWaveParams::new(0.3, 0.2, 1.1, 12.0).unwrap();
        let (a, k, h) = (w.amplitude, w.wavenumber, w.depth);
        for d in [0.0, 3.0, 7.0, 12.0] {
            let z: f64 = -d;
            let theta: f64 = k * 2.0 - w.omega * 0.9;
            let c1 = ((k * (z + h)).cosh()) / ((k * h).sinh());
            let s1 = ((k * (z + h)).sinh()) / ((k * h).sinh());
            let c2 = ((2.0 * k * (z + h)).cosh()) / ((k * h).sinh().powi(4));
            let s2 = ((2.0 * k * (z + h)).sinh()) / ((k * h).sinh().powi(4));
            let want = [
                a * w.omega * c1 * theta.cos()
                    + 0.75 * a * w.omega * (a * k) * c2 * (2.0 * theta).cos(),
                a * w.omega * s1 * theta.sin()
                    + 0.75 * a * w.omega * (a * k) * s2 * (2.0 * theta).sin(),
            ];
            let got = w.velocity(2.0, d, 0.9);
            assert!((got[0] - want[0]).abs() < 1e-10, "{got:?} vs {want:?}");
            assert!((got[1] - want[1]).abs() < 1e-10);
        }
    }

    #[test]
    fn deep_water_does_not_overflow() {
        let w = StokesWaveParams::from_wavelength(1.0, 20.0, 5000.0, 9.81).unwrap();
        let [u, wv] = w.velocity(0.0, 0.0, 0.0);
        assert!(u.is_finite() && wv.is_finite());
        assert!(u > 0.0);
        // Essentially still at 100 m below for a 20 m wave.
        let [ud, _] = w.velocity(0.0, 100.0, 0.0);
        assert!(ud.abs() < 1e-10 * u.abs());
    }

    #[test]
    fn breaking_steepness_rejected() {
        assert!(StokesWaveParams::new(1.0, 0.5, 1.0, 50.0).is_err());
        assert!(StokesWaveParams::new(0.8, 0.5, 1.0, 50.0).is_ok());
    }

    #[test]
    fn vertical_velocity_vanishes_at_the_seabed() {
        let w = StokesWaveParams::new(0.3, 0.1, 0.9, 25.0).unwrap();
        // At z = -h the sinh factors are exactly zero.
        let phase_t = 0.4;
        let [_, wv] = w.velocity(1.0, 25.0, phase_t);
        assert!(wv.abs() < 1e-12);
    }
}
