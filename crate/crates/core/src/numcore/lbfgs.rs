//! Limited-memory BFGS with a strong-Wolfe line search.
//!
//! The caller owns the parameter vector and supplies a loss/gradient oracle;
//! [`LbfgsState::step`] performs one quasi-Newton iteration (two-loop
//! recursion for the search direction, then a strong-Wolfe line search) and
//! updates the curvature history.

use crate::error::{Error, Result};

const C1: f64 = 1e-4;
const C2: f64 = 0.9;
const MAX_TRIALS: usize = 20;

/// Outcome of one [`LbfgsState::step`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LbfgsOutcome {
    /// Parameters moved; keep iterating.
    Step,
    /// Gradient norm fell below the tolerance at entry; parameters unchanged.
    Converged,
    /// The line search failed to find a strong-Wolfe point; parameters unchanged.
    Stagnated,
}

/// Curvature history and tolerances for L-BFGS.
pub struct LbfgsState {
    m: usize,
    grad_tol: f64,
    s_hist: Vec<Vec<f64>>,
    y_hist: Vec<Vec<f64>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

impl LbfgsState {
    /// History length 10, gradient tolerance `grad_tol`.
    pub fn new(grad_tol: f64) -> Self {
        Self::with_history(10, grad_tol)
    }

    pub fn with_history(m: usize, grad_tol: f64) -> Self {
        Self {
            m,
            grad_tol,
            s_hist: Vec::new(),
            y_hist: Vec::new(),
        }
    }

    pub fn reset(&mut self) {
        self.s_hist.clear();
        self.y_hist.clear();
    }

    /// Two-loop recursion: approximate -H^{-1} g.
    fn direction(&self, grad: &[f64]) -> Vec<f64> {
        let mut q: Vec<f64> = grad.to_vec();
        let k = self.s_hist.len();
        let mut alpha = vec![0.0; k];
        let mut rho = vec![0.0; k];
        for i in (0..k).rev() {
            rho[i] = 1.0 / dot(&self.y_hist[i], &self.s_hist[i]);
            alpha[i] = rho[i] * dot(&self.s_hist[i], &q);
            for (qv, yv) in q.iter_mut().zip(&self.y_hist[i]) {
                *qv -= alpha[i] * yv;
            }
        }
        if let (Some(s), Some(y)) = (self.s_hist.last(), self.y_hist.last()) {
            let gamma = dot(s, y) / dot(y, y);
            for qv in &mut q {
                *qv *= gamma;
            }
        }
        for i in 0..k {
            let beta = rho[i] * dot(&self.y_hist[i], &q);
            for (qv, sv) in q.iter_mut().zip(&self.s_hist[i]) {
                *qv += (alpha[i] - beta) * sv;
            }
        }
        for qv in &mut q {
            *qv = -*qv;
        }
        q
    }

    /// One L-BFGS iteration. `oracle(p)` returns `(loss, gradient)` at `p`.
    pub fn step<F>(&mut self, params: &mut Vec<f64>, mut oracle: F) -> Result<LbfgsOutcome>
    where
        F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    {
        let (f0, g0) = oracle(params)?;
        if !f0.is_finite() {
            return Err(Error::Diverged {
                term: "lbfgs objective".into(),
                step: 0,
            });
        }
        if norm(&g0) <= self.grad_tol {
            return Ok(LbfgsOutcome::Converged);
        }

        let mut dir = self.direction(&g0);
        let mut dg0 = dot(&dir, &g0);
        if dg0 >= 0.0 {
            // Not a descent direction: drop the history and fall back to
            // steepest descent.
            self.reset();
            dir = g0.iter().map(|g| -g).collect();
            dg0 = dot(&dir, &g0);
        }

        // Strong Wolfe line search (bracket + zoom, Nocedal & Wright alg. 3.5/3.6).
        let eval = |t: f64, oracle: &mut F| -> Result<(f64, Vec<f64>, f64)> {
            let pt: Vec<f64> = params.iter().zip(&dir).map(|(p, d)| p + t * d).collect();
            let (f, g) = oracle(&pt)?;
            let dg = dot(&dir, &g);
            Ok((f, g, dg))
        };

        let mut trials = 0usize;
        let mut t_prev = 0.0f64;
        let mut f_prev = f0;
        let mut dg_prev = dg0;
        let mut t = 1.0f64;
        let mut accepted: Option<f64> = None;
        let mut bracket: Option<(f64, f64, f64, f64, f64)> = None; // (lo, f_lo, dg_lo, hi, f_hi)

        while trials < MAX_TRIALS {
            trials += 1;
            let (f, _g, dg) = eval(t, &mut oracle)?;
            if !f.is_finite() {
                bracket = Some((t_prev, f_prev, dg_prev, t, f64::INFINITY));
                break;
            }
            if f > f0 + C1 * t * dg0 || (trials > 1 && f >= f_prev) {
                bracket = Some((t_prev, f_prev, dg_prev, t, f));
                break;
            }
            if dg.abs() <= -C2 * dg0 {
                accepted = Some(t);
                break;
            }
            if dg >= 0.0 {
                bracket = Some((t, f, dg, t_prev, f_prev));
                break;
            }
            t_prev = t;
            f_prev = f;
            dg_prev = dg;
            t *= 2.0;
        }

        if accepted.is_none() {
            if let Some((mut lo, mut f_lo, mut dg_lo, mut hi, mut f_hi)) = bracket {
                while trials < MAX_TRIALS {
                    trials += 1;
                    // Quadratic interpolation through (lo, f_lo, dg_lo) and
                    // (hi, f_hi), safeguarded towards bisection.
                    let span = hi - lo;
                    let denom = 2.0 * (f_hi - f_lo - dg_lo * span);
                    let mut tm = if denom.abs() > 1e-300 && f_hi.is_finite() {
                        lo - dg_lo * span * span / denom
                    } else {
                        lo + 0.5 * span
                    };
                    let (lo_b, hi_b) = (lo.min(hi), lo.max(hi));
                    let margin = 0.1 * (hi_b - lo_b);
                    if !(tm > lo_b + margin && tm < hi_b - margin) {
                        tm = lo + 0.5 * span;
                    }
                    let (f, _g, dg) = eval(tm, &mut oracle)?;
                    if !f.is_finite() || f > f0 + C1 * tm * dg0 || f >= f_lo {
                        hi = tm;
                        f_hi = f;
                    } else {
                        if dg.abs() <= -C2 * dg0 {
                            accepted = Some(tm);
                            break;
                        }
                        if dg * (hi - lo) >= 0.0 {
                            hi = lo;
                            f_hi = f_lo;
                        }
                        lo = tm;
                        f_lo = f;
                        dg_lo = dg;
                    }
                    if (hi - lo).abs() * norm(&dir) < 1e-16 {
                        break;
                    }
                }
            }
        }

        let Some(t) = accepted else {
            return Ok(LbfgsOutcome::Stagnated);
        };

        // Accept the step and update curvature history.
        let new_params: Vec<f64> = params.iter().zip(&dir).map(|(p, d)| p + t * d).collect();
        let (_f_new, g_new) = oracle(&new_params)?;
        let s: Vec<f64> = new_params.iter().zip(params.iter()).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g0).map(|(a, b)| a - b).collect();
        if dot(&s, &y) > 1e-12 * norm(&s) * norm(&y) {
            self.s_hist.push(s);
            self.y_hist.push(y);
            if self.s_hist.len() > self.m {
                self.s_hist.remove(0);
                self.y_hist.remove(0);
            }
        }
        *params = new_params;
        Ok(LbfgsOutcome::Step)
    }
}
