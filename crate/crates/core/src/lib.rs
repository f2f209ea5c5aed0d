// Validation code uses `!(x > 0.0)` instead of `x <= 0.0` on purpose: the
// negated form also rejects NaN, which the direct comparison lets through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Environment-aware reinforcement learning for autonomous underwater
//! vehicles.
//!
//! The crate is organized bottom-up:
//!
//! - [`numcore`]: a small neural-network core (MLP, reverse-mode gradients,
//!   exact input-derivative jets) plus Adam and L-BFGS optimizers.
//! - [`flowfield`]: physics-informed flow reconstruction (Navier-Stokes
//!   residual training), flow sampling/features, and analytic disturbance
//!   models (second-order Stokes waves, shallow-water currents).
//! - [`hull`]: parametric hull geometry generations and a drag proxy.
//! - [`env`]: the multi-AUV decision process (kinematics, tasks, rewards,
//!   episode metrics).
//! - [`rl`]: soft actor-critic and TD3 built directly on [`numcore`].
//! - [`structopt`]: an LLM-assisted structure-optimization pipeline with a
//!   deterministic offline fallback.

pub mod env;
pub mod error;
pub mod flowfield;
pub mod hull;
pub mod numcore;
pub mod rl;
pub mod structopt;

pub use error::{Error, Result};
