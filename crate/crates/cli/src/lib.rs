//! Experiment orchestration for the hydrorl framework.
//!
//! The library half of the `hydrorl` binary: experiment profiles, content-
//! hashed run manifests, per-seed parallel training, greedy evaluation with
//! full episode logs, hull evolution campaigns, and cross-run aggregation.
//! Every artifact a command writes is a pure function of the resolved
//! configuration and the seed, so re-running the same invocation reproduces
//! the same bytes.

pub mod error;
pub mod evalcmd;
pub mod evolvecmd;
pub mod flowcmd;
pub mod manifest;
pub mod profile;
pub mod reportcmd;
pub mod runs;
