//! Environment-aware flow modeling.
//!
//! A flow network U_E(x, y, t) → (u, v, p) is trained to satisfy the
//! dimensionless Navier-Stokes system by minimizing the weighted composite
//! loss α₁·L_N + α₂·L_C + α₃·L_B + α₄·L_I over collocation, boundary, and
//! initial points ([`loss`], [`train`]). The trained model answers flow
//! queries and body-frame probe features ([`model`], [`features`]), and the
//! module also provides the analytic sea-disturbance models: second-order
//! Stokes waves ([`stokes`]) and a shallow-water solver ([`swe`]).

mod features;
mod loss;
mod model;
mod residual;
mod scenario;
mod stokes;
mod swe;
mod train;

pub use features::{flow_features, ProbeLayout};
pub use loss::{
    composite_loss, composite_loss_grad, BoundarySpec, CollocationSet, InitialSpec, LossBreakdown,
    LossWeights, ValueConstraints,
};
pub use model::{Domain, FinalLosses, FlowMeta, FlowModel, FlowQuery, FlowSample};
pub use residual::{
    continuity_residual, divergence_from_jet, momentum_residual_from_jet, ns_residual,
    DifferentiableField, DimensionlessGroups, PointJet, TaylorGreen,
};
pub use scenario::{BoundaryCounts, ChannelScenario};
pub use stokes::{StokesWaveParams, MAX_STEEPNESS};
pub use swe::{SweGrid, MAX_CFL};
pub use train::{
    continuity_rms, train_flow_net, FlowTrainConfig, FlowTrainReport, LossRecord, TrainOutcome,
    TrainPhase,
};
