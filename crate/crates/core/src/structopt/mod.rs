//! Iterative hull-structure optimization driven by a three-agent design
//! pipeline.
//!
//! A *design dossier* condenses one generation's training results
//! ([`dossier`]); the pipeline turns a dossier into directives, a hull
//! proposal and a simulation configuration ([`pipeline`]), optionally served
//! by a remote backend ([`backend`]) and always recoverable through
//! deterministic offline rules. Every round is archived append-only
//! ([`repo`]), and [`joint`] closes the loop by retraining flow model and
//! agent for each design.

pub mod backend;
pub mod dossier;
pub mod joint;
pub mod pipeline;
pub mod repo;

pub use backend::{AgentRole, HttpBackend, LlmBackend, ENV_KEY, ENV_MODEL, ENV_URL};
pub use dossier::{summarize_flow, CurveSummary, DesignDossier, FlowSummary};
pub use joint::{evaluate_generation, joint_optimize, JointOutcome, JointSettings};
pub use pipeline::{
    channel_scenario_for, generate_sim_config, validate_proposal, AgentMessage, Directives,
    EnvSettingsSpec, FlowScenarioSpec, Pipeline, PipelineOutput, ProposalCheck, Provenance,
    SimConfigBundle, SCHEMA_VERSION,
};
pub use repo::{KnowledgeRepo, OptimizationRecord};
