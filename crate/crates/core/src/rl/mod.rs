//! Off-policy reinforcement learning: a FIFO replay buffer, SAC and TD3
//! agents built directly on the network/optimizer layer, and a training
//! loop that drives any [`EnvInterface`] with per-episode metric curves.

pub mod agent;
pub mod buffer;
pub mod sac;
pub mod td3;
pub mod trainer;

pub use agent::{make_agent, select_action, Agent, LossReport, RlAlgo};
pub use buffer::{ReplayBuffer, Transition, REPLAY_CAPACITY};
pub use sac::{SacAgent, SacHyper};
pub use td3::{Td3Agent, Td3Hyper};
pub use trainer::{
    evaluate, train, write_curve_csv, AuvEnvAdapter, EnvInterface, EnvStepOutcome, ToyMoveToOrigin,
    TrainConfig, TrainRecord,
};
