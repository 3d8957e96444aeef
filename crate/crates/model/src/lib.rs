//! Feature-attending recurrent modules: a state representation built from
//! n small LSTMs, each with sigmoid feature attention over shared
//! observation features and transformer-style retrieval from the other
//! modules, plus the full agent assembly around it.

mod agent;
mod config;
mod farm;

pub use agent::{
    AgentConfig, AgentState, AgentStepOutput, FarmAgent, StateSnapshot, HEAD_HIDDEN,
};
pub use config::FarmConfig;
pub use farm::{Farm, FarmStepTrace, ModuleTrace};
