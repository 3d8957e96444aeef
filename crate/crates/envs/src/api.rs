use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("step after episode end")]
    EpisodeOver,
    #[error("action {action} out of range (< {num_actions})")]
    InvalidAction { action: usize, num_actions: usize },
    #[error("invalid environment config: {0}")]
    InvalidConfig(String),
}

/// Planar RGB frame: `rgb[c*h*w + y*w + x]`, byte-valued. Empty when
/// rendering is disabled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observation {
    pub h: usize,
    pub w: usize,
    pub rgb: Vec<u8>,
}

impl Observation {
    pub fn empty() -> Self {
        Observation {
            h: 0,
            w: 0,
            rgb: Vec::new(),
        }
    }
}

/// Inventory-transition events emitted for the analysis pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventTag {
    PickupBall,
    DropBall,
    PickupWrongKey,
    DropWrongKey,
    PickupCorrectKey,
    DropCorrectKey,
}

impl EventTag {
    pub const ALL: [EventTag; 6] = [
        EventTag::PickupBall,
        EventTag::DropBall,
        EventTag::PickupWrongKey,
        EventTag::DropWrongKey,
        EventTag::PickupCorrectKey,
        EventTag::DropCorrectKey,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EventTag::PickupBall => "pickup_ball",
            EventTag::DropBall => "drop_ball",
            EventTag::PickupWrongKey => "pickup_wrong_key",
            EventTag::DropWrongKey => "drop_wrong_key",
            EventTag::PickupCorrectKey => "pickup_correct_key",
            EventTag::DropCorrectKey => "drop_correct_key",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct StepInfo {
    /// Current level (KeyBox); 0 elsewhere.
    pub level: u32,
    /// Set on the step that completes a level.
    pub completed_level: Option<u32>,
    /// Set on the step where the episode's task is achieved.
    pub success: bool,
    pub events: Vec<EventTag>,
}

#[derive(Debug, Clone)]
pub struct StepResult {
    pub observation: Observation,
    pub task_tokens: Vec<String>,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// Uniform control surface over the grid tasks. Implementations are
/// deterministic: a (seed, action sequence) pair replays byte-identically.
pub trait Environment: Send {
    fn num_actions(&self) -> usize;
    fn action_names(&self) -> &'static [&'static str];
    fn obs_hw(&self) -> (usize, usize);
    /// Words that can appear in task tokens.
    fn vocabulary(&self) -> Vec<String>;
    fn reset(&mut self, seed: u64) -> StepResult;
    fn step(&mut self, action: usize) -> Result<StepResult, EnvError>;
    /// Disables/enables frame rendering (world logic is unaffected).
    fn set_render(&mut self, render: bool);
    /// Single-line-per-row text view for debugging.
    fn ascii(&self) -> String;
}
