//! Gym-style tasks, rewards and the toolkit wrappers.

mod config;
mod reward;
mod task;
mod wrappers;

pub use config::{
    ActionSpace, AgentConfig, ConfigError, ContinuousBounds, MoveActionConfig, ObservationConfig, RewardParamsConfig,
    TargetMotion, TaskConfig, TaskKind, ThirdCamConfig, CONFIG_VERSION,
};
pub use reward::{
    nav_reward, nav_reward_with, nav_success, target_in_view, tracking_reward, NavRewardParams, TrackingRewardParams,
};
pub use task::{
    route_length_into_disc, AugmentationConfig, ControlRate, EnvError, Observation, StepInfo, StepResult, TaskEnv,
    ToolkitSettings, GOAL_MARKER_ID, LEARNER_ID, TARGET_ID,
};
pub use wrappers::{Augmentation, Environment, PopulationControl, TimeDilation};
