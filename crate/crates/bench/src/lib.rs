//! Benchmark layer: rollouts, metrics, baseline policies, demonstration
//! datasets, a VLM adapter, a multi-worker launcher and table reports.

pub mod courses;
pub mod demos;
pub mod launcher;
pub mod metrics;
pub mod policy;
pub mod report;
pub mod runner;
pub mod vlm;

pub use demos::{collect_demonstrations, read_index, replay_rewards, DemoError, DemoOptions, DemoRecord, DemoSummary};
pub use launcher::{BaseEndpoint, LaunchConfig, LaunchError, Launcher, Registry, WorkerEntry};
pub use metrics::{compute_metrics, spl_term, EpisodeRecord, MetricsError, MetricsSummary};
pub use policy::{
    calibrate_expected_height, expert_tracker, hold_for, ExpertTracker, HoldPolicy, OracleNavigator, PerturbationLevel,
    PidGains, PidTracker, Policy, PolicyError, RandomPolicy,
};
pub use report::{cell, report, Entry};
pub use runner::{default_threads, run_episode, run_episodes, run_parallel, seeds};
pub use vlm::{VlmAgent, VlmConfig, VlmError};
