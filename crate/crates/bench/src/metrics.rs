//! Episode records and the summary metrics computed from them.

use serde::{Deserialize, Serialize};
use zoosim_core::env::TaskKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    #[serde(rename = "return")]
    pub episode_return: f64,
    pub length: u32,
    pub success: bool,
    /// Learner travel, meters.
    pub path_length: f64,
    /// Shortest route length, meters (navigation).
    pub shortest_length: f64,
    pub seed: u64,
    /// Seconds.
    pub wall_time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl EpisodeRecord {
    /// A record for an episode that could not be rolled out.
    pub fn failed(seed: u64, length: u32, episode_return: f64, diagnostic: impl Into<String>) -> Self {
        Self {
            episode_return,
            length,
            success: false,
            path_length: 0.0,
            shortest_length: 0.0,
            seed,
            wall_time: 0.0,
            failure: Some(diagnostic.into()),
        }
    }

    pub fn check(&self, max_steps: u32) -> Result<(), String> {
        if self.length > max_steps {
            return Err(format!("length {} exceeds max_steps {max_steps}", self.length));
        }
        if !self.path_length.is_finite() || self.path_length < 0.0 || self.shortest_length < 0.0 {
            return Err("path lengths must be finite and non-negative".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    #[serde(rename = "ER")]
    pub er: f64,
    #[serde(rename = "EL")]
    pub el: f64,
    #[serde(rename = "SR")]
    pub sr: f64,
    #[serde(rename = "SPL")]
    pub spl: f64,
    pub n_episodes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("no episode records")]
    EmptyInput,
}

/// One episode's SPL summand.
pub fn spl_term(r: &EpisodeRecord) -> f64 {
    if !r.success {
        return 0.0;
    }
    let denom = r.shortest_length.max(r.path_length);
    if denom <= 0.0 {
        1.0
    } else {
        r.shortest_length / denom
    }
}

pub fn compute_metrics(records: &[EpisodeRecord], task: TaskKind) -> Result<MetricsSummary, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let n = records.len() as f64;
    let mean = |f: &dyn Fn(&EpisodeRecord) -> f64| records.iter().map(f).sum::<f64>() / n;
    Ok(MetricsSummary {
        er: mean(&|r| r.episode_return),
        el: mean(&|r| r.length as f64),
        sr: mean(&|r| if r.success { 1.0 } else { 0.0 }),
        spl: match task {
            TaskKind::Navigation => mean(&spl_term),
            TaskKind::Tracking => 0.0,
        },
        n_episodes: records.len(),
    })
}
