//! Task rewards and success predicates.

use serde::{Deserialize, Serialize};

use crate::sensors::RelativeState;

/// Tracking parameters in meters and degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackingRewardParams {
    pub expected_distance: f64,
    pub expected_angle: f64,
    pub max_distance: f64,
    pub max_angle: f64,
    pub lost_patience: u32,
}

impl Default for TrackingRewardParams {
    fn default() -> Self {
        Self { expected_distance: 2.5, expected_angle: 0.0, max_distance: 6.0, max_angle: 45.0, lost_patience: 50 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NavRewardParams {
    /// meters
    pub success_distance: f64,
    pub success_angle: f64,
    pub distance_floor_cm: f64,
    pub angle_normalizer: f64,
}

impl Default for NavRewardParams {
    fn default() -> Self {
        Self { success_distance: 3.0, success_angle: 30.0, distance_floor_cm: 300.0, angle_normalizer: 90.0 }
    }
}

pub fn tracking_reward(rel: &RelativeState, p: &TrackingRewardParams) -> f64 {
    let r = 1.0
        - (rel.distance - p.expected_distance).abs() / p.max_distance
        - (rel.direction - p.expected_angle).abs() / p.max_angle;
    r.clamp(-1.0, 1.0)
}

/// Whether the target is inside the region the tracker must keep it in.
pub fn target_in_view(rel: &RelativeState, p: &TrackingRewardParams) -> bool {
    rel.distance <= p.max_distance && rel.direction.abs() <= p.max_angle
}

/// Distances in centimeters, orientation error in degrees.
pub fn nav_reward(d_prev_cm: f64, d_now_cm: f64, ori_err: f64) -> f64 {
    nav_reward_with(d_prev_cm, d_now_cm, ori_err, &NavRewardParams::default())
}

pub fn nav_reward_with(d_prev_cm: f64, d_now_cm: f64, ori_err: f64, p: &NavRewardParams) -> f64 {
    libm::tanh((d_prev_cm - d_now_cm) / d_prev_cm.max(p.distance_floor_cm) - ori_err.abs() / p.angle_normalizer)
}

pub fn nav_success(rel: &RelativeState, p: &NavRewardParams) -> bool {
    rel.distance < p.success_distance && rel.direction.abs() < p.success_angle
}
