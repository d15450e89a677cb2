//! Task configurations used by the benchmark studies.

use zoosim_core::env::{TargetMotion, TaskConfig, TaskKind};
use zoosim_core::sensors::Modality;

/// Mask resolution for vision-based tracking runs.
pub const PERCEPTION_SIZE: (u32, u32) = (80, 60);

fn mask_tracking(scene: &str, motion: TargetMotion) -> TaskConfig {
    let mut c = TaskConfig::minimal(TaskKind::Tracking, scene);
    c.env_name = "tracking".into();
    c.target_motion = Some(motion);
    c.observation.modalities = vec![Modality::Mask];
    (c.observation.width, c.observation.height) = PERCEPTION_SIZE;
    c
}

/// Long serpentine loop for control-frequency studies.
pub fn frequency_course() -> TaskConfig {
    let mut c = mask_tracking(
        "generator:flat:0:60x60",
        TargetMotion::Serpentine { radius: 25.0, amplitude: 0.325, lobes: 60, speed: 0.8, amplitude_spread: 0.385 },
    );
    c.env_name = "tracking-serpentine".into();
    c
}

/// Small room with a short serpentine, for distractor studies.
pub fn crowd_course() -> TaskConfig {
    let mut c = mask_tracking(
        "generator:flat:0:16x16",
        TargetMotion::Serpentine { radius: 5.0, amplitude: 1.5, lobes: 3, speed: 0.8, amplitude_spread: 0.1 },
    );
    c.env_name = "tracking-room".into();
    c
}

/// Flat tracking with a random-walking target, for the state-based expert.
pub fn flat_tracking() -> TaskConfig {
    let mut c = mask_tracking("generator:flat:0:16x16", TargetMotion::RandomWalk { speed: 0.8 });
    c.env_name = "tracking-flat".into();
    c
}

/// Point-goal navigation on a generated flat scene.
pub fn flat_navigation(scene_seed: u64) -> TaskConfig {
    let mut c = TaskConfig::minimal(TaskKind::Navigation, &format!("generator:flat:{scene_seed}:16x16"));
    c.env_name = "navigation-flat".into();
    c.random_init = true;
    c.observation.modalities = vec![Modality::Mask];
    (c.observation.width, c.observation.height) = PERCEPTION_SIZE;
    c
}

/// Named configurations accepted wherever a task file is expected.
pub fn builtin(name: &str) -> Option<TaskConfig> {
    Some(match name {
        "tracking-serpentine" => frequency_course(),
        "tracking-room" => crowd_course(),
        "tracking-flat" => flat_tracking(),
        "navigation-flat" => flat_navigation(0),
        _ => return None,
    })
}

pub const BUILTIN_NAMES: [&str; 4] = ["tracking-serpentine", "tracking-room", "tracking-flat", "navigation-flat"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_validate() {
        for n in BUILTIN_NAMES {
            builtin(n).unwrap().validate().unwrap();
        }
        assert!(builtin("nope").is_none());
    }
}
