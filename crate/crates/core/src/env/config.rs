//! JSON task configuration. Distances are centimeters on disk and meters in memory.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geom::{Aabb3, Vec3};
use crate::sensors::{CameraConfig, Modality};
use crate::sim::{EntityClass, EntityKind, MoveTable};
use crate::world::{GeneratorSpec, SceneSpec};

use super::reward::{NavRewardParams, TrackingRewardParams};

pub const CONFIG_VERSION: u32 = 1;
const CM: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("config error at '{path}': {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Navigation,
    Tracking,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionSpace {
    Discrete,
    Continuous,
}

/// How the tracking target moves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetMotion {
    Static,
    /// Closed loop `r(phi) = radius + a * sin(lobes * phi)` around the scene center,
    /// with `a` drawn per episode from `amplitude * (1 +/- amplitude_spread)`.
    Serpentine {
        radius: f64,
        amplitude: f64,
        lobes: u32,
        speed: f64,
        #[serde(default = "default_spread")]
        amplitude_spread: f64,
    },
    RandomWalk {
        speed: f64,
    },
}

fn default_spread() -> f64 {
    0.1
}

/// Discrete move table in (deg/s, cm/s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoveActionConfig {
    pub forward: [f64; 2],
    pub backward: [f64; 2],
    pub turn_left: [f64; 2],
    pub turn_right: [f64; 2],
}

impl Default for MoveActionConfig {
    fn default() -> Self {
        Self { forward: [0.0, 100.0], backward: [0.0, -100.0], turn_left: [-15.0, 0.0], turn_right: [15.0, 0.0] }
    }
}

/// Continuous bounds as `[angular deg/s, linear cm/s]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousBounds {
    pub high: [f64; 2],
    pub low: [f64; 2],
}

impl Default for ContinuousBounds {
    fn default() -> Self {
        Self { high: [30.0, 100.0], low: [-30.0, -100.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub class_name: String,
    #[serde(default)]
    pub cam_id: u32,
    /// (forward, right, up) cm from the eye point.
    #[serde(default)]
    pub relative_location: [f64; 3],
    /// (pitch, yaw, roll) degrees.
    #[serde(default)]
    pub relative_rotation: [f64; 3],
    #[serde(default)]
    pub move_action: MoveActionConfig,
    #[serde(default)]
    pub move_action_continuous: ContinuousBounds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action_space: Option<ActionSpace>,
    #[serde(default)]
    pub internal_nav: bool,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            class_name: "human".into(),
            cam_id: 0,
            relative_location: [0.0; 3],
            relative_rotation: [0.0; 3],
            move_action: MoveActionConfig::default(),
            move_action_continuous: ContinuousBounds::default(),
            action_space: None,
            internal_nav: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThirdCamConfig {
    pub cam_id: u32,
    pub pitch: f64,
    pub yaw: f64,
    pub roll: f64,
    /// Height above the followed agent, cm.
    pub height: f64,
    pub fov: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationConfig {
    pub modalities: Vec<Modality>,
    pub width: u32,
    pub height: u32,
    #[serde(default = "default_fov")]
    pub fov: f64,
    /// cm.
    #[serde(default = "default_far_clip")]
    pub far_clip: f64,
}

fn default_fov() -> f64 {
    90.0
}

fn default_far_clip() -> f64 {
    10000.0
}

impl Default for ObservationConfig {
    fn default() -> Self {
        Self { modalities: vec![Modality::Color], width: 320, height: 240, fov: 90.0, far_clip: 10000.0 }
    }
}

/// Reward parameters; distances in cm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardParamsConfig {
    pub expected_distance: f64,
    pub expected_angle: f64,
    pub max_distance: f64,
    pub max_angle: f64,
    pub lost_patience: u32,
    pub success_distance: f64,
    pub success_angle: f64,
    pub distance_floor: f64,
    pub angle_normalizer: f64,
}

impl Default for RewardParamsConfig {
    fn default() -> Self {
        Self {
            expected_distance: 250.0,
            expected_angle: 0.0,
            max_distance: 600.0,
            max_angle: 45.0,
            lost_patience: 50,
            success_distance: 300.0,
            success_angle: 30.0,
            distance_floor: 300.0,
            angle_normalizer: 90.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskConfig {
    #[serde(default = "version")]
    pub version: u32,
    pub env_name: String,
    /// `generator:<kind>:<seed>:<nx>x<ny>` or a path to a scene document.
    pub scene: String,
    pub task: TaskKind,
    pub agents: Vec<AgentConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub third_cam: Option<ThirdCamConfig>,
    /// cm; empty means "use the scene's".
    #[serde(default)]
    pub safe_start: Vec<[f64; 3]>,
    /// `[x_min, x_max, y_min, y_max, z_min, z_max]` cm; absent means "use the scene's".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reset_area: Option<[f64; 6]>,
    /// cm; empty means "use the scene's".
    #[serde(default)]
    pub target_locations: Vec<[f64; 3]>,
    #[serde(default)]
    pub random_init: bool,
    /// World ticks per control step.
    #[serde(default = "one")]
    pub interval: u32,
    pub max_steps: u32,
    #[serde(default)]
    pub reward_params: RewardParamsConfig,
    #[serde(default)]
    pub observation: ObservationConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_motion: Option<TargetMotion>,
}

fn version() -> u32 {
    CONFIG_VERSION
}

fn one() -> u32 {
    1
}

impl TaskConfig {
    /// A usable default for a scene source.
    pub fn minimal(task: TaskKind, scene: &str) -> Self {
        Self {
            version: CONFIG_VERSION,
            env_name: format!(
                "{}-{}",
                scene,
                match task {
                    TaskKind::Navigation => "nav",
                    TaskKind::Tracking => "track",
                }
            ),
            scene: scene.to_string(),
            task,
            agents: vec![AgentConfig::default()],
            third_cam: None,
            safe_start: Vec::new(),
            reset_area: None,
            target_locations: Vec::new(),
            random_init: false,
            interval: 1,
            max_steps: match task {
                TaskKind::Navigation => 2000,
                TaskKind::Tracking => 500,
            },
            reward_params: RewardParamsConfig::default(),
            observation: ObservationConfig::default(),
            target_motion: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: TaskConfig =
            serde_json::from_str(text).map_err(|e| ConfigError::new(json_path_hint(&e), e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("<file>", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.version != CONFIG_VERSION {
            return Err(ConfigError::new("version", format!("unsupported version {}", self.version)));
        }
        if self.agents.is_empty() {
            return Err(ConfigError::new("agents", "at least one agent is required"));
        }
        for (k, a) in self.agents.iter().enumerate() {
            a.class_name.parse::<EntityKind>().map_err(|e| ConfigError::new(format!("agents[{k}].class_name"), e))?;
            let b = &a.move_action_continuous;
            if !(b.high[0] > b.low[0] && b.high[1] > b.low[1]) {
                return Err(ConfigError::new(
                    format!("agents[{k}].move_action_continuous"),
                    format!("high {:?} must exceed low {:?} componentwise", b.high, b.low),
                ));
            }
        }
        if self.max_steps == 0 {
            return Err(ConfigError::new("max_steps", "must be positive"));
        }
        if self.interval == 0 {
            return Err(ConfigError::new("interval", "must be positive"));
        }
        let r = &self.reward_params;
        if !(r.max_distance > r.expected_distance && r.expected_distance > 0.0) {
            return Err(ConfigError::new(
                "reward_params.max_distance",
                "requires max_distance > expected_distance > 0",
            ));
        }
        if !(r.max_angle > 0.0) {
            return Err(ConfigError::new("reward_params.max_angle", "must be positive"));
        }
        if !(r.distance_floor > 0.0 && r.angle_normalizer > 0.0) {
            return Err(ConfigError::new("reward_params.distance_floor", "normalizers must be positive"));
        }
        if let Some(ra) = self.reset_area {
            if ra[0] > ra[1] || ra[2] > ra[3] || ra[4] > ra[5] {
                return Err(ConfigError::new("reset_area", "min exceeds max"));
            }
        }
        let o = &self.observation;
        CameraConfig {
            width: o.width,
            height: o.height,
            hfov: o.fov,
            far_clip: o.far_clip * CM,
            ..CameraConfig::default()
        }
        .validate()
        .map_err(|e| ConfigError::new("observation", e.to_string()))?;
        if let Some(TargetMotion::Serpentine { radius, amplitude, speed, lobes, amplitude_spread }) =
            &self.target_motion
        {
            let a_max = amplitude * (1.0 + amplitude_spread);
            if !(*radius > a_max
                && *amplitude >= 0.0
                && *speed > 0.0
                && *lobes > 0
                && (0.0..=1.0).contains(amplitude_spread))
            {
                return Err(ConfigError::new(
                    "target_motion",
                    "serpentine needs radius above the largest amplitude, speed > 0, lobes > 0, spread in [0, 1]",
                ));
            }
        }
        Ok(())
    }

    pub fn load_scene(&self) -> Result<SceneSpec, ConfigError> {
        let mut scene = if self.scene.starts_with("generator:") {
            let g: GeneratorSpec =
                self.scene.parse().map_err(|e: crate::world::WorldError| ConfigError::new("scene", e.to_string()))?;
            g.generate().map_err(|e| ConfigError::new("scene", e.to_string()))?
        } else {
            SceneSpec::load(Path::new(&self.scene)).map_err(|e| ConfigError::new("scene", e.to_string()))?
        };
        self.apply_overrides(&mut scene)?;
        Ok(scene)
    }

    /// Applies start, target and reset-area overrides to a scene.
    pub fn apply_overrides(&self, scene: &mut SceneSpec) -> Result<(), ConfigError> {
        let m = |p: &[f64; 3]| Vec3::new(p[0] * CM, p[1] * CM, p[2] * CM);
        if !self.safe_start.is_empty() {
            scene.safe_start = self.safe_start.iter().map(m).collect();
        }
        if !self.target_locations.is_empty() {
            scene.target_locations = self.target_locations.iter().map(m).collect();
        }
        if let Some(r) = self.reset_area {
            scene.reset_area =
                Aabb3::new(Vec3::new(r[0] * CM, r[2] * CM, r[4] * CM), Vec3::new(r[1] * CM, r[3] * CM, r[5] * CM));
        }
        if scene.safe_start.is_empty() {
            return Err(ConfigError::new("safe_start", "no start positions in config or scene"));
        }
        scene.validate().map_err(|e| ConfigError::new("scene", e.to_string()))
    }

    pub fn learner_class(&self) -> EntityClass {
        EntityClass::of(self.agents[0].class_name.parse().expect("validated class"))
    }

    pub fn action_space(&self) -> ActionSpace {
        self.agents[0].action_space.unwrap_or(match self.task {
            TaskKind::Navigation => ActionSpace::Discrete,
            TaskKind::Tracking => ActionSpace::Continuous,
        })
    }

    /// Learner move table in (deg/s, m/s).
    pub fn move_table(&self) -> MoveTable {
        let a = &self.agents[0].move_action;
        let c = |v: [f64; 2]| [v[0], v[1] * CM];
        MoveTable {
            forward: c(a.forward),
            backward: c(a.backward),
            turn_left: c(a.turn_left),
            turn_right: c(a.turn_right),
        }
    }

    /// Learner continuous bounds as ((ang_lo, ang_hi), (lin_lo, lin_hi)) in deg/s and m/s.
    pub fn continuous_bounds(&self) -> ((f64, f64), (f64, f64)) {
        let b = &self.agents[0].move_action_continuous;
        ((b.low[0], b.high[0]), (b.low[1] * CM, b.high[1] * CM))
    }

    pub fn camera(&self, agent: usize) -> CameraConfig {
        let o = &self.observation;
        let a = &self.agents[agent];
        CameraConfig {
            width: o.width,
            height: o.height,
            hfov: o.fov,
            relative_location: [a.relative_location[0] * CM, a.relative_location[1] * CM, a.relative_location[2] * CM],
            relative_rotation: a.relative_rotation,
            far_clip: o.far_clip * CM,
            cam_id: a.cam_id,
        }
    }

    pub fn tracking_params(&self) -> TrackingRewardParams {
        let r = &self.reward_params;
        TrackingRewardParams {
            expected_distance: r.expected_distance * CM,
            expected_angle: r.expected_angle,
            max_distance: r.max_distance * CM,
            max_angle: r.max_angle,
            lost_patience: r.lost_patience,
        }
    }

    pub fn nav_params(&self) -> NavRewardParams {
        let r = &self.reward_params;
        NavRewardParams {
            success_distance: r.success_distance * CM,
            success_angle: r.success_angle,
            distance_floor_cm: r.distance_floor,
            angle_normalizer: r.angle_normalizer,
        }
    }
}

/// Best-effort field name from a serde error message.
fn json_path_hint(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    for marker in ["missing field `", "unknown field `"] {
        if let Some(rest) = msg.split(marker).nth(1) {
            if let Some(name) = rest.split('`').next() {
                return name.to_string();
            }
        }
    }
    format!("line {} column {}", e.line(), e.column())
}
