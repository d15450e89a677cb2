//! Baseline controllers: PID tracker, ground-truth expert, oracle navigator,
//! random and hold.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use zoosim_core::env::{ActionSpace, ControlRate, EnvError, Observation, TargetMotion, TaskConfig, TaskEnv, TaskKind};
use zoosim_core::geom::{bearing, wrap_deg, Rgb, Vec3};
use zoosim_core::sensors::{bbox_from_mask, Frame, Modality, RelativeState, SensorError};
use zoosim_core::sim::{Action, ContinuousMoveAction, DiscreteNavAction, Navigator, BASE_TICK_HZ};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PolicyError {
    #[error("observation has no {0:?} frame")]
    MissingModality(Modality),
    #[error("task has no target to track")]
    NoTarget,
    #[error("planning failed: {0}")]
    Planning(String),
    #[error("{0}")]
    Other(String),
    #[error(transparent)]
    Sensor(#[from] SensorError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Vlm(#[from] crate::vlm::VlmError),
}

pub trait Policy {
    fn name(&self) -> &str;
    /// Called after `env.reset(seed)`.
    fn reset(&mut self, env: &TaskEnv, seed: u64) -> Result<(), PolicyError>;
    fn act(&mut self, env: &TaskEnv, obs: &Observation) -> Result<Action, PolicyError>;
}

/// Seconds of sim time per control step (the mean for jittered control).
pub fn control_dt(env: &TaskEnv) -> f64 {
    let ticks = match env.control_rate() {
        ControlRate::Ticks(n) => n.max(1) as f64,
        ControlRate::Jitter => 2.5,
    };
    ticks / BASE_TICK_HZ
}

fn bounds(config: &TaskConfig) -> (f64, f64) {
    let ((a0, a1), (l0, l1)) = config.continuous_bounds();
    (a1.min(-a0), l1.min(-l0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

impl Default for PidGains {
    fn default() -> Self {
        Self { kp: 1.2, ki: 0.0, kd: 0.3 }
    }
}

#[derive(Debug, Clone, Default)]
struct Pid {
    integral: f64,
    prev: Option<f64>,
}

impl Pid {
    fn update(&mut self, g: &PidGains, e: f64, dt: f64) -> f64 {
        self.integral += e * dt;
        let de = self.prev.map_or(0.0, |p| (e - p) / dt);
        self.prev = Some(e);
        g.kp * e + g.ki * self.integral + g.kd * de
    }
}

/// Bbox height, as a fraction of the frame height, of the target standing
/// at the expected distance straight ahead. Measured by rendering.
pub fn calibrate_expected_height(config: &TaskConfig) -> Result<f64, PolicyError> {
    let mut c = config.clone();
    c.task = TaskKind::Tracking;
    c.scene = "generator:flat:0:16x16".into();
    c.target_motion = Some(TargetMotion::Static);
    c.random_init = false;
    c.safe_start = vec![[400.0, 800.0, 0.0]];
    c.reset_area = Some([0.0, 1600.0, 0.0, 1600.0, 0.0, 300.0]);
    c.target_locations.clear();
    c.observation.modalities = vec![Modality::Mask];
    let mut env = TaskEnv::new(c)?;
    let obs = env.reset(0)?;
    let frame = obs.frame(Modality::Mask).ok_or(PolicyError::MissingModality(Modality::Mask))?;
    let color = env.target_mask_color().ok_or(PolicyError::NoTarget)?;
    let b = bbox_from_mask(frame, color)?
        .ok_or_else(|| PolicyError::Other("target not visible during calibration".into()))?;
    Ok(b.height() as f64 / frame.height as f64)
}

/// Servos the target's mask bbox to the image center and the calibrated height.
#[derive(Debug, Clone)]
pub struct PidTracker {
    pub gains: PidGains,
    /// Bbox height as a fraction of frame height.
    pub expected_height: f64,
    pub color: Rgb,
    pub dt: f64,
    pub max_angular: f64,
    pub max_linear: f64,
    x: Pid,
    h: Pid,
    last_side: f64,
}

impl PidTracker {
    pub fn new(gains: PidGains, expected_height: f64, color: Rgb) -> Self {
        Self {
            gains,
            expected_height,
            color,
            dt: 1.0 / BASE_TICK_HZ,
            max_angular: 30.0,
            max_linear: 1.0,
            x: Pid::default(),
            h: Pid::default(),
            last_side: 1.0,
        }
    }

    /// Calibrates against `config` and picks the target color up at `reset`.
    pub fn for_config(gains: PidGains, config: &TaskConfig) -> Result<Self, PolicyError> {
        Ok(Self::new(gains, calibrate_expected_height(config)?, Rgb(0, 0, 0)))
    }

    pub fn clear(&mut self) {
        self.x = Pid::default();
        self.h = Pid::default();
        self.last_side = 1.0;
    }

    pub fn command(&mut self, mask: &Frame) -> Result<ContinuousMoveAction, PolicyError> {
        let Some(b) = bbox_from_mask(mask, self.color)? else {
            self.x.prev = None;
            self.h.prev = None;
            return Ok(ContinuousMoveAction::new(self.last_side * self.max_angular, 0.0));
        };
        // pixel u covers [u, u + 1)
        let cx = b.center().0 + 0.5;
        let half = mask.width as f64 / 2.0;
        let ex = ((cx - half) / half).clamp(-1.0, 1.0);
        if ex != 0.0 {
            self.last_side = ex.signum();
        }
        let h = b.height() as f64 / mask.height as f64;
        let eh = (self.expected_height - h) / self.expected_height;
        let ang = self.x.update(&self.gains, ex, self.dt) * self.max_angular;
        let lin = self.h.update(&self.gains, eh, self.dt) * self.max_linear;
        Ok(ContinuousMoveAction::new(
            ang.clamp(-self.max_angular, self.max_angular),
            lin.clamp(-self.max_linear, self.max_linear),
        ))
    }
}

impl Policy for PidTracker {
    fn name(&self) -> &str {
        "pid"
    }

    fn reset(&mut self, env: &TaskEnv, _seed: u64) -> Result<(), PolicyError> {
        self.clear();
        self.color = env.target_mask_color().ok_or(PolicyError::NoTarget)?;
        self.dt = control_dt(env);
        (self.max_angular, self.max_linear) = bounds(env.config());
        Ok(())
    }

    fn act(&mut self, _env: &TaskEnv, obs: &Observation) -> Result<Action, PolicyError> {
        let mask = obs.frame(Modality::Mask).ok_or(PolicyError::MissingModality(Modality::Mask))?;
        Ok(Action::Continuous(self.command(mask)?))
    }
}

/// Expert perturbation level, 0 (clean) to 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PerturbationLevel(u8);

impl PerturbationLevel {
    pub const ALL: [PerturbationLevel; 4] = [Self(0), Self(1), Self(2), Self(3)];

    pub fn new(level: u8) -> Option<Self> {
        (level <= 3).then_some(Self(level))
    }

    pub fn level(self) -> u8 {
        self.0
    }

    /// Gaussian noise stddev as a fraction of each axis bound.
    pub fn noise_std(self) -> f64 {
        [0.0, 0.1, 0.25, 0.5][self.0 as usize]
    }

    pub fn random_prob(self) -> f64 {
        [0.0, 0.1, 0.25, 0.5][self.0 as usize]
    }
}

pub const EXPERT_DISTANCE: f64 = 2.5;
const EXPERT_K_THETA: f64 = 2.0;
const EXPERT_K_RHO: f64 = 1.0;

/// Proportional ground-truth controller, then perturbed and clamped to
/// `(max_angular, max_linear)`.
pub fn expert_tracker(
    rel: &RelativeState,
    level: PerturbationLevel,
    bounds: (f64, f64),
    rng: &mut impl Rng,
) -> ContinuousMoveAction {
    let (ma, ml) = bounds;
    let mut ang = EXPERT_K_THETA * rel.direction;
    let mut lin = EXPERT_K_RHO * (rel.distance - EXPERT_DISTANCE);
    if level.random_prob() > 0.0 && rng.gen_bool(level.random_prob()) {
        ang = rng.gen_range(-ma..=ma);
        lin = rng.gen_range(-ml..=ml);
    }
    let sd = level.noise_std();
    if sd > 0.0 {
        let n = Normal::new(0.0, sd).expect("finite stddev");
        ang += n.sample(rng) * ma;
        lin += n.sample(rng) * ml;
    }
    ContinuousMoveAction::new(ang.clamp(-ma, ma), lin.clamp(-ml, ml))
}

#[derive(Debug, Clone)]
pub struct ExpertTracker {
    pub level: PerturbationLevel,
    rng: ChaCha8Rng,
    bounds: (f64, f64),
}

impl ExpertTracker {
    pub fn new(level: PerturbationLevel) -> Self {
        Self { level, rng: ChaCha8Rng::seed_from_u64(0), bounds: (30.0, 1.0) }
    }
}

impl Policy for ExpertTracker {
    fn name(&self) -> &str {
        "expert"
    }

    fn reset(&mut self, env: &TaskEnv, seed: u64) -> Result<(), PolicyError> {
        self.rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_E4BE_u64);
        self.bounds = bounds(env.config());
        Ok(())
    }

    fn act(&mut self, _env: &TaskEnv, obs: &Observation) -> Result<Action, PolicyError> {
        Ok(Action::Continuous(expert_tracker(&obs.relative, self.level, self.bounds, &mut self.rng)))
    }
}

/// Follows the planner's smoothed route to the goal using ground truth.
#[derive(Debug, Clone, Default)]
pub struct OracleNavigator {
    route: Vec<Vec3>,
    next: usize,
}

const ORACLE_ARRIVE: f64 = 0.3;

impl OracleNavigator {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Policy for OracleNavigator {
    fn name(&self) -> &str {
        "oracle"
    }

    fn reset(&mut self, env: &TaskEnv, _seed: u64) -> Result<(), PolicyError> {
        let me = env.learner();
        let nav = Navigator::plan(&env.world().scene, me, env.goal(), 1.0)
            .map_err(|e| PolicyError::Planning(e.to_string()))?;
        self.route = nav.waypoints().to_vec();
        if self.route.is_empty() {
            self.route.push(env.goal());
        }
        self.next = 0;
        Ok(())
    }

    fn act(&mut self, env: &TaskEnv, _obs: &Observation) -> Result<Action, PolicyError> {
        let me = env.learner();
        while self.next + 1 < self.route.len() && me.position.planar_distance(self.route[self.next]) <= ORACLE_ARRIVE {
            self.next += 1;
        }
        let aim = self.route[self.next];
        let theta = wrap_deg(bearing(aim - me.position) - me.yaw);
        Ok(match env.config().action_space() {
            ActionSpace::Discrete => {
                let t = env.config().move_table();
                let step = t.turn_right[0].abs() * control_dt(env);
                let tol = (step * 0.6).max(0.5);
                Action::Discrete(if theta > tol {
                    DiscreteNavAction::TurnRight
                } else if theta < -tol {
                    DiscreteNavAction::TurnLeft
                } else {
                    DiscreteNavAction::Forward
                })
            }
            ActionSpace::Continuous => {
                let (ma, ml) = bounds(env.config());
                let ang = (3.0 * theta).clamp(-ma, ma);
                let lin = if theta.abs() > 10.0 { 0.0 } else { ml };
                Action::Continuous(ContinuousMoveAction::new(ang, lin))
            }
        })
    }
}

/// Uniform random actions from the task's action space.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl Default for RandomPolicy {
    fn default() -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(0) }
    }
}

impl Policy for RandomPolicy {
    fn name(&self) -> &str {
        "random"
    }

    fn reset(&mut self, _env: &TaskEnv, seed: u64) -> Result<(), PolicyError> {
        self.rng = ChaCha8Rng::seed_from_u64(seed ^ 0x000A_110F_5EED);
        Ok(())
    }

    fn act(&mut self, env: &TaskEnv, _obs: &Observation) -> Result<Action, PolicyError> {
        Ok(match env.config().action_space() {
            ActionSpace::Discrete => {
                Action::Discrete(DiscreteNavAction::ALL[self.rng.gen_range(0..DiscreteNavAction::ALL.len())])
            }
            ActionSpace::Continuous => {
                let ((a0, a1), (l0, l1)) = env.config().continuous_bounds();
                Action::Continuous(ContinuousMoveAction::new(self.rng.gen_range(a0..=a1), self.rng.gen_range(l0..=l1)))
            }
        })
    }
}

/// Never moves.
#[derive(Debug, Clone, Copy, Default)]
pub struct HoldPolicy;

impl Policy for HoldPolicy {
    fn name(&self) -> &str {
        "hold"
    }

    fn reset(&mut self, _env: &TaskEnv, _seed: u64) -> Result<(), PolicyError> {
        Ok(())
    }

    fn act(&mut self, env: &TaskEnv, _obs: &Observation) -> Result<Action, PolicyError> {
        Ok(hold_for(env.config().action_space()))
    }
}

pub fn hold_for(space: ActionSpace) -> Action {
    match space {
        ActionSpace::Discrete => Action::Discrete(DiscreteNavAction::Hold),
        ActionSpace::Continuous => Action::Continuous(ContinuousMoveAction::ZERO),
    }
}
