//! The gym-style task environment.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{ActionSpace, ConfigError, TargetMotion, TaskConfig, TaskKind};
use super::reward::{nav_reward_with, nav_success, target_in_view, tracking_reward};
use crate::geom::{bearing, heading, wrap_deg, Aabb3, Rgb, Vec3};
use crate::sensors::{render, CameraConfig, CameraPose, Frame, Modality, RelativeState};
use crate::sim::{
    Action, ContinuousMoveAction, EntityClass, EntityKind, EntityState, Event, RandomWalker, SimClock, SimError, World,
};
use crate::world::{
    find_path, find_path_to_region, GeneratorSpec, InteractiveObject, ObjectKind, SceneSpec, WorldError,
};

pub const LEARNER_ID: &str = "agent0";
pub const TARGET_ID: &str = "target";
pub const GOAL_MARKER_ID: &str = "goal";
const GOAL_MARKER_COLOR: Rgb = Rgb(0, 255, 0);
const SPAWN_ATTEMPTS: usize = 200;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EnvError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("episode finished or not started; call reset")]
    NeedsReset,
    #[error("task expects {expected:?} actions")]
    ActionType { expected: ActionSpace },
    #[error("could only place {placed} of {requested} entities")]
    SpawnSpaceExhausted { requested: usize, placed: usize },
    #[error("no camera {0}")]
    NoSuchCamera(u32),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    World(#[from] WorldError),
}

/// Agent control rate expressed in world ticks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlRate {
    Ticks(u32),
    /// A fresh interval in `1..=4` per step.
    Jitter,
}

impl ControlRate {
    /// `None` means uncontrolled.
    pub fn from_fps(fps: Option<f64>) -> Self {
        match fps {
            Some(f) => ControlRate::Ticks(SimClock::interval_for_fps(f)),
            None => ControlRate::Jitter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationConfig {
    pub seed: u64,
    pub illumination: (f64, f64),
    pub albedo: bool,
    pub appearance: bool,
    pub layout: bool,
}

impl AugmentationConfig {
    /// Ranges that leave the environment unchanged.
    pub fn identity(seed: u64) -> Self {
        Self { seed, illumination: (1.0, 1.0), albedo: false, appearance: false, layout: false }
    }

    pub fn full(seed: u64) -> Self {
        Self { seed, illumination: (0.5, 1.5), albedo: true, appearance: true, layout: false }
    }
}

/// Settings the toolkit wrappers install on the core environment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ToolkitSettings {
    pub distractors: usize,
    pub control: Option<ControlRate>,
    pub augmentation: Option<AugmentationConfig>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub frames: Vec<Frame>,
    pub relative: RelativeState,
    pub step: u32,
}

impl Observation {
    pub fn frame(&self, m: Modality) -> Option<&Frame> {
        self.frames.iter().find(|f| f.modality == m)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub success: bool,
    /// Learner travel so far, meters.
    pub path_length: f64,
    /// Shortest route length into the success region from the start (navigation).
    pub shortest_length: f64,
    pub steps: u32,
    pub ticks: u32,
    pub lost_steps: u32,
    pub collisions: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
    pub info: StepInfo,
}

#[derive(Debug, Clone)]
struct Serpentine {
    center: Vec3,
    radius: f64,
    amplitude: f64,
    lobes: f64,
    speed: f64,
    dir: f64,
    phi: f64,
}

const LOOKAHEAD: f64 = 1.0;

impl Serpentine {
    fn point(&self, phi: f64) -> Vec3 {
        let r = self.radius + self.amplitude * libm::sin(self.lobes * phi);
        self.center + Vec3::new(r * libm::cos(phi), r * libm::sin(phi), 0.0)
    }

    fn tangent(&self, phi: f64) -> Vec3 {
        let h = 1e-4;
        ((self.point(phi + h * self.dir) - self.point(phi - h * self.dir)) * 0.5).normalized()
    }

    fn action(&mut self, me: &EntityState) -> Action {
        for _ in 0..2000 {
            if self.point(self.phi).planar_distance(me.position) >= LOOKAHEAD {
                break;
            }
            self.phi += self.dir * 0.002;
        }
        let theta = wrap_deg(bearing(self.point(self.phi) - me.position) - me.yaw);
        let ang = (theta * 4.0).clamp(-me.class.max_angular, me.class.max_angular);
        let lin = if theta.abs() < 60.0 { self.speed * libm::cos(theta.to_radians()) } else { 0.0 };
        Action::Continuous(ContinuousMoveAction::unclamped(ang, lin))
    }
}

#[derive(Debug, Clone)]
enum TargetCtrl {
    None,
    Serpentine(Serpentine),
    Walker(RandomWalker),
}

#[derive(Debug, Clone, Default)]
struct Episode {
    active: bool,
    steps: u32,
    ticks: u32,
    lost: u32,
    prev_dist_cm: f64,
    path_length: f64,
    shortest_length: f64,
    collisions: u32,
}

/// Core environment: one learner, an optional target and scripted distractors.
#[derive(Debug, Clone)]
pub struct TaskEnv {
    config: TaskConfig,
    base_scene: SceneSpec,
    world: World,
    settings: ToolkitSettings,
    goal: Vec3,
    episodes: u64,
    episode: Episode,
    rng: ChaCha8Rng,
    target_ctrl: TargetCtrl,
    walkers: BTreeMap<String, RandomWalker>,
    last_events: Vec<Event>,
}

impl TaskEnv {
    pub fn new(config: TaskConfig) -> Result<Self, EnvError> {
        config.validate()?;
        let base_scene = config.load_scene()?;
        Self::with_scene(config, base_scene)
    }

    /// Uses `scene` directly instead of loading `config.scene`.
    pub fn with_scene(config: TaskConfig, mut scene: SceneSpec) -> Result<Self, EnvError> {
        config.validate()?;
        config.apply_overrides(&mut scene)?;
        let world = World::new(scene.clone(), 0);
        Ok(Self {
            config,
            base_scene: scene,
            world,
            settings: ToolkitSettings::default(),
            goal: Vec3::ZERO,
            episodes: 0,
            episode: Episode::default(),
            rng: ChaCha8Rng::seed_from_u64(0),
            target_ctrl: TargetCtrl::None,
            walkers: BTreeMap::new(),
            last_events: Vec::new(),
        })
    }

    pub fn config(&self) -> &TaskConfig {
        &self.config
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn world_mut(&mut self) -> &mut World {
        &mut self.world
    }

    pub fn base_scene(&self) -> &SceneSpec {
        &self.base_scene
    }

    pub fn settings(&self) -> &ToolkitSettings {
        &self.settings
    }

    pub fn settings_mut(&mut self) -> &mut ToolkitSettings {
        &mut self.settings
    }

    pub fn task(&self) -> TaskKind {
        self.config.task
    }

    pub fn goal(&self) -> Vec3 {
        self.goal
    }

    pub fn is_active(&self) -> bool {
        self.episode.active
    }

    pub fn step_count(&self) -> u32 {
        self.episode.steps
    }

    pub fn last_events(&self) -> &[Event] {
        &self.last_events
    }

    pub fn learner(&self) -> &EntityState {
        self.world.entity(LEARNER_ID).expect("learner exists after reset")
    }

    pub fn target(&self) -> Option<&EntityState> {
        self.world.entity(TARGET_ID)
    }

    pub fn target_mask_color(&self) -> Option<Rgb> {
        match self.config.task {
            TaskKind::Tracking => self.target().map(|t| t.mask_color),
            TaskKind::Navigation => Some(GOAL_MARKER_COLOR),
        }
    }

    pub fn control_rate(&self) -> ControlRate {
        self.settings.control.unwrap_or(ControlRate::Ticks(self.config.interval))
    }

    pub fn learner_camera(&self) -> CameraConfig {
        self.config.camera(0)
    }

    fn target_class(&self) -> EntityClass {
        self.config
            .agents
            .get(1)
            .and_then(|a| a.class_name.parse().ok())
            .map(EntityClass::of)
            .unwrap_or_else(|| EntityClass::of(EntityKind::Human))
    }

    pub fn relative(&self) -> RelativeState {
        let me = self.learner();
        let target_pos = match self.config.task {
            TaskKind::Tracking => self.target().map_or(me.position, |t| t.position),
            TaskKind::Navigation => self.goal,
        };
        let probe = EntityState::new("", me.class, target_pos, 0.0);
        crate::sensors::relative_state(me, &probe)
    }

    /// Number of Human-sized spawn slots in the reset area.
    pub fn spawn_capacity(&self) -> usize {
        let human = EntityClass::of(EntityKind::Human);
        let s = &self.base_scene;
        let mut n = 0;
        for j in 0..s.ny {
            for i in 0..s.nx {
                let c = s.cell_center(i, j);
                if s.reset_area.contains_planar(c) && placement_free(s, &human, c) {
                    n += 1;
                }
            }
        }
        n
    }

    pub fn despawn_distractors(&mut self) {
        for id in std::mem::take(&mut self.walkers).into_keys() {
            let _ = self.world.destroy_entity(&id);
        }
    }

    pub fn reset(&mut self, seed: u64) -> Result<Observation, EnvError> {
        let episode_index = self.episodes;
        self.episodes += 1;
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.walkers.clear();
        self.last_events.clear();
        self.target_ctrl = TargetCtrl::None;
        let aug = self.settings.augmentation.clone();
        let mut aug_rng = aug.as_ref().map(|a| {
            ChaCha8Rng::seed_from_u64(a.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ episode_index.wrapping_add(1))
        });

        let mut scene = self.base_scene.clone();
        if let (Some(a), Some(r)) = (&aug, aug_rng.as_mut()) {
            if a.layout {
                if let Ok(g) = self.config.scene.parse::<GeneratorSpec>() {
                    if let Ok(mut s) = g.with_seed(r.gen()).generate() {
                        if self.config.apply_overrides(&mut s).is_ok() {
                            scene = s;
                        }
                    }
                }
            }
        }
        self.world = World::new(scene, seed);
        let class = self.config.learner_class();

        match self.config.task {
            TaskKind::Tracking => self.place_tracking(class)?,
            TaskKind::Navigation => self.place_navigation(class)?,
        }
        if let Some(l) = self.world.entity_mut(LEARNER_ID) {
            l.move_table = self.config.move_table();
        }

        let n = self.settings.distractors;
        let area = self.world.scene.reset_area;
        let human = EntityClass::of(EntityKind::Human);
        let mut placed = 0;
        let mut attempts = 0;
        while placed < n && attempts < SPAWN_ATTEMPTS * n.max(1) {
            attempts += 1;
            let p = Vec3::new(
                self.rng.gen_range(area.min.x..=area.max.x),
                self.rng.gen_range(area.min.y..=area.max.y),
                0.0,
            );
            let yaw = self.rng.gen_range(-180.0..180.0);
            let id = format!("distractor{placed:02}");
            if self.world.spawn_entity(human, p, yaw, &id).is_ok() {
                self.walkers.insert(id, RandomWalker::new(1.0));
                placed += 1;
            }
        }
        if placed < n {
            return Err(EnvError::SpawnSpaceExhausted { requested: n, placed });
        }

        if let (Some(a), Some(r)) = (&aug, aug_rng.as_mut()) {
            let (lo, hi) = a.illumination;
            self.world.illumination = if hi > lo { r.gen_range(lo..=hi) } else { lo };
            if a.albedo {
                for e in self.world.entities_mut() {
                    e.albedo = Rgb(r.gen_range(40..=230), r.gen_range(40..=230), r.gen_range(40..=230));
                }
                for o in self.world.scene.objects.iter_mut() {
                    o.albedo = Rgb(r.gen_range(40..=230), r.gen_range(40..=230), r.gen_range(40..=230));
                }
            }
            if a.appearance {
                let mut ids: Vec<u32> = (0..self.world.len() as u32).collect();
                ids.shuffle(r);
                for (e, id) in self.world.entities_mut().zip(ids) {
                    e.appearance_id = id;
                }
            }
        }

        self.episode = Episode { active: true, ..Episode::default() };
        self.episode.prev_dist_cm = self.relative().distance * 100.0;
        if self.config.task == TaskKind::Navigation {
            self.episode.shortest_length = self.shortest_route_length()?;
        }
        Ok(self.observe())
    }

    fn random_free_pose(&mut self, class: &EntityClass) -> Option<(Vec3, f64)> {
        let s = &self.world.scene;
        let area = s.reset_area;
        let free: Vec<Vec3> = (0..s.ny)
            .flat_map(|j| (0..s.nx).map(move |i| (i, j)))
            .map(|(i, j)| s.cell_center(i, j))
            .filter(|c| area.contains_planar(*c) && self.world.is_free(class, *c, None))
            .collect();
        let p = *free.choose(&mut self.rng)?;
        Some((p, self.rng.gen_range(-180.0..180.0)))
    }

    fn learner_start(&mut self, class: &EntityClass) -> Result<(Vec3, f64), EnvError> {
        if self.config.random_init {
            return self.random_free_pose(class).ok_or(EnvError::SpawnSpaceExhausted { requested: 1, placed: 0 });
        }
        Ok((self.world.scene.safe_start[0], 0.0))
    }

    fn place_tracking(&mut self, class: EntityClass) -> Result<(), EnvError> {
        let tclass = self.target_class();
        let params = self.config.tracking_params();
        match self.config.target_motion.clone().unwrap_or(TargetMotion::Static) {
            TargetMotion::Serpentine { radius, amplitude, lobes, speed, amplitude_spread } => {
                let a = self.world.scene.reset_area;
                let center = Vec3::new(0.5 * (a.min.x + a.max.x), 0.5 * (a.min.y + a.max.y), 0.0);
                let jitter = 1.0 + self.rng.gen_range(-amplitude_spread..=amplitude_spread);
                let mut sp = Serpentine {
                    center,
                    radius,
                    amplitude: amplitude * jitter,
                    lobes: lobes as f64,
                    speed,
                    dir: if self.rng.gen_bool(0.5) { 1.0 } else { -1.0 },
                    phi: self.rng.gen_range(0.0..std::f64::consts::TAU),
                };
                let p = sp.point(sp.phi);
                let t = sp.tangent(sp.phi);
                let yaw = bearing(t);
                let learner = p - t * params.expected_distance;
                self.world.spawn_entity(class, learner, yaw, LEARNER_ID)?;
                self.world.spawn_entity(tclass, p, yaw, TARGET_ID)?;
                sp.action(self.world.entity(TARGET_ID).unwrap());
                self.target_ctrl = TargetCtrl::Serpentine(sp);
            }
            motion => {
                let (p, yaw) = self.learner_start(&class)?;
                self.world.spawn_entity(class, p, yaw, LEARNER_ID)?;
                // the learner turns toward the first free bearing
                let mut last = None;
                for off in [0.0, 45.0, -45.0, 90.0, -90.0, 135.0, -135.0, 180.0] {
                    let y = yaw + off;
                    match self.world.spawn_entity(tclass, p + heading(y) * params.expected_distance, y, TARGET_ID) {
                        Ok(_) => {
                            if off != 0.0 {
                                self.world.place_entity(LEARNER_ID, p, y)?;
                            }
                            last = None;
                            break;
                        }
                        Err(e) => last = Some(e),
                    }
                }
                if let Some(e) = last {
                    return Err(e.into());
                }
                if let TargetMotion::RandomWalk { speed } = motion {
                    self.target_ctrl = TargetCtrl::Walker(RandomWalker::new(speed));
                }
            }
        }
        Ok(())
    }

    fn place_navigation(&mut self, class: EntityClass) -> Result<(), EnvError> {
        let (p, yaw) = self.learner_start(&class)?;
        self.world.spawn_entity(class, p, yaw, LEARNER_ID)?;
        let targets = &self.world.scene.target_locations;
        let goal = if targets.is_empty() {
            return Err(ConfigError::new("target_locations", "navigation needs a target location").into());
        } else {
            targets[self.rng.gen_range(0..targets.len())]
        };
        let scene = &mut self.world.scene;
        let (i, j) = scene.cell_of(goal).ok_or(WorldError::OutOfGrid(goal))?;
        let z = scene.ground_at(i, j);
        self.goal = Vec3::new(goal.x, goal.y, z);
        scene.objects.retain(|o| o.id != GOAL_MARKER_ID);
        scene.objects.push(InteractiveObject {
            id: GOAL_MARKER_ID.into(),
            kind: ObjectKind::TargetMarker,
            position: self.goal,
            yaw: 0.0,
            state: None,
            footprint: Aabb3::new(
                Vec3::new(goal.x - 0.2, goal.y - 0.2, z),
                Vec3::new(goal.x + 0.2, goal.y + 0.2, z + 1.0),
            ),
            albedo: Rgb(230, 40, 40),
            mask_color: GOAL_MARKER_COLOR,
        });
        Ok(())
    }

    /// Length of the smoothed shortest route from the learner into the success disc.
    fn shortest_route_length(&self) -> Result<f64, EnvError> {
        let me = self.learner();
        let s = &self.world.scene;
        let radius = self.config.nav_params().success_distance;
        let start = me.position;
        if start.planar_distance(self.goal) < radius {
            return Ok(0.0);
        }
        let path = find_path(s, &me.class, start, self.goal)
            .or_else(|_| find_path_to_region(s, &me.class, start, self.goal, radius))?;
        let mut pts = crate::sim::smooth_route(s, me, path.waypoints);
        if let Some(last) = pts.last_mut() {
            if s.cell_of(self.goal) == s.cell_of(*last) {
                *last = Vec3::new(self.goal.x, self.goal.y, last.z);
            }
        }
        Ok(route_length_into_disc(start, &pts, self.goal, radius))
    }

    fn check_action(&self, action: Action) -> Result<Action, EnvError> {
        let space = self.config.action_space();
        match (space, action) {
            (ActionSpace::Discrete, Action::Discrete(_)) => Ok(action),
            (ActionSpace::Continuous, Action::Continuous(c)) => {
                let ((a0, a1), (l0, l1)) = self.config.continuous_bounds();
                Ok(Action::Continuous(ContinuousMoveAction::new(c.angular().clamp(a0, a1), c.linear().clamp(l0, l1))))
            }
            _ => Err(EnvError::ActionType { expected: space }),
        }
    }

    pub fn step(&mut self, action: Action) -> Result<StepResult, EnvError> {
        if !self.episode.active {
            return Err(EnvError::NeedsReset);
        }
        let action = self.check_action(action)?;
        let ticks = match self.control_rate() {
            ControlRate::Ticks(n) => n.max(1),
            ControlRate::Jitter => self.rng.gen_range(1..=4),
        };
        let dt = self.world.clock.tick_dt;
        self.last_events.clear();
        for t in 0..ticks {
            let mut acts = BTreeMap::new();
            acts.insert(LEARNER_ID.to_string(), if t == 0 { action } else { action.held() });
            let now = self.world.clock.sim_time();
            if let Some(target) = self.world.entity(TARGET_ID) {
                let a = match &mut self.target_ctrl {
                    TargetCtrl::None => None,
                    TargetCtrl::Serpentine(sp) => Some(sp.action(target)),
                    TargetCtrl::Walker(w) => Some(w.action(&self.world.scene, target, now, &mut self.rng).0),
                };
                if let Some(a) = a {
                    acts.insert(TARGET_ID.to_string(), a);
                }
            }
            for (id, w) in self.walkers.iter_mut() {
                let me = self.world.entity(id).expect("walker entity exists");
                let (a, ev) = w.action(&self.world.scene, me, now, &mut self.rng);
                acts.insert(id.clone(), a);
                self.last_events.extend(ev);
            }
            let before = self.learner().position;
            let events = self.world.step_world(&acts, dt)?;
            self.episode.path_length += before.planar_distance(self.learner().position);
            self.episode.collisions +=
                events.iter().filter(|e| matches!(e, Event::Collision { entity, .. } if entity == LEARNER_ID)).count()
                    as u32;
            self.last_events.extend(events);
        }
        self.episode.steps += 1;
        self.episode.ticks += ticks;
        let rel = self.relative();
        let max_steps = self.config.max_steps;
        let (reward, terminated, truncated, success) = match self.config.task {
            TaskKind::Tracking => {
                let p = self.config.tracking_params();
                if target_in_view(&rel, &p) {
                    self.episode.lost = 0;
                } else {
                    self.episode.lost += 1;
                }
                let lost = self.episode.lost >= p.lost_patience;
                let capped = !lost && self.episode.steps >= max_steps;
                (tracking_reward(&rel, &p), lost, capped, capped)
            }
            TaskKind::Navigation => {
                let p = self.config.nav_params();
                let d_now = rel.distance * 100.0;
                let r = nav_reward_with(self.episode.prev_dist_cm, d_now, rel.direction, &p);
                self.episode.prev_dist_cm = d_now;
                let ok = nav_success(&rel, &p);
                (r, ok, !ok && self.episode.steps >= max_steps, ok)
            }
        };
        if terminated || truncated {
            self.episode.active = false;
        }
        Ok(StepResult {
            observation: self.observe(),
            reward,
            terminated,
            truncated,
            info: StepInfo {
                success,
                path_length: self.episode.path_length,
                shortest_length: self.episode.shortest_length,
                steps: self.episode.steps,
                ticks: self.episode.ticks,
                lost_steps: self.episode.lost,
                collisions: self.episode.collisions,
            },
        })
    }

    pub fn observe(&self) -> Observation {
        let cfg = self.learner_camera();
        let frames = self
            .config
            .observation
            .modalities
            .iter()
            .map(|&m| self.render_with(&cfg, self.camera_pose(0), m))
            .collect();
        Observation { frames, relative: self.relative(), step: self.episode.steps }
    }

    fn camera_pose(&self, agent: usize) -> CameraPose {
        let id = if agent == 0 { LEARNER_ID } else { TARGET_ID };
        let e = self.world.entity(id).unwrap_or_else(|| self.learner());
        CameraPose::of_entity(e, &self.config.camera(agent))
    }

    fn render_with(&self, cfg: &CameraConfig, pose: CameraPose, m: Modality) -> Frame {
        let entities: Vec<&EntityState> = self.world.entities().collect();
        render(&self.world.scene, &entities, &pose, cfg, m, self.world.illumination)
    }

    /// Ids of cameras that [`TaskEnv::render_camera`] accepts.
    pub fn camera_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.config.agents.iter().map(|a| a.cam_id).collect();
        ids.extend(self.config.third_cam.as_ref().map(|t| t.cam_id));
        ids
    }

    pub fn render_camera(&self, cam_id: u32, m: Modality) -> Result<Frame, EnvError> {
        if let Some(t) = self.config.third_cam.as_ref().filter(|t| t.cam_id == cam_id) {
            let me = self.learner();
            let cfg = CameraConfig { hfov: t.fov, cam_id, ..self.learner_camera() };
            let pose = CameraPose {
                position: me.position + Vec3::new(0.0, 0.0, t.height * 0.01),
                yaw: me.yaw + t.yaw,
                pitch: t.pitch,
                roll: t.roll,
            };
            return Ok(self.render_with(&cfg, pose, m));
        }
        let agent = self.config.agents.iter().position(|a| a.cam_id == cam_id).ok_or(EnvError::NoSuchCamera(cam_id))?;
        let agent = if self.config.task == TaskKind::Tracking { agent.min(1) } else { 0 };
        Ok(self.render_with(&self.config.camera(agent), self.camera_pose(agent), m))
    }
}

fn placement_free(scene: &SceneSpec, class: &EntityClass, p: Vec3) -> bool {
    let probe = EntityState::new("", *class, p, 0.0);
    crate::sim::placement_obstacle(scene, &[], &probe).is_none()
}

/// Arc length along `start -> pts...` until the polyline first enters the open disc.
pub fn route_length_into_disc(start: Vec3, pts: &[Vec3], center: Vec3, radius: f64) -> f64 {
    let mut len = 0.0;
    let mut a = start;
    for &b in pts {
        let d = Vec3::new(b.x - a.x, b.y - a.y, 0.0);
        let seg = libm::hypot(d.x, d.y);
        if seg > 0.0 {
            // solve |a + s*u - c| = radius for the first s in [0, seg]
            let u = d * (1.0 / seg);
            let w = Vec3::new(a.x - center.x, a.y - center.y, 0.0);
            let bq = w.x * u.x + w.y * u.y;
            let cq = w.x * w.x + w.y * w.y - radius * radius;
            let disc = bq * bq - cq;
            if disc >= 0.0 {
                let s = -bq - libm::sqrt(disc);
                if (0.0..=seg).contains(&s) {
                    return len + s;
                }
            }
        }
        len += seg;
        a = b;
    }
    len
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::DiscreteNavAction;

    fn tracking_env() -> TaskEnv {
        let mut c = TaskConfig::minimal(TaskKind::Tracking, "generator:flat:0:16x16");
        c.observation.width = 32;
        c.observation.height = 24;
        c.observation.modalities = vec![Modality::Color, Modality::Mask, Modality::Depth, Modality::Normal];
        TaskEnv::new(c).unwrap()
    }

    #[test]
    fn tracking_reset_places_target_ahead() {
        let mut env = tracking_env();
        let obs = env.reset(3).unwrap();
        assert_eq!(obs.frames.len(), 4);
        let r = obs.relative;
        assert!((r.distance - 2.5).abs() < 1e-12 && r.direction.abs() < 1e-9 && r.height == 0.0);
        let step = env.step(Action::Continuous(ContinuousMoveAction::ZERO)).unwrap();
        assert_eq!(step.reward, 1.0);
    }

    #[test]
    fn same_seed_same_observation() {
        let mut env = tracking_env();
        let a = env.reset(11).unwrap();
        let b = env.reset(11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn lifecycle_and_action_types() {
        let mut env = tracking_env();
        assert_eq!(env.step(Action::HOLD).unwrap_err(), EnvError::NeedsReset);
        env.reset(0).unwrap();
        assert!(matches!(env.step(Action::HOLD), Err(EnvError::ActionType { .. })));
        let mut last = None;
        for _ in 0..500 {
            last = Some(env.step(Action::Continuous(ContinuousMoveAction::ZERO)).unwrap());
        }
        let last = last.unwrap();
        assert!(last.truncated && !last.terminated && last.info.success && last.info.steps == 500);
        assert_eq!(env.step(Action::Continuous(ContinuousMoveAction::ZERO)).unwrap_err(), EnvError::NeedsReset);
    }

    #[test]
    fn navigation_start_and_success() {
        let mut c = TaskConfig::minimal(TaskKind::Navigation, "generator:flat:0:16x16");
        c.observation.width = 16;
        c.observation.height = 12;
        let mut env = TaskEnv::new(c).unwrap();
        env.reset(5).unwrap();
        assert_eq!(env.learner().position, env.world().scene.safe_start[0]);
        let first = env.step(Action::HOLD).unwrap();
        assert!(first.reward <= 0.0);
        let goal = env.goal();
        let yaw = bearing(goal - env.learner().position);
        let p = goal - heading(yaw) * 2.0;
        env.world_mut().place_entity(LEARNER_ID, p, yaw).unwrap();
        let s = env.step(Action::Discrete(DiscreteNavAction::Hold)).unwrap();
        assert!(s.terminated && s.info.success);
    }

    #[test]
    fn disc_cut_on_straight_route() {
        let l = route_length_into_disc(Vec3::ZERO, &[Vec3::new(10.0, 0.0, 0.0)], Vec3::new(10.0, 0.0, 0.0), 3.0);
        assert!((l - 7.0).abs() < 1e-12);
        let l = route_length_into_disc(
            Vec3::ZERO,
            &[Vec3::new(0.0, 4.0, 0.0), Vec3::new(10.0, 4.0, 0.0)],
            Vec3::new(10.0, 4.0, 0.0),
            3.0,
        );
        assert!((l - 11.0).abs() < 1e-12);
    }
}
