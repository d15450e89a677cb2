//! Entity state, action types and the single-entity locomotion step.
//!
//! Interaction is animation-like: a move either happens in full or is cancelled.
//! The swept footprint is tested against blocked cells, obstructing object
//! footprints, other entities and terrain rises; crouch, jump and climb relax the
//! respective limits.

use serde::{Deserialize, Serialize};
use std::str::FromStr;

use super::class::{EntityClass, LIMITS};
use crate::geom::{heading, wrap_deg, Rgb, Vec3};
use crate::world::{AreaKind, SceneSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stance {
    Stand,
    Crouch,
    Airborne,
    Climb,
}

/// The shared 7-action discrete space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscreteNavAction {
    Forward,
    Backward,
    TurnLeft,
    TurnRight,
    Jump,
    Crouch,
    Hold,
}

impl DiscreteNavAction {
    pub const ALL: [DiscreteNavAction; 7] = [
        DiscreteNavAction::Forward,
        DiscreteNavAction::Backward,
        DiscreteNavAction::TurnLeft,
        DiscreteNavAction::TurnRight,
        DiscreteNavAction::Jump,
        DiscreteNavAction::Crouch,
        DiscreteNavAction::Hold,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DiscreteNavAction::Forward => "forward",
            DiscreteNavAction::Backward => "backward",
            DiscreteNavAction::TurnLeft => "turn_left",
            DiscreteNavAction::TurnRight => "turn_right",
            DiscreteNavAction::Jump => "jump",
            DiscreteNavAction::Crouch => "crouch",
            DiscreteNavAction::Hold => "hold",
        }
    }

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&a| a == self).unwrap()
    }
}

impl FromStr for DiscreteNavAction {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let k = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        let k = k.strip_prefix("move_").unwrap_or(&k);
        Self::ALL
            .into_iter()
            .find(|a| a.name() == k)
            .or(match k {
                "keep_current" | "keep" | "stop" => Some(DiscreteNavAction::Hold),
                _ => None,
            })
            .ok_or_else(|| format!("unknown discrete action '{s}'"))
    }
}

pub const MAX_ANGULAR: f64 = 30.0;
pub const MAX_LINEAR: f64 = 1.0;

/// Continuous (angular deg/s, linear m/s) command, clamped on construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuousMoveAction {
    angular: f64,
    linear: f64,
}

impl ContinuousMoveAction {
    pub const ZERO: ContinuousMoveAction = ContinuousMoveAction { angular: 0.0, linear: 0.0 };

    pub fn new(angular: f64, linear: f64) -> Self {
        let fix = |v: f64, b: f64| if v.is_nan() { 0.0 } else { v.clamp(-b, b) };
        Self { angular: fix(angular, MAX_ANGULAR), linear: fix(linear, MAX_LINEAR) }
    }

    /// Bypasses the learner bounds; the stepper still applies the class limits.
    pub fn unclamped(angular: f64, linear: f64) -> Self {
        let fix = |v: f64| if v.is_nan() { 0.0 } else { v };
        Self { angular: fix(angular), linear: fix(linear) }
    }

    pub fn angular(&self) -> f64 {
        self.angular
    }

    pub fn linear(&self) -> f64 {
        self.linear
    }
}

/// One tick's command for an entity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Discrete(DiscreteNavAction),
    Continuous(ContinuousMoveAction),
    /// Continuation tick of a held impulse action: no motion, keeps the jump
    /// chain and the crouch.
    Coast,
}

impl Action {
    pub const HOLD: Action = Action::Discrete(DiscreteNavAction::Hold);

    /// The command repeated on the remaining ticks of a held control step.
    pub fn held(self) -> Action {
        match self {
            Action::Discrete(DiscreteNavAction::Jump) => Action::Coast,
            other => other,
        }
    }
}

/// `[angular deg/s, linear m/s]` per motion action of the discrete space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoveTable {
    pub forward: [f64; 2],
    pub backward: [f64; 2],
    pub turn_left: [f64; 2],
    pub turn_right: [f64; 2],
}

impl Default for MoveTable {
    fn default() -> Self {
        Self { forward: [0.0, 1.0], backward: [0.0, -1.0], turn_left: [-15.0, 0.0], turn_right: [15.0, 0.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityState {
    pub id: String,
    pub class: EntityClass,
    /// Feet position (hover position for aerial classes).
    pub position: Vec3,
    pub yaw: f64,
    pub stance: Stance,
    pub linear_v: f64,
    pub angular_v: f64,
    pub mask_color: Rgb,
    pub albedo: Rgb,
    pub appearance_id: u32,
    #[serde(default)]
    pub move_table: MoveTable,
    /// The previous executed action was a jump.
    #[serde(default)]
    pub jump_chain: bool,
    #[serde(default)]
    pub crouch_time: f64,
}

impl EntityState {
    pub fn new(id: &str, class: EntityClass, position: Vec3, yaw: f64) -> Self {
        Self {
            id: id.to_string(),
            class,
            position,
            yaw: wrap_deg(yaw),
            stance: Stance::Stand,
            linear_v: 0.0,
            angular_v: 0.0,
            mask_color: Rgb::BLACK,
            albedo: Rgb(200, 170, 150),
            appearance_id: 0,
            move_table: MoveTable::default(),
            jump_chain: false,
            crouch_time: 0.0,
        }
    }

    /// Current rendered height (crouching lowers it).
    pub fn body_height(&self) -> f64 {
        match self.stance {
            Stance::Crouch => LIMITS.crouch_clearance.min(self.class.height),
            _ => self.class.height,
        }
    }

    pub fn eye_position(&self) -> Vec3 {
        let eye = match self.stance {
            Stance::Crouch => self.class.eye_height * LIMITS.crouch_clearance / self.class.height.max(1e-9),
            _ => self.class.eye_height,
        };
        self.position + Vec3::new(0.0, 0.0, eye)
    }
}

/// Why a move was cancelled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Obstacle {
    Boundary,
    Blocked,
    Terrain,
    Ceiling,
    Object(String),
    Entity(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: EntityState,
    pub collision: Option<Obstacle>,
    pub climbed: bool,
}

/// Static and dynamic geometry tests for a circle of radius `r` at planar position `q`.
struct Probe<'a> {
    scene: &'a SceneSpec,
    others: &'a [&'a EntityState],
    occupancy: Vec<bool>,
}

impl<'a> Probe<'a> {
    fn new(scene: &'a SceneSpec, others: &'a [&'a EntityState]) -> Self {
        Self { scene, others, occupancy: scene.object_occupancy() }
    }

    /// Cells whose square overlaps the open disc.
    fn touched_cells(&self, q: Vec3, r: f64) -> impl Iterator<Item = (usize, usize)> + '_ {
        let cs = self.scene.cell_size;
        let i0 = ((q.x - r) / cs).floor().max(0.0) as usize;
        let j0 = ((q.y - r) / cs).floor().max(0.0) as usize;
        let i1 = (((q.x + r) / cs).floor().max(0.0) as usize).min(self.scene.nx - 1);
        let j1 = (((q.y + r) / cs).floor().max(0.0) as usize).min(self.scene.ny - 1);
        (j0..=j1).flat_map(move |j| (i0..=i1).map(move |i| (i, j))).filter(move |&(i, j)| {
            let (x0, x1, y0, y1) = self.scene.cell_bounds(i, j);
            let dx = (x0 - q.x).max(0.0).max(q.x - x1);
            let dy = (y0 - q.y).max(0.0).max(q.y - y1);
            dx * dx + dy * dy < r * r
        })
    }

    /// Highest ground under the footprint.
    fn support(&self, q: Vec3, r: f64) -> f64 {
        self.touched_cells(q, r).map(|(i, j)| self.scene.ground_at(i, j)).fold(f64::NEG_INFINITY, f64::max)
    }

    fn check(
        &self,
        me: &EntityState,
        from: Vec3,
        q: Vec3,
        z_ref: f64,
        rise_tol: f64,
        head_room: f64,
    ) -> Option<Obstacle> {
        let r = me.class.radius;
        let s = self.scene;
        if q.x - r < 0.0 || q.y - r < 0.0 || q.x + r > s.width() || q.y + r > s.depth() {
            return Some(Obstacle::Boundary);
        }
        if !me.class.is_aerial() {
            for (i, j) in self.touched_cells(q, r) {
                let k = s.idx(i, j);
                if s.area[k] == AreaKind::Blocked {
                    return Some(Obstacle::Blocked);
                }
                if s.ground[k] - z_ref > rise_tol + 1e-9 {
                    return Some(Obstacle::Terrain);
                }
                if s.clearance[k].unwrap_or(f64::INFINITY) < head_room {
                    return Some(Obstacle::Ceiling);
                }
                if self.occupancy[k] {
                    if let Some(o) =
                        s.objects.iter().filter(|o| o.obstructs()).find(|o| o.footprint.planar_distance_sq(q) < r * r)
                    {
                        return Some(Obstacle::Object(o.id.clone()));
                    }
                }
            }
        }
        for o in self.others {
            if o.class.is_aerial() != me.class.is_aerial() {
                continue;
            }
            let min = r + o.class.radius;
            let d_new = q.planar_distance(o.position);
            if d_new < min && d_new < from.planar_distance(o.position) {
                return Some(Obstacle::Entity(o.id.clone()));
            }
        }
        None
    }

    /// Checks samples along the segment; spacing is a quarter of the smaller of
    /// radius and cell size.
    fn sweep(
        &self,
        me: &EntityState,
        from: Vec3,
        to: Vec3,
        z_ref: f64,
        rise_tol: f64,
        head_room: f64,
    ) -> Option<Obstacle> {
        let d = from.planar_distance(to);
        let spacing = 0.25 * me.class.radius.min(self.scene.cell_size);
        let n = ((d / spacing).ceil() as usize).max(1);
        (1..=n).find_map(|k| {
            let t = k as f64 / n as f64;
            let q = from + (to - from) * t;
            self.check(me, from, q, z_ref, rise_tol, head_room)
        })
    }

    fn clearance_under(&self, q: Vec3, r: f64) -> f64 {
        self.touched_cells(q, r).map(|(i, j)| self.scene.clearance_at(i, j)).fold(f64::INFINITY, f64::min)
    }
}

/// Why `state` could not be placed where it stands, if anything.
pub fn placement_obstacle(scene: &SceneSpec, others: &[&EntityState], state: &EntityState) -> Option<Obstacle> {
    let probe = Probe::new(scene, others);
    let q = state.position;
    let z_ref = match scene.cell_of(q) {
        Some((i, j)) => scene.ground_at(i, j),
        None => return Some(Obstacle::Boundary),
    };
    let far = Vec3::new(f64::INFINITY, f64::INFINITY, 0.0);
    probe.check(state, far, q, z_ref, LIMITS.step_height, state.class.stand_clearance)
}

/// Advances one entity by `dt` seconds. Never fails: infeasible transitions fall
/// back to holding still.
pub fn step_entity(
    scene: &SceneSpec,
    others: &[&EntityState],
    state: &EntityState,
    action: Action,
    dt: f64,
) -> StepOutcome {
    let probe = Probe::new(scene, others);
    let class = state.class;
    let r = class.radius;
    let mut next = state.clone();
    let can_stand = |p: Vec3| class.is_aerial() || probe.clearance_under(p, r) >= class.stand_clearance;
    let settle = |stance: Stance, p: Vec3| match stance {
        Stance::Crouch if can_stand(p) => Stance::Stand,
        Stance::Crouch => Stance::Crouch,
        _ if can_stand(p) => Stance::Stand,
        _ => Stance::Crouch,
    };

    let clamp_lin = |v: f64| v.clamp(-class.max_linear, class.max_linear);
    let clamp_ang = |v: f64| v.clamp(-class.max_angular, class.max_angular);
    let table = state.move_table;

    let mut jump = false;
    let mut crouch_keep = state.stance == Stance::Crouch;
    let (ang, lin) = match action {
        Action::Continuous(a) => {
            crouch_keep = false;
            (a.angular(), a.linear())
        }
        Action::Coast => (0.0, 0.0),
        Action::Discrete(d) => match d {
            DiscreteNavAction::Forward => (table.forward[0], table.forward[1]),
            DiscreteNavAction::Backward => (table.backward[0], table.backward[1]),
            DiscreteNavAction::TurnLeft => (table.turn_left[0], table.turn_left[1]),
            DiscreteNavAction::TurnRight => (table.turn_right[0], table.turn_right[1]),
            DiscreteNavAction::Crouch if class.can_crouch => {
                if state.stance != Stance::Crouch {
                    next.crouch_time = 0.0;
                }
                crouch_keep = true;
                (0.0, 0.0)
            }
            DiscreteNavAction::Jump if class.can_jump => {
                jump = true;
                (0.0, table.forward[1].abs())
            }
            DiscreteNavAction::Hold | DiscreteNavAction::Crouch | DiscreteNavAction::Jump => {
                crouch_keep = false;
                (0.0, 0.0)
            }
        },
    };
    let (ang, lin) = (clamp_ang(ang), clamp_lin(lin));

    next.yaw = wrap_deg(state.yaw + ang * dt);
    next.angular_v = ang;
    next.linear_v = lin;
    let dir = heading(next.yaw);
    let from = state.position;
    let ground_z = if state.stance == Stance::Airborne { from.z - LIMITS.jump_clearance } else { from.z };
    let mut collision = None;
    let mut climbed = false;

    if jump && state.jump_chain && state.stance == Stance::Airborne {
        // second consecutive jump: climb a face directly ahead
        let probe_pt = from + dir * (r + 0.05);
        if let Some((i, j)) = scene.cell_of(probe_pt) {
            let k = scene.idx(i, j);
            let rise = scene.ground[k] - ground_z;
            if scene.climbable[k] && rise > LIMITS.step_height && rise <= LIMITS.climb_height + 1e-9 {
                let target = from + dir * (r + 0.1);
                if probe.check(state, from, target, ground_z, LIMITS.climb_height, class.stand_clearance).is_none() {
                    next.position = Vec3::new(target.x, target.y, probe.support(target, r));
                    next.stance = Stance::Climb;
                    next.linear_v = 0.0;
                    next.jump_chain = false;
                    climbed = true;
                }
            }
        }
    }

    if !climbed {
        let to = from + dir * (lin * dt);
        let crouching = crouch_keep && class.can_crouch;
        let head_room = if class.is_aerial() {
            0.0
        } else if crouching {
            LIMITS.crouch_clearance
        } else {
            class.stand_clearance
        };
        let rise_tol = if jump { LIMITS.jump_clearance } else { LIMITS.step_height };
        let moved = if lin * dt != 0.0 {
            collision = probe.sweep(state, from, to, ground_z, rise_tol, head_room);
            collision.is_none()
        } else {
            false
        };
        let p = if moved { to } else { from };
        if !moved {
            next.linear_v = 0.0;
        }
        let support = if class.is_aerial() { probe.support(p, r) + class.eye_height } else { probe.support(p, r) };
        if jump {
            next.stance = Stance::Airborne;
            next.position = Vec3::new(p.x, p.y, support.max(ground_z) + LIMITS.jump_clearance);
            next.jump_chain = true;
        } else {
            next.position = Vec3::new(p.x, p.y, support);
            if action != Action::Coast {
                next.jump_chain = false;
            }
            next.stance = if crouching {
                next.crouch_time += dt;
                if next.crouch_time >= LIMITS.crouch_duration - 1e-9 && can_stand(p) {
                    Stance::Stand
                } else {
                    Stance::Crouch
                }
            } else if action == Action::Coast && state.stance == Stance::Crouch {
                Stance::Crouch
            } else {
                settle(state.stance, p)
            };
            if next.stance != Stance::Crouch {
                next.crouch_time = 0.0;
            }
        }
    }
    StepOutcome { state: next, collision, climbed }
}
