//! Path-following controllers for non-player entities.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::entity::{Action, ContinuousMoveAction, DiscreteNavAction, EntityState};
use super::world::Event;
use super::LIMITS;
use crate::geom::{bearing, wrap_deg, Vec3};
use crate::world::{find_path, CostGrid, SceneSpec, WorldError};

/// Follows a planned route toward a goal, replanning when stuck.
#[derive(Debug, Clone)]
pub struct Navigator {
    pub goal: Vec3,
    pub speed: f64,
    pub arrive_radius: f64,
    waypoints: Vec<Vec3>,
    next: usize,
    last_pos: Option<Vec3>,
    stuck: u32,
}

const STUCK_LIMIT: u32 = 15;

impl Navigator {
    pub fn plan(scene: &SceneSpec, me: &EntityState, goal: Vec3, speed: f64) -> Result<Self, WorldError> {
        let mut nav =
            Self { goal, speed, arrive_radius: 0.3, waypoints: Vec::new(), next: 0, last_pos: None, stuck: 0 };
        nav.replan(scene, me)?;
        Ok(nav)
    }

    pub fn waypoints(&self) -> &[Vec3] {
        &self.waypoints
    }

    fn replan(&mut self, scene: &SceneSpec, me: &EntityState) -> Result<(), WorldError> {
        let path = find_path(scene, &me.class, me.position, self.goal)?;
        let mut pts = path.waypoints;
        if let Some(last) = pts.last_mut() {
            *last = Vec3::new(self.goal.x, self.goal.y, last.z);
        }
        self.waypoints = smooth_route(scene, me, pts);
        self.next = 0;
        self.stuck = 0;
        Ok(())
    }

    pub fn arrived(&self, me: &EntityState) -> bool {
        me.position.planar_distance(self.goal) <= self.arrive_radius
    }

    /// The next action, plus a `PathBlocked` event when no route remains.
    pub fn action(&mut self, scene: &SceneSpec, me: &EntityState) -> (Action, Option<Event>) {
        if self.arrived(me) {
            return (Action::HOLD, None);
        }
        if self.last_pos.is_some_and(|p| p.planar_distance(me.position) < 1e-6) {
            self.stuck += 1;
        } else {
            self.stuck = 0;
        }
        self.last_pos = Some(me.position);
        if self.stuck >= STUCK_LIMIT && self.replan(scene, me).is_err() {
            self.waypoints.clear();
            return (Action::HOLD, Some(Event::PathBlocked { entity: me.id.clone() }));
        }
        while self.next + 1 < self.waypoints.len()
            && me.position.planar_distance(self.waypoints[self.next]) < self.arrive_radius.max(0.5 * scene.cell_size)
        {
            self.next += 1;
        }
        let Some(&wp) = self.waypoints.get(self.next) else {
            return (Action::HOLD, None);
        };
        let theta = wrap_deg(bearing(wp - me.position) - me.yaw);
        // a face ahead taller than a step: jump, then jump again to climb
        if self.stuck > 0 && me.class.can_jump && wp.z - me.position.z > LIMITS.step_height && theta.abs() < 20.0 {
            return (Action::Discrete(DiscreteNavAction::Jump), None);
        }
        let ang = (theta * 3.0).clamp(-me.class.max_angular, me.class.max_angular);
        let lin = if theta.abs() < 60.0 { self.speed * libm::cos(theta.to_radians()) } else { 0.0 };
        (Action::Continuous(ContinuousMoveAction::unclamped(ang, lin)), None)
    }
}

/// Drops intermediate waypoints that are directly reachable from an earlier one.
pub fn smooth_route(scene: &SceneSpec, me: &EntityState, pts: Vec<Vec3>) -> Vec<Vec3> {
    if pts.len() <= 2 {
        return pts;
    }
    let grid = CostGrid::new(scene, &me.class);
    let r = me.class.radius;
    let mut out = Vec::new();
    let mut anchor = me.position;
    let mut k = 0;
    while k < pts.len() {
        let mut far = k;
        for j in (k + 1..pts.len()).rev() {
            if line_clear(&grid, anchor, pts[j], r) {
                far = j;
                break;
            }
        }
        out.push(pts[far]);
        anchor = pts[far];
        k = far + 1;
    }
    out
}

fn line_clear(grid: &CostGrid, a: Vec3, b: Vec3, r: f64) -> bool {
    let s = grid.scene();
    let d = b - a;
    let len = libm::hypot(d.x, d.y);
    if len < 1e-9 {
        return true;
    }
    let side = Vec3::new(-d.y / len, d.x / len, 0.0) * r;
    let n = ((len / (0.25 * s.cell_size)).ceil() as usize).max(1);
    for off in [Vec3::ZERO, side, -side] {
        let mut prev: Option<(usize, usize)> = None;
        for k in 0..=n {
            let p = a + d * (k as f64 / n as f64) + off;
            let Some(c) = s.cell_of(p) else { return false };
            if !grid.passable(c.0, c.1) {
                return false;
            }
            if let Some(pc) = prev {
                if pc != c {
                    let (di, dj) = (pc.0.abs_diff(c.0), pc.1.abs_diff(c.1));
                    let ok = match (di, dj) {
                        (1, 0) | (0, 1) => grid.step_ok(pc, c),
                        (1, 1) => [(c.0, pc.1), (pc.0, c.1)]
                            .into_iter()
                            .all(|m| grid.passable(m.0, m.1) && grid.step_ok(pc, m) && grid.step_ok(m, c)),
                        _ => false,
                    };
                    if !ok {
                        return false;
                    }
                    // straight lines only across level ground
                    if (s.ground_at(pc.0, pc.1) - s.ground_at(c.0, c.1)).abs() > LIMITS.step_height {
                        return false;
                    }
                }
            }
            prev = Some(c);
        }
    }
    true
}

/// One-shot steering toward `goal`; `PathBlocked` when no route exists.
pub fn builtin_navigate(scene: &SceneSpec, me: &EntityState, goal: Vec3) -> (Action, Option<Event>) {
    match Navigator::plan(scene, me, goal, me.class.max_linear.min(1.0)) {
        Ok(mut n) => n.action(scene, me),
        Err(_) => (Action::HOLD, Some(Event::PathBlocked { entity: me.id.clone() })),
    }
}

/// Wanders between random goals inside the scene's reset area.
#[derive(Debug, Clone)]
pub struct RandomWalker {
    pub speed: f64,
    nav: Option<Navigator>,
    goal_deadline: f64,
}

impl RandomWalker {
    pub fn new(speed: f64) -> Self {
        Self { speed, nav: None, goal_deadline: 0.0 }
    }

    /// `now` is simulation time in seconds.
    pub fn action(
        &mut self,
        scene: &SceneSpec,
        me: &EntityState,
        now: f64,
        rng: &mut ChaCha8Rng,
    ) -> (Action, Option<Event>) {
        let expired = now >= self.goal_deadline || self.nav.as_ref().is_none_or(|n| n.arrived(me));
        if expired {
            self.nav = None;
            let a = scene.reset_area;
            let (x0, x1, y0, y1) = (a.min.x + 1.0, a.max.x - 1.0, a.min.y + 1.0, a.max.y - 1.0);
            if x0 >= x1 || y0 >= y1 {
                return (Action::HOLD, None);
            }
            for _ in 0..8 {
                let goal = Vec3::new(rng.gen_range(x0..x1), rng.gen_range(y0..y1), 0.0);
                if let Ok(n) = Navigator::plan(scene, me, goal, self.speed) {
                    self.nav = Some(n);
                    break;
                }
            }
            self.goal_deadline = now + rng.gen_range(5.0..15.0);
        }
        match self.nav.as_mut() {
            Some(n) => n.action(scene, me),
            None => (Action::HOLD, None),
        }
    }
}
