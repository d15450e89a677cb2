//! Area-prioritized shortest paths on the 4-connected cell grid.
//!
//! Entering a cell costs `multiplier(class, area) * cell_size`. Costs are summed
//! in integer micro-units so that equal-cost alternatives compare exactly.
//! Among minimum-cost routes the planner prefers the one that enters the fewest
//! cells off the class's preferred surface, then the one with fewer waypoints,
//! then the lexicographically smallest `(i, j)` cell sequence.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::scene::{AreaKind, PlannerGroup, SceneSpec};
use super::WorldError;
use crate::geom::Vec3;
use crate::sim::{EntityClass, LIMITS};

const COST_SCALE: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub cells: Vec<(usize, usize)>,
    /// Cell centers, `z` at ground level.
    pub waypoints: Vec<Vec3>,
    /// Geometric length in meters.
    pub length: f64,
    /// Accumulated area-weighted cost.
    pub cost: f64,
}

/// Lexicographic search key: (cost units, off-preference entries, steps).
type Key = (u64, u32, u32);

/// Per-class view of a scene used by the planner and the navigation controller.
pub struct CostGrid<'a> {
    scene: &'a SceneSpec,
    group: PlannerGroup,
    cost: Vec<Option<u64>>,
    off_pref: Vec<bool>,
}

impl<'a> CostGrid<'a> {
    pub fn new(scene: &'a SceneSpec, class: &EntityClass) -> Self {
        let group = class.planner_group;
        let area = scene.effective_area();
        let preferred = scene.area_costs.preferred(group);
        let n = scene.nx * scene.ny;
        let mut cost = Vec::with_capacity(n);
        let mut off_pref = Vec::with_capacity(n);
        for k in 0..n {
            let mult = scene.area_costs.multiplier(group, area[k]);
            let head_room = scene.clearance[k].unwrap_or(f64::INFINITY);
            let fits = group == PlannerGroup::Aerial || head_room >= class.stand_clearance;
            if mult.is_finite() && area[k] != AreaKind::Blocked && fits {
                cost.push(Some((mult * scene.cell_size * COST_SCALE).round() as u64));
                off_pref.push(mult > preferred);
            } else {
                cost.push(None);
                off_pref.push(false);
            }
        }
        Self { scene, group, cost, off_pref }
    }

    pub fn scene(&self) -> &SceneSpec {
        self.scene
    }

    /// Cost (micro-units) to enter the cell, `None` if impassable.
    pub fn cost(&self, i: usize, j: usize) -> Option<u64> {
        self.cost[self.scene.idx(i, j)]
    }

    pub fn passable(&self, i: usize, j: usize) -> bool {
        self.cost(i, j).is_some()
    }

    /// Whether a step between two 4-adjacent cells respects the elevation rule.
    /// Destination passability is checked separately.
    pub fn step_ok(&self, from: (usize, usize), to: (usize, usize)) -> bool {
        if self.group == PlannerGroup::Aerial {
            return true;
        }
        let s = self.scene;
        let a = s.idx(from.0, from.1);
        let b = s.idx(to.0, to.1);
        let dz = (s.ground[b] - s.ground[a]).abs();
        dz <= LIMITS.step_height + 1e-9 || ((s.climbable[a] || s.climbable[b]) && dz <= LIMITS.climb_height + 1e-9)
    }

    fn neighbors(&self, (i, j): (usize, usize)) -> impl Iterator<Item = (usize, usize)> {
        let (nx, ny) = (self.scene.nx, self.scene.ny);
        let cand = [(i.wrapping_sub(1), j), (i, j.wrapping_sub(1)), (i, j + 1), (i + 1, j)];
        cand.into_iter().filter(move |&(a, b)| a < nx && b < ny)
    }

    /// Reverse search from the goal set: minimal key from every cell to the goal.
    fn distances_to(&self, goals: &[(usize, usize)]) -> Vec<Option<Key>> {
        let s = self.scene;
        let mut dist: Vec<Option<Key>> = vec![None; s.nx * s.ny];
        let mut heap = BinaryHeap::new();
        for &g in goals {
            if self.passable(g.0, g.1) {
                dist[s.idx(g.0, g.1)] = Some((0, 0, 0));
                heap.push(Reverse(((0u64, 0u32, 0u32), g)));
            }
        }
        while let Some(Reverse((key, v))) = heap.pop() {
            if dist[s.idx(v.0, v.1)] != Some(key) {
                continue;
            }
            // every predecessor u pays the cost of entering v
            let Some(cv) = self.cost(v.0, v.1) else { continue };
            let off = self.off_pref[s.idx(v.0, v.1)] as u32;
            let cand = (key.0 + cv, key.1 + off, key.2 + 1);
            for u in self.neighbors(v) {
                if !self.step_ok(u, v) {
                    continue;
                }
                let slot = &mut dist[s.idx(u.0, u.1)];
                if slot.is_none_or(|d| cand < d) {
                    *slot = Some(cand);
                    heap.push(Reverse((cand, u)));
                }
            }
        }
        dist
    }

    fn reconstruct(&self, start: (usize, usize), dist: &[Option<Key>]) -> Result<Path, WorldError> {
        let s = self.scene;
        let mut cur = start;
        let mut key = dist[s.idx(cur.0, cur.1)].ok_or(WorldError::NoPath)?;
        let mut cells = vec![cur];
        while key != (0, 0, 0) {
            let mut next = None;
            for v in self.neighbors(cur) {
                if !self.step_ok(cur, v) {
                    continue;
                }
                let (Some(cv), Some(dv)) = (self.cost(v.0, v.1), dist[s.idx(v.0, v.1)]) else {
                    continue;
                };
                let off = self.off_pref[s.idx(v.0, v.1)] as u32;
                if (dv.0 + cv, dv.1 + off, dv.2 + 1) == key && next.is_none_or(|(c, _)| v < c) {
                    next = Some((v, dv));
                }
            }
            let (v, dv) = next.expect("distance field is consistent");
            cells.push(v);
            cur = v;
            key = dv;
        }
        let cost_units: u64 = cells[1..].iter().map(|&(i, j)| self.cost(i, j).unwrap()).sum();
        Ok(Path {
            waypoints: cells.iter().map(|&(i, j)| s.cell_center(i, j)).collect(),
            length: (cells.len() - 1) as f64 * s.cell_size,
            cost: cost_units as f64 / COST_SCALE,
            cells,
        })
    }
}

fn cell_in_grid(scene: &SceneSpec, p: Vec3) -> Result<(usize, usize), WorldError> {
    scene.cell_of(p).ok_or(WorldError::OutOfGrid(p))
}

fn region_cells(scene: &SceneSpec, center: Vec3, radius: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for j in 0..scene.ny {
        for i in 0..scene.nx {
            if scene.cell_center(i, j).planar_distance(center) < radius {
                out.push((i, j));
            }
        }
    }
    out
}

/// Minimum-cost 4-connected path between the cells containing `from` and `to`.
pub fn find_path(scene: &SceneSpec, class: &EntityClass, from: Vec3, to: Vec3) -> Result<Path, WorldError> {
    let start = cell_in_grid(scene, from)?;
    let goal = cell_in_grid(scene, to)?;
    let grid = CostGrid::new(scene, class);
    let dist = grid.distances_to(&[goal]);
    grid.reconstruct(start, &dist)
}

/// Geometric length of the path [`find_path`] would return.
pub fn shortest_path_length(scene: &SceneSpec, class: &EntityClass, from: Vec3, to: Vec3) -> Result<f64, WorldError> {
    let start = cell_in_grid(scene, from)?;
    let goal = cell_in_grid(scene, to)?;
    let grid = CostGrid::new(scene, class);
    let dist = grid.distances_to(&[goal]);
    let key = dist[scene.idx(start.0, start.1)].ok_or(WorldError::NoPath)?;
    Ok(key.2 as f64 * scene.cell_size)
}

/// Minimum-cost path to any passable cell whose center lies strictly within
/// `radius` of `center`. Used for success regions such as "within 3 m of the target".
pub fn find_path_to_region(
    scene: &SceneSpec,
    class: &EntityClass,
    from: Vec3,
    center: Vec3,
    radius: f64,
) -> Result<Path, WorldError> {
    let start = cell_in_grid(scene, from)?;
    let goals = region_cells(scene, center, radius);
    let grid = CostGrid::new(scene, class);
    let dist = grid.distances_to(&goals);
    grid.reconstruct(start, &dist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::EntityKind;
    use crate::world::scene::AreaKind;

    fn human() -> EntityClass {
        EntityClass::of(EntityKind::Human)
    }

    #[test]
    fn straight_line_on_flat() {
        let s = SceneSpec::blank("flat", 10, 10, 1.0);
        let p = find_path(&s, &human(), Vec3::new(0.0, 0.0, 0.0), Vec3::new(9.0, 0.0, 0.0)).unwrap();
        assert_eq!(p.length, 9.0);
        assert_eq!(p.cells.len(), 10);
        assert!(p.cells.iter().all(|c| c.1 == 0));
        assert_eq!(shortest_path_length(&s, &human(), Vec3::ZERO, Vec3::new(9.0, 0.0, 0.0)).unwrap(), 9.0);
    }

    #[test]
    fn identity_query() {
        let s = SceneSpec::blank("flat", 5, 5, 1.0);
        let p = Vec3::new(2.5, 2.5, 0.0);
        assert_eq!(shortest_path_length(&s, &human(), p, p).unwrap(), 0.0);
        assert_eq!(find_path(&s, &human(), p, p).unwrap().cells.len(), 1);
    }

    #[test]
    fn goal_in_blocked_region() {
        let mut s = SceneSpec::blank("blk", 6, 6, 1.0);
        let k = s.idx(4, 4);
        s.area[k] = AreaKind::Blocked;
        assert_eq!(
            find_path(&s, &human(), Vec3::new(0.5, 0.5, 0.0), Vec3::new(4.5, 4.5, 0.0)),
            Err(WorldError::NoPath)
        );
    }

    #[test]
    fn out_of_grid_query() {
        let s = SceneSpec::blank("flat", 4, 4, 1.0);
        assert!(matches!(
            find_path(&s, &human(), Vec3::new(-1.0, 0.5, 0.0), Vec3::new(1.5, 1.5, 0.0)),
            Err(WorldError::OutOfGrid(_))
        ));
    }

    #[test]
    fn high_step_requires_climbable_tag() {
        let mut s = SceneSpec::blank("wall", 5, 1, 1.0);
        for i in 3..5 {
            let k = s.idx(i, 0);
            s.ground[k] = 1.5;
        }
        let a = Vec3::new(0.5, 0.5, 0.0);
        let b = Vec3::new(4.5, 0.5, 0.0);
        assert_eq!(find_path(&s, &human(), a, b), Err(WorldError::NoPath));
        let k = s.idx(3, 0);
        s.climbable[k] = true;
        assert_eq!(find_path(&s, &human(), a, b).unwrap().length, 4.0);
    }

    #[test]
    fn low_clearance_is_conservative() {
        let mut s = SceneSpec::blank("duct", 5, 1, 1.0);
        let k = s.idx(2, 0);
        s.clearance[k] = Some(1.2);
        let r = find_path(&s, &human(), Vec3::new(0.5, 0.5, 0.0), Vec3::new(4.5, 0.5, 0.0));
        assert_eq!(r, Err(WorldError::NoPath));
        // drones ignore ceilings
        let drone = EntityClass::of(EntityKind::Drone);
        assert!(find_path(&s, &drone, Vec3::new(0.5, 0.5, 0.0), Vec3::new(4.5, 0.5, 0.0)).is_ok());
    }

    #[test]
    fn region_goal_stops_short() {
        let s = SceneSpec::blank("flat", 12, 3, 1.0);
        let p = find_path_to_region(&s, &human(), Vec3::new(0.5, 1.5, 0.0), Vec3::new(11.5, 1.5, 0.0), 3.0).unwrap();
        // cell 9 is 2 m from the target center, cell 8 is exactly 3 m
        assert_eq!(p.cells.last().unwrap(), &(9, 1));
        assert_eq!(p.length, 9.0);
    }

    #[test]
    fn reversal_uses_l_shape() {
        let s = SceneSpec::blank("flat", 6, 6, 1.0);
        let p = find_path(&s, &human(), Vec3::new(0.5, 0.5, 0.0), Vec3::new(4.5, 3.5, 0.0)).unwrap();
        let turns = p
            .cells
            .windows(3)
            .filter(|w| (w[1].0 - w[0].0, w[1].1 - w[0].1) != (w[2].0 - w[1].0, w[2].1 - w[1].1))
            .count();
        assert_eq!(turns, 1);
    }
}
