//! Independent reference implementations shared by integration and acceptance tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zoosim_core::sensors::{camera_basis, pixel_ray, render, CameraConfig, CameraPose, Modality};
use zoosim_core::sim::{EntityClass, EntityKind, EntityState, LIMITS};
use zoosim_core::world::{AreaKind, InteractiveObject, ObjectKind, PlannerGroup, SceneSpec};
use zoosim_core::{Aabb3, Rgb, Vec3};

/// Micro-unit cost of entering each cell, `None` when the class may not enter.
pub fn entry_costs(scene: &SceneSpec, class: &EntityClass) -> Vec<Option<u64>> {
    let row = match class.planner_group {
        PlannerGroup::Pedestrian => scene.area_costs.pedestrian,
        PlannerGroup::Vehicle => scene.area_costs.vehicle,
        PlannerGroup::Aerial => scene.area_costs.aerial,
    };
    (0..scene.nx * scene.ny)
        .map(|k| {
            let kind = scene.area[k];
            let m = match kind {
                AreaKind::Walkway => row[0],
                AreaKind::Roadway => row[1],
                AreaKind::Rough => row[2],
                AreaKind::Blocked => None,
            }?;
            let aerial = class.planner_group == PlannerGroup::Aerial;
            let room = scene.clearance[k].unwrap_or(f64::MAX);
            if !aerial && room < class.stand_clearance {
                return None;
            }
            Some((m * scene.cell_size * 1e6).round() as u64)
        })
        .collect()
}

/// Whether a body may move between two adjacent cells given their elevations.
pub fn may_step(scene: &SceneSpec, class: &EntityClass, a: usize, b: usize) -> bool {
    if class.planner_group == PlannerGroup::Aerial {
        return true;
    }
    let dz = (scene.ground[a] - scene.ground[b]).abs();
    let climb = scene.climbable[a] || scene.climbable[b];
    dz <= LIMITS.step_height + 1e-9 || (climb && dz <= LIMITS.climb_height + 1e-9)
}

/// Forward Dijkstra with linear-scan extraction. `allow` restricts which cells may be entered.
pub fn dijkstra_from(
    scene: &SceneSpec,
    class: &EntityClass,
    start: (usize, usize),
    allow: &dyn Fn(usize) -> bool,
) -> Vec<Option<u64>> {
    let (nx, ny) = (scene.nx, scene.ny);
    let n = nx * ny;
    let cost = entry_costs(scene, class);
    let mut dist: Vec<Option<u64>> = vec![None; n];
    let mut done = vec![false; n];
    dist[start.1 * nx + start.0] = Some(0);
    loop {
        let mut u = None;
        for k in 0..n {
            if let (false, Some(d)) = (done[k], dist[k]) {
                if u.is_none_or(|(_, du)| d < du) {
                    u = Some((k, d));
                }
            }
        }
        let Some((k, du)) = u else { break };
        done[k] = true;
        let (i, j) = (k % nx, k / nx);
        let mut nbrs = Vec::with_capacity(4);
        if i > 0 {
            nbrs.push(k - 1);
        }
        if i + 1 < nx {
            nbrs.push(k + 1);
        }
        if j > 0 {
            nbrs.push(k - nx);
        }
        if j + 1 < ny {
            nbrs.push(k + nx);
        }
        for v in nbrs {
            let Some(c) = cost[v] else { continue };
            if !allow(v) || !may_step(scene, class, k, v) {
                continue;
            }
            let cand = du + c;
            if dist[v].is_none_or(|d| cand < d) {
                dist[v] = Some(cand);
            }
        }
    }
    dist
}

/// Minimal micro-unit cost between two cells, `None` when unreachable.
pub fn oracle_cost(scene: &SceneSpec, class: &EntityClass, from: (usize, usize), to: (usize, usize)) -> Option<u64> {
    let cost = entry_costs(scene, class);
    let k = to.1 * scene.nx + to.0;
    cost[k]?;
    dijkstra_from(scene, class, from, &|_| true)[k]
}

/// A random weighted grid: area kinds, terrain levels, climbable faces and low ceilings.
pub fn random_grid(seed: u64, nx: usize, ny: usize, cell: f64, relief: bool) -> SceneSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = SceneSpec::blank("oracle-grid", nx, ny, cell);
    for k in 0..nx * ny {
        s.area[k] = match rng.gen_range(0..10) {
            0..=4 => AreaKind::Walkway,
            5..=6 => AreaKind::Roadway,
            7..=8 => AreaKind::Rough,
            _ => AreaKind::Blocked,
        };
        if relief {
            s.ground[k] = [0.0, 0.0, 0.2, 0.5, 1.5][rng.gen_range(0..5)];
            s.climbable[k] = rng.gen_bool(0.15);
            if rng.gen_bool(0.08) {
                s.clearance[k] = Some(rng.gen_range(0.5..2.5));
            }
        }
    }
    s
}

/// Walkway/Roadway/Blocked grid for the priority property.
pub fn street_grid(seed: u64, n: usize) -> SceneSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = SceneSpec::blank("priority-grid", n, n, 1.0);
    for k in 0..n * n {
        s.area[k] = match rng.gen_range(0..10) {
            0..=5 => AreaKind::Walkway,
            6..=8 => AreaKind::Roadway,
            _ => AreaKind::Blocked,
        };
    }
    s
}

/// Checks the priority property for every ordered pair of cells. Returns the number of
/// pairs where a pure-Walkway route was optimal, or a description of the first violation.
pub fn check_walkway_priority(scene: &SceneSpec, class: &EntityClass) -> Result<usize, String> {
    let n = scene.nx * scene.ny;
    let walk = |k: usize| scene.area[k] == AreaKind::Walkway;
    let mut cases = 0;
    for s in 0..n {
        if !walk(s) {
            continue;
        }
        let from = (s % scene.nx, s / scene.nx);
        let any = dijkstra_from(scene, class, from, &|_| true);
        let pure = dijkstra_from(scene, class, from, &walk);
        for t in 0..n {
            let (Some(w), Some(c)) = (pure[t], any[t]) else { continue };
            if w > c {
                continue;
            }
            cases += 1;
            let to = (t % scene.nx, t / scene.nx);
            let p = zoosim_core::world::find_path(
                scene,
                class,
                scene.cell_center(from.0, from.1),
                scene.cell_center(to.0, to.1),
            )
            .map_err(|e| format!("{from:?}->{to:?}: {e}"))?;
            if let Some(c) = p.cells.iter().find(|&&(i, j)| scene.area_at(i, j) == AreaKind::Roadway) {
                return Err(format!("{from:?}->{to:?} crosses roadway at {c:?} though walkway cost {w} is optimal"));
            }
        }
    }
    Ok(cases)
}

/// What a brute-force ray hit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Nearest {
    Sky,
    Terrain,
    Object(usize),
    Entity(usize),
}

/// Slab test; returns the entry distance when the origin is outside the box.
pub fn ray_box(min: Vec3, max: Vec3, o: Vec3, d: Vec3) -> Option<f64> {
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for (oc, dc, a, b) in [(o.x, d.x, min.x, max.x), (o.y, d.y, min.y, max.y), (o.z, d.z, min.z, max.z)] {
        if dc == 0.0 {
            if oc < a || oc > b {
                return None;
            }
        } else {
            let (t0, t1) = ((a - oc) / dc, (b - oc) / dc);
            lo = lo.max(t0.min(t1));
            hi = hi.min(t0.max(t1));
        }
    }
    (lo <= hi && lo > 0.0).then_some(lo)
}

/// Vertical cylinder standing on `base`; `None` when the origin is inside.
pub fn ray_cylinder(base: Vec3, r: f64, h: f64, o: Vec3, d: Vec3) -> Option<f64> {
    let rel = o - base;
    let inside = rel.x * rel.x + rel.y * rel.y < r * r && rel.z > 0.0 && rel.z < h;
    if inside {
        return None;
    }
    let mut best = f64::INFINITY;
    let a = d.x * d.x + d.y * d.y;
    if a > 0.0 {
        let b = rel.x * d.x + rel.y * d.y;
        let c = rel.x * rel.x + rel.y * rel.y - r * r;
        let q = b * b - a * c;
        if q >= 0.0 {
            let t = (-b - q.sqrt()) / a;
            let z = rel.z + d.z * t;
            if t > 0.0 && (0.0..=h).contains(&z) {
                best = best.min(t);
            }
        }
    }
    if d.z != 0.0 {
        for zc in [0.0, h] {
            let t = (zc - rel.z) / d.z;
            let (x, y) = (rel.x + d.x * t, rel.y + d.y * t);
            if t > 0.0 && x * x + y * y <= r * r {
                best = best.min(t);
            }
        }
    }
    best.is_finite().then_some(best)
}

/// Tests the ray against every primitive in the scene and keeps the closest.
pub fn brute_force_hit(scene: &SceneSpec, entities: &[&EntityState], o: Vec3, d: Vec3, far: f64) -> (Nearest, f64) {
    let mut best = (Nearest::Sky, far);
    let floor = -1e4;
    for j in 0..scene.ny {
        for i in 0..scene.nx {
            let (x0, x1, y0, y1) = scene.cell_bounds(i, j);
            let g = scene.ground_at(i, j);
            let mut boxes = vec![(g.min(floor), g)];
            if let Some(c) = scene.clearance[scene.idx(i, j)] {
                boxes.push((g + c, g + c + zoosim_core::sensors::render::CEILING_THICKNESS));
            }
            for (z0, z1) in boxes {
                let (min, max) = (Vec3::new(x0, y0, z0), Vec3::new(x1, y1, z1));
                let inside = o.x >= x0 && o.x <= x1 && o.y >= y0 && o.y <= y1 && o.z >= z0 && o.z <= z1;
                if inside {
                    continue;
                }
                if let Some(t) = ray_box(min, max, o, d) {
                    if t <= best.1 && (t < best.1 || best.0 == Nearest::Sky) {
                        best = (Nearest::Terrain, t);
                    }
                }
            }
        }
    }
    for (k, obj) in scene.objects.iter().enumerate() {
        if !obj.visible() {
            continue;
        }
        if let Some(t) = ray_box(obj.footprint.min, obj.footprint.max, o, d) {
            if t < best.1 || (t == best.1 && best.0 == Nearest::Sky) {
                best = (Nearest::Object(k), t);
            }
        }
    }
    for (k, e) in entities.iter().enumerate() {
        if let Some(t) = ray_cylinder(e.position, e.class.radius, e.body_height(), o, d) {
            if t < best.1 || (t == best.1 && best.0 == Nearest::Sky) {
                best = (Nearest::Entity(k), t);
            }
        }
    }
    best
}

/// Reference mask image, row-major RGB.
pub fn brute_force_mask(
    scene: &SceneSpec,
    entities: &[&EntityState],
    pose: &CameraPose,
    cfg: &CameraConfig,
) -> Vec<u8> {
    let basis = camera_basis(pose);
    let mut out = Vec::with_capacity((cfg.width * cfg.height * 3) as usize);
    for v in 0..cfg.height {
        for u in 0..cfg.width {
            let d = pixel_ray(&basis, cfg, u, v);
            let c = match brute_force_hit(scene, entities, pose.position, d, cfg.far_clip).0 {
                Nearest::Object(k) => scene.objects[k].mask_color,
                Nearest::Entity(k) => entities[k].mask_color,
                _ => Rgb::BLACK,
            };
            out.extend_from_slice(&[c.0, c.1, c.2]);
        }
    }
    out
}

/// Distance along `d` from `o` to the first of the given axis-aligned planes in front of it.
/// Each plane is `(axis, offset)` with axis 0 = x, 1 = y, 2 = z.
pub fn ray_plane_distance(planes: &[(usize, f64)], o: Vec3, d: Vec3) -> Option<f64> {
    planes
        .iter()
        .filter_map(|&(axis, off)| {
            let (oc, dc) = match axis {
                0 => (o.x, d.x),
                1 => (o.y, d.y),
                _ => (o.z, d.z),
            };
            (dc != 0.0).then(|| (off - oc) / dc).filter(|t| *t > 0.0)
        })
        .fold(None, |acc: Option<f64>, t| Some(acc.map_or(t, |a| a.min(t))))
}

/// Square room whose outer ring of cells rises to `wall` meters.
pub fn walled_room(n: usize, cell: f64, wall: f64) -> SceneSpec {
    let mut s = SceneSpec::blank("room", n, n, cell);
    for j in 0..n {
        for i in 0..n {
            if i == 0 || j == 0 || i == n - 1 || j == n - 1 {
                let k = s.idx(i, j);
                s.ground[k] = wall;
                s.area[k] = AreaKind::Blocked;
            }
        }
    }
    s
}

pub fn unit_aabb(x: f64, y: f64, w: f64, d: f64, h: f64) -> Aabb3 {
    Aabb3::new(Vec3::new(x, y, 0.0), Vec3::new(x + w, y + d, h))
}

/// Largest relative error of the center-pixel depth over `n` random poses in a walled room.
pub fn center_depth_error(n: usize, seed: u64) -> f64 {
    let room = walled_room(20, 1.0, 30.0);
    let planes = [(0, 1.0), (0, 19.0), (1, 1.0), (1, 19.0), (2, 0.0)];
    let cfg = CameraConfig { far_clip: 200.0, ..CameraConfig::with_size(33, 25) };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let pose = CameraPose {
            position: Vec3::new(rng.gen_range(1.5..18.5), rng.gen_range(1.5..18.5), rng.gen_range(0.3..3.0)),
            yaw: rng.gen_range(-180.0..180.0),
            pitch: rng.gen_range(-30.0..30.0),
            roll: 0.0,
        };
        let f = render(&room, &[], &pose, &cfg, Modality::Depth, 1.0);
        let got = f.depth_at(16, 12) as f64;
        let (dir, _, _) = camera_basis(&pose);
        let want = ray_plane_distance(&planes, pose.position, dir).unwrap();
        worst = worst.max((got - want).abs() / want);
    }
    worst
}

fn mask_scene(seed: u64) -> (SceneSpec, Vec<EntityState>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = SceneSpec::blank("mask-oracle", 14, 14, 1.0);
    for k in 0..s.ground.len() {
        if rng.gen_bool(0.12) {
            s.ground[k] = rng.gen_range(0.2..2.5);
        }
        if rng.gen_bool(0.05) {
            s.clearance[k] = Some(rng.gen_range(1.8..3.0));
        }
    }
    for n in 0..4 {
        let (x, y) = (rng.gen_range(1.0..12.0), rng.gen_range(1.0..12.0));
        let fp = unit_aabb(x, y, rng.gen_range(0.3..1.5), rng.gen_range(0.3..1.5), rng.gen_range(0.4..2.0));
        s.objects.push(InteractiveObject {
            id: format!("box{n}"),
            kind: ObjectKind::Box,
            position: Vec3::new(x, y, 0.0),
            yaw: 0.0,
            state: None,
            footprint: fp,
            albedo: Rgb(90, 60, 30),
            mask_color: Rgb(10, 20 + 40 * n as u8, 200),
        });
    }
    let kinds = [EntityKind::Human, EntityKind::Animal, EntityKind::RobotDog, EntityKind::Vehicle, EntityKind::Drone];
    let ents = (0..6)
        .map(|n| {
            let class = EntityClass::of(kinds[n % kinds.len()]);
            let mut p = Vec3::new(rng.gen_range(1.0..13.0), rng.gen_range(1.0..13.0), 0.0);
            p.z = s.ground_at(p.x as usize, p.y as usize);
            let mut e = EntityState::new(&format!("e{n}"), class, p, rng.gen_range(-180.0..180.0));
            e.mask_color = Rgb(128 + 20 * n as u8, 7 * n as u8, 50);
            e
        })
        .collect();
    (s, ents)
}

/// Number of 64x48 mask frames that differ from the brute-force renderer, and pixels compared.
pub fn mask_mismatches(frames: usize, seed: u64) -> (usize, usize) {
    let cfg = CameraConfig { far_clip: 60.0, ..CameraConfig::with_size(64, 48) };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    for f in 0..frames {
        let (scene, ents) = mask_scene(seed.wrapping_mul(31).wrapping_add(f as u64));
        let refs: Vec<&EntityState> = ents.iter().collect();
        let pose = CameraPose {
            position: Vec3::new(rng.gen_range(-2.0..16.0), rng.gen_range(-2.0..16.0), rng.gen_range(0.5..6.0)),
            yaw: rng.gen_range(-180.0..180.0),
            pitch: rng.gen_range(-45.0..15.0),
            roll: rng.gen_range(-10.0..10.0),
        };
        let got = render(&scene, &refs, &pose, &cfg, Modality::Mask, 1.0);
        let want = brute_force_mask(&scene, &refs, &pose, &cfg);
        if got.payload != want {
            bad += 1;
        }
    }
    (bad, frames * 64 * 48)
}
