//! Procedural stand-ins for the scene categories: flat rooms, obstacle fields,
//! multi-level terrain and urban blocks.

use std::collections::VecDeque;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::scene::{AreaKind, DoorState, InteractiveObject, ObjectKind, SceneSpec};
use super::WorldError;
use crate::geom::{Aabb3, Rgb, Vec3};
use crate::sim::LIMITS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SceneKind {
    Flat,
    ObstacleField,
    MultiLevel,
    Urban,
}

impl SceneKind {
    pub fn name(self) -> &'static str {
        match self {
            SceneKind::Flat => "flat",
            SceneKind::ObstacleField => "obstacle",
            SceneKind::MultiLevel => "multilevel",
            SceneKind::Urban => "urban",
        }
    }

    fn salt(self) -> u64 {
        match self {
            SceneKind::Flat => 0x11,
            SceneKind::ObstacleField => 0x23,
            SceneKind::MultiLevel => 0x37,
            SceneKind::Urban => 0x41,
        }
    }
}

impl FromStr for SceneKind {
    type Err = WorldError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['_', '-'], "").as_str() {
            "flat" => Ok(SceneKind::Flat),
            "obstacle" | "obstaclefield" | "obstacles" => Ok(SceneKind::ObstacleField),
            "multilevel" => Ok(SceneKind::MultiLevel),
            "urban" => Ok(SceneKind::Urban),
            other => Err(WorldError::InvalidScene(format!("unknown scene kind '{other}'"))),
        }
    }
}

/// Parsed `generator:<kind>:<seed>:<nx>x<ny>` scene source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeneratorSpec {
    pub kind: SceneKind,
    pub seed: u64,
    pub nx: usize,
    pub ny: usize,
}

impl GeneratorSpec {
    pub fn generate(&self) -> Result<SceneSpec, WorldError> {
        generate_scene(self.kind, self.seed, self.nx, self.ny)
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

impl FromStr for GeneratorSpec {
    type Err = WorldError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || WorldError::InvalidScene(format!("expected generator:<kind>:<seed>:<nx>x<ny>, got '{s}'"));
        let mut parts = s.split(':');
        if parts.next() != Some("generator") {
            return Err(bad());
        }
        let kind = parts.next().ok_or_else(bad)?.parse()?;
        let seed = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let dims = parts.next().ok_or_else(bad)?;
        if parts.next().is_some() {
            return Err(bad());
        }
        let (a, b) = dims.split_once('x').ok_or_else(bad)?;
        Ok(Self { kind, seed, nx: a.parse().map_err(|_| bad())?, ny: b.parse().map_err(|_| bad())? })
    }
}

impl std::fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "generator:{}:{}:{}x{}", self.kind.name(), self.seed, self.nx, self.ny)
    }
}

pub const WALL_HEIGHT: f64 = 1.5;
pub const BUILDING_HEIGHT: f64 = 6.0;
const CELL: f64 = 1.0;

/// Builds a deterministic scene for `(kind, seed, nx x ny)`.
pub fn generate_scene(kind: SceneKind, seed: u64, nx: usize, ny: usize) -> Result<SceneSpec, WorldError> {
    if nx < 4 || ny < 4 {
        return Err(WorldError::InvalidScene(format!("dims {nx}x{ny} below the 4x4 minimum")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ kind.salt());
    let name = format!("{}-{seed}-{nx}x{ny}", kind.name());
    let mut s = SceneSpec::blank(&name, nx, ny, CELL);
    s.tags.insert(format!("category:{}", kind.name()));
    s.tags.insert(format!(
        "scale:{}",
        if nx * ny <= 256 {
            "small"
        } else if nx * ny <= 4096 {
            "medium"
        } else {
            "large"
        }
    ));
    match kind {
        SceneKind::Flat => {
            s.tags.insert("structure:open".into());
        }
        SceneKind::ObstacleField => {
            s.tags.insert("structure:narrow".into());
            obstacle_field(&mut s, &mut rng);
        }
        SceneKind::MultiLevel => {
            s.tags.insert("structure:multilevel".into());
            multi_level(&mut s, &mut rng);
        }
        SceneKind::Urban => {
            s.tags.insert("structure:urban".into());
            urban(&mut s, &mut rng);
        }
    }
    place_starts_and_targets(&mut s, kind, &mut rng);
    s.validate()?;
    Ok(s)
}

fn random_albedo(rng: &mut ChaCha8Rng) -> Rgb {
    Rgb(rng.gen_range(60..230), rng.gen_range(60..230), rng.gen_range(60..230))
}

/// Object mask colors live in the low-red half of the color cube so entity colors
/// (assigned by the simulator) never collide with them.
fn object_mask_color(index: usize) -> Rgb {
    let k = index as u32 + 1;
    Rgb((k % 97) as u8 + 1, ((k * 29) % 251) as u8, ((k * 53) % 241) as u8 | 0x80)
}

fn push_object(s: &mut SceneSpec, kind: ObjectKind, id: String, footprint: Aabb3, albedo: Rgb) {
    let idx = s.objects.len();
    let center = Vec3::new(
        0.5 * (footprint.min.x + footprint.max.x),
        0.5 * (footprint.min.y + footprint.max.y),
        footprint.min.z,
    );
    s.objects.push(InteractiveObject {
        id,
        kind,
        position: center,
        yaw: 0.0,
        state: (kind == ObjectKind::Door).then_some(DoorState::Closed),
        footprint,
        albedo,
        mask_color: object_mask_color(idx),
    });
}

fn cell_box(s: &SceneSpec, i0: usize, i1: usize, j: usize, height: f64) -> Aabb3 {
    let cs = s.cell_size;
    let z = s.ground_at(i0, j);
    Aabb3::new(
        Vec3::new(i0 as f64 * cs, j as f64 * cs, z),
        Vec3::new((i1 + 1) as f64 * cs, (j + 1) as f64 * cs, z + height),
    )
}

/// Rows of box walls with gaps. Each wall keeps one plain gap so the planner can
/// always cross; other gaps need crouching, jumping or opening a door.
fn obstacle_field(s: &mut SceneSpec, rng: &mut ChaCha8Rng) {
    let (nx, ny) = (s.nx, s.ny);
    let mut wall = 0;
    let mut j = 3;
    while j + 2 < ny {
        let plain = rng.gen_range(0..nx);
        let mut gaps = vec![(plain, 0u8)];
        for _ in 0..3 {
            let g = rng.gen_range(0..nx);
            if gaps.iter().all(|&(x, _)| x.abs_diff(g) > 1) {
                gaps.push((g, rng.gen_range(1..4)));
            }
        }
        gaps.sort();
        let mut run_start = None;
        for i in 0..=nx {
            let gap = gaps.iter().find(|&&(x, _)| x == i).copied();
            let solid = i < nx && gap.is_none();
            if solid && run_start.is_none() {
                run_start = Some(i);
            }
            if !solid {
                if let Some(a) = run_start.take() {
                    let fp = cell_box(s, a, i - 1, j, WALL_HEIGHT);
                    let albedo = random_albedo(rng);
                    push_object(s, ObjectKind::Box, format!("wall{wall}_{a}"), fp, albedo);
                }
            }
            if let Some((g, kind)) = gap {
                let k = s.idx(g, j);
                match kind {
                    // low passage: crouch under an overhang
                    1 => s.clearance[k] = Some(1.2),
                    // low step: jump onto it
                    2 => s.ground[k] = 0.4,
                    3 => {
                        let fp = cell_box(s, g, g, j, 2.2);
                        push_object(s, ObjectKind::Door, format!("door{wall}_{g}"), fp, Rgb(140, 90, 50));
                    }
                    _ => {}
                }
            }
        }
        wall += 1;
        j += 4;
    }
    // scattered crates in the open rows
    let crates = (nx * ny / 40).max(1);
    for c in 0..crates {
        let i = rng.gen_range(0..nx);
        let j = rng.gen_range(0..ny);
        if j % 4 == 3 || s.ground_at(i, j) != 0.0 || s.clearance_at(i, j).is_finite() {
            continue;
        }
        let fp = cell_box(s, i, i, j, 0.8);
        let albedo = random_albedo(rng);
        push_object(s, ObjectKind::Box, format!("crate{c}"), fp, albedo);
    }
    for k in 0..s.area.len() {
        if rng.gen_bool(0.05) {
            s.area[k] = AreaKind::Rough;
        }
    }
}

/// A low and a high plateau joined by a staircase; the remaining plateau edge is a
/// climbable wall.
fn multi_level(s: &mut SceneSpec, rng: &mut ChaCha8Rng) {
    let (nx, ny) = (s.nx, s.ny);
    let edge = nx / 2;
    let max_flight = edge.saturating_sub(1).max(1);
    let rise = 0.25;
    let steps = ((LIMITS.climb_height / rise).round() as usize - 1).min(max_flight);
    let height = rise * (steps as f64 + 1.0);
    for j in 0..ny {
        for i in edge..nx {
            let k = s.idx(i, j);
            s.ground[k] = height;
        }
        let k = s.idx(edge, j);
        s.climbable[k] = true;
    }
    let stair_row = rng.gen_range(0..ny - 1);
    for j in stair_row..stair_row + 2 {
        for t in 0..steps {
            let i = edge - steps + t;
            let k = s.idx(i, j);
            s.ground[k] = rise * (t as f64 + 1.0);
        }
        let k = s.idx(edge, j);
        s.climbable[k] = false;
    }
    for _ in 0..(nx * ny / 30) {
        let i = rng.gen_range(0..nx);
        let j = rng.gen_range(0..ny);
        let k = s.idx(i, j);
        s.area[k] = AreaKind::Rough;
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Band {
    Road,
    Walk,
    Building,
}

fn band(pos: usize) -> Band {
    match pos % 8 {
        0 | 1 | 7 => Band::Road,
        2 | 6 => Band::Walk,
        _ => Band::Building,
    }
}

/// Building blocks ringed by sidewalks on a road grid.
fn urban(s: &mut SceneSpec, rng: &mut ChaCha8Rng) {
    let ox = rng.gen_range(0..8);
    let oy = rng.gen_range(0..8);
    for j in 0..s.ny {
        for i in 0..s.nx {
            let (a, b) = (band(i + ox), band(j + oy));
            let k = s.idx(i, j);
            s.area[k] = if a == Band::Building && b == Band::Building {
                AreaKind::Blocked
            } else if a == Band::Road || b == Band::Road {
                AreaKind::Roadway
            } else {
                AreaKind::Walkway
            };
        }
    }
    // some blocks become plazas
    for j in 0..s.ny {
        for i in 0..s.nx {
            let k = s.idx(i, j);
            if s.area[k] == AreaKind::Blocked {
                let block = ((i + ox) / 8, (j + oy) / 8);
                let h = (block.0 as u64).wrapping_mul(31) ^ (block.1 as u64).wrapping_mul(17) ^ rng.gen_range(0..2);
                if h.is_multiple_of(5) {
                    s.area[k] = AreaKind::Walkway;
                } else {
                    s.ground[k] = BUILDING_HEIGHT;
                }
            }
        }
    }
    // guarantee both surfaces on tiny grids
    if !s.area.contains(&AreaKind::Roadway) {
        let k = s.idx(0, 0);
        s.area[k] = AreaKind::Roadway;
    }
    if !s.area.contains(&AreaKind::Walkway) {
        let k = s.idx(s.nx - 1, s.ny - 1);
        s.area[k] = AreaKind::Walkway;
    }
}

/// Cells reachable for a pedestrian from `start` under the conservative planning rules.
fn reachable(s: &SceneSpec, start: (usize, usize)) -> Vec<bool> {
    let human = crate::sim::EntityClass::of(crate::sim::EntityKind::Human);
    let grid = super::path::CostGrid::new(s, &human);
    let mut seen = vec![false; s.nx * s.ny];
    if !grid.passable(start.0, start.1) {
        return seen;
    }
    let mut q = VecDeque::from([start]);
    seen[s.idx(start.0, start.1)] = true;
    while let Some((i, j)) = q.pop_front() {
        let cand = [(i.wrapping_sub(1), j), (i + 1, j), (i, j.wrapping_sub(1)), (i, j + 1)];
        for (a, b) in cand {
            if a < s.nx && b < s.ny && !seen[s.idx(a, b)] && grid.passable(a, b) && grid.step_ok((i, j), (a, b)) {
                seen[s.idx(a, b)] = true;
                q.push_back((a, b));
            }
        }
    }
    seen
}

fn place_starts_and_targets(s: &mut SceneSpec, kind: SceneKind, rng: &mut ChaCha8Rng) {
    let (nx, ny) = (s.nx, s.ny);
    if kind == SceneKind::Flat {
        s.safe_start =
            [(1, 1), (nx - 2, 1), (1, ny - 2), (nx - 2, ny - 2)].iter().map(|&(i, j)| s.cell_center(i, j)).collect();
        s.target_locations = vec![s.cell_center(nx / 2, ny / 2)];
        return;
    }
    // largest reachable region found from a handful of seeds
    let mut best: Vec<bool> = Vec::new();
    let mut best_n = 0;
    for _ in 0..16 {
        let c = (rng.gen_range(0..nx), rng.gen_range(0..ny));
        let r = reachable(s, c);
        let n = r.iter().filter(|&&b| b).count();
        if n > best_n {
            best_n = n;
            best = r;
        }
    }
    if best_n == 0 {
        for j in 0..ny {
            for i in 0..nx {
                let r = reachable(s, (i, j));
                let n = r.iter().filter(|&&b| b).count();
                if n > best_n {
                    best_n = n;
                    best = r;
                }
            }
        }
    }
    let mut cells: Vec<(usize, usize)> = (0..ny)
        .flat_map(|j| (0..nx).map(move |i| (i, j)))
        .filter(|&(i, j)| best.get(j * nx + i).copied().unwrap_or(false))
        .filter(|&(i, j)| kind != SceneKind::Urban || s.area_at(i, j) == AreaKind::Walkway)
        .collect();
    if cells.is_empty() {
        cells = (0..ny)
            .flat_map(|j| (0..nx).map(move |i| (i, j)))
            .filter(|&(i, j)| best.get(j * nx + i).copied().unwrap_or(false))
            .collect();
    }
    for _ in 0..4.min(cells.len()) {
        let (i, j) = cells[rng.gen_range(0..cells.len())];
        s.safe_start.push(s.cell_center(i, j));
    }
    if let Some(&(i, j)) = cells.get(rng.gen_range(0..cells.len().max(1))) {
        s.target_locations.push(s.cell_center(i, j));
    }
}
