use std::collections::BTreeSet;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use super::WorldError;
use crate::geom::{Aabb3, Rgb, Vec3};

/// Surface category of a grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AreaKind {
    Walkway,
    Roadway,
    Rough,
    Blocked,
}

impl AreaKind {
    pub const ALL: [AreaKind; 4] = [AreaKind::Walkway, AreaKind::Roadway, AreaKind::Rough, AreaKind::Blocked];

    fn index(self) -> usize {
        match self {
            AreaKind::Walkway => 0,
            AreaKind::Roadway => 1,
            AreaKind::Rough => 2,
            AreaKind::Blocked => 3,
        }
    }
}

/// Which cost row of [`AreaCosts`] a class plans with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerGroup {
    Pedestrian,
    Vehicle,
    Aerial,
}

/// A cell's area kind together with the multiplier a planner group pays to enter it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraversalArea {
    pub kind: AreaKind,
    /// `f64::INFINITY` when the group cannot enter the area.
    pub multiplier: f64,
}

/// Per-group cost multipliers indexed by [`AreaKind`]; `None` is an infinite cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaCosts {
    pub pedestrian: [Option<f64>; 4],
    pub vehicle: [Option<f64>; 4],
    pub aerial: [Option<f64>; 4],
}

impl Default for AreaCosts {
    fn default() -> Self {
        Self {
            pedestrian: [Some(1.0), Some(4.0), Some(2.0), None],
            vehicle: [Some(4.0), Some(1.0), None, None],
            aerial: [Some(1.0), Some(1.0), Some(1.0), None],
        }
    }
}

impl AreaCosts {
    fn row(&self, group: PlannerGroup) -> &[Option<f64>; 4] {
        match group {
            PlannerGroup::Pedestrian => &self.pedestrian,
            PlannerGroup::Vehicle => &self.vehicle,
            PlannerGroup::Aerial => &self.aerial,
        }
    }

    pub fn multiplier(&self, group: PlannerGroup, kind: AreaKind) -> f64 {
        self.row(group)[kind.index()].unwrap_or(f64::INFINITY)
    }

    /// Smallest finite multiplier of the group; cells charged more than this are
    /// off the group's preferred surface.
    pub fn preferred(&self, group: PlannerGroup) -> f64 {
        self.row(group).iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        for group in [PlannerGroup::Pedestrian, PlannerGroup::Vehicle, PlannerGroup::Aerial] {
            for v in self.row(group).iter().flatten() {
                if !(v.is_finite() && *v > 0.0) {
                    return Err(WorldError::InvalidScene(format!(
                        "cost multiplier {v} for {group:?} must be positive"
                    )));
                }
            }
            if self.row(group)[AreaKind::Blocked.index()].is_some() {
                return Err(WorldError::InvalidScene(format!("blocked area must be impassable for {group:?}")));
            }
        }
        let m = |g, k| self.multiplier(g, k);
        if m(PlannerGroup::Pedestrian, AreaKind::Walkway) >= m(PlannerGroup::Pedestrian, AreaKind::Roadway) {
            return Err(WorldError::InvalidScene("pedestrians must prefer walkway over roadway".into()));
        }
        if m(PlannerGroup::Vehicle, AreaKind::Roadway) >= m(PlannerGroup::Vehicle, AreaKind::Walkway) {
            return Err(WorldError::InvalidScene("vehicles must prefer roadway over walkway".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    Door,
    Box,
    TargetMarker,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DoorState {
    Open,
    Closed,
}

impl std::str::FromStr for DoorState {
    type Err = WorldError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "open" | "1" => Ok(DoorState::Open),
            "closed" | "close" | "0" => Ok(DoorState::Closed),
            other => Err(WorldError::UnsupportedInteraction(format!("unknown door state '{other}'"))),
        }
    }
}

impl std::fmt::Display for DoorState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DoorState::Open => "open",
            DoorState::Closed => "closed",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractiveObject {
    pub id: String,
    pub kind: ObjectKind,
    pub position: Vec3,
    pub yaw: f64,
    /// Only doors carry a state.
    pub state: Option<DoorState>,
    pub footprint: Aabb3,
    pub albedo: Rgb,
    pub mask_color: Rgb,
}

impl InteractiveObject {
    /// Whether the footprint currently obstructs movement and planning.
    pub fn obstructs(&self) -> bool {
        match self.kind {
            ObjectKind::Box => true,
            ObjectKind::Door => self.state != Some(DoorState::Open),
            ObjectKind::TargetMarker => false,
        }
    }

    /// Whether the object is drawn by the renderer. Open doors swing out of view.
    pub fn visible(&self) -> bool {
        !(self.kind == ObjectKind::Door && self.state == Some(DoorState::Open))
    }
}

/// A procedural scene: heightfield, overhead clearance, traversal areas and objects.
///
/// Cell `(i, j)` covers `[i*cs, (i+1)*cs) x [j*cs, (j+1)*cs)`; per-cell vectors are
/// row-major with index `j * nx + i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub name: String,
    pub tags: BTreeSet<String>,
    pub nx: usize,
    pub ny: usize,
    pub cell_size: f64,
    pub ground: Vec<f64>,
    /// Ceiling height above ground; `None` is open sky.
    pub clearance: Vec<Option<f64>>,
    pub area: Vec<AreaKind>,
    /// Cells whose side faces can be climbed.
    pub climbable: Vec<bool>,
    pub area_costs: AreaCosts,
    pub objects: Vec<InteractiveObject>,
    pub safe_start: Vec<Vec3>,
    pub reset_area: Aabb3,
    pub target_locations: Vec<Vec3>,
}

pub const SCENE_FORMAT: &str = "zoosim-scene";
pub const SCENE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct SceneDocument {
    format: String,
    version: u32,
    scene: SceneSpec,
}

impl SceneSpec {
    /// A flat walkway scene with no objects, used as a blank canvas by generators and tests.
    pub fn blank(name: &str, nx: usize, ny: usize, cell_size: f64) -> Self {
        let n = nx * ny;
        let extent = Vec3::new(nx as f64 * cell_size, ny as f64 * cell_size, 3.0);
        Self {
            name: name.to_string(),
            tags: BTreeSet::new(),
            nx,
            ny,
            cell_size,
            ground: vec![0.0; n],
            clearance: vec![None; n],
            area: vec![AreaKind::Walkway; n],
            climbable: vec![false; n],
            area_costs: AreaCosts::default(),
            objects: Vec::new(),
            safe_start: Vec::new(),
            reset_area: Aabb3::new(Vec3::ZERO, extent),
            target_locations: Vec::new(),
        }
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn width(&self) -> f64 {
        self.nx as f64 * self.cell_size
    }

    pub fn depth(&self) -> f64 {
        self.ny as f64 * self.cell_size
    }

    pub fn cell_of(&self, p: Vec3) -> Option<(usize, usize)> {
        if !(p.x >= 0.0 && p.y >= 0.0) {
            return None;
        }
        let i = (p.x / self.cell_size).floor() as usize;
        let j = (p.y / self.cell_size).floor() as usize;
        (i < self.nx && j < self.ny).then_some((i, j))
    }

    pub fn cell_center(&self, i: usize, j: usize) -> Vec3 {
        Vec3::new((i as f64 + 0.5) * self.cell_size, (j as f64 + 0.5) * self.cell_size, self.ground[self.idx(i, j)])
    }

    pub fn cell_bounds(&self, i: usize, j: usize) -> (f64, f64, f64, f64) {
        let cs = self.cell_size;
        (i as f64 * cs, (i + 1) as f64 * cs, j as f64 * cs, (j + 1) as f64 * cs)
    }

    pub fn ground_at(&self, i: usize, j: usize) -> f64 {
        self.ground[self.idx(i, j)]
    }

    pub fn clearance_at(&self, i: usize, j: usize) -> f64 {
        self.clearance[self.idx(i, j)].unwrap_or(f64::INFINITY)
    }

    pub fn area_at(&self, i: usize, j: usize) -> AreaKind {
        self.area[self.idx(i, j)]
    }

    pub fn traversal(&self, i: usize, j: usize, group: PlannerGroup) -> TraversalArea {
        let kind = self.area_at(i, j);
        TraversalArea { kind, multiplier: self.area_costs.multiplier(group, kind) }
    }

    pub fn object(&self, id: &str) -> Option<&InteractiveObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    /// Cells whose interior overlaps `b` with positive area.
    pub fn cells_overlapping(&self, b: &Aabb3) -> impl Iterator<Item = (usize, usize)> {
        let cs = self.cell_size;
        let i0 = (b.min.x / cs).floor().max(0.0) as usize;
        let j0 = (b.min.y / cs).floor().max(0.0) as usize;
        let i1 = ((b.max.x / cs).ceil().max(0.0) as usize).min(self.nx);
        let j1 = ((b.max.y / cs).ceil().max(0.0) as usize).min(self.ny);
        let (nx, ny) = (self.nx, self.ny);
        (j0..j1.max(j0))
            .flat_map(move |j| (i0..i1.max(i0)).map(move |i| (i, j)))
            .filter(move |&(i, j)| i < nx && j < ny)
    }

    /// Mask of cells covered by obstructing object footprints.
    pub fn object_occupancy(&self) -> Vec<bool> {
        let mut occ = vec![false; self.nx * self.ny];
        for o in self.objects.iter().filter(|o| o.obstructs()) {
            for (i, j) in self.cells_overlapping(&o.footprint) {
                occ[j * self.nx + i] = true;
            }
        }
        occ
    }

    /// Area kind after closed doors and boxes are taken into account.
    pub fn effective_area(&self) -> Vec<AreaKind> {
        let occ = self.object_occupancy();
        self.area.iter().zip(occ).map(|(&a, o)| if o { AreaKind::Blocked } else { a }).collect()
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        let bad = |m: String| Err(WorldError::InvalidScene(m));
        if self.nx < 1 || self.ny < 1 {
            return bad("grid must be at least 1x1".into());
        }
        if !(self.cell_size > 0.0 && self.cell_size.is_finite()) {
            return bad("cell_size must be positive".into());
        }
        let n = self.nx * self.ny;
        if self.ground.len() != n || self.clearance.len() != n || self.area.len() != n || self.climbable.len() != n {
            return bad("per-cell layers must have nx*ny entries".into());
        }
        if self.ground.iter().any(|g| !g.is_finite()) {
            return bad("elevations must be finite".into());
        }
        if self.clearance.iter().flatten().any(|c| !(*c >= 0.0)) {
            return bad("clearance must be non-negative".into());
        }
        self.area_costs.validate()?;
        let area = self.effective_area();
        for (what, list) in [("safe_start", &self.safe_start), ("target_locations", &self.target_locations)] {
            for p in list.iter() {
                match self.cell_of(*p) {
                    None => return bad(format!("{what} entry {p:?} lies outside the grid")),
                    Some((i, j)) if area[self.idx(i, j)] == AreaKind::Blocked => {
                        return bad(format!("{what} entry {p:?} lies on a blocked cell"))
                    }
                    _ => {}
                }
            }
        }
        let r = &self.reset_area;
        if r.min.x > r.max.x || r.min.y > r.max.y || r.min.z > r.max.z {
            return bad("reset_area min exceeds max".into());
        }
        if r.max.x < 0.0 || r.max.y < 0.0 || r.min.x > self.width() || r.min.y > self.depth() {
            return bad("reset_area does not intersect the grid".into());
        }
        let mut ids = BTreeSet::new();
        for o in &self.objects {
            if !ids.insert(o.id.as_str()) {
                return bad(format!("duplicate object id '{}'", o.id));
            }
            if (o.kind == ObjectKind::Door) != o.state.is_some() {
                return bad(format!("object '{}': only doors carry a state", o.id));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let doc = SceneDocument { format: SCENE_FORMAT.into(), version: SCENE_VERSION, scene: self.clone() };
        serde_json::to_string_pretty(&doc).expect("scene serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, WorldError> {
        let doc: SceneDocument = serde_json::from_str(text).map_err(|e| WorldError::Format(e.to_string()))?;
        if doc.format != SCENE_FORMAT {
            return Err(WorldError::Format(format!("unexpected format '{}'", doc.format)));
        }
        if doc.version != SCENE_VERSION {
            return Err(WorldError::Format(format!("unsupported scene version {}", doc.version)));
        }
        doc.scene.validate()?;
        Ok(doc.scene)
    }

    pub fn save(&self, path: &FsPath) -> Result<(), WorldError> {
        std::fs::write(path, self.to_json()).map_err(|e| WorldError::Io(e.to_string()))
    }

    pub fn load(path: &FsPath) -> Result<Self, WorldError> {
        let text = std::fs::read_to_string(path).map_err(|e| WorldError::Io(e.to_string()))?;
        Self::from_json(&text)
    }

    /// Opens or closes a door. The footprint's blocked status follows the state.
    pub fn set_object_state(&mut self, id: &str, state: DoorState) -> Result<bool, WorldError> {
        let obj =
            self.objects.iter_mut().find(|o| o.id == id).ok_or_else(|| WorldError::NoSuchObject(id.to_string()))?;
        if obj.kind != ObjectKind::Door {
            return Err(WorldError::UnsupportedInteraction(format!("object '{id}' is a {:?}, not a door", obj.kind)));
        }
        let changed = obj.state != Some(state);
        obj.state = Some(state);
        Ok(changed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn door_scene() -> SceneSpec {
        let mut s = SceneSpec::blank("doors", 6, 6, 1.0);
        s.objects.push(InteractiveObject {
            id: "door0".into(),
            kind: ObjectKind::Door,
            position: Vec3::new(3.5, 3.5, 0.0),
            yaw: 0.0,
            state: Some(DoorState::Closed),
            footprint: Aabb3::new(Vec3::new(3.0, 3.0, 0.0), Vec3::new(4.0, 4.0, 2.2)),
            albedo: Rgb(120, 80, 40),
            mask_color: Rgb(10, 20, 30),
        });
        s.objects.push(InteractiveObject {
            id: "crate0".into(),
            kind: ObjectKind::Box,
            position: Vec3::new(1.5, 1.5, 0.0),
            yaw: 0.0,
            state: None,
            footprint: Aabb3::new(Vec3::new(1.0, 1.0, 0.0), Vec3::new(2.0, 2.0, 1.0)),
            albedo: Rgb(90, 90, 90),
            mask_color: Rgb(40, 50, 60),
        });
        s
    }

    #[test]
    fn default_costs_are_valid() {
        AreaCosts::default().validate().unwrap();
    }

    #[test]
    fn blocked_with_finite_cost_rejected() {
        let mut c = AreaCosts::default();
        c.vehicle[3] = Some(10.0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn closed_door_blocks_footprint() {
        let mut s = door_scene();
        assert_eq!(s.effective_area()[s.idx(3, 3)], AreaKind::Blocked);
        assert!(s.set_object_state("door0", DoorState::Open).unwrap());
        assert_eq!(s.effective_area()[s.idx(3, 3)], AreaKind::Walkway);
    }

    #[test]
    fn open_open_door_is_noop() {
        let mut s = door_scene();
        s.set_object_state("door0", DoorState::Open).unwrap();
        let before = s.clone();
        assert!(!s.set_object_state("door0", DoorState::Open).unwrap());
        assert_eq!(s, before);
    }

    #[test]
    fn box_interaction_unsupported() {
        let mut s = door_scene();
        assert!(matches!(s.set_object_state("crate0", DoorState::Open), Err(WorldError::UnsupportedInteraction(_))));
        assert!(matches!(s.set_object_state("missing", DoorState::Open), Err(WorldError::NoSuchObject(_))));
    }

    #[test]
    fn json_round_trip() {
        let mut s = door_scene();
        s.clearance[7] = Some(1.2);
        s.safe_start.push(Vec3::new(0.5, 0.5, 0.0));
        let back = SceneSpec::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn safe_start_on_blocked_rejected() {
        let mut s = door_scene();
        s.safe_start.push(Vec3::new(1.5, 1.5, 0.0));
        assert!(matches!(s.validate(), Err(WorldError::InvalidScene(_))));
    }

    #[test]
    fn wrong_version_rejected() {
        let s = door_scene();
        let text = s.to_json().replace("\"version\": 1", "\"version\": 9");
        assert!(matches!(SceneSpec::from_json(&text), Err(WorldError::Format(_))));
    }
}
