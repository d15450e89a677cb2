//! The stepped world: a scene, its entities and the clock.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::class::EntityClass;
use super::clock::SimClock;
use super::entity::{placement_obstacle, step_entity, Action, EntityState, Obstacle, Stance};
use super::SimError;
use crate::geom::{Rgb, Vec3};
use crate::world::{AreaKind, DoorState, SceneSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Collision { entity: String, with: Obstacle },
    Climbed { entity: String },
    PathBlocked { entity: String },
    Spawned { entity: String },
    Destroyed { entity: String },
    ObjectState { object: String, state: DoorState },
}

#[derive(Debug, Clone)]
pub struct World {
    pub scene: SceneSpec,
    entities: BTreeMap<String, EntityState>,
    pub clock: SimClock,
    /// Global illumination scalar applied by the color renderer.
    pub illumination: f64,
    rng: ChaCha8Rng,
}

/// Equality ignores the color-assignment RNG.
impl PartialEq for World {
    fn eq(&self, o: &Self) -> bool {
        self.scene == o.scene
            && self.entities == o.entities
            && self.clock == o.clock
            && self.illumination == o.illumination
    }
}

#[derive(Serialize)]
struct Snapshot<'a> {
    clock: &'a SimClock,
    entities: Vec<&'a EntityState>,
    doors: Vec<(&'a str, Option<DoorState>)>,
}

impl World {
    pub fn new(scene: SceneSpec, seed: u64) -> Self {
        Self {
            scene,
            entities: BTreeMap::new(),
            clock: SimClock::default(),
            illumination: 1.0,
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_C0DE),
        }
    }

    pub fn entity(&self, id: &str) -> Option<&EntityState> {
        self.entities.get(id)
    }

    pub fn entity_mut(&mut self, id: &str) -> Option<&mut EntityState> {
        self.entities.get_mut(id)
    }

    pub fn entities(&self) -> impl Iterator<Item = &EntityState> {
        self.entities.values()
    }

    pub fn entities_mut(&mut self) -> impl Iterator<Item = &mut EntityState> {
        self.entities.values_mut()
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    /// Stable text form of the dynamic state, for replay comparisons.
    pub fn snapshot_json(&self) -> String {
        let snap = Snapshot {
            clock: &self.clock,
            entities: self.entities.values().collect(),
            doors: self.scene.objects.iter().map(|o| (o.id.as_str(), o.state)).collect(),
        };
        serde_json::to_string(&snap).expect("snapshot serializes")
    }

    fn used_colors(&self) -> BTreeSet<Rgb> {
        let mut used: BTreeSet<Rgb> = self.entities.values().map(|e| e.mask_color).collect();
        used.extend(self.scene.objects.iter().map(|o| o.mask_color));
        used.insert(Rgb::BLACK);
        used
    }

    fn fresh_color(&mut self) -> Rgb {
        let used = self.used_colors();
        loop {
            // entity colors keep the top red bit set; generated objects never do
            let c = Rgb(self.rng.gen_range(128..=255), self.rng.gen(), self.rng.gen());
            if !used.contains(&c) {
                return c;
            }
        }
    }

    /// Whether an entity of `class` could stand at `position` without overlap.
    pub fn is_free(&self, class: &EntityClass, position: Vec3, ignore: Option<&str>) -> bool {
        let probe = EntityState::new("", *class, position, 0.0);
        let others: Vec<&EntityState> = self.entities.values().filter(|e| Some(e.id.as_str()) != ignore).collect();
        placement_obstacle(&self.scene, &others, &probe).is_none()
    }

    pub fn spawn_entity(
        &mut self,
        class: EntityClass,
        position: Vec3,
        yaw: f64,
        id: &str,
    ) -> Result<&EntityState, SimError> {
        if self.entities.contains_key(id) {
            return Err(SimError::DuplicateId(id.to_string()));
        }
        if !self.is_free(&class, position, None) {
            return Err(SimError::OccupiedSpawn(id.to_string()));
        }
        let mut e = EntityState::new(id, class, position, yaw);
        let (i, j) = self.scene.cell_of(position).expect("free spawn lies inside the grid");
        e.position.z = self.scene.ground_at(i, j) + if class.is_aerial() { class.eye_height } else { 0.0 };
        e.mask_color = self.fresh_color();
        self.entities.insert(id.to_string(), e);
        Ok(&self.entities[id])
    }

    pub fn destroy_entity(&mut self, id: &str) -> Result<EntityState, SimError> {
        self.entities.remove(id).ok_or_else(|| SimError::NoSuchEntity(id.to_string()))
    }

    /// Moves an entity without collision checks (resets, teleport commands).
    pub fn place_entity(&mut self, id: &str, position: Vec3, yaw: f64) -> Result<(), SimError> {
        let s = &self.scene;
        let cell = s.cell_of(position).ok_or_else(|| SimError::OutOfGrid(id.to_string()))?;
        let ground = s.ground_at(cell.0, cell.1);
        let e = self.entities.get_mut(id).ok_or_else(|| SimError::NoSuchEntity(id.to_string()))?;
        e.position =
            Vec3::new(position.x, position.y, ground + if e.class.is_aerial() { e.class.eye_height } else { 0.0 });
        e.yaw = crate::geom::wrap_deg(yaw);
        e.stance = Stance::Stand;
        e.linear_v = 0.0;
        e.angular_v = 0.0;
        e.jump_chain = false;
        e.crouch_time = 0.0;
        Ok(())
    }

    pub fn set_object_state(&mut self, id: &str, state: DoorState) -> Result<Option<Event>, SimError> {
        let changed = self.scene.set_object_state(id, state)?;
        Ok(changed.then(|| Event::ObjectState { object: id.to_string(), state }))
    }

    /// Applies `actions` in entity-id order, then advances the clock one tick.
    /// Entities without an action are left untouched.
    pub fn step_world(&mut self, actions: &BTreeMap<String, Action>, dt: f64) -> Result<Vec<Event>, SimError> {
        if let Some(missing) = actions.keys().find(|k| !self.entities.contains_key(*k)) {
            return Err(SimError::NoSuchEntity(missing.clone()));
        }
        let mut events = Vec::new();
        for (id, &action) in actions {
            let outcome = {
                let state = &self.entities[id];
                let others: Vec<&EntityState> = self.entities.values().filter(|e| &e.id != id).collect();
                step_entity(&self.scene, &others, state, action, dt)
            };
            if let Some(with) = outcome.collision {
                events.push(Event::Collision { entity: id.clone(), with });
            }
            if outcome.climbed {
                events.push(Event::Climbed { entity: id.clone() });
            }
            debug_assert!(self.in_bounds(&outcome.state), "entity {id} left the free space");
            self.entities.insert(id.clone(), outcome.state);
        }
        self.clock.tick_index += 1;
        Ok(events)
    }

    fn in_bounds(&self, e: &EntityState) -> bool {
        let s = &self.scene;
        match s.cell_of(e.position) {
            None => false,
            Some((i, j)) => e.class.is_aerial() || s.area_at(i, j) != AreaKind::Blocked,
        }
    }
}
