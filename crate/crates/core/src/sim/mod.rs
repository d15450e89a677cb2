//! Entities, locomotion and the fixed-step world.

mod class;
mod clock;
mod entity;
mod nav;
mod world;

pub use class::{EntityClass, EntityKind, LocomotionLimits, LIMITS};
pub use clock::{SimClock, BASE_TICK_HZ};
pub use entity::{
    placement_obstacle, step_entity, Action, ContinuousMoveAction, DiscreteNavAction, EntityState, MoveTable, Obstacle,
    Stance, StepOutcome, MAX_ANGULAR, MAX_LINEAR,
};
pub use nav::{builtin_navigate, smooth_route, Navigator, RandomWalker};
pub use world::{Event, World};

use crate::world::WorldError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("no such entity '{0}'")]
    NoSuchEntity(String),
    #[error("entity id '{0}' already exists")]
    DuplicateId(String),
    #[error("spawn position for '{0}' is occupied")]
    OccupiedSpawn(String),
    #[error("position for '{0}' is outside the grid")]
    OutOfGrid(String),
    #[error(transparent)]
    World(#[from] WorldError),
}
