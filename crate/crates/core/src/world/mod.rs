//! Procedural scene model with area-prioritized shortest-path planning.

mod generate;
mod path;
mod scene;

pub use generate::{generate_scene, GeneratorSpec, SceneKind, BUILDING_HEIGHT, WALL_HEIGHT};
pub use path::{find_path, find_path_to_region, shortest_path_length, CostGrid, Path};
pub use scene::{
    AreaCosts, AreaKind, DoorState, InteractiveObject, ObjectKind, PlannerGroup, SceneSpec, TraversalArea,
    SCENE_FORMAT, SCENE_VERSION,
};

use crate::geom::Vec3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WorldError {
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("no finite-cost route")]
    NoPath,
    #[error("position {0:?} is outside the grid")]
    OutOfGrid(Vec3),
    #[error("no such object '{0}'")]
    NoSuchObject(String),
    #[error("unsupported interaction: {0}")]
    UnsupportedInteraction(String),
    #[error("scene document: {0}")]
    Format(String),
    #[error("scene i/o: {0}")]
    Io(String),
}
