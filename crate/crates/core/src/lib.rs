//! Desk-scale embodied-agent simulation core.
//!
//! The crate is split along the simulation stack:
//!
//! - [`world`]: procedural scenes, traversal areas and area-prioritized planning.
//! - [`sim`]: entity classes, locomotion, the world stepper and scripted controllers.
//! - [`sensors`]: ego-centric raycast rendering and ground-truth relative state.
//! - [`env`]: gym-style tasks (navigation, tracking), rewards and toolkit wrappers.
//!
//! World frame: right-handed, `z` up, meters. Yaw is in degrees and increases
//! clockwise when seen from above, so a heading of `yaw` points along
//! `(cos yaw, -sin yaw)`. Turning right is a positive angular velocity.

pub mod env;
pub mod geom;
pub mod sensors;
pub mod sim;
pub mod world;

pub use geom::{Aabb3, Rgb, Vec3};
