use serde::{Deserialize, Serialize};
use std::str::FromStr;

use crate::world::PlannerGroup;

/// The seven playable entity families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Human,
    Animal,
    RobotDog,
    Vehicle,
    Motorbike,
    Drone,
    FlyingCamera,
}

impl EntityKind {
    pub const ALL: [EntityKind; 7] = [
        EntityKind::Human,
        EntityKind::Animal,
        EntityKind::RobotDog,
        EntityKind::Vehicle,
        EntityKind::Motorbike,
        EntityKind::Drone,
        EntityKind::FlyingCamera,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EntityKind::Human => "human",
            EntityKind::Animal => "animal",
            EntityKind::RobotDog => "robot_dog",
            EntityKind::Vehicle => "vehicle",
            EntityKind::Motorbike => "motorbike",
            EntityKind::Drone => "drone",
            EntityKind::FlyingCamera => "flying_camera",
        }
    }
}

impl FromStr for EntityKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let k = s.to_ascii_lowercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|e| e.name() == k || e.name().replace('_', "") == k.replace('_', ""))
            .or(match k.as_str() {
                "car" => Some(EntityKind::Vehicle),
                "dog" | "robot" => Some(EntityKind::RobotDog),
                "player" | "character" => Some(EntityKind::Human),
                _ => None,
            })
            .ok_or_else(|| format!("unknown entity class '{s}'"))
    }
}

/// Physical and control affordances of an entity family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntityClass {
    pub kind: EntityKind,
    pub radius: f64,
    /// Rendered cylinder height.
    pub height: f64,
    pub eye_height: f64,
    pub max_linear: f64,
    pub max_angular: f64,
    pub can_crouch: bool,
    pub can_jump: bool,
    pub planner_group: PlannerGroup,
    /// Overhead clearance needed to stand (or drive) upright.
    pub stand_clearance: f64,
}

impl EntityClass {
    pub fn of(kind: EntityKind) -> Self {
        use PlannerGroup::*;
        let (radius, height, eye, lin, ang, crouch, jump, group, clear) = match kind {
            EntityKind::Human => (0.3, 1.8, 1.6, 1.5, 90.0, true, true, Pedestrian, 1.7),
            EntityKind::Animal => (0.35, 0.9, 0.7, 2.5, 120.0, false, true, Pedestrian, 0.9),
            EntityKind::RobotDog => (0.3, 0.6, 0.45, 1.5, 90.0, false, true, Pedestrian, 0.6),
            EntityKind::Vehicle => (1.0, 1.6, 1.3, 10.0, 45.0, false, false, Vehicle, 1.8),
            EntityKind::Motorbike => (0.5, 1.4, 1.3, 8.0, 60.0, false, false, Vehicle, 1.6),
            EntityKind::Drone => (0.3, 0.25, 3.0, 5.0, 120.0, false, false, Aerial, 0.0),
            EntityKind::FlyingCamera => (0.1, 0.1, 5.0, 5.0, 180.0, false, false, Aerial, 0.0),
        };
        Self {
            kind,
            radius,
            height,
            eye_height: eye,
            max_linear: lin,
            max_angular: ang,
            can_crouch: crouch,
            can_jump: jump,
            planner_group: group,
            stand_clearance: clear,
        }
    }

    pub fn is_aerial(&self) -> bool {
        self.planner_group == PlannerGroup::Aerial
    }
}

/// Locomotion geometry shared by the planner and the stepper.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocomotionLimits {
    /// Largest rise walked without jumping.
    pub step_height: f64,
    /// Largest rise cleared by a single jump.
    pub jump_clearance: f64,
    /// Largest climbable face.
    pub climb_height: f64,
    /// Overhead clearance window in which crouching is required and sufficient.
    pub crouch_clearance: f64,
    /// Crouching ends automatically after this much sim time.
    pub crouch_duration: f64,
}

pub const LIMITS: LocomotionLimits = LocomotionLimits {
    step_height: 0.3,
    jump_clearance: 0.5,
    climb_height: 2.0,
    crouch_clearance: 0.9,
    crouch_duration: 2.0,
};

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seven_families() {
        assert_eq!(EntityKind::ALL.len(), 7);
        for k in EntityKind::ALL {
            assert_eq!(k.name().parse::<EntityKind>().unwrap(), k);
        }
    }

    #[test]
    fn class_invariants() {
        let human = EntityClass::of(EntityKind::Human);
        let dog = EntityClass::of(EntityKind::RobotDog);
        assert!(human.eye_height > dog.eye_height);
        assert!(EntityClass::of(EntityKind::Drone).is_aerial());
        assert!(EntityClass::of(EntityKind::FlyingCamera).is_aerial());
        assert!((LIMITS.crouch_clearance..human.stand_clearance).contains(&1.2));
    }
}
