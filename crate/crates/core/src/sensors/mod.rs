//! Ego-centric cameras and ground-truth relative state.

pub mod render;

pub use render::{camera_basis, cast_ray, pixel_ray, render, render_camera, CameraPose, Hit, HitKind};

use serde::{Deserialize, Serialize};

use crate::geom::{bearing, wrap_deg, Rgb};
use crate::sim::EntityState;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SensorError {
    #[error("invalid camera config: {0}")]
    InvalidConfig(String),
    #[error("expected a {expected:?} frame, got {got:?}")]
    InvalidModality { expected: Modality, got: Modality },
    #[error("unknown modality '{0}'")]
    UnknownModality(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Color,
    Mask,
    Depth,
    Normal,
}

impl Modality {
    pub const ALL: [Modality; 4] = [Modality::Color, Modality::Mask, Modality::Depth, Modality::Normal];

    pub fn bytes_per_pixel(self) -> usize {
        match self {
            Modality::Color | Modality::Mask => 3,
            Modality::Depth => 4,
            Modality::Normal => 12,
        }
    }

    /// Wire code used by the response framing.
    pub fn code(self) -> u8 {
        match self {
            Modality::Color => 0,
            Modality::Mask => 1,
            Modality::Depth => 2,
            Modality::Normal => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.code() == code)
    }

    pub fn name(self) -> &'static str {
        match self {
            Modality::Color => "color",
            Modality::Mask => "mask",
            Modality::Depth => "depth",
            Modality::Normal => "normal",
        }
    }
}

impl std::str::FromStr for Modality {
    type Err = SensorError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lit" | "color" | "rgb" => Ok(Modality::Color),
            "mask" | "object_mask" => Ok(Modality::Mask),
            "depth" => Ok(Modality::Depth),
            "normal" => Ok(Modality::Normal),
            other => Err(SensorError::UnknownModality(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraConfig {
    pub width: u32,
    pub height: u32,
    /// Horizontal field of view, degrees.
    pub hfov: f64,
    /// Offset from the entity's eye point in the entity frame (forward, right, up).
    pub relative_location: [f64; 3],
    /// (pitch, yaw, roll) degrees relative to the entity heading.
    pub relative_rotation: [f64; 3],
    pub far_clip: f64,
    pub cam_id: u32,
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self {
            width: 320,
            height: 240,
            hfov: 90.0,
            relative_location: [0.0; 3],
            relative_rotation: [0.0; 3],
            far_clip: 100.0,
            cam_id: 0,
        }
    }
}

impl CameraConfig {
    pub fn with_size(width: u32, height: u32) -> Self {
        Self { width, height, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), SensorError> {
        if self.width < 8 || self.height < 8 {
            return Err(SensorError::InvalidConfig(format!("resolution {}x{} below 8x8", self.width, self.height)));
        }
        if !(self.hfov > 0.0 && self.hfov < 180.0) {
            return Err(SensorError::InvalidConfig(format!("hfov {} outside (0, 180)", self.hfov)));
        }
        if !(self.far_clip > 0.0) {
            return Err(SensorError::InvalidConfig(format!("far_clip {} must be positive", self.far_clip)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub modality: Modality,
    pub width: u32,
    pub height: u32,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn new(modality: Modality, width: u32, height: u32, payload: Vec<u8>) -> Self {
        debug_assert_eq!(payload.len(), width as usize * height as usize * modality.bytes_per_pixel());
        Self { modality, width, height, payload }
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn rgb_at(&self, u: u32, v: u32) -> Rgb {
        let k = 3 * (v as usize * self.width as usize + u as usize);
        Rgb(self.payload[k], self.payload[k + 1], self.payload[k + 2])
    }

    pub fn depth_at(&self, u: u32, v: u32) -> f32 {
        let k = 4 * (v as usize * self.width as usize + u as usize);
        f32::from_le_bytes(self.payload[k..k + 4].try_into().unwrap())
    }

    pub fn normal_at(&self, u: u32, v: u32) -> [f32; 3] {
        let k = 12 * (v as usize * self.width as usize + u as usize);
        let f = |o: usize| f32::from_le_bytes(self.payload[k + o..k + o + 4].try_into().unwrap());
        [f(0), f(4), f(8)]
    }
}

/// Target position relative to an observer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeState {
    pub distance: f64,
    /// Signed degrees, positive when the target is to the right of the heading.
    pub direction: f64,
    pub height: f64,
}

pub fn relative_state(observer: &EntityState, target: &EntityState) -> RelativeState {
    let d = target.position - observer.position;
    let distance = libm::hypot(d.x, d.y);
    let direction = if distance == 0.0 { 0.0 } else { wrap_deg(bearing(d) - observer.yaw) };
    RelativeState { distance, direction, height: d.z }
}

/// Inclusive pixel bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BBox {
    pub u_min: u32,
    pub v_min: u32,
    pub u_max: u32,
    pub v_max: u32,
}

impl BBox {
    pub fn width(&self) -> u32 {
        self.u_max - self.u_min + 1
    }

    pub fn height(&self) -> u32 {
        self.v_max - self.v_min + 1
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.u_min + self.u_max) as f64 / 2.0, (self.v_min + self.v_max) as f64 / 2.0)
    }
}

pub fn bbox_from_mask(frame: &Frame, color: Rgb) -> Result<Option<BBox>, SensorError> {
    if frame.modality != Modality::Mask {
        return Err(SensorError::InvalidModality { expected: Modality::Mask, got: frame.modality });
    }
    let mut b: Option<BBox> = None;
    for (k, px) in frame.payload.chunks_exact(3).enumerate() {
        if Rgb(px[0], px[1], px[2]) != color {
            continue;
        }
        let (u, v) = ((k % frame.width as usize) as u32, (k / frame.width as usize) as u32);
        b = Some(match b {
            None => BBox { u_min: u, v_min: v, u_max: u, v_max: v },
            Some(b) => {
                BBox { u_min: b.u_min.min(u), v_min: b.v_min.min(v), u_max: b.u_max.max(u), v_max: b.v_max.max(v) }
            }
        });
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec3;
    use crate::sim::{EntityClass, EntityKind};

    fn at(x: f64, y: f64, yaw: f64) -> EntityState {
        EntityState::new("e", EntityClass::of(EntityKind::Human), Vec3::new(x, y, 0.0), yaw)
    }

    #[test]
    fn relative_state_examples() {
        let o = at(0.0, 0.0, 0.0);
        assert_eq!(
            relative_state(&o, &at(3.0, 0.0, 0.0)),
            RelativeState { distance: 3.0, direction: 0.0, height: 0.0 }
        );
        assert_eq!(relative_state(&o, &at(0.0, 3.0, 0.0)).direction, -90.0);
        assert_eq!(relative_state(&o, &o), RelativeState { distance: 0.0, direction: 0.0, height: 0.0 });
        assert_eq!(relative_state(&o, &at(-2.0, 0.0, 0.0)).direction, 180.0);
    }

    fn mask_with(rects: &[(u32, u32, u32, u32)], c: Rgb) -> Frame {
        let (w, h) = (40, 40);
        let mut p = vec![0u8; w * h * 3];
        for &(u0, v0, rw, rh) in rects {
            for v in v0..v0 + rh {
                for u in u0..u0 + rw {
                    let k = 3 * (v as usize * w + u as usize);
                    p[k..k + 3].copy_from_slice(&[c.0, c.1, c.2]);
                }
            }
        }
        Frame::new(Modality::Mask, w as u32, h as u32, p)
    }

    #[test]
    fn bbox_examples() {
        let c = Rgb(200, 10, 10);
        let f = mask_with(&[(5, 5, 10, 20)], c);
        assert_eq!(bbox_from_mask(&f, c).unwrap(), Some(BBox { u_min: 5, v_min: 5, u_max: 14, v_max: 24 }));
        assert_eq!(bbox_from_mask(&f, Rgb(1, 2, 3)).unwrap(), None);
        let f = mask_with(&[(1, 2, 3, 3), (30, 20, 2, 5)], c);
        assert_eq!(bbox_from_mask(&f, c).unwrap(), Some(BBox { u_min: 1, v_min: 2, u_max: 31, v_max: 24 }));
        let depth = Frame::new(Modality::Depth, 8, 8, vec![0; 256]);
        assert!(matches!(bbox_from_mask(&depth, c), Err(SensorError::InvalidModality { .. })));
    }

    #[test]
    fn config_validation() {
        assert!(CameraConfig::default().validate().is_ok());
        assert!(CameraConfig::with_size(4, 10).validate().is_err());
        assert!(CameraConfig { hfov: 180.0, ..Default::default() }.validate().is_err());
        assert!(CameraConfig { far_clip: 0.0, ..Default::default() }.validate().is_err());
    }
}
