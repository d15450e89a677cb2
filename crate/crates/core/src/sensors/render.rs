//! Exact raycasting against the heightfield grid, object boxes and entity cylinders.

use super::{CameraConfig, Frame, Modality};
use crate::geom::{Aabb3, Rgb, Vec3};
use crate::sim::EntityState;
use crate::world::{AreaKind, SceneSpec};

/// Thickness of the ceiling slab that forms an overhang.
pub const CEILING_THICKNESS: f64 = 0.5;
const SKY: Rgb = Rgb(150, 190, 235);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    pub position: Vec3,
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

impl CameraPose {
    /// Pose of the camera mounted on `e`.
    pub fn of_entity(e: &EntityState, cfg: &CameraConfig) -> Self {
        let [fwd, right, up] = cfg.relative_location;
        let h = crate::geom::heading(e.yaw);
        let r = Vec3::new(h.y, -h.x, 0.0);
        let position = e.eye_position() + h * fwd + r * right + Vec3::new(0.0, 0.0, up);
        let [pitch, yaw, roll] = cfg.relative_rotation;
        Self { position, yaw: e.yaw + yaw, pitch, roll }
    }
}

/// Forward, right and up unit vectors.
pub fn camera_basis(pose: &CameraPose) -> (Vec3, Vec3, Vec3) {
    let (sy, cy) = libm::sincos(pose.yaw.to_radians());
    let (sp, cp) = libm::sincos(pose.pitch.to_radians());
    let f = Vec3::new(cp * cy, -cp * sy, sp);
    let r = Vec3::new(-sy, -cy, 0.0);
    let up = r.cross(f);
    if pose.roll == 0.0 {
        return (f, r, up);
    }
    let (sr, cr) = libm::sincos(pose.roll.to_radians());
    (f, r * cr + up * sr, up * cr - r * sr)
}

/// Unit direction through the center of pixel `(u, v)`.
pub fn pixel_ray(basis: &(Vec3, Vec3, Vec3), cfg: &CameraConfig, u: u32, v: u32) -> Vec3 {
    let (f, r, up) = *basis;
    let th = libm::tan((cfg.hfov / 2.0).to_radians());
    let tv = th * cfg.height as f64 / cfg.width as f64;
    let a = ((u as f64 + 0.5) / cfg.width as f64 * 2.0 - 1.0) * th;
    let b = (1.0 - (v as f64 + 0.5) / cfg.height as f64 * 2.0) * tv;
    (f + r * a + up * b).normalized()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HitKind {
    Terrain(usize, usize),
    Object(usize),
    Entity(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub normal: Vec3,
    pub kind: HitKind,
}

fn terrain_albedo(kind: AreaKind) -> Rgb {
    match kind {
        AreaKind::Walkway => Rgb(170, 170, 165),
        AreaKind::Roadway => Rgb(80, 80, 85),
        AreaKind::Rough => Rgb(120, 100, 70),
        AreaKind::Blocked => Rgb(150, 140, 130),
    }
}

/// First `t` in `[ta, tb]` where `z(t)` lies in `[lo, hi]`.
fn interval_entry(oz: f64, dz: f64, ta: f64, tb: f64, lo: f64, hi: f64) -> Option<f64> {
    let (t0, t1) = if dz == 0.0 {
        if lo <= oz && oz <= hi {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else {
            return None;
        }
    } else {
        let a = (lo - oz) / dz;
        let b = (hi - oz) / dz;
        (a.min(b), a.max(b))
    };
    let entry = ta.max(t0);
    (entry <= tb.min(t1)).then_some(entry)
}

fn terrain_hit(scene: &SceneSpec, o: Vec3, d: Vec3, far: f64) -> Option<Hit> {
    let cs = scene.cell_size;
    let (w, dp) = (scene.width(), scene.depth());
    // clip the ray against the grid footprint
    let mut t_in = 0.0_f64;
    let mut t_out = far;
    let mut entry_axis = None;
    for (axis, oc, dc, hi) in [(0, o.x, d.x, w), (1, o.y, d.y, dp)] {
        if dc == 0.0 {
            if oc < 0.0 || oc > hi {
                return None;
            }
            continue;
        }
        let (a, b) = ((0.0 - oc) / dc, (hi - oc) / dc);
        let (near, farther) = (a.min(b), a.max(b));
        if near > t_in {
            t_in = near;
            entry_axis = Some(axis);
        }
        t_out = t_out.min(farther);
    }
    if t_in > t_out {
        return None;
    }
    let p = o + d * t_in;
    let clampi = |x: f64, n: usize| ((x / cs).floor().max(0.0) as usize).min(n - 1);
    let (mut i, mut j) = (clampi(p.x, scene.nx), clampi(p.y, scene.ny));
    let step_x: i64 = if d.x > 0.0 { 1 } else { -1 };
    let step_y: i64 = if d.y > 0.0 { 1 } else { -1 };
    let next_boundary = |c: usize, s: i64| (c as f64 + if s > 0 { 1.0 } else { 0.0 }) * cs;
    let mut t_max_x = if d.x == 0.0 { f64::INFINITY } else { (next_boundary(i, step_x) - o.x) / d.x };
    let mut t_max_y = if d.y == 0.0 { f64::INFINITY } else { (next_boundary(j, step_y) - o.y) / d.y };
    let t_dx = if d.x == 0.0 { f64::INFINITY } else { cs / d.x.abs() };
    let t_dy = if d.y == 0.0 { f64::INFINITY } else { cs / d.y.abs() };
    let mut side_normal = match entry_axis {
        Some(0) => Vec3::new(-(step_x as f64), 0.0, 0.0),
        Some(_) => Vec3::new(0.0, -(step_y as f64), 0.0),
        None => Vec3::ZERO,
    };
    let starts_inside = entry_axis.is_none();
    let mut ta = t_in;
    let mut first = true;
    loop {
        let tb = t_max_x.min(t_max_y).min(t_out);
        let k = scene.idx(i, j);
        let g = scene.ground[k];
        let top_normal = if d.z < 0.0 { Vec3::new(0.0, 0.0, 1.0) } else { Vec3::new(0.0, 0.0, -1.0) };
        let slab = scene.clearance[k].map(|c| (g + c, g + c + CEILING_THICKNESS));
        let mut best: Option<Hit> = None;
        for (lo, hi) in std::iter::once((f64::NEG_INFINITY, g)).chain(slab) {
            if first && starts_inside && lo <= o.z && o.z <= hi {
                continue;
            }
            if let Some(t) = interval_entry(o.z, d.z, ta, tb, lo, hi) {
                if best.is_none_or(|b| t < b.t) {
                    let normal = if t == ta { side_normal } else { top_normal };
                    best = Some(Hit { t, normal, kind: HitKind::Terrain(i, j) });
                }
            }
        }
        if best.is_some() {
            return best;
        }
        if tb >= t_out {
            return None;
        }
        ta = tb;
        first = false;
        if t_max_x < t_max_y {
            let ni = i as i64 + step_x;
            if ni < 0 || ni >= scene.nx as i64 {
                return None;
            }
            i = ni as usize;
            t_max_x += t_dx;
            side_normal = Vec3::new(-(step_x as f64), 0.0, 0.0);
        } else {
            let nj = j as i64 + step_y;
            if nj < 0 || nj >= scene.ny as i64 {
                return None;
            }
            j = nj as usize;
            t_max_y += t_dy;
            side_normal = Vec3::new(0.0, -(step_y as f64), 0.0);
        }
    }
}

/// Ray / box intersection, skipping boxes that contain the origin.
pub(crate) fn box_hit(b: &Aabb3, o: Vec3, d: Vec3) -> Option<(f64, Vec3)> {
    let mut t_near = f64::NEG_INFINITY;
    let mut t_far = f64::INFINITY;
    let mut normal = Vec3::ZERO;
    for (axis, oc, dc, lo, hi) in
        [(0, o.x, d.x, b.min.x, b.max.x), (1, o.y, d.y, b.min.y, b.max.y), (2, o.z, d.z, b.min.z, b.max.z)]
    {
        if dc == 0.0 {
            if oc < lo || oc > hi {
                return None;
            }
            continue;
        }
        let (t0, t1) = ((lo - oc) / dc, (hi - oc) / dc);
        let (near, farther) = (t0.min(t1), t0.max(t1));
        if near > t_near {
            t_near = near;
            let s = -dc.signum();
            normal = match axis {
                0 => Vec3::new(s, 0.0, 0.0),
                1 => Vec3::new(0.0, s, 0.0),
                _ => Vec3::new(0.0, 0.0, s),
            };
        }
        t_far = t_far.min(farther);
    }
    (t_near <= t_far && t_near > 0.0).then_some((t_near, normal))
}

/// Ray / vertical cylinder intersection, skipping cylinders that contain the origin.
pub(crate) fn cylinder_hit(c: Vec3, radius: f64, height: f64, o: Vec3, d: Vec3) -> Option<(f64, Vec3)> {
    let (px, py) = (o.x - c.x, o.y - c.y);
    let (z0, z1) = (c.z, c.z + height);
    let r2 = radius * radius;
    if px * px + py * py < r2 && o.z > z0 && o.z < z1 {
        return None;
    }
    let mut best: Option<(f64, Vec3)> = None;
    let mut offer = |t: f64, n: Vec3| {
        if t > 0.0 && best.is_none_or(|b| t < b.0) {
            best = Some((t, n));
        }
    };
    let a = d.x * d.x + d.y * d.y;
    if a > 0.0 {
        let b = 2.0 * (px * d.x + py * d.y);
        let cc = px * px + py * py - r2;
        let disc = b * b - 4.0 * a * cc;
        if disc >= 0.0 {
            let t = (-b - libm::sqrt(disc)) / (2.0 * a);
            let z = o.z + d.z * t;
            if z >= z0 && z <= z1 {
                let n = Vec3::new(px + d.x * t, py + d.y * t, 0.0).normalized();
                offer(t, n);
            }
        }
    }
    if d.z != 0.0 {
        for (zc, nz) in [(z1, 1.0), (z0, -1.0)] {
            if (nz > 0.0) != (d.z < 0.0) {
                continue;
            }
            let t = (zc - o.z) / d.z;
            let (qx, qy) = (px + d.x * t, py + d.y * t);
            if qx * qx + qy * qy <= r2 {
                offer(t, Vec3::new(0.0, 0.0, nz));
            }
        }
    }
    best
}

/// Nearest intersection within `far` along a unit direction.
pub fn cast_ray(scene: &SceneSpec, entities: &[&EntityState], o: Vec3, d: Vec3, far: f64) -> Option<Hit> {
    let mut best = terrain_hit(scene, o, d, far);
    let mut take = |t: f64, normal: Vec3, kind: HitKind| {
        if t <= far && best.is_none_or(|b| t < b.t) {
            best = Some(Hit { t, normal, kind });
        }
    };
    for (k, obj) in scene.objects.iter().enumerate() {
        if obj.visible() {
            if let Some((t, n)) = box_hit(&obj.footprint, o, d) {
                take(t, n, HitKind::Object(k));
            }
        }
    }
    for (k, e) in entities.iter().enumerate() {
        if let Some((t, n)) = cylinder_hit(e.position, e.class.radius, e.body_height(), o, d) {
            take(t, n, HitKind::Entity(k));
        }
    }
    best
}

fn shade(c: Rgb, depth: f64, illumination: f64) -> Rgb {
    let s = illumination / (1.0 + 0.1 * depth);
    let ch = |v: u8| (v as f64 * s).round().clamp(0.0, 255.0) as u8;
    Rgb(ch(c.0), ch(c.1), ch(c.2))
}

pub fn render(
    scene: &SceneSpec,
    entities: &[&EntityState],
    pose: &CameraPose,
    cfg: &CameraConfig,
    modality: Modality,
    illumination: f64,
) -> Frame {
    let basis = camera_basis(pose);
    let n = cfg.width as usize * cfg.height as usize;
    let mut out = Vec::with_capacity(n * modality.bytes_per_pixel());
    for v in 0..cfg.height {
        for u in 0..cfg.width {
            let d = pixel_ray(&basis, cfg, u, v);
            let hit = cast_ray(scene, entities, pose.position, d, cfg.far_clip);
            match modality {
                Modality::Depth => {
                    let t = hit.map_or(cfg.far_clip, |h| h.t);
                    out.extend_from_slice(&(t as f32).to_le_bytes());
                }
                Modality::Normal => {
                    let nrm = hit.map_or(-d, |h| h.normal);
                    for c in [nrm.x, nrm.y, nrm.z] {
                        out.extend_from_slice(&(c as f32).to_le_bytes());
                    }
                }
                Modality::Mask => {
                    let c = match hit.map(|h| h.kind) {
                        Some(HitKind::Object(k)) => scene.objects[k].mask_color,
                        Some(HitKind::Entity(k)) => entities[k].mask_color,
                        _ => Rgb::BLACK,
                    };
                    out.extend_from_slice(&[c.0, c.1, c.2]);
                }
                Modality::Color => {
                    let c = match hit {
                        None => shade(SKY, 0.0, illumination),
                        Some(h) => {
                            let albedo = match h.kind {
                                HitKind::Terrain(i, j) => terrain_albedo(scene.area_at(i, j)),
                                HitKind::Object(k) => scene.objects[k].albedo,
                                HitKind::Entity(k) => entities[k].albedo,
                            };
                            shade(albedo, h.t, illumination)
                        }
                    };
                    out.extend_from_slice(&[c.0, c.1, c.2]);
                }
            }
        }
    }
    Frame::new(modality, cfg.width, cfg.height, out)
}

/// Renders from the camera mounted on `observer`.
pub fn render_camera(
    scene: &SceneSpec,
    entities: &[&EntityState],
    observer: &EntityState,
    cfg: &CameraConfig,
    modality: Modality,
    illumination: f64,
) -> Frame {
    render(scene, entities, &CameraPose::of_entity(observer, cfg), cfg, modality, illumination)
}
