//! Procedural driving world: a two-lane track built from straight and arc
//! segments, decorated with lane markings, side barriers and poles, plus a
//! raycast renderer producing ground-truth depth, intensity and edge rasters.
//!
//! The world stands in for a recorded drive: it supplies the depth maps,
//! camera poses and (optionally noisy) trajectories the rest of the pipeline
//! consumes. All scene primitives have closed-form ray intersections, so
//! rendered depth is exactly verifiable.
//!
//! World frame: the ground is the plane `y = 0` with `+Y` pointing down (the
//! camera convention), so the camera sits at `y = -camera_height`. Headings
//! rotate about `+Y`, measured from `+Z` toward `+X`; with `+X` to the right
//! of `+Z`, increasing heading turns right.

use crate::depthcloud::{DepthMap, EdgeMask, IntensityImage, Raster};
use crate::exec;
use crate::geometry::{CameraIntrinsics, RigidTransform};
use crate::seeding;
use nalgebra::{Matrix3, UnitQuaternion, Vector2, Vector3};
use rand::Rng;
use std::f64::consts::TAU;
use thiserror::Error;

/// Primitives farther than this from the camera are skipped by the renderer.
/// Far scenery resolves to ground or sky; clouds are distance-limited well
/// below this anyway.
const RENDER_DISTANCE: f64 = 60.0;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("camera pose is not above the ground plane")]
    InvalidPose,
    #[error("pose is beyond the track extent")]
    OutOfTrack,
    #[error("invalid track spec: {0}")]
    InvalidSpec(String),
    #[error("track spec line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// One centerline piece. Arc sweeps are signed: positive turns right
/// (toward `+X`), negative turns left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment {
    Straight { length: f64 },
    Arc { radius: f64, sweep: f64 },
}

/// Which decoration families the track carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Features {
    pub markings: bool,
    pub barriers: bool,
    pub poles: bool,
}

impl Default for Features {
    fn default() -> Self {
        Self { markings: true, barriers: true, poles: true }
    }
}

/// Sizes and placement of the decoration primitives. Lateral positions are
/// signed offsets from the ego-lane centerline, positive to the right.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureParams {
    pub marking_width: f64,
    pub dash_on: f64,
    pub dash_off: f64,
    /// Inner (road-side) barrier faces.
    pub barrier_right: f64,
    pub barrier_left: f64,
    pub barrier_height: f64,
    pub barrier_thickness: f64,
    pub barrier_piece: f64,
    pub barrier_gap: f64,
    pub pole_spacing: f64,
    pub pole_radius: f64,
    pub pole_height: f64,
    pub pole_right: f64,
    pub pole_left: f64,
}

impl Default for FeatureParams {
    fn default() -> Self {
        Self {
            marking_width: 0.15,
            dash_on: 3.0,
            dash_off: 3.0,
            barrier_right: 3.0,
            barrier_left: -6.5,
            barrier_height: 0.8,
            barrier_thickness: 0.3,
            barrier_piece: 6.0,
            barrier_gap: 1.0,
            pole_spacing: 20.0,
            pole_radius: 0.12,
            pole_height: 4.0,
            pole_right: 3.8,
            pole_left: -7.3,
        }
    }
}

/// Declarative track description; compile into a [`Track`] to use it.
///
/// The ego lane is centered on the centerline; the oncoming lane lies to the
/// left. Marking lines sit at `+lane_width/2` (solid), `-lane_width/2`
/// (dashed divider) and `-3 lane_width/2` (solid).
#[derive(Debug, Clone, PartialEq)]
pub struct TrackSpec {
    pub segments: Vec<Segment>,
    pub lane_width: f64,
    pub camera_height: f64,
    pub features: Features,
    pub params: FeatureParams,
}

impl TrackSpec {
    pub fn new(segments: Vec<Segment>) -> Self {
        Self {
            segments,
            lane_width: 3.5,
            camera_height: 1.5,
            features: Features::default(),
            params: FeatureParams::default(),
        }
    }

    /// Parse the ASCII track format: one `key value...` pair per line, `#`
    /// comments, `segment straight LENGTH` / `segment arc RADIUS SWEEP_DEG`
    /// entries in order.
    pub fn parse(text: &str) -> Result<Self, SynthError> {
        let mut spec = TrackSpec::new(Vec::new());
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let mut parts = content.split_whitespace();
            let key = parts.next().unwrap();
            let args: Vec<&str> = parts.collect();
            let num = |idx: usize| -> Result<f64, SynthError> {
                let tok = args.get(idx).ok_or(SynthError::Parse {
                    line,
                    msg: format!("`{key}` is missing argument {}", idx + 1),
                })?;
                tok.parse::<f64>().map_err(|_| SynthError::Parse {
                    line,
                    msg: format!("expected a number, got `{tok}`"),
                })
            };
            let flag = |idx: usize| -> Result<bool, SynthError> {
                match args.get(idx).copied() {
                    Some("on") => Ok(true),
                    Some("off") => Ok(false),
                    other => Err(SynthError::Parse {
                        line,
                        msg: format!("expected `on` or `off`, got `{}`", other.unwrap_or("")),
                    }),
                }
            };
            match key {
                "lane_width" => spec.lane_width = num(0)?,
                "camera_height" => spec.camera_height = num(0)?,
                "marking_width" => spec.params.marking_width = num(0)?,
                "dash_on" => spec.params.dash_on = num(0)?,
                "dash_off" => spec.params.dash_off = num(0)?,
                "barrier_right" => spec.params.barrier_right = num(0)?,
                "barrier_left" => spec.params.barrier_left = num(0)?,
                "barrier_height" => spec.params.barrier_height = num(0)?,
                "barrier_thickness" => spec.params.barrier_thickness = num(0)?,
                "barrier_piece" => spec.params.barrier_piece = num(0)?,
                "barrier_gap" => spec.params.barrier_gap = num(0)?,
                "pole_spacing" => spec.params.pole_spacing = num(0)?,
                "pole_radius" => spec.params.pole_radius = num(0)?,
                "pole_height" => spec.params.pole_height = num(0)?,
                "pole_right" => spec.params.pole_right = num(0)?,
                "pole_left" => spec.params.pole_left = num(0)?,
                "markings" => spec.features.markings = flag(0)?,
                "barriers" => spec.features.barriers = flag(0)?,
                "poles" => spec.features.poles = flag(0)?,
                "segment" => match args.first().copied() {
                    Some("straight") => spec.segments.push(Segment::Straight { length: num(1)? }),
                    Some("arc") => spec.segments.push(Segment::Arc {
                        radius: num(1)?,
                        sweep: num(2)?.to_radians(),
                    }),
                    other => {
                        return Err(SynthError::Parse {
                            line,
                            msg: format!("unknown segment kind `{}`", other.unwrap_or("")),
                        })
                    }
                },
                _ => {
                    return Err(SynthError::Parse { line, msg: format!("unknown key `{key}`") });
                }
            }
        }
        Ok(spec)
    }
}

/// Axis-vertical box rotated by `yaw` about `+Y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedBox {
    pub center: Vector3<f64>,
    pub half: Vector3<f64>,
    pub yaw: f64,
}

/// Vertical cylinder standing on the ground plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pole {
    pub x: f64,
    pub z: f64,
    pub radius: f64,
    pub height: f64,
}

#[derive(Debug, Clone, Copy)]
enum PlacedKind {
    Straight,
    Arc { center: Vector2<f64>, radius: f64, turn: f64 },
}

#[derive(Debug, Clone, Copy)]
struct Placed {
    start: Vector2<f64>,
    heading: f64,
    length: f64,
    start_s: f64,
    kind: PlacedKind,
}

/// Surface classes of the rendered scene, in increasing intensity contrast
/// against their usual neighbors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Material {
    Sky = 0,
    Ground = 1,
    Marking = 2,
    Barrier = 3,
    Pole = 4,
}

impl Material {
    pub fn intensity(self) -> f64 {
        match self {
            Material::Sky => 0.05,
            Material::Ground => 0.25,
            Material::Marking => 0.9,
            Material::Barrier => 0.55,
            Material::Pole => 0.75,
        }
    }
}

/// Everything the renderer produces for one camera pose.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedFrame {
    pub depth: DepthMap,
    pub intensity: IntensityImage,
    pub edge_truth: EdgeMask,
    pub pose: RigidTransform,
    pub timestamp: f64,
}

/// A compiled track: placed segments plus world-space decoration primitives.
#[derive(Debug, Clone)]
pub struct Track {
    placed: Vec<Placed>,
    total_length: f64,
    lane_width: f64,
    camera_height: f64,
    features: Features,
    params: FeatureParams,
    barriers: Vec<OrientedBox>,
    poles: Vec<Pole>,
}

fn forward2(heading: f64) -> Vector2<f64> {
    Vector2::new(heading.sin(), heading.cos())
}

fn right2(heading: f64) -> Vector2<f64> {
    Vector2::new(heading.cos(), -heading.sin())
}

fn rotation_y(heading: f64) -> Matrix3<f64> {
    let (s, c) = heading.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

impl Track {
    pub fn compile(spec: &TrackSpec) -> Result<Self, SynthError> {
        if spec.segments.is_empty() {
            return Err(SynthError::InvalidSpec("track has no segments".into()));
        }
        if !(spec.lane_width > 0.0) {
            return Err(SynthError::InvalidSpec("lane_width must be positive".into()));
        }
        if !(spec.camera_height > 0.0) {
            return Err(SynthError::InvalidSpec("camera_height must be positive".into()));
        }
        let mut placed = Vec::with_capacity(spec.segments.len());
        let mut pos = Vector2::zeros();
        let mut heading = 0.0f64;
        let mut start_s = 0.0f64;
        for seg in &spec.segments {
            match *seg {
                Segment::Straight { length } => {
                    if !(length > 0.0) {
                        return Err(SynthError::InvalidSpec("segment length must be positive".into()));
                    }
                    placed.push(Placed { start: pos, heading, length, start_s, kind: PlacedKind::Straight });
                    pos += forward2(heading) * length;
                    start_s += length;
                }
                Segment::Arc { radius, sweep } => {
                    if !(radius > spec.lane_width) {
                        return Err(SynthError::InvalidSpec(format!(
                            "arc radius {radius} must exceed lane width {}",
                            spec.lane_width
                        )));
                    }
                    if sweep == 0.0 || !sweep.is_finite() {
                        return Err(SynthError::InvalidSpec("arc sweep must be nonzero".into()));
                    }
                    let turn = sweep.signum();
                    let length = radius * sweep.abs();
                    let center = pos + right2(heading) * radius * turn;
                    placed.push(Placed {
                        start: pos,
                        heading,
                        length,
                        start_s,
                        kind: PlacedKind::Arc { center, radius, turn },
                    });
                    let end_heading = heading + sweep;
                    let kappa = turn / radius;
                    pos = Vector2::new(
                        pos.x + (heading.cos() - end_heading.cos()) / kappa,
                        pos.y + (end_heading.sin() - heading.sin()) / kappa,
                    );
                    heading = end_heading;
                    start_s += length;
                }
            }
        }
        let mut track = Track {
            placed,
            total_length: start_s,
            lane_width: spec.lane_width,
            camera_height: spec.camera_height,
            features: spec.features,
            params: spec.params,
            barriers: Vec::new(),
            poles: Vec::new(),
        };
        if spec.features.barriers {
            track.place_barriers();
        }
        if spec.features.poles {
            track.place_poles();
        }
        Ok(track)
    }

    fn place_barriers(&mut self) {
        let p = self.params;
        let period = p.barrier_piece + p.barrier_gap;
        let sides = [
            p.barrier_right + p.barrier_thickness / 2.0,
            p.barrier_left - p.barrier_thickness / 2.0,
        ];
        let mut s = p.barrier_gap / 2.0 + p.barrier_piece / 2.0;
        while s + p.barrier_piece / 2.0 <= self.total_length {
            for lateral in sides {
                let (c, heading) = self.centerline(s);
                let center2 = c + right2(heading) * lateral;
                self.barriers.push(OrientedBox {
                    center: Vector3::new(center2.x, -p.barrier_height / 2.0, center2.y),
                    half: Vector3::new(p.barrier_thickness / 2.0, p.barrier_height / 2.0, p.barrier_piece / 2.0),
                    yaw: heading,
                });
            }
            s += period;
        }
    }

    fn place_poles(&mut self) {
        let p = self.params;
        let mut s = p.pole_spacing / 2.0;
        while s <= self.total_length {
            for lateral in [p.pole_right, p.pole_left] {
                let (c, heading) = self.centerline(s);
                let pos = c + right2(heading) * lateral;
                self.poles.push(Pole { x: pos.x, z: pos.y, radius: p.pole_radius, height: p.pole_height });
            }
            s += p.pole_spacing;
        }
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    pub fn lane_width(&self) -> f64 {
        self.lane_width
    }

    pub fn camera_height(&self) -> f64 {
        self.camera_height
    }

    pub fn barriers(&self) -> &[OrientedBox] {
        &self.barriers
    }

    pub fn poles(&self) -> &[Pole] {
        &self.poles
    }

    /// Centerline position and tangent heading at arc length `s` (clamped to
    /// the track extent).
    pub fn centerline(&self, s: f64) -> (Vector2<f64>, f64) {
        let s = s.clamp(0.0, self.total_length);
        let seg = self
            .placed
            .iter()
            .rev()
            .find(|p| s >= p.start_s - 1e-12)
            .unwrap_or(&self.placed[0]);
        let local = (s - seg.start_s).clamp(0.0, seg.length);
        match seg.kind {
            PlacedKind::Straight => (seg.start + forward2(seg.heading) * local, seg.heading),
            PlacedKind::Arc { radius, turn, .. } => {
                let kappa = turn / radius;
                let h = seg.heading + kappa * local;
                let pos = Vector2::new(
                    seg.start.x + (seg.heading.cos() - h.cos()) / kappa,
                    seg.start.y + (h.sin() - seg.heading.sin()) / kappa,
                );
                (pos, h)
            }
        }
    }

    /// Camera pose at arc length `s`, lateral offset `d` (positive right).
    pub fn pose_at(&self, s: f64, d: f64) -> RigidTransform {
        let (c, heading) = self.centerline(s);
        let pos = c + right2(heading) * d;
        RigidTransform::new_unchecked(
            rotation_y(heading),
            Vector3::new(pos.x, -self.camera_height, pos.y),
        )
    }

    /// Project a ground-plane point onto the centerline: returns
    /// `(s, lateral)` or None when the point is beyond the track extent.
    pub fn project(&self, x: f64, z: f64) -> Option<(f64, f64)> {
        let p = Vector2::new(x, z);
        let mut best: Option<(f64, f64)> = None;
        for seg in &self.placed {
            let candidate = match seg.kind {
                PlacedKind::Straight => {
                    let rel = p - seg.start;
                    let s_loc = rel.dot(&forward2(seg.heading));
                    if !(-1e-9..=seg.length + 1e-9).contains(&s_loc) {
                        None
                    } else {
                        Some((seg.start_s + s_loc.clamp(0.0, seg.length), rel.dot(&right2(seg.heading))))
                    }
                }
                PlacedKind::Arc { center, radius, turn } => {
                    let w = p - center;
                    let dist = w.norm();
                    let a0 = {
                        let w0 = seg.start - center;
                        w0.x.atan2(w0.y)
                    };
                    let ap = w.x.atan2(w.y);
                    // Swept angle from the segment start, measured in the
                    // direction of travel around the arc center.
                    let psi = (turn * (ap - a0)).rem_euclid(TAU);
                    let sweep = seg.length / radius;
                    if psi <= sweep + 1e-9 {
                        Some((seg.start_s + (psi * radius).min(seg.length), turn * (radius - dist)))
                    } else {
                        None
                    }
                }
            };
            if let Some((s, d)) = candidate {
                if best.map_or(true, |(_, bd)| d.abs() < bd.abs()) {
                    best = Some((s, d));
                }
            }
        }
        best
    }

    fn ground_material(&self, x: f64, z: f64) -> Material {
        if !self.features.markings {
            return Material::Ground;
        }
        let Some((s, d)) = self.project(x, z) else { return Material::Ground };
        let p = self.params;
        let half = p.marking_width / 2.0;
        let lw = self.lane_width;
        // Solid edge lines plus the dashed center divider.
        if (d - lw / 2.0).abs() <= half || (d + 1.5 * lw).abs() <= half {
            return Material::Marking;
        }
        if (d + lw / 2.0).abs() <= half && s.rem_euclid(p.dash_on + p.dash_off) < p.dash_on {
            return Material::Marking;
        }
        Material::Ground
    }
}

/// Smallest positive ray parameter hitting an oriented box, if any.
pub(crate) fn ray_box(origin: &Vector3<f64>, dir: &Vector3<f64>, b: &OrientedBox) -> Option<f64> {
    let (s, c) = b.yaw.sin_cos();
    let rel = origin - b.center;
    let o = Vector3::new(c * rel.x - s * rel.z, rel.y, s * rel.x + c * rel.z);
    let d = Vector3::new(c * dir.x - s * dir.z, dir.y, s * dir.x + c * dir.z);
    let mut tmin = f64::NEG_INFINITY;
    let mut tmax = f64::INFINITY;
    for i in 0..3 {
        if d[i] == 0.0 {
            if o[i].abs() > b.half[i] {
                return None;
            }
            continue;
        }
        let t1 = (-b.half[i] - o[i]) / d[i];
        let t2 = (b.half[i] - o[i]) / d[i];
        tmin = tmin.max(t1.min(t2));
        tmax = tmax.min(t1.max(t2));
    }
    if tmax >= tmin && tmin > 1e-9 {
        Some(tmin)
    } else {
        None
    }
}

/// Smallest positive ray parameter hitting a pole, if any.
pub(crate) fn ray_pole(origin: &Vector3<f64>, dir: &Vector3<f64>, p: &Pole) -> Option<f64> {
    let ox = origin.x - p.x;
    let oz = origin.z - p.z;
    let a = dir.x * dir.x + dir.z * dir.z;
    if a == 0.0 {
        return None;
    }
    let b = 2.0 * (ox * dir.x + oz * dir.z);
    let c = ox * ox + oz * oz - p.radius * p.radius;
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    for t in [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)] {
        if t > 1e-9 {
            let y = origin.y + t * dir.y;
            if (-p.height..=0.0).contains(&y) {
                return Some(t);
            }
        }
    }
    None
}

/// Raycast one frame. Depth is the camera-frame Z of the first hit (0 marks
/// sky / no hit); intensity encodes the hit material; `edge_truth` marks
/// pixels whose material differs from the left or upper neighbor.
pub fn render(
    track: &Track,
    pose: &RigidTransform,
    intr: &CameraIntrinsics,
) -> Result<RenderedFrame, SynthError> {
    if pose.translation().y >= 0.0 {
        return Err(SynthError::InvalidPose);
    }
    let origin = *pose.translation();
    let rot = *pose.rotation();
    let (w, h) = (intr.width as usize, intr.height as usize);

    // Primitives within render range of this camera.
    let near_boxes: Vec<&OrientedBox> = track
        .barriers
        .iter()
        .filter(|b| {
            let dx = b.center.x - origin.x;
            let dz = b.center.z - origin.z;
            let reach = RENDER_DISTANCE + b.half.xz().norm();
            dx * dx + dz * dz <= reach * reach
        })
        .collect();
    let near_poles: Vec<&Pole> = track
        .poles
        .iter()
        .filter(|p| {
            let dx = p.x - origin.x;
            let dz = p.z - origin.z;
            let reach = RENDER_DISTANCE + p.radius;
            dx * dx + dz * dz <= reach * reach
        })
        .collect();

    let mut depth = vec![0.0f64; w * h];
    let mut materials = vec![Material::Sky; w * h];
    for v in 0..h {
        for u in 0..w {
            // Ray parameterized so t equals camera-frame depth Z.
            let dir_cam = Vector3::new(
                (u as f64 - intr.cx) / intr.fx,
                (v as f64 - intr.cy) / intr.fy,
                1.0,
            );
            let dir = rot * dir_cam;
            let mut best_t = f64::INFINITY;
            let mut mat = Material::Sky;
            if dir.y != 0.0 {
                let t = -origin.y / dir.y;
                if t > 1e-9 {
                    best_t = t;
                    let hit_x = origin.x + t * dir.x;
                    let hit_z = origin.z + t * dir.z;
                    mat = track.ground_material(hit_x, hit_z);
                }
            }
            for b in &near_boxes {
                if let Some(t) = ray_box(&origin, &dir, b) {
                    if t < best_t {
                        best_t = t;
                        mat = Material::Barrier;
                    }
                }
            }
            for p in &near_poles {
                if let Some(t) = ray_pole(&origin, &dir, p) {
                    if t < best_t {
                        best_t = t;
                        mat = Material::Pole;
                    }
                }
            }
            let idx = v * w + u;
            if best_t.is_finite() {
                depth[idx] = best_t;
                materials[idx] = mat;
            }
        }
    }

    let mut edge_truth = EdgeMask::new_false(intr.width, intr.height);
    for v in 0..h {
        for u in 0..w {
            let m = materials[v * w + u];
            let differs = (u > 0 && materials[v * w + u - 1] != m)
                || (v > 0 && materials[(v - 1) * w + u] != m);
            if differs {
                edge_truth.set(u as u32, v as u32, true);
            }
        }
    }

    let intensity: Vec<f64> = materials.iter().map(|m| m.intensity()).collect();
    Ok(RenderedFrame {
        depth: Raster::new(intr.width, intr.height, depth).expect("renderer produced a valid raster"),
        intensity: Raster::new(intr.width, intr.height, intensity).expect("renderer produced a valid raster"),
        edge_truth,
        pose: *pose,
        timestamp: 0.0,
    })
}

/// Render a pose sequence (parallel over frames), stamping frame `i` with
/// time `i * dt`.
pub fn render_sequence(
    track: &Track,
    poses: &[RigidTransform],
    intr: &CameraIntrinsics,
    dt: f64,
) -> Result<Vec<RenderedFrame>, SynthError> {
    let frames: Result<Vec<RenderedFrame>, SynthError> =
        exec::map_slice(poses, |p| render(track, p, intr)).into_iter().collect();
    let mut frames = frames?;
    for (i, f) in frames.iter_mut().enumerate() {
        f.timestamp = i as f64 * dt;
    }
    Ok(frames)
}

/// Centerline poses spaced `spacing` meters apart in arc length, including
/// both track ends when they land on the grid.
pub fn sample_reference(track: &Track, spacing: f64) -> Vec<RigidTransform> {
    assert!(spacing > 0.0, "spacing must be positive");
    let mut poses = Vec::new();
    let mut k = 0u64;
    loop {
        let s = k as f64 * spacing;
        if s > track.total_length() + 1e-9 {
            break;
        }
        poses.push(track.pose_at(s, 0.0));
        k += 1;
    }
    poses
}

/// Random-walk visual-odometry noise: per-step translation and rotation
/// errors compound along the sequence, so drift grows with distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseNoiseModel {
    pub sigma_translation: f64,
    pub sigma_rotation: f64,
    pub seed: u64,
}

impl PoseNoiseModel {
    pub fn noiseless(seed: u64) -> Self {
        Self { sigma_translation: 0.0, sigma_rotation: 0.0, seed }
    }
}

fn standard_normal(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
}

/// Apply accumulated pose noise. Zero sigmas return the input unchanged.
pub fn perturb(poses: &[RigidTransform], noise: &PoseNoiseModel) -> Vec<RigidTransform> {
    if noise.sigma_translation == 0.0 && noise.sigma_rotation == 0.0 {
        return poses.to_vec();
    }
    let mut rng = seeding::stream(noise.seed, &[0x5653_4f44]);
    let mut acc_rot = UnitQuaternion::identity();
    let mut acc_tr = Vector3::zeros();
    poses
        .iter()
        .enumerate()
        .map(|(i, pose)| {
            if i > 0 {
                let dt = Vector3::new(
                    standard_normal(&mut rng) * noise.sigma_translation,
                    standard_normal(&mut rng) * noise.sigma_translation,
                    standard_normal(&mut rng) * noise.sigma_translation,
                );
                let axis = loop {
                    let v = Vector3::new(
                        standard_normal(&mut rng),
                        standard_normal(&mut rng),
                        standard_normal(&mut rng),
                    );
                    if v.norm() > 1e-6 {
                        break v / v.norm();
                    }
                };
                let angle = standard_normal(&mut rng) * noise.sigma_rotation;
                let dq = UnitQuaternion::from_axis_angle(&nalgebra::Unit::new_unchecked(axis), angle);
                acc_tr += acc_rot * dt;
                acc_rot = acc_rot * dq;
                acc_rot.renormalize();
            }
            RigidTransform::new_unchecked(
                acc_rot.to_rotation_matrix().into_inner() * pose.rotation(),
                acc_rot.to_rotation_matrix().into_inner() * pose.translation() + acc_tr,
            )
        })
        .collect()
}

/// Signed lateral distance from the pose to the track centerline, positive
/// to the right of the direction of travel.
pub fn ground_truth_offset(track: &Track, pose: &RigidTransform) -> Result<f64, SynthError> {
    let t = pose.translation();
    track.project(t.x, t.z).map(|(_, d)| d).ok_or(SynthError::OutOfTrack)
}
