//! Closed-loop evaluation on the synthetic world.
//!
//! A kinematic bicycle vehicle drives a track; each frame the scene is
//! rendered from the vehicle's camera, turned into a point cloud by the same
//! pipeline the training data used, and handed to a controller that returns
//! a steering angle. The score is the fraction of frames in which the whole
//! bounding box stays inside the ego lane (a halted, collided vehicle counts
//! as off-lane for the rest of the episode).

use crate::depthcloud::{frame_cloud, sample_fixed, unproject, CloudConfig, DepthCloudError};
use crate::exec;
use crate::geometry::{CameraIntrinsics, FrameId, PointCloud, RigidTransform};
use crate::labeling::{lateral_offset, steering_from_offset, SteeringParams};
use crate::model::{ModelError, PointNetLite};
use crate::seeding;
use crate::synthworld::{render, OrientedBox, SynthError, Track};
use nalgebra::{Matrix3, Vector2, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use thiserror::Error;

/// Steering clamp in radians; perturbation levels are fractions of it.
pub const STEER_LIMIT: f64 = 0.5;

const DEFAULT_WHEELBASE: f64 = 2.7;
const DEFAULT_LENGTH: f64 = 4.0;
const DEFAULT_WIDTH: f64 = 1.8;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid episode config: {0}")]
    InvalidConfig(String),
    #[error("controller '{name}' failed at frame {frame}: {msg}")]
    Controller { name: String, frame: usize, msg: String },
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Cloud(#[from] DepthCloudError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Kinematic bicycle state on the ground plane. `position` is (x, z) world,
/// heading turns from +Z toward +X (right turn positive).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    pub position: Vector2<f64>,
    pub heading: f64,
    pub speed: f64,
    pub wheelbase: f64,
    pub length: f64,
    pub width: f64,
}

impl VehicleState {
    /// Place a default-sized vehicle on the track at arc length `s`, lateral
    /// offset `d`, facing along the centerline tangent.
    pub fn at(track: &Track, s: f64, d: f64, speed: f64) -> Self {
        let (center, heading) = track.centerline(s);
        let right = Vector2::new(heading.cos(), -heading.sin());
        Self {
            position: center + right * d,
            heading,
            speed,
            wheelbase: DEFAULT_WHEELBASE,
            length: DEFAULT_LENGTH,
            width: DEFAULT_WIDTH,
        }
    }

    /// Bounding-box corners on the ground plane.
    pub fn corners(&self) -> [Vector2<f64>; 4] {
        let f = Vector2::new(self.heading.sin(), self.heading.cos()) * (self.length / 2.0);
        let r = Vector2::new(self.heading.cos(), -self.heading.sin()) * (self.width / 2.0);
        [
            self.position + f + r,
            self.position + f - r,
            self.position - f + r,
            self.position - f - r,
        ]
    }

    /// Camera pose for rendering: at the vehicle position, `camera_height`
    /// above ground, looking along the heading.
    pub fn camera_pose(&self, track: &Track) -> RigidTransform {
        let (sin, cos) = self.heading.sin_cos();
        let rotation = Matrix3::new(cos, 0.0, sin, 0.0, 1.0, 0.0, -sin, 0.0, cos);
        let translation = Vector3::new(self.position.x, -track.camera_height(), self.position.y);
        RigidTransform::new(rotation, translation).expect("rotation about +Y is orthonormal")
    }
}

/// One kinematic bicycle update; speed is conserved (fixed throttle).
pub fn step(state: &VehicleState, steer: f64, dt: f64) -> VehicleState {
    let mut next = *state;
    next.position.x += state.speed * state.heading.sin() * dt;
    next.position.y += state.speed * state.heading.cos() * dt;
    next.heading += state.speed / state.wheelbase * steer.tan() * dt;
    next
}

/// True iff every bounding-box corner projects into the ego lane
/// (|lateral offset| <= lane_width / 2). Corners outside the track extent
/// count as off-lane.
pub fn on_lane(track: &Track, state: &VehicleState) -> bool {
    let half = track.lane_width() / 2.0;
    state
        .corners()
        .iter()
        .all(|c| matches!(track.project(c.x, c.y), Some((_, d)) if d.abs() <= half))
}

fn point_in_box(x: f64, z: f64, b: &OrientedBox) -> bool {
    let (s, c) = b.yaw.sin_cos();
    let rx = x - b.center.x;
    let rz = z - b.center.z;
    let lx = c * rx - s * rz;
    let lz = s * rx + c * rz;
    lx.abs() <= b.half.x && lz.abs() <= b.half.z
}

/// True iff any bounding-box corner penetrates a barrier footprint.
pub fn hits_barrier(track: &Track, state: &VehicleState) -> bool {
    state
        .corners()
        .iter()
        .any(|corner| track.barriers().iter().any(|b| point_in_box(corner.x, corner.y, b)))
}

/// Additive uniform steering noise: `u ~ Uniform(-level*STEER_LIMIT,
/// +level*STEER_LIMIT)` from the provided stream. Level 0 draws nothing.
pub fn perturb_steering(steer: f64, level: f64, rng: &mut ChaCha8Rng) -> f64 {
    if level == 0.0 {
        return steer;
    }
    steer + rng.gen_range(-level * STEER_LIMIT..level * STEER_LIMIT)
}

/// What a controller sees each frame. Learned controllers should only read
/// `cloud`; `pose` and `track` exist for oracle baselines.
pub struct Observation<'a> {
    pub cloud: &'a PointCloud,
    pub pose: &'a RigidTransform,
    pub track: &'a Track,
    pub frame: usize,
}

pub trait Controller: Sync {
    fn name(&self) -> &str;
    /// Steering angle in radians for this frame.
    fn steer(&self, obs: &Observation) -> Result<f64, String>;
    /// Controllers that ignore the cloud let the episode skip rendering.
    fn needs_cloud(&self) -> bool {
        true
    }
}

/// Trained-model controller: predicted lateral offset through the bicycle
/// steering map. An empty observation cloud steers straight.
pub struct ModelController {
    pub label: String,
    pub net: PointNetLite,
    pub steering: SteeringParams,
}

impl Controller for ModelController {
    fn name(&self) -> &str {
        &self.label
    }

    fn steer(&self, obs: &Observation) -> Result<f64, String> {
        if obs.cloud.is_empty() {
            return Ok(0.0);
        }
        let delta_x = self.net.forward(obs.cloud.points()).map_err(|e| e.to_string())?;
        Ok(steering_from_offset(delta_x, &self.steering))
    }
}

/// Ground-truth controller: steers toward the centerline point `lookahead`
/// meters ahead, mirroring how labels are built. Off-track it steers 0.
pub struct OracleController {
    pub steering: SteeringParams,
}

impl Controller for OracleController {
    fn name(&self) -> &str {
        "oracle"
    }

    fn steer(&self, obs: &Observation) -> Result<f64, String> {
        let t = obs.pose.translation();
        let Some((s, _)) = obs.track.project(t.x, t.z) else {
            return Ok(0.0);
        };
        let target = obs.track.pose_at(s + self.steering.lookahead, 0.0);
        let delta_x = lateral_offset(obs.pose, &target);
        Ok(steering_from_offset(delta_x, &self.steering))
    }

    fn needs_cloud(&self) -> bool {
        false
    }
}

/// Always steers straight ahead.
pub struct ZeroController;

impl Controller for ZeroController {
    fn name(&self) -> &str {
        "zero"
    }

    fn steer(&self, _obs: &Observation) -> Result<f64, String> {
        Ok(0.0)
    }

    fn needs_cloud(&self) -> bool {
        false
    }
}

/// Render-to-cloud settings for the closed loop; must match how the model's
/// training data was built.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub intr: CameraIntrinsics,
    pub cloud: CloudConfig,
    pub canny_low: f64,
    pub canny_high: f64,
    /// Fixed cloud size fed to the controller.
    pub n_points: usize,
    /// When false, skip edge filtering (the unfiltered ablation).
    pub edge_filter: bool,
}

impl PipelineConfig {
    pub fn new(intr: CameraIntrinsics, n_points: usize) -> Self {
        Self {
            intr,
            cloud: CloudConfig::default(),
            canny_low: 0.08,
            canny_high: 0.2,
            n_points,
            edge_filter: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeConfig {
    /// Start position as (arc length, lateral offset).
    pub start: (f64, f64),
    pub frames: usize,
    /// Fixed throttle, meters/second.
    pub speed: f64,
    pub dt: f64,
    /// Perturbation level as a fraction of the steering limit.
    pub perturbation: f64,
    pub seed: u64,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self { start: (0.0, 0.0), frames: 135, speed: 10.0, dt: 0.1, perturbation: 0.0, seed: 0 }
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.frames == 0 {
            return Err(SimError::InvalidConfig("episode needs at least one frame".into()));
        }
        if !(self.speed > 0.0) || !(self.dt > 0.0) {
            return Err(SimError::InvalidConfig("speed and dt must be positive".into()));
        }
        if self.perturbation < 0.0 {
            return Err(SimError::InvalidConfig("perturbation level must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Completed,
    /// Collided with a barrier after stepping at this frame index.
    Collision { frame: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub flags: Vec<bool>,
    pub ratio_on_lane: f64,
    /// Vehicle position before each step, plus the final position.
    pub path: Vec<Vector2<f64>>,
    pub termination: Termination,
}

/// Drive one closed-loop episode.
pub fn run_episode(
    track: &Track,
    controller: &dyn Controller,
    pipeline: &PipelineConfig,
    cfg: &EpisodeConfig,
) -> Result<EpisodeResult, SimError> {
    cfg.validate()?;
    let mut rng = seeding::stream(cfg.seed, &[0x7065_7274]);
    let mut state = VehicleState::at(track, cfg.start.0, cfg.start.1, cfg.speed);
    let mut flags = Vec::with_capacity(cfg.frames);
    let mut path = vec![state.position];
    let mut termination = Termination::Completed;
    let empty = PointCloud::empty(FrameId::World);
    for frame in 0..cfg.frames {
        if let Termination::Collision { .. } = termination {
            flags.push(false);
            path.push(state.position);
            continue;
        }
        flags.push(on_lane(track, &state));
        let pose = state.camera_pose(track);
        let cloud = if controller.needs_cloud() {
            let rf = render(track, &pose, &pipeline.intr)?;
            let frame_id = FrameId::Camera(frame as u64);
            let raw = if pipeline.edge_filter {
                frame_cloud(
                    &pipeline.intr,
                    &rf.depth,
                    &rf.intensity,
                    &pipeline.cloud,
                    pipeline.canny_low,
                    pipeline.canny_high,
                    frame_id,
                )?
            } else {
                unproject(&pipeline.intr, &rf.depth, pipeline.cloud.scale_factor, frame_id)?
                    .cloud()
                    .limit_distance(pipeline.cloud.max_distance)
            };
            if raw.is_empty() {
                empty.clone()
            } else {
                sample_fixed(&raw, pipeline.n_points, seeding::mix(cfg.seed, &[0x6f62_73, frame as u64]))?
            }
        } else {
            empty.clone()
        };
        let obs = Observation { cloud: &cloud, pose: &pose, track, frame };
        let steer = controller.steer(&obs).map_err(|msg| SimError::Controller {
            name: controller.name().to_string(),
            frame,
            msg,
        })?;
        let steer = perturb_steering(steer, cfg.perturbation, &mut rng).clamp(-STEER_LIMIT, STEER_LIMIT);
        // Penetration is tested at quarter-step samples along the segment
        // swept this step, so a thin barrier cannot be jumped between
        // frames. Within one Euler step the heading is constant, so the
        // partial states lie exactly on the traversed segment.
        let mut next = step(&state, steer, cfg.dt);
        for k in 1..=4 {
            let partial = step(&state, steer, cfg.dt * k as f64 / 4.0);
            if hits_barrier(track, &partial) {
                next = partial;
                next.speed = 0.0;
                termination = Termination::Collision { frame };
                break;
            }
        }
        state = next;
        path.push(state.position);
    }
    let on = flags.iter().filter(|&&f| f).count();
    Ok(EpisodeResult {
        ratio_on_lane: on as f64 / flags.len() as f64,
        flags,
        path,
        termination,
    })
}

/// One sweep row; serialized to the report CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub controller: String,
    pub track: String,
    pub start_idx: usize,
    pub perturbation: f64,
    pub ratio_on_lane: f64,
    pub frames: usize,
    pub terminated_early: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    /// Mean ratio-on-lane over all rows of one controller at one level.
    pub fn mean_ratio(&self, controller: &str, perturbation: f64) -> Option<f64> {
        let ratios: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.controller == controller && r.perturbation == perturbation)
            .map(|r| r.ratio_on_lane)
            .collect();
        if ratios.is_empty() {
            None
        } else {
            Some(ratios.iter().sum::<f64>() / ratios.len() as f64)
        }
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("controller,track,start_idx,perturbation,ratio_on_lane,frames,terminated_early\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{:.6},{},{}",
                r.controller,
                r.track,
                r.start_idx,
                r.perturbation,
                r.ratio_on_lane,
                r.frames,
                r.terminated_early
            );
        }
        out
    }
}

/// Evaluate every controller on every (track, start, level) combination.
/// Episodes are independent and run in parallel; per-episode seeds are
/// derived from `base_seed` and the combination indices, so the report is
/// identical regardless of thread count.
pub fn sweep(
    tracks: &[(String, Track)],
    controllers: &[&dyn Controller],
    starts: &[(f64, f64)],
    levels: &[f64],
    pipeline: &PipelineConfig,
    episode: &EpisodeConfig,
    base_seed: u64,
) -> Result<SweepReport, SimError> {
    if tracks.is_empty() || controllers.is_empty() || starts.is_empty() || levels.is_empty() {
        return Err(SimError::InvalidConfig("sweep needs tracks, controllers, starts and levels".into()));
    }
    let mut combos = Vec::new();
    for ci in 0..controllers.len() {
        for ti in 0..tracks.len() {
            for si in 0..starts.len() {
                for li in 0..levels.len() {
                    combos.push((ci, ti, si, li));
                }
            }
        }
    }
    let results: Vec<Result<SweepRow, SimError>> = exec::map_slice(&combos, |&(ci, ti, si, li)| {
        let (track_name, track) = &tracks[ti];
        let cfg = EpisodeConfig {
            start: starts[si],
            perturbation: levels[li],
            seed: seeding::mix(
                base_seed,
                &[ci as u64, ti as u64, si as u64, levels[li].to_bits()],
            ),
            ..episode.clone()
        };
        let res = run_episode(track, controllers[ci], pipeline, &cfg)?;
        Ok(SweepRow {
            controller: controllers[ci].name().to_string(),
            track: track_name.clone(),
            start_idx: si,
            perturbation: levels[li],
            ratio_on_lane: res.ratio_on_lane,
            frames: res.flags.len(),
            terminated_early: matches!(res.termination, Termination::Collision { .. }),
        })
    });
    let mut rows = Vec::with_capacity(results.len());
    for r in results {
        rows.push(r?);
    }
    Ok(SweepReport { rows })
}

/// Log-spaced candidate gains for the steering calibration.
pub fn default_alpha_grid() -> Vec<f64> {
    let (lo, hi, n) = (0.05f64, 0.8f64, 10);
    (0..n)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Pick the steering gain by grid search: run the oracle controller from
/// each start and keep the alpha with the best mean ratio-on-lane (first
/// maximum, so ties prefer the gentlest gain). Returns the winner plus the
/// whole curve.
pub fn calibrate_alpha(
    track: &Track,
    starts: &[(f64, f64)],
    alphas: &[f64],
    lookahead: f64,
    episode: &EpisodeConfig,
) -> Result<(f64, Vec<(f64, f64)>), SimError> {
    if alphas.is_empty() || starts.is_empty() {
        return Err(SimError::InvalidConfig("calibration needs alphas and starts".into()));
    }
    // The oracle never reads the cloud, so the pipeline settings are inert.
    let pipeline = PipelineConfig::new(
        CameraIntrinsics::from_horizontal_fov(64, 32, std::f64::consts::FRAC_PI_2)
            .expect("static intrinsics"),
        16,
    );
    let mut curve = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let oracle = OracleController { steering: SteeringParams { alpha, lookahead } };
        let mut total = 0.0;
        for (si, &start) in starts.iter().enumerate() {
            let cfg = EpisodeConfig {
                start,
                seed: seeding::mix(episode.seed, &[alpha.to_bits(), si as u64]),
                ..episode.clone()
            };
            total += run_episode(track, &oracle, &pipeline, &cfg)?.ratio_on_lane;
        }
        curve.push((alpha, total / starts.len() as f64));
    }
    let best = curve
        .iter()
        .cloned()
        .reduce(|acc, c| if c.1 > acc.1 { c } else { acc })
        .unwrap();
    Ok((best.0, curve))
}

/// Bird's-eye-view SVG: lane boundaries, the driven path, and a start
/// marker. World x maps right, world z maps up.
pub fn bev_svg(track: &Track, result: &EpisodeResult) -> String {
    let lw = track.lane_width();
    let boundaries = [lw / 2.0, -lw / 2.0, -1.5 * lw];
    let mut lines: Vec<Vec<Vector2<f64>>> = Vec::new();
    for d in boundaries {
        let mut pts = Vec::new();
        let mut s = 0.0;
        while s <= track.total_length() {
            let (c, heading) = track.centerline(s);
            let right = Vector2::new(heading.cos(), -heading.sin());
            pts.push(c + right * d);
            s += 1.0;
        }
        lines.push(pts);
    }

    let mut min = Vector2::new(f64::INFINITY, f64::INFINITY);
    let mut max = Vector2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in lines.iter().flatten().chain(result.path.iter()) {
        min.x = min.x.min(p.x);
        min.y = min.y.min(p.y);
        max.x = max.x.max(p.x);
        max.y = max.y.max(p.y);
    }
    let margin = 3.0;
    let width = max.x - min.x + 2.0 * margin;
    let height = max.y - min.y + 2.0 * margin;
    let tx = |p: &Vector2<f64>| (p.x - min.x + margin, max.y - p.y + margin);

    let polyline = |pts: &[Vector2<f64>], style: &str| {
        let mut s = String::from("  <polyline fill=\"none\" ");
        s.push_str(style);
        s.push_str(" points=\"");
        for p in pts {
            let (x, y) = tx(p);
            let _ = write!(s, "{x:.2},{y:.2} ");
        }
        s.push_str("\"/>\n");
        s
    };

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {width:.2} {height:.2}\">\n"
    );
    svg.push_str(&polyline(&lines[0], "stroke=\"#999999\" stroke-width=\"0.3\""));
    svg.push_str(&polyline(
        &lines[1],
        "stroke=\"#bbbbbb\" stroke-width=\"0.3\" stroke-dasharray=\"3 3\"",
    ));
    svg.push_str(&polyline(&lines[2], "stroke=\"#999999\" stroke-width=\"0.3\""));
    svg.push_str(&polyline(&result.path, "stroke=\"#1f77b4\" stroke-width=\"0.5\""));
    if let Some(start) = result.path.first() {
        let (x, y) = tx(start);
        let _ = writeln!(svg, "  <circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"1.2\" fill=\"#2ca02c\"/>");
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NetConfig;
    use crate::synthworld::{Segment, TrackSpec};
    use std::f64::consts::PI;

    fn straight_track(length: f64) -> Track {
        Track::compile(&TrackSpec::new(vec![Segment::Straight { length }])).unwrap()
    }

    fn curved_track() -> Track {
        Track::compile(&TrackSpec::new(vec![
            Segment::Straight { length: 30.0 },
            Segment::Arc { radius: 40.0, sweep: PI / 2.0 },
            Segment::Straight { length: 30.0 },
        ]))
        .unwrap()
    }

    fn tiny_pipeline() -> PipelineConfig {
        PipelineConfig::new(CameraIntrinsics::from_horizontal_fov(128, 48, PI / 2.0).unwrap(), 64)
    }

    #[test]
    fn step_examples() {
        let track = straight_track(50.0);
        let state = VehicleState::at(&track, 5.0, 0.0, 10.0);
        let straight = step(&state, 0.0, 0.1);
        assert_eq!(straight.heading, state.heading);
        assert!((straight.position - (state.position + Vector2::new(0.0, 1.0))).norm() < 1e-12);
        let frozen = step(&state, 0.3, 0.0);
        assert_eq!(frozen, state);
        assert_eq!(step(&state, 0.4, 0.1).speed, state.speed);
    }

    #[test]
    fn constant_steer_traces_a_circle() {
        let track = straight_track(50.0);
        let mut state = VehicleState::at(&track, 0.0, 0.0, 10.0);
        let steer = 0.2f64;
        let dt = 0.05;
        let mut positions = vec![state.position];
        for _ in 0..1000 {
            state = step(&state, steer, dt);
            positions.push(state.position);
        }
        // Circumcenter from three samples, then every point must be
        // equidistant and the radius must match L / tan(steer).
        let (a, b, c) = (positions[0], positions[300], positions[700]);
        let d = 2.0 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y));
        let ux = ((a.norm_squared()) * (b.y - c.y)
            + (b.norm_squared()) * (c.y - a.y)
            + (c.norm_squared()) * (a.y - b.y))
            / d;
        let uy = ((a.norm_squared()) * (c.x - b.x)
            + (b.norm_squared()) * (a.x - c.x)
            + (c.norm_squared()) * (b.x - a.x))
            / d;
        let center = Vector2::new(ux, uy);
        let expected = state.wheelbase / steer.tan();
        for p in &positions {
            let r = (p - center).norm();
            assert!(
                (r - expected).abs() / expected < 1e-3,
                "radius {r} vs {expected}"
            );
        }
    }

    #[test]
    fn on_lane_corner_geometry() {
        let track = straight_track(60.0);
        // Lane half-width 1.75, vehicle half-width 0.9.
        assert!(on_lane(&track, &VehicleState::at(&track, 10.0, 0.0, 10.0)));
        assert!(on_lane(&track, &VehicleState::at(&track, 10.0, 0.8, 10.0)));
        assert!(!on_lane(&track, &VehicleState::at(&track, 10.0, 0.86, 10.0)));
        assert!(!on_lane(&track, &VehicleState::at(&track, 10.0, -0.86, 10.0)));
        assert!(!on_lane(&track, &VehicleState::at(&track, 10.0, track.lane_width(), 10.0)));
        // Off the track end entirely.
        assert!(!on_lane(&track, &VehicleState::at(&track, 10.0, -8.0, 10.0)));
    }

    #[test]
    fn perturbation_is_bounded_zero_mean_and_optional() {
        let mut rng = seeding::stream(4, &[1]);
        assert_eq!(perturb_steering(0.3, 0.0, &mut rng), 0.3);
        let level = 0.1;
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let u = perturb_steering(0.0, level, &mut rng);
            assert!(u.abs() <= level * STEER_LIMIT);
            sum += u;
        }
        let mean = sum / n as f64;
        let sigma = level * STEER_LIMIT / 3.0f64.sqrt();
        assert!(mean.abs() < 3.0 * sigma / (n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn oracle_holds_the_lane_and_zero_controller_leaves_it() {
        let pipeline = tiny_pipeline();
        // Start a few meters in so the rear overhang is on the track.
        let cfg = EpisodeConfig { start: (5.0, 0.0), frames: 135, ..EpisodeConfig::default() };
        let oracle = OracleController { steering: SteeringParams::default() };
        let straight = straight_track(200.0);
        let res = run_episode(&straight, &oracle, &pipeline, &cfg).unwrap();
        assert_eq!(res.ratio_on_lane, 1.0);
        assert_eq!(res.termination, Termination::Completed);

        // The curved track is ~123 m, so cap the episode before the end.
        let curved = curved_track();
        let short = EpisodeConfig { frames: 100, ..cfg };
        let res = run_episode(&curved, &oracle, &pipeline, &short).unwrap();
        assert_eq!(res.ratio_on_lane, 1.0, "oracle on curves");

        let res = run_episode(&curved, &ZeroController, &pipeline, &short).unwrap();
        assert!(res.ratio_on_lane < 1.0, "zero controller cannot take the bend");
        assert_eq!(
            res.ratio_on_lane,
            res.flags.iter().filter(|&&f| f).count() as f64 / res.flags.len() as f64
        );
    }

    #[test]
    fn collision_halts_and_scores_off_lane() {
        let curved = curved_track();
        let pipeline = tiny_pipeline();
        let cfg = EpisodeConfig { frames: 135, ..EpisodeConfig::default() };
        let res = run_episode(&curved, &ZeroController, &pipeline, &cfg).unwrap();
        let Termination::Collision { frame } = res.termination else {
            panic!("straight driving into the bend must hit the barrier");
        };
        assert!(frame < 135);
        for (i, f) in res.flags.iter().enumerate() {
            if i > frame {
                assert!(!f, "flag {i} after collision at {frame}");
            }
        }
        // Halted: the path stops moving after the collision frame.
        let last = res.path.last().unwrap();
        assert_eq!(res.path[frame + 1], *last);
        assert_eq!(res.path.len(), 136);
    }

    #[test]
    fn episodes_are_deterministic_under_seed() {
        let curved = curved_track();
        let pipeline = tiny_pipeline();
        let oracle = OracleController { steering: SteeringParams::default() };
        let cfg = EpisodeConfig { frames: 60, perturbation: 0.1, seed: 9, ..EpisodeConfig::default() };
        let a = run_episode(&curved, &oracle, &pipeline, &cfg).unwrap();
        let b = run_episode(&curved, &oracle, &pipeline, &cfg).unwrap();
        assert_eq!(a, b);
        let other = EpisodeConfig { seed: 10, ..cfg };
        let c = run_episode(&curved, &oracle, &pipeline, &other).unwrap();
        assert_ne!(a.path, c.path, "different seed should perturb differently");
    }

    #[test]
    fn model_controller_runs_the_full_pipeline() {
        let track = straight_track(80.0);
        let pipeline = tiny_pipeline();
        let net = PointNetLite::new(&NetConfig {
            point_widths: vec![3, 8, 16],
            head_widths: vec![16, 8, 1],
            scale: 2.5,
            input_scale: 0.05,
            seed: 3,
        })
        .unwrap();
        let controller = ModelController {
            label: "untrained".into(),
            net,
            steering: SteeringParams::default(),
        };
        let cfg = EpisodeConfig { frames: 10, ..EpisodeConfig::default() };
        let res = run_episode(&track, &controller, &pipeline, &cfg).unwrap();
        assert_eq!(res.flags.len(), 10);
        assert_eq!(res.path.len(), 11);
    }

    #[test]
    fn sweep_produces_one_row_per_combination() {
        let tracks = vec![
            ("straight".to_string(), straight_track(150.0)),
            ("curved".to_string(), curved_track()),
        ];
        let oracle = OracleController { steering: SteeringParams::default() };
        let controllers: Vec<&dyn Controller> = vec![&oracle, &ZeroController];
        let starts = [(5.0, 0.0), (5.0, 0.5)];
        let levels = [0.0, 0.1];
        let pipeline = tiny_pipeline();
        let episode = EpisodeConfig { frames: 40, ..EpisodeConfig::default() };
        let report =
            sweep(&tracks, &controllers, &starts, &levels, &pipeline, &episode, 7).unwrap();
        assert_eq!(report.rows.len(), 2 * 2 * 2 * 2);
        let oracle_mean = report.mean_ratio("oracle", 0.0).unwrap();
        let zero_mean = report.mean_ratio("zero", 0.0).unwrap();
        assert_eq!(oracle_mean, 1.0);
        assert!(zero_mean < oracle_mean);
        assert_eq!(report.mean_ratio("nosuch", 0.0), None);

        let csv = report.csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "controller,track,start_idx,perturbation,ratio_on_lane,frames,terminated_early"
        );
        assert_eq!(csv.lines().count(), 1 + report.rows.len());
        let again = sweep(&tracks, &controllers, &starts, &levels, &pipeline, &episode, 7).unwrap();
        assert_eq!(report, again);
    }

    #[test]
    fn alpha_calibration_prefers_a_working_gain() {
        let track = curved_track();
        let starts = [(5.0, 0.0), (5.0, 0.8), (5.0, -0.8)];
        let episode = EpisodeConfig { frames: 100, ..EpisodeConfig::default() };
        let (best, curve) =
            calibrate_alpha(&track, &starts, &default_alpha_grid(), 5.0, &episode).unwrap();
        assert_eq!(curve.len(), default_alpha_grid().len());
        let best_ratio = curve.iter().find(|(a, _)| *a == best).unwrap().1;
        assert!(best_ratio > 0.95, "best alpha {best} only reaches {best_ratio}");
        for (_, r) in &curve {
            assert!(*r <= best_ratio + 1e-12);
        }
    }

    #[test]
    fn bev_svg_is_wellformed_and_deterministic() {
        let track = curved_track();
        let pipeline = tiny_pipeline();
        let cfg = EpisodeConfig { frames: 80, ..EpisodeConfig::default() };
        let oracle = OracleController { steering: SteeringParams::default() };
        let res = run_episode(&track, &oracle, &pipeline, &cfg).unwrap();
        let svg = bev_svg(&track, &res);
        assert!(svg.starts_with("<svg "));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 4);
        assert_eq!(svg.matches("<circle").count(), 1);
        assert!(svg.is_ascii());
        assert_eq!(svg, bev_svg(&track, &res));
    }
}
