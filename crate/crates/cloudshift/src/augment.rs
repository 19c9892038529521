//! Synthesize point clouds for laterally shifted camera trajectories.
//!
//! Given a reference sequence of frames (pose + local cloud), a new frame at
//! lateral offset `x` from a base frame is built by aligning preceding
//! frames into the base frame, filtering the points they contribute to the
//! regions the accumulated cloud does not already see (counteracting pose
//! drift), shifting everything by the inverse lateral offset, and cropping
//! to the new camera's field of view and distance limit.
//!
//! Every synthesized point carries the id of the frame that contributed it,
//! so the counteraction guarantee is directly checkable.

use crate::exec;
use crate::geometry::{
    in_image_plane, lateral_shift, project, relative_transform, CameraIntrinsics, FrameId,
    GeometryError, PointCloud, RigidTransform,
};
use nalgebra::Vector3;
use thiserror::Error;

/// Coarse occupancy grid used by the lookback early stop.
const COVERAGE_GRID: (usize, usize) = (16, 8);

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("frame index {idx} out of bounds ({len} frames)")]
    BadIndex { idx: usize, len: usize },
    #[error("synthesized cloud for frame {frame} at offset {offset} m is empty")]
    DegenerateFrame { frame: u64, offset: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// One frame of a trajectory: global pose plus the local point cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub id: u64,
    pub pose: RigidTransform,
    pub cloud: PointCloud,
    pub timestamp: f64,
}

impl FrameRecord {
    /// Build a record, checking that the cloud is tagged with this frame.
    pub fn new(
        id: u64,
        pose: RigidTransform,
        cloud: PointCloud,
        timestamp: f64,
    ) -> Result<Self, AugmentError> {
        if cloud.frame() != FrameId::Camera(id) {
            return Err(AugmentError::Geometry(GeometryError::FrameMismatch {
                a: cloud.frame(),
                b: FrameId::Camera(id),
            }));
        }
        Ok(Self { id, pose, cloud, timestamp })
    }
}

/// Synthesis knobs. `align` / `counteract` switch the ablation baselines;
/// `max_distance` is re-applied after shifting because a lateral shift
/// changes camera-relative distances.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentConfig {
    pub offsets: Vec<f64>,
    pub max_lookback: usize,
    pub counteract: bool,
    pub align: bool,
    pub max_distance: f64,
    /// Stop accumulating lookback frames once this fraction of the coverage
    /// grid is occupied. Edge-filtered clouds rarely reach it (the sky never
    /// holds points), in which case `max_lookback` governs.
    pub coverage_stop: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            offsets: (0..10).map(|i| -2.0 + 4.0 * i as f64 / 9.0).collect(),
            max_lookback: 8,
            counteract: true,
            align: true,
            max_distance: 20.0,
            coverage_stop: 0.98,
        }
    }
}

/// Align a preceding frame's cloud into the base frame and concatenate the
/// base cloud: `[T_BA * P_prev  P_base]` tagged with the base frame.
pub fn align_concat(base: &FrameRecord, prev: &FrameRecord) -> PointCloud {
    let rel = relative_transform(&base.pose, &prev.pose);
    let mut points: Vec<Vector3<f64>> =
        prev.cloud.points().iter().map(|p| rel.transform_point(p)).collect();
    points.extend_from_slice(base.cloud.points());
    PointCloud::new_unchecked(points, FrameId::Camera(base.id))
}

/// Keep only the aligned points whose projection falls outside the base
/// camera's image plane; the in-view region is already covered by the base
/// cloud, and duplicating it through drifted poses causes fuzz.
pub fn counteract_filter(
    base: &FrameRecord,
    aligned_prev: &PointCloud,
    intr: &CameraIntrinsics,
) -> PointCloud {
    debug_assert_eq!(aligned_prev.frame(), FrameId::Camera(base.id));
    let points = aligned_prev
        .points()
        .iter()
        .filter(|p| !matches!(project(intr, p), Ok(ip) if in_image_plane(intr, &ip)))
        .copied()
        .collect();
    PointCloud::new_unchecked(points, aligned_prev.frame())
}

struct CoverageGrid {
    cells: Vec<bool>,
    hits: usize,
}

impl CoverageGrid {
    fn new() -> Self {
        Self { cells: vec![false; COVERAGE_GRID.0 * COVERAGE_GRID.1], hits: 0 }
    }

    fn mark(&mut self, intr: &CameraIntrinsics, p: &Vector3<f64>) {
        if let Ok(ip) = project(intr, p) {
            if in_image_plane(intr, &ip) {
                let cx = (ip.x_im / intr.width as f64 * COVERAGE_GRID.0 as f64) as usize;
                let cy = (ip.y_im / intr.height as f64 * COVERAGE_GRID.1 as f64) as usize;
                let idx = cy.min(COVERAGE_GRID.1 - 1) * COVERAGE_GRID.0 + cx.min(COVERAGE_GRID.0 - 1);
                if !self.cells[idx] {
                    self.cells[idx] = true;
                    self.hits += 1;
                }
            }
        }
    }

    fn fraction(&self) -> f64 {
        self.hits as f64 / self.cells.len() as f64
    }
}

/// Result of the lookback accumulation, still in the base frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Accumulated {
    /// Base-frame coordinates of the accumulated points.
    pub points: Vec<Vector3<f64>>,
    /// Contributing frame id per point.
    pub sources: Vec<u64>,
    /// Preceding frames actually accumulated.
    pub frames_used: usize,
    /// True when the sequence start cut the lookback short of both the
    /// coverage target and `max_lookback`.
    pub insufficient_lookback: bool,
    /// Final coverage-grid occupancy of the shifted view.
    pub coverage: f64,
}

/// Walk backwards from the base frame, aligning preceding clouds into the
/// base frame. With counteraction on, a preceding frame only contributes
/// points that fall outside the image planes of every frame accumulated
/// before it, so later frames fill exactly the still-missing regions.
/// Coverage is measured on the image plane of the shifted camera (offset
/// `x`), which is the view the synthesis is trying to fill.
pub fn accumulate_cloud(
    frames: &[FrameRecord],
    base_idx: usize,
    x: f64,
    intr: &CameraIntrinsics,
    cfg: &AugmentConfig,
) -> Result<Accumulated, AugmentError> {
    let base = frames.get(base_idx).ok_or(AugmentError::BadIndex { idx: base_idx, len: frames.len() })?;
    let inv_shift = lateral_shift(x).inverse();
    let mut grid = CoverageGrid::new();
    let mut points: Vec<Vector3<f64>> = base.cloud.points().to_vec();
    let mut sources = vec![base.id; points.len()];
    for p in &points {
        grid.mark(intr, &inv_shift.transform_point(p));
    }
    // Transforms from the base frame into each accumulated frame, for the
    // union counteraction test. The base frame itself is the identity.
    let mut accumulated_views = vec![RigidTransform::identity()];
    let mut used = 0usize;
    let mut back = 0usize;
    while grid.fraction() < cfg.coverage_stop && used < cfg.max_lookback && back < base_idx {
        back += 1;
        let prev = &frames[base_idx - back];
        let rel = relative_transform(&base.pose, &prev.pose);
        for p in prev.cloud.points() {
            let q = rel.transform_point(p);
            if cfg.counteract {
                let seen = accumulated_views.iter().any(|view| {
                    let r = view.transform_point(&q);
                    matches!(project(intr, &r), Ok(ip) if in_image_plane(intr, &ip))
                });
                if seen {
                    continue;
                }
            }
            grid.mark(intr, &inv_shift.transform_point(&q));
            points.push(q);
            sources.push(prev.id);
        }
        accumulated_views.push(relative_transform(&prev.pose, &base.pose));
        used += 1;
    }
    let insufficient = grid.fraction() < cfg.coverage_stop && used < cfg.max_lookback && back == base_idx;
    Ok(Accumulated {
        points,
        sources,
        frames_used: used,
        insufficient_lookback: insufficient,
        coverage: grid.fraction(),
    })
}

/// A synthesized frame plus per-point provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthFrame {
    pub record: FrameRecord,
    /// Contributing frame id per cloud point.
    pub sources: Vec<u64>,
    pub insufficient_lookback: bool,
}

/// Synthesize the frame at lateral offset `x` from the given base frame.
///
/// The new pose is `base.pose * lateral_shift(x)`; the cloud is the
/// accumulated base-frame cloud moved by `lateral_shift(x)^-1`, cropped to
/// the new field of view and distance limit.
pub fn synthesize_frame(
    frames: &[FrameRecord],
    base_idx: usize,
    x: f64,
    intr: &CameraIntrinsics,
    cfg: &AugmentConfig,
) -> Result<SynthFrame, AugmentError> {
    let base = frames.get(base_idx).ok_or(AugmentError::BadIndex { idx: base_idx, len: frames.len() })?;
    let (points, sources, insufficient) = if cfg.align {
        let acc = accumulate_cloud(frames, base_idx, x, intr, cfg)?;
        (acc.points, acc.sources, acc.insufficient_lookback)
    } else {
        let pts = base.cloud.points().to_vec();
        let sources = vec![base.id; pts.len()];
        (pts, sources, false)
    };
    let inv_shift = lateral_shift(x).inverse();
    let mut out_points = Vec::new();
    let mut out_sources = Vec::new();
    for (p, src) in points.iter().zip(&sources) {
        let q = inv_shift.transform_point(p);
        let visible = matches!(project(intr, &q), Ok(ip) if in_image_plane(intr, &ip));
        if visible && q.norm() <= cfg.max_distance {
            out_points.push(q);
            out_sources.push(*src);
        }
    }
    if out_points.is_empty() {
        return Err(AugmentError::DegenerateFrame { frame: base.id, offset: x });
    }
    let record = FrameRecord {
        id: base.id,
        pose: base.pose.compose(&lateral_shift(x)),
        cloud: PointCloud::new_unchecked(out_points, FrameId::Camera(base.id)),
        timestamp: base.timestamp,
    };
    Ok(SynthFrame { record, sources: out_sources, insufficient_lookback: insufficient })
}

/// A full parallel trajectory at one lateral offset.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub offset: f64,
    pub frames: Vec<SynthFrame>,
    /// Frames dropped because their synthesized cloud came out empty.
    pub dropped: usize,
}

/// Build the reference trajectory (offset zero, standard cropping only) plus
/// one synthesized trajectory per configured offset. Trajectories are
/// processed in parallel; output order is reference first, then offsets in
/// config order.
pub fn generate_trajectories(
    frames: &[FrameRecord],
    intr: &CameraIntrinsics,
    cfg: &AugmentConfig,
) -> Vec<Trajectory> {
    let mut slots: Vec<Option<f64>> = Vec::with_capacity(cfg.offsets.len() + 1);
    slots.push(None);
    slots.extend(cfg.offsets.iter().copied().map(Some));
    exec::map_slice(&slots, |slot| match slot {
        None => reference_trajectory(frames, intr, cfg),
        Some(x) => offset_trajectory(frames, *x, intr, cfg),
    })
}

fn reference_trajectory(
    frames: &[FrameRecord],
    intr: &CameraIntrinsics,
    cfg: &AugmentConfig,
) -> Trajectory {
    let mut out = Vec::with_capacity(frames.len());
    let mut dropped = 0usize;
    for f in frames {
        let cloud = f.cloud.crop_to_fov(intr).limit_distance(cfg.max_distance);
        if cloud.is_empty() {
            dropped += 1;
            continue;
        }
        let sources = vec![f.id; cloud.len()];
        out.push(SynthFrame {
            record: FrameRecord { id: f.id, pose: f.pose, cloud, timestamp: f.timestamp },
            sources,
            insufficient_lookback: false,
        });
    }
    Trajectory { offset: 0.0, frames: out, dropped }
}

fn offset_trajectory(
    frames: &[FrameRecord],
    x: f64,
    intr: &CameraIntrinsics,
    cfg: &AugmentConfig,
) -> Trajectory {
    let mut out = Vec::with_capacity(frames.len());
    let mut dropped = 0usize;
    for base_idx in 0..frames.len() {
        match synthesize_frame(frames, base_idx, x, intr, cfg) {
            Ok(sf) => out.push(sf),
            Err(AugmentError::DegenerateFrame { .. }) => dropped += 1,
            Err(_) => unreachable!("index is in range"),
        }
    }
    Trajectory { offset: x, frames: out, dropped }
}

#[cfg(test)]
pub(crate) mod tests_support {
    use super::FrameRecord;
    use crate::depthcloud::{frame_cloud, CloudConfig};
    use crate::geometry::{CameraIntrinsics, FrameId, RigidTransform};
    use crate::synthworld::{perturb, render, sample_reference, PoseNoiseModel, Track, TrackSpec};
    use std::f64::consts::PI;

    pub(crate) fn small_intr() -> CameraIntrinsics {
        CameraIntrinsics::from_horizontal_fov(256, 80, PI / 2.0).unwrap()
    }

    /// Rendered frames along a track: world frames with optional
    /// visual-odometry noise on the recorded poses; imagery always renders
    /// from the true poses.
    pub(crate) fn tracked_frames(
        spec: &TrackSpec,
        n: usize,
        noise: Option<PoseNoiseModel>,
        intr: &CameraIntrinsics,
    ) -> (Track, Vec<FrameRecord>) {
        let track = Track::compile(spec).unwrap();
        let true_poses: Vec<RigidTransform> = sample_reference(&track, 1.0)[..n].to_vec();
        let recorded = match noise {
            Some(m) => perturb(&true_poses, &m),
            None => true_poses.clone(),
        };
        let cfg = CloudConfig::default();
        let frames = true_poses
            .iter()
            .enumerate()
            .map(|(i, tp)| {
                let rf = render(&track, tp, intr).unwrap();
                let cloud =
                    frame_cloud(intr, &rf.depth, &rf.intensity, &cfg, 0.08, 0.2, FrameId::Camera(i as u64))
                        .unwrap();
                FrameRecord::new(i as u64, recorded[i], cloud, i as f64 * 0.1).unwrap()
            })
            .collect();
        (track, frames)
    }
}

#[cfg(test)]
mod tests {
    use super::tests_support::{small_intr, tracked_frames};
    use super::*;
    use crate::depthcloud::{frame_cloud, CloudConfig};
    use crate::geometry::tests_support::random_transform;
    use crate::synthworld::{render, PoseNoiseModel, Segment, Track, TrackSpec};
    use nalgebra::Matrix3;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn record(id: u64, pose: RigidTransform, points: Vec<Vector3<f64>>) -> FrameRecord {
        FrameRecord::new(id, pose, PointCloud::new(points, FrameId::Camera(id)).unwrap(), id as f64 * 0.1)
            .unwrap()
    }

    fn forward_pose(z: f64) -> RigidTransform {
        RigidTransform::new_unchecked(Matrix3::identity(), Vector3::new(0.0, -1.5, z))
    }

    fn corridor(n: usize, noise: Option<PoseNoiseModel>) -> (Track, Vec<FrameRecord>, CameraIntrinsics) {
        let spec = TrackSpec::new(vec![Segment::Straight { length: n as f64 + 10.0 }]);
        let intr = small_intr();
        let (track, frames) = tracked_frames(&spec, n, noise, &intr);
        (track, frames, intr)
    }

    #[test]
    fn align_same_pose_doubles_cloud() {
        let pose = forward_pose(3.0);
        let pts = vec![Vector3::new(0.5, 0.1, 4.0), Vector3::new(-1.0, 0.2, 7.0)];
        let base = record(1, pose, pts.clone());
        let prev = record(0, pose, pts.clone());
        let merged = align_concat(&base, &prev);
        assert_eq!(merged.len(), 4);
        for (i, p) in pts.iter().enumerate() {
            assert!((merged.points()[i] - p).norm() < 1e-9);
            assert_eq!(merged.points()[i + 2], *p);
        }
    }

    #[test]
    fn align_one_meter_back_shifts_forward_axis() {
        let base = record(1, forward_pose(1.0), vec![]);
        let prev = record(0, forward_pose(0.0), vec![Vector3::new(0.0, 0.0, 5.0)]);
        let merged = align_concat(&base, &prev);
        assert_eq!(merged.len(), 1);
        assert!((merged.points()[0] - Vector3::new(0.0, 0.0, 4.0)).norm() < 1e-12);
    }

    #[test]
    fn alignment_preserves_world_coordinates() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let base_pose = random_transform(&mut rng);
            let prev_pose = random_transform(&mut rng);
            let pts: Vec<Vector3<f64>> = (0..16)
                .map(|_| {
                    Vector3::new(
                        rng.gen_range(-5.0..5.0),
                        rng.gen_range(-5.0..5.0),
                        rng.gen_range(1.0..20.0),
                    )
                })
                .collect();
            let base = record(1, base_pose, vec![]);
            let prev = record(0, prev_pose, pts.clone());
            let merged = align_concat(&base, &prev);
            for (orig, aligned) in pts.iter().zip(merged.points()) {
                let world_before = prev_pose.transform_point(orig);
                let world_after = base_pose.transform_point(aligned);
                assert!((world_before - world_after).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn counteract_drops_in_view_points() {
        let intr = small_intr();
        let base = record(1, forward_pose(0.0), vec![]);
        // Straight ahead: projects to the principal point, dropped. A point
        // at x_im = -1 exactly: kept.
        let inside = Vector3::new(0.0, 0.0, 10.0);
        let boundary_out = Vector3::new((-1.0 - intr.cx) * 2.0 / intr.fx, 0.0, 2.0);
        let behind = Vector3::new(0.0, 0.0, -4.0);
        let cloud = PointCloud::new(vec![inside, boundary_out, behind], FrameId::Camera(1)).unwrap();
        let kept = counteract_filter(&base, &cloud, &intr);
        assert_eq!(kept.points(), &[boundary_out, behind]);
    }

    #[test]
    fn counteract_partitions_input() {
        let intr = small_intr();
        let base = record(1, forward_pose(0.0), vec![]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<Vector3<f64>> = (0..200)
            .map(|_| {
                Vector3::new(
                    rng.gen_range(-30.0..30.0),
                    rng.gen_range(-5.0..5.0),
                    rng.gen_range(-10.0..40.0),
                )
            })
            .filter(|p| p.z != 0.0)
            .collect();
        let cloud = PointCloud::new(pts.clone(), FrameId::Camera(1)).unwrap();
        let outside = counteract_filter(&base, &cloud, &intr);
        let inside: Vec<Vector3<f64>> = pts
            .iter()
            .filter(|p| matches!(project(&intr, p), Ok(ip) if in_image_plane(&intr, &ip)))
            .copied()
            .collect();
        assert_eq!(outside.len() + inside.len(), pts.len());
        for p in outside.points() {
            assert!(!matches!(project(&intr, p), Ok(ip) if in_image_plane(&intr, &ip)));
        }
    }

    #[test]
    fn zero_shift_without_alignment_is_exact_crop() {
        let (_, frames, intr) = corridor(6, None);
        let cfg = AugmentConfig { align: false, ..AugmentConfig::default() };
        let out = synthesize_frame(&frames, 4, 0.0, &intr, &cfg).unwrap();
        let expect = frames[4].cloud.crop_to_fov(&intr).limit_distance(cfg.max_distance);
        assert_eq!(out.record.cloud, expect, "bitwise identity expected");
        assert_eq!(out.record.pose.rotation(), frames[4].pose.rotation());
        assert_eq!(out.record.pose.translation(), frames[4].pose.translation());
    }

    #[test]
    fn synthesized_pose_satisfies_shift_identity() {
        let (_, frames, intr) = corridor(8, None);
        let cfg = AugmentConfig::default();
        for x in [-2.0, -0.5, 1.0, 2.0] {
            let out = synthesize_frame(&frames, 6, x, &intr, &cfg).unwrap();
            let rel = relative_transform(&frames[6].pose, &out.record.pose);
            let want = lateral_shift(x);
            assert!((rel.rotation() - want.rotation()).abs().max() < 1e-9);
            assert!((rel.translation() - want.translation()).norm() < 1e-9);
        }
    }

    #[test]
    fn synthesized_points_are_all_in_view_and_in_range() {
        let (_, frames, intr) = corridor(8, None);
        let cfg = AugmentConfig::default();
        let out = synthesize_frame(&frames, 6, 2.0, &intr, &cfg).unwrap();
        assert!(!out.record.cloud.is_empty());
        for p in out.record.cloud.points() {
            let ip = project(&intr, p).unwrap();
            assert!(in_image_plane(&intr, &ip));
            assert!(p.norm() <= cfg.max_distance);
        }
    }

    #[test]
    fn counteraction_guarantee_is_exact_under_pose_noise() {
        let noise = PoseNoiseModel { sigma_translation: 0.01, sigma_rotation: 0.002, seed: 13 };
        let (_, frames, intr) = corridor(12, Some(noise));
        let cfg = AugmentConfig::default();
        let acc = accumulate_cloud(&frames, 10, 1.5, &intr, &cfg).unwrap();
        assert!(acc.frames_used > 0);
        let mut prev_contributions = 0usize;
        for (p, src) in acc.points.iter().zip(&acc.sources) {
            if *src != frames[10].id {
                prev_contributions += 1;
                assert!(
                    !matches!(project(&intr, p), Ok(ip) if in_image_plane(&intr, &ip)),
                    "point from frame {src} projects into the base image plane"
                );
            }
        }
        assert!(prev_contributions > 0, "noise test needs actual lookback contributions");
    }

    #[test]
    fn shift_only_ablation_loses_points() {
        let (_, frames, intr) = corridor(12, None);
        let aligned_cfg = AugmentConfig::default();
        let shift_only = AugmentConfig { align: false, ..AugmentConfig::default() };
        for x in [-2.0, 2.0] {
            let with_align = synthesize_frame(&frames, 10, x, &intr, &aligned_cfg).unwrap();
            let without = synthesize_frame(&frames, 10, x, &intr, &shift_only).unwrap();
            assert!(
                without.record.cloud.len() < with_align.record.cloud.len(),
                "x={x}: {} vs {}",
                without.record.cloud.len(),
                with_align.record.cloud.len()
            );
        }
    }

    #[test]
    fn synthesis_covers_direct_render() {
        let (track, frames, intr) = corridor(12, None);
        let cfg = AugmentConfig::default();
        let out = synthesize_frame(&frames, 10, 1.0, &intr, &cfg).unwrap();
        let pose_c = track.pose_at(10.0, 1.0);
        let rf = render(&track, &pose_c, &intr).unwrap();
        let direct = frame_cloud(
            &intr,
            &rf.depth,
            &rf.intensity,
            &CloudConfig::default(),
            0.08,
            0.2,
            FrameId::Camera(99),
        )
        .unwrap();
        let ratio = out.record.cloud.len() as f64 / direct.len() as f64;
        assert!(ratio >= 0.95, "synthesized/direct point ratio {ratio}");
    }

    #[test]
    fn insufficient_lookback_is_flagged_near_sequence_start() {
        let (_, frames, intr) = corridor(10, None);
        let cfg = AugmentConfig::default();
        let early = synthesize_frame(&frames, 1, 1.0, &intr, &cfg).unwrap();
        assert!(early.insufficient_lookback);
        let late = synthesize_frame(&frames, 9, 1.0, &intr, &cfg).unwrap();
        assert!(!late.insufficient_lookback);
    }

    #[test]
    fn trajectory_generation_layout() {
        let (_, frames, intr) = corridor(8, None);
        let cfg = AugmentConfig { offsets: vec![-1.0, 1.0], ..AugmentConfig::default() };
        let trajectories = generate_trajectories(&frames, &intr, &cfg);
        assert_eq!(trajectories.len(), 3);
        assert_eq!(trajectories[0].offset, 0.0);
        assert_eq!(trajectories[1].offset, -1.0);
        assert_eq!(trajectories[2].offset, 1.0);
        assert_eq!(trajectories[0].frames.len(), 8);
        for t in &trajectories {
            for sf in &t.frames {
                let base = &frames[sf.record.id as usize];
                let rel = relative_transform(&base.pose, &sf.record.pose);
                assert!((rel.translation() - Vector3::new(t.offset, 0.0, 0.0)).norm() < 1e-9);
            }
        }

        let only_ref = AugmentConfig { offsets: vec![], ..AugmentConfig::default() };
        assert_eq!(generate_trajectories(&frames, &intr, &only_ref).len(), 1);
    }

    #[test]
    fn trajectory_generation_is_deterministic() {
        let noise = PoseNoiseModel { sigma_translation: 0.01, sigma_rotation: 0.002, seed: 2 };
        let (_, frames, intr) = corridor(8, Some(noise));
        let cfg = AugmentConfig { offsets: vec![-2.0, 0.4, 2.0], ..AugmentConfig::default() };
        let a = generate_trajectories(&frames, &intr, &cfg);
        let b = generate_trajectories(&frames, &intr, &cfg);
        assert_eq!(a, b);
    }
}
