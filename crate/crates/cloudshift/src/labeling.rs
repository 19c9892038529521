//! Lateral-offset labels and the bicycle-model steering map.
//!
//! A training label is the lateral distance between a frame's pose and a
//! future pose a fixed longitudinal distance ahead. For synthesized
//! (laterally shifted) trajectories the future pose is taken from the
//! reference trajectory, so the label is corrective: it points back toward
//! the path the reference camera actually drove.

use crate::augment::Trajectory;
use crate::depthcloud::{sample_fixed, DepthCloudError};
use crate::exec;
use crate::geometry::{relative_transform, PointCloud, RigidTransform};
use crate::seeding;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabelingError {
    #[error("invalid labeling config: {0}")]
    InvalidConfig(String),
    #[error("no reference trajectory (offset 0) among the inputs")]
    MissingReference,
    #[error(transparent)]
    Cloud(#[from] DepthCloudError),
}

/// Steering conversion parameters: `delta = atan(delta_x * alpha)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteeringParams {
    /// Gain applied to the lateral offset, 1/meters.
    pub alpha: f64,
    /// Longitudinal distance at which the offset is measured, meters.
    pub lookahead: f64,
}

impl Default for SteeringParams {
    fn default() -> Self {
        Self { alpha: 0.2, lookahead: 5.0 }
    }
}

impl SteeringParams {
    pub fn validate(&self) -> Result<(), LabelingError> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(LabelingError::InvalidConfig(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.lookahead > 0.0) || !self.lookahead.is_finite() {
            return Err(LabelingError::InvalidConfig(format!(
                "lookahead must be positive, got {}",
                self.lookahead
            )));
        }
        Ok(())
    }
}

/// Dataset construction knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelConfig {
    /// Longitudinal distance to the future frame, meters.
    pub lookahead: f64,
    /// Labels beyond this magnitude are clamped (the model head saturates
    /// at the same bound).
    pub clamp: f64,
    /// Fixed per-sample point count.
    pub n_points: usize,
    pub seed: u64,
}

impl Default for LabelConfig {
    fn default() -> Self {
        Self { lookahead: 5.0, clamp: 2.5, n_points: 1024, seed: 0 }
    }
}

impl LabelConfig {
    pub fn validate(&self) -> Result<(), LabelingError> {
        if !(self.lookahead > 0.0) || !self.lookahead.is_finite() {
            return Err(LabelingError::InvalidConfig(format!(
                "lookahead must be positive, got {}",
                self.lookahead
            )));
        }
        if !(self.clamp > 0.0) || !self.clamp.is_finite() {
            return Err(LabelingError::InvalidConfig(format!("clamp must be positive, got {}", self.clamp)));
        }
        if self.n_points == 0 {
            return Err(LabelingError::InvalidConfig("n_points must be nonzero".into()));
        }
        Ok(())
    }
}

/// One training sample: a fixed-size cloud and its lateral-offset label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub cloud: PointCloud,
    pub delta_x: f64,
    /// (trajectory offset, frame id) this sample came from.
    pub source: (f64, u64),
    /// Reference-trajectory frame the label points at.
    pub future_id: u64,
}

/// Per-trajectory accounting from dataset construction.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryCount {
    pub offset: f64,
    pub samples: usize,
    /// Frames skipped for lack of a future frame (sequence end) or a
    /// matching reference frame.
    pub skipped: usize,
    pub clamped: usize,
}

/// Smallest `j > i` whose position, expressed in frame `i`'s axes, lies at
/// least `lookahead` meters ahead along +Z. `None` past the sequence end.
pub fn select_future_frame(poses: &[RigidTransform], i: usize, lookahead: f64) -> Option<usize> {
    let base = &poses[i];
    (i + 1..poses.len()).find(|&j| relative_transform(base, &poses[j]).translation().z >= lookahead)
}

/// X component of frame `j`'s position expressed in frame `i`'s axes.
pub fn lateral_offset(pose_i: &RigidTransform, pose_j: &RigidTransform) -> f64 {
    relative_transform(pose_i, pose_j).translation().x
}

/// Bicycle-model steering angle for a lateral offset at the lookahead
/// distance: `delta = atan(delta_x * alpha)`.
pub fn steering_from_offset(delta_x: f64, p: &SteeringParams) -> f64 {
    (delta_x * p.alpha).atan()
}

/// Build labeled samples from augmented trajectories.
///
/// For every frame (of every trajectory) with a future reference frame at
/// the lookahead distance, emits the frame's cloud downsampled to a fixed
/// size and the lateral offset of that reference frame in the frame's own
/// axes. Labels beyond `clamp` are clamped and counted.
pub fn build_dataset(
    trajectories: &[Trajectory],
    cfg: &LabelConfig,
) -> Result<(Vec<LabeledSample>, Vec<TrajectoryCount>), LabelingError> {
    cfg.validate()?;
    let reference = trajectories
        .iter()
        .find(|t| t.offset == 0.0)
        .ok_or(LabelingError::MissingReference)?;
    let ref_ids: Vec<u64> = reference.frames.iter().map(|f| f.record.id).collect();
    let ref_poses: Vec<RigidTransform> = reference.frames.iter().map(|f| f.record.pose).collect();
    let ref_pos_by_id: HashMap<u64, usize> =
        ref_ids.iter().enumerate().map(|(pos, id)| (*id, pos)).collect();

    let per_trajectory: Vec<(Vec<LabeledSample>, TrajectoryCount)> =
        exec::map_slice(trajectories, |traj| {
            let mut samples = Vec::new();
            let mut skipped = 0usize;
            let mut clamped = 0usize;
            for sf in &traj.frames {
                let Some(&pos) = ref_pos_by_id.get(&sf.record.id) else {
                    skipped += 1;
                    continue;
                };
                let Some(fut) = select_future_frame(&ref_poses, pos, cfg.lookahead) else {
                    skipped += 1;
                    continue;
                };
                let mut delta_x = lateral_offset(&sf.record.pose, &ref_poses[fut]);
                if delta_x.abs() > cfg.clamp {
                    delta_x = delta_x.clamp(-cfg.clamp, cfg.clamp);
                    clamped += 1;
                }
                let seed = seeding::mix(cfg.seed, &[traj.offset.to_bits(), sf.record.id]);
                let Ok(cloud) = sample_fixed(&sf.record.cloud, cfg.n_points, seed) else {
                    skipped += 1;
                    continue;
                };
                samples.push(LabeledSample {
                    cloud,
                    delta_x,
                    source: (traj.offset, sf.record.id),
                    future_id: ref_ids[fut],
                });
            }
            let count =
                TrajectoryCount { offset: traj.offset, samples: samples.len(), skipped, clamped };
            (samples, count)
        });

    let mut samples = Vec::new();
    let mut counts = Vec::with_capacity(per_trajectory.len());
    for (s, c) in per_trajectory {
        samples.extend(s);
        counts.push(c);
    }
    Ok((samples, counts))
}
