//! Trajectory files: one pose per line, ASCII, space-separated
//! `timestamp tx ty tz qx qy qz qw`. Comment lines start with `#`.
//! Timestamps must be strictly increasing.

use super::IoFormatError;
use crate::geometry::RigidTransform;
use nalgebra::Vector3;
use std::fmt::Write as _;
use std::path::Path;

pub fn parse_tum(text: &str) -> Result<Vec<(f64, RigidTransform)>, IoFormatError> {
    let mut poses: Vec<(f64, RigidTransform)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |msg: String| IoFormatError::BadLine { line: i + 1, msg };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 8 {
            return Err(bad(format!("expected 8 fields, got {}", fields.len())));
        }
        let mut v = [0.0f64; 8];
        for (slot, field) in v.iter_mut().zip(&fields) {
            *slot = field.parse().map_err(|e| bad(format!("{field}: {e}")))?;
        }
        let timestamp = v[0];
        if !timestamp.is_finite() {
            return Err(bad("non-finite timestamp".into()));
        }
        if let Some((prev, _)) = poses.last() {
            if timestamp <= *prev {
                return Err(bad(format!("timestamp {timestamp} not after {prev}")));
            }
        }
        let pose = RigidTransform::from_quaternion(
            Vector3::new(v[1], v[2], v[3]),
            v[4],
            v[5],
            v[6],
            v[7],
        )
        .map_err(|e| bad(e.to_string()))?;
        poses.push((timestamp, pose));
    }
    Ok(poses)
}

pub fn tum_string(poses: &[(f64, RigidTransform)]) -> String {
    let mut out = String::new();
    for (timestamp, pose) in poses {
        let t = pose.translation();
        let (qx, qy, qz, qw) = pose.to_quaternion();
        let _ = writeln!(out, "{timestamp} {} {} {} {qx} {qy} {qz} {qw}", t.x, t.y, t.z);
    }
    out
}

pub fn read_tum(path: &Path) -> Result<Vec<(f64, RigidTransform)>, IoFormatError> {
    parse_tum(&std::fs::read_to_string(path)?)
}

pub fn write_tum(path: &Path, poses: &[(f64, RigidTransform)]) -> Result<(), IoFormatError> {
    super::write_atomic(path, tum_string(poses).as_bytes())
}
