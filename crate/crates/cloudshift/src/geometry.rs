//! SE(3) pose algebra, pinhole projection and field-of-view predicates.
//!
//! Conventions used throughout the crate:
//!
//! * camera axes: `+Z` forward (optical axis), `+X` right (lateral),
//!   `+Y` down;
//! * rotations are stored as 3x3 matrices, validated to be orthonormal with
//!   determinant one at construction;
//! * double precision everywhere: pose chains over hundreds of frames must
//!   hold 1e-9 round-trip tolerances.

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};
use thiserror::Error;

/// Tolerance on `R^T R - I` and `det(R) - 1` accepted at construction.
pub const ROTATION_TOL: f64 = 1e-9;

/// Tolerance on the quaternion norm accepted when parsing poses.
pub const QUATERNION_NORM_TOL: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("rotation is not orthonormal (max deviation {deviation:.3e})")]
    InvalidRotation { deviation: f64 },
    #[error("quaternion norm {norm} deviates from 1 by more than {QUATERNION_NORM_TOL}")]
    InvalidQuaternion { norm: f64 },
    #[error("point cloud contains a non-finite coordinate")]
    NonFinitePoint,
    #[error("cannot project a point with zero depth")]
    DegenerateProjection,
    #[error("frame mismatch: {a:?} vs {b:?}")]
    FrameMismatch { a: FrameId, b: FrameId },
    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(String),
}

/// Reference frame a point cloud's coordinates are expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrameId {
    /// The global (world) frame.
    World,
    /// The local frame of a camera, keyed by its sequence index.
    Camera(u64),
}

/// A rigid body transform in SE(3): rotation plus translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

fn rotation_deviation(rotation: &Matrix3<f64>) -> f64 {
    let gram = rotation.transpose() * rotation;
    let mut dev: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((gram[(i, j)] - target).abs());
        }
    }
    dev.max((rotation.determinant() - 1.0).abs())
}

impl RigidTransform {
    /// Build a transform from a rotation matrix and translation vector,
    /// validating orthonormality and determinant.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, GeometryError> {
        let deviation = rotation_deviation(&rotation);
        if !deviation.is_finite() || deviation > ROTATION_TOL || !translation.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::InvalidRotation { deviation });
        }
        Ok(Self { rotation, translation })
    }

    /// Internal constructor for results of group operations, which preserve
    /// the invariants up to floating-point rounding.
    pub(crate) fn new_unchecked(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self { rotation, translation }
    }

    pub fn identity() -> Self {
        Self { rotation: Matrix3::identity(), translation: Vector3::zeros() }
    }

    /// Build from a translation and an `(qx, qy, qz, qw)` quaternion as found
    /// in trajectory files. The quaternion is normalized; norms deviating
    /// from 1 by more than [`QUATERNION_NORM_TOL`] are rejected.
    pub fn from_quaternion(
        translation: Vector3<f64>,
        qx: f64,
        qy: f64,
        qz: f64,
        qw: f64,
    ) -> Result<Self, GeometryError> {
        let quat = Quaternion::new(qw, qx, qy, qz);
        let norm = quat.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > QUATERNION_NORM_TOL {
            return Err(GeometryError::InvalidQuaternion { norm });
        }
        let unit = UnitQuaternion::from_quaternion(quat);
        Ok(Self { rotation: unit.to_rotation_matrix().into_inner(), translation })
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    /// Quaternion `(qx, qy, qz, qw)` of the rotation, for trajectory files.
    pub fn to_quaternion(&self) -> (f64, f64, f64, f64) {
        let unit = UnitQuaternion::from_matrix(&self.rotation);
        let q = unit.quaternion();
        (q.i, q.j, q.k, q.w)
    }

    /// Homogeneous product `self * other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    /// Group inverse: rotation `R^T`, translation `-R^T t`.
    pub fn inverse(&self) -> Self {
        let rotation = self.rotation.transpose();
        Self { rotation, translation: -(rotation * self.translation) }
    }

    /// Apply to a single point: `R p + t`.
    pub fn transform_point(&self, point: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * point + self.translation
    }

    /// Re-orthonormalize the rotation through its quaternion form. Used by
    /// long perturbation chains to keep the invariants exact.
    pub fn renormalized(&self) -> Self {
        let unit = UnitQuaternion::from_matrix(&self.rotation);
        Self { rotation: unit.to_rotation_matrix().into_inner(), translation: self.translation }
    }
}

/// `T_B^-1 * T_A`: maps coordinates in frame `A` to coordinates in frame `B`,
/// given the global poses of both frames.
pub fn relative_transform(t_b: &RigidTransform, t_a: &RigidTransform) -> RigidTransform {
    t_b.inverse().compose(t_a)
}

/// Pure lateral translation by `x` meters along the camera's `+X` axis.
pub fn lateral_shift(x: f64) -> RigidTransform {
    RigidTransform { rotation: Matrix3::identity(), translation: Vector3::new(x, 0.0, 0.0) }
}

/// Pinhole camera intrinsics plus the image plane size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self, GeometryError> {
        if !(fx > 0.0 && fy > 0.0) {
            return Err(GeometryError::InvalidIntrinsics(format!("focal lengths must be positive, got {fx}, {fy}")));
        }
        if width == 0 || height == 0 {
            return Err(GeometryError::InvalidIntrinsics("image plane must be non-empty".into()));
        }
        if !(0.0..width as f64).contains(&cx) || !(0.0..height as f64).contains(&cy) {
            return Err(GeometryError::InvalidIntrinsics(format!("principal point ({cx}, {cy}) outside {width}x{height} plane")));
        }
        Ok(Self { fx, fy, cx, cy, width, height })
    }

    /// Square-pixel intrinsics from a horizontal field of view, principal
    /// point at the image center.
    pub fn from_horizontal_fov(width: u32, height: u32, hfov_rad: f64) -> Result<Self, GeometryError> {
        if !(hfov_rad > 0.0 && hfov_rad < std::f64::consts::PI) {
            return Err(GeometryError::InvalidIntrinsics(format!("horizontal fov {hfov_rad} rad out of range")));
        }
        let f = width as f64 / 2.0 / (hfov_rad / 2.0).tan();
        Self::new(f, f, width as f64 / 2.0, height as f64 / 2.0, width, height)
    }
}

/// A point projected onto the image plane, with the source depth kept so
/// behind-camera points can be recognized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImagePoint {
    pub x_im: f64,
    pub y_im: f64,
    pub depth: f64,
}

/// Pinhole projection: `x_im = (fx X + cx Z) / Z`, `y_im = (fy Y + cy Z) / Z`.
///
/// Points behind the camera are projected as-is and flagged by their negative
/// `depth`; only exactly zero depth is an error.
pub fn project(intr: &CameraIntrinsics, point: &Vector3<f64>) -> Result<ImagePoint, GeometryError> {
    if point.z == 0.0 {
        return Err(GeometryError::DegenerateProjection);
    }
    Ok(ImagePoint {
        x_im: (intr.fx * point.x + intr.cx * point.z) / point.z,
        y_im: (intr.fy * point.y + intr.cy * point.z) / point.z,
        depth: point.z,
    })
}

/// Whether a projected point falls inside the image plane. Behind-camera
/// points (depth <= 0) are never in view.
pub fn in_image_plane(intr: &CameraIntrinsics, ip: &ImagePoint) -> bool {
    ip.depth > 0.0
        && ip.x_im >= 0.0
        && ip.x_im < intr.width as f64
        && ip.y_im >= 0.0
        && ip.y_im < intr.height as f64
}

/// A set of 3D points with an explicit reference-frame tag.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Vector3<f64>>,
    frame: FrameId,
}

impl PointCloud {
    pub fn new(points: Vec<Vector3<f64>>, frame: FrameId) -> Result<Self, GeometryError> {
        if points.iter().any(|p| !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite())) {
            return Err(GeometryError::NonFinitePoint);
        }
        Ok(Self { points, frame })
    }

    pub(crate) fn new_unchecked(points: Vec<Vector3<f64>>, frame: FrameId) -> Self {
        Self { points, frame }
    }

    pub fn empty(frame: FrameId) -> Self {
        Self { points: Vec::new(), frame }
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    pub fn frame(&self) -> FrameId {
        self.frame
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Apply a rigid transform to every point, retagging the result with the
    /// caller-supplied target frame.
    pub fn transformed(&self, t: &RigidTransform, target: FrameId) -> PointCloud {
        let points = self.points.iter().map(|p| t.transform_point(p)).collect();
        PointCloud { points, frame: target }
    }

    /// Concatenate two clouds expressed in the same frame.
    pub fn concat(&self, other: &PointCloud) -> Result<PointCloud, GeometryError> {
        if self.frame != other.frame {
            return Err(GeometryError::FrameMismatch { a: self.frame, b: other.frame });
        }
        let mut points = self.points.clone();
        points.extend_from_slice(&other.points);
        Ok(PointCloud { points, frame: self.frame })
    }

    /// Keep only points whose projection falls inside the camera's image
    /// plane (behind-camera points are dropped).
    pub fn crop_to_fov(&self, intr: &CameraIntrinsics) -> PointCloud {
        let points = self
            .points
            .iter()
            .filter(|p| matches!(project(intr, p), Ok(ip) if in_image_plane(intr, &ip)))
            .copied()
            .collect();
        PointCloud { points, frame: self.frame }
    }

    /// Keep only points within `max_distance` (Euclidean) of the origin.
    pub fn limit_distance(&self, max_distance: f64) -> PointCloud {
        let points = self.points.iter().filter(|p| p.norm() <= max_distance).copied().collect();
        PointCloud { points, frame: self.frame }
    }
}

#[cfg(test)]
pub(crate) mod tests_support {
    use super::*;
    use rand::Rng;

    pub(crate) fn random_transform(rng: &mut impl Rng) -> RigidTransform {
        loop {
            let q = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0f64),
            ];
            let norm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm < 0.1 {
                continue;
            }
            let t = Vector3::new(
                rng.gen_range(-10.0..10.0),
                rng.gen_range(-10.0..10.0),
                rng.gen_range(-10.0..10.0),
            );
            return RigidTransform::from_quaternion(t, q[0] / norm, q[1] / norm, q[2] / norm, q[3] / norm)
                .unwrap();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::tests_support::random_transform;
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn transform_close(a: &RigidTransform, b: &RigidTransform, tol: f64) -> bool {
        let dr = (a.rotation() - b.rotation()).abs().max();
        let dt = (a.translation() - b.translation()).abs().max();
        dr < tol && dt < tol
    }

    #[test]
    fn compose_identity_is_neutral() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = random_transform(&mut rng);
        assert!(transform_close(&RigidTransform::identity().compose(&t), &t, 1e-15));
        assert!(transform_close(&t.compose(&RigidTransform::identity()), &t, 1e-15));
    }

    #[test]
    fn compose_inverse_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let t = random_transform(&mut rng);
            assert!(transform_close(&t.compose(&t.inverse()), &RigidTransform::identity(), 1e-9));
        }
    }

    #[test]
    fn compose_is_associative() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let a = random_transform(&mut rng);
            let b = random_transform(&mut rng);
            let c = random_transform(&mut rng);
            assert!(transform_close(&a.compose(&b).compose(&c), &a.compose(&b.compose(&c)), 1e-9));
        }
    }

    #[test]
    fn lateral_shifts_add_under_composition() {
        // shift(1) * shift(2) worked out by hand is shift(3).
        let combined = lateral_shift(1.0).compose(&lateral_shift(2.0));
        assert!(transform_close(&combined, &lateral_shift(3.0), 1e-15));
        assert!(transform_close(&lateral_shift(0.0), &RigidTransform::identity(), 0.0_f64.max(1e-15)));
        assert_eq!(*lateral_shift(2.0).translation(), Vector3::new(2.0, 0.0, 0.0));
    }

    #[test]
    fn inverse_of_shift_negates() {
        assert!(transform_close(&lateral_shift(2.5).inverse(), &lateral_shift(-2.5), 1e-15));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t = random_transform(&mut rng);
        assert!(transform_close(&t.inverse().inverse(), &t, 1e-12));
    }

    #[test]
    fn relative_transform_recovers_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let t_a = random_transform(&mut rng);
            let t_b = random_transform(&mut rng);
            let rel = relative_transform(&t_b, &t_a);
            assert!(transform_close(&t_b.compose(&rel), &t_a, 1e-9));
        }
        let t = random_transform(&mut rng);
        assert!(transform_close(&relative_transform(&t, &t), &RigidTransform::identity(), 1e-12));
        assert!(transform_close(&relative_transform(&RigidTransform::identity(), &t), &t, 1e-15));
    }

    #[test]
    fn shift_inverse_identity_for_new_frames() {
        // inverse(T_B T_x) T_B == inverse(T_x) over random poses and shifts.
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..1000 {
            let t_b = random_transform(&mut rng);
            let t_x = lateral_shift(rng.gen_range(-3.0..3.0));
            let lhs = t_b.compose(&t_x).inverse().compose(&t_b);
            assert!(transform_close(&lhs, &t_x.inverse(), 1e-9));
        }
    }

    #[test]
    fn rejects_non_orthonormal_rotation() {
        let mut m = Matrix3::identity();
        m[(0, 0)] = 1.1;
        assert!(RigidTransform::new(m, Vector3::zeros()).is_err());
        // Column swap has determinant -1.
        let mut swapped = Matrix3::zeros();
        swapped[(0, 1)] = 1.0;
        swapped[(1, 0)] = 1.0;
        swapped[(2, 2)] = 1.0;
        assert!(RigidTransform::new(swapped, Vector3::zeros()).is_err());
    }

    #[test]
    fn rejects_denormalized_quaternion() {
        let t = Vector3::zeros();
        assert!(RigidTransform::from_quaternion(t, 0.0, 0.0, 0.0, 1.002).is_err());
        assert!(RigidTransform::from_quaternion(t, 0.0, 0.0, 0.0, 1.0005).is_ok());
    }

    #[test]
    fn quaternion_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let t = random_transform(&mut rng);
            let (qx, qy, qz, qw) = t.to_quaternion();
            let back = RigidTransform::from_quaternion(*t.translation(), qx, qy, qz, qw).unwrap();
            assert!(transform_close(&t, &back, 1e-12));
        }
    }

    #[test]
    fn projection_matches_hand_computation() {
        let intr = CameraIntrinsics::new(320.0, 320.0, 320.0, 96.0, 640, 192).unwrap();
        let on_axis = project(&intr, &Vector3::new(0.0, 0.0, 5.0)).unwrap();
        assert_abs_diff_eq!(on_axis.x_im, 320.0);
        assert_abs_diff_eq!(on_axis.y_im, 96.0);

        // (1, 0, 2): x_im = (320*1 + 320*2)/2 = 480.
        let right = project(&intr, &Vector3::new(1.0, 0.0, 2.0)).unwrap();
        assert_abs_diff_eq!(right.x_im, 480.0);

        // (-3, 0, 2): x_im = (320*-3 + 320*2)/2 = -160, off the plane.
        let left = project(&intr, &Vector3::new(-3.0, 0.0, 2.0)).unwrap();
        assert_abs_diff_eq!(left.x_im, -160.0);
        assert!(!in_image_plane(&intr, &left));

        assert!(project(&intr, &Vector3::new(1.0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn image_plane_bounds_are_half_open() {
        let intr = CameraIntrinsics::new(320.0, 320.0, 320.0, 96.0, 640, 192).unwrap();
        assert!(in_image_plane(&intr, &ImagePoint { x_im: 320.0, y_im: 96.0, depth: 5.0 }));
        assert!(!in_image_plane(&intr, &ImagePoint { x_im: 640.0, y_im: 96.0, depth: 5.0 }));
        assert!(in_image_plane(&intr, &ImagePoint { x_im: 0.0, y_im: 0.0, depth: 1.0 }));
        assert!(!in_image_plane(&intr, &ImagePoint { x_im: -1e-9, y_im: 0.0, depth: 1.0 }));
        assert!(!in_image_plane(&intr, &ImagePoint { x_im: 320.0, y_im: 96.0, depth: -5.0 }));
        assert!(!in_image_plane(&intr, &ImagePoint { x_im: 320.0, y_im: 96.0, depth: 0.0 }));
    }

    #[test]
    fn cloud_transform_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let t = random_transform(&mut rng);
        let points: Vec<Vector3<f64>> = (0..64)
            .map(|_| Vector3::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)))
            .collect();
        let cloud = PointCloud::new(points.clone(), FrameId::Camera(0)).unwrap();
        let there = cloud.transformed(&t, FrameId::World);
        assert_eq!(there.frame(), FrameId::World);
        let back = there.transformed(&t.inverse(), FrameId::Camera(0));
        for (orig, trip) in points.iter().zip(back.points()) {
            assert!((orig - trip).norm() < 1e-9);
        }
    }

    #[test]
    fn shifted_cloud_moves_laterally() {
        let cloud = PointCloud::new(vec![Vector3::new(0.0, 0.0, 5.0)], FrameId::Camera(0)).unwrap();
        let moved = cloud.transformed(&lateral_shift(1.0), FrameId::Camera(0));
        assert_eq!(moved.points()[0], Vector3::new(1.0, 0.0, 5.0));
    }

    #[test]
    fn concat_requires_matching_frames() {
        let a = PointCloud::new(vec![Vector3::zeros()], FrameId::Camera(0)).unwrap();
        let b = PointCloud::new(vec![Vector3::zeros()], FrameId::Camera(1)).unwrap();
        assert!(a.concat(&b).is_err());
        let c = PointCloud::new(vec![Vector3::new(1.0, 1.0, 1.0)], FrameId::Camera(0)).unwrap();
        assert_eq!(a.concat(&c).unwrap().len(), 2);
    }

    #[test]
    fn rejects_non_finite_points() {
        assert!(PointCloud::new(vec![Vector3::new(f64::NAN, 0.0, 0.0)], FrameId::World).is_err());
    }
}
