//! Depth maps to edge-filtered, distance-limited, fixed-size point clouds.
//!
//! The stage mirrors a mono-depth front end: an intensity raster drives a
//! Canny-style edge detector, the paired depth map is unprojected through the
//! pinhole model, and only edge pixels within a distance bound survive. A
//! seeded sampler then fixes the cloud size for the regression model.

use crate::geometry::{CameraIntrinsics, FrameId, GeometryError, PointCloud};
use nalgebra::Vector3;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use thiserror::Error;

/// Gaussian smoothing width used by [`edge_mask`].
const CANNY_SIGMA: f64 = 1.4;

#[derive(Debug, Error)]
pub enum DepthCloudError {
    #[error("raster is {got_w}x{got_h}, expected {want_w}x{want_h}")]
    DimensionMismatch { got_w: u32, got_h: u32, want_w: u32, want_h: u32 },
    #[error("raster dimensions {width}x{height} do not match {len} values")]
    BadLength { width: u32, height: u32, len: usize },
    #[error("raster is empty")]
    EmptyRaster,
    #[error("raster contains a non-finite value")]
    NonFiniteRaster,
    #[error("no points survive the frame's filters; frame is degenerate")]
    DegenerateFrame,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Row-major grid of float samples. Depth maps hold meters with entries
/// <= 0 marking invalid pixels; intensity images hold material brightness.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    width: u32,
    height: u32,
    values: Vec<f64>,
}

pub type DepthMap = Raster;
pub type IntensityImage = Raster;

impl Raster {
    pub fn new(width: u32, height: u32, values: Vec<f64>) -> Result<Self, DepthCloudError> {
        if width == 0 || height == 0 {
            return Err(DepthCloudError::EmptyRaster);
        }
        if values.len() != (width as usize) * (height as usize) {
            return Err(DepthCloudError::BadLength { width, height, len: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(DepthCloudError::NonFiniteRaster);
        }
        Ok(Self { width, height, values })
    }

    pub fn filled(width: u32, height: u32, value: f64) -> Result<Self, DepthCloudError> {
        Self::new(width, height, vec![value; (width as usize) * (height as usize)])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.values[(y as usize) * (self.width as usize) + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, value: f64) {
        self.values[(y as usize) * (self.width as usize) + x as usize] = value;
    }
}

/// Boolean per-pixel mask, dimensions matching its source raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl EdgeMask {
    pub fn new_false(width: u32, height: u32) -> Self {
        Self { width, height, bits: vec![false; (width as usize) * (height as usize)] }
    }

    pub fn new_true(width: u32, height: u32) -> Self {
        Self { width, height, bits: vec![true; (width as usize) * (height as usize)] }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[(y as usize) * (self.width as usize) + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        self.bits[(y as usize) * (self.width as usize) + x as usize] = value;
    }

    pub fn count_true(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// Intersection-over-union against another mask of the same size.
    pub fn iou(&self, other: &EdgeMask) -> f64 {
        assert_eq!((self.width, self.height), (other.width, other.height));
        let mut inter = 0usize;
        let mut union = 0usize;
        for (a, b) in self.bits.iter().zip(&other.bits) {
            if *a && *b {
                inter += 1;
            }
            if *a || *b {
                union += 1;
            }
        }
        if union == 0 {
            1.0
        } else {
            inter as f64 / union as f64
        }
    }

    /// Intersection-over-union with a spatial match tolerance, the usual way
    /// to compare thin edge maps: a pixel counts as matched when the other
    /// mask has an edge within Chebyshev distance `tol`. Matched pixels are
    /// true positives; unmatched pixels of `self` and `other` are false
    /// positives and false negatives.
    pub fn tolerant_iou(&self, other: &EdgeMask, tol: u32) -> f64 {
        assert_eq!((self.width, self.height), (other.width, other.height));
        let self_zone = dilate(self, tol);
        let other_zone = dilate(other, tol);
        let mut matched = 0usize;
        let mut unmatched_self = 0usize;
        let mut unmatched_other = 0usize;
        for idx in 0..self.bits.len() {
            if self.bits[idx] {
                if other_zone.bits[idx] {
                    matched += 1;
                } else {
                    unmatched_self += 1;
                }
            }
            if other.bits[idx] {
                if self_zone.bits[idx] {
                    matched += 1;
                } else {
                    unmatched_other += 1;
                }
            }
        }
        if matched == 0 && unmatched_self == 0 && unmatched_other == 0 {
            return 1.0;
        }
        let tp = matched as f64 / 2.0;
        tp / (tp + unmatched_self as f64 + unmatched_other as f64)
    }
}

/// Knobs of the cloud-building stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloudConfig {
    /// Points farther than this from the camera origin are discarded (meters).
    pub max_distance: f64,
    /// Cloud size after [`sample_fixed`].
    pub target_points: usize,
    /// Half-width of the square element used to dilate edge masks (pixels).
    pub dilation_radius: u32,
    /// Multiplicative depth calibration applied at unprojection.
    pub scale_factor: f64,
}

impl Default for CloudConfig {
    fn default() -> Self {
        Self { max_distance: 20.0, target_points: 4096, dilation_radius: 1, scale_factor: 1.0 }
    }
}

impl CloudConfig {
    pub fn validate(&self) -> Result<(), DepthCloudError> {
        if !(self.max_distance > 0.0) {
            return Err(DepthCloudError::InvalidConfig("max_distance must be positive".into()));
        }
        if self.target_points == 0 {
            return Err(DepthCloudError::InvalidConfig("target_points must be positive".into()));
        }
        if !(self.scale_factor > 0.0 && self.scale_factor.is_finite()) {
            return Err(DepthCloudError::InvalidConfig("scale_factor must be positive and finite".into()));
        }
        Ok(())
    }
}

/// Unprojected cloud with the source pixel of every point, so masks defined
/// on the pixel grid can be applied after the fact.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelCloud {
    cloud: PointCloud,
    pixels: Vec<(u32, u32)>,
}

impl PixelCloud {
    pub fn cloud(&self) -> &PointCloud {
        &self.cloud
    }

    pub fn pixels(&self) -> &[(u32, u32)] {
        &self.pixels
    }
}

/// Inverse pinhole projection of every valid depth pixel:
/// `(Z (u - cx)/fx, Z (v - cy)/fy, Z)` with `Z = depth(u,v) * scale_factor`.
pub fn unproject(
    intr: &CameraIntrinsics,
    depth: &DepthMap,
    scale_factor: f64,
    frame: FrameId,
) -> Result<PixelCloud, DepthCloudError> {
    if depth.width != intr.width || depth.height != intr.height {
        return Err(DepthCloudError::DimensionMismatch {
            got_w: depth.width,
            got_h: depth.height,
            want_w: intr.width,
            want_h: intr.height,
        });
    }
    if !(scale_factor > 0.0 && scale_factor.is_finite()) {
        return Err(DepthCloudError::InvalidConfig("scale_factor must be positive and finite".into()));
    }
    let mut points = Vec::new();
    let mut pixels = Vec::new();
    for v in 0..depth.height {
        for u in 0..depth.width {
            let raw = depth.get(u, v);
            if raw <= 0.0 {
                continue;
            }
            let z = raw * scale_factor;
            points.push(Vector3::new(
                z * (u as f64 - intr.cx) / intr.fx,
                z * (v as f64 - intr.cy) / intr.fy,
                z,
            ));
            pixels.push((u, v));
        }
    }
    Ok(PixelCloud { cloud: PointCloud::new_unchecked(points, frame), pixels })
}

fn clamp_idx(v: i64, max: u32) -> usize {
    v.clamp(0, max as i64 - 1) as usize
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let half = (3.0 * sigma).ceil() as i64;
    let mut kernel: Vec<f64> =
        (-half..=half).map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp()).collect();
    let sum: f64 = kernel.iter().sum();
    for k in &mut kernel {
        *k /= sum;
    }
    kernel
}

fn gaussian_blur(img: &Raster, sigma: f64) -> Vec<f64> {
    let kernel = gaussian_kernel(sigma);
    let half = (kernel.len() / 2) as i64;
    let (w, h) = (img.width as usize, img.height as usize);
    let mut rows = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, coeff) in kernel.iter().enumerate() {
                let sx = clamp_idx(x as i64 + k as i64 - half, img.width);
                acc += coeff * img.values[y * w + sx];
            }
            rows[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, coeff) in kernel.iter().enumerate() {
                let sy = clamp_idx(y as i64 + k as i64 - half, img.height);
                acc += coeff * rows[sy * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// Canny-style edge detection on an intensity raster: Gaussian smoothing,
/// Sobel gradients, non-maximum suppression along the quantized gradient
/// direction, then hysteresis linking between the two thresholds.
///
/// Ties in the suppression step keep the pixel that comes later in row-major
/// order, so a two-pixel gradient plateau yields the right/bottom pixel of
/// the pair. This matches the convention of marking a boundary on the pixel
/// whose material differs from its left/above neighbor.
pub fn edge_mask(image: &IntensityImage, low: f64, high: f64) -> Result<EdgeMask, DepthCloudError> {
    if !(0.0 <= low && low <= high && high.is_finite()) {
        return Err(DepthCloudError::InvalidConfig(format!("thresholds must satisfy 0 <= low <= high, got {low}, {high}")));
    }
    let (w, h) = (image.width as usize, image.height as usize);
    let smoothed = gaussian_blur(image, CANNY_SIGMA);
    let at = |x: i64, y: i64| smoothed[clamp_idx(y, image.height) * w + clamp_idx(x, image.width)];

    let mut mag = vec![0.0; w * h];
    let mut dir = vec![(0i64, 0i64); w * h];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let gx = at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1)
                - at(x - 1, y - 1)
                - 2.0 * at(x - 1, y)
                - at(x - 1, y + 1);
            let gy = at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1)
                - at(x - 1, y - 1)
                - 2.0 * at(x, y - 1)
                - at(x + 1, y - 1);
            let idx = y as usize * w + x as usize;
            mag[idx] = gx.hypot(gy);
            // Fold the gradient angle into [0, pi) and quantize to the four
            // axis/diagonal directions. The chosen (dx, dy) always has
            // dy > 0, or dy = 0 with dx = 1, so p - d precedes p + d in
            // row-major order.
            let mut angle = gy.atan2(gx);
            if angle < 0.0 {
                angle += PI;
            }
            let sector = ((angle * 4.0 / PI + 0.5).floor() as i64).rem_euclid(4);
            dir[idx] = match sector {
                0 => (1, 0),
                1 => (1, 1),
                2 => (0, 1),
                _ => (-1, 1),
            };
        }
    }

    let mag_at = |x: i64, y: i64| {
        if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
            0.0
        } else {
            mag[y as usize * w + x as usize]
        }
    };

    // Non-maximum suppression: survive if not below the earlier neighbor and
    // strictly above the later one.
    let mut candidate = vec![false; w * h];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let idx = y as usize * w + x as usize;
            let (dx, dy) = dir[idx];
            let m = mag[idx];
            if m > 0.0 && m >= mag_at(x - dx, y - dy) && m > mag_at(x + dx, y + dy) {
                candidate[idx] = true;
            }
        }
    }

    // Hysteresis: seed from strong candidates, grow through weak ones.
    let mut out = EdgeMask::new_false(image.width, image.height);
    let mut stack = Vec::new();
    for idx in 0..w * h {
        if candidate[idx] && mag[idx] >= high && !out.bits[idx] {
            out.bits[idx] = true;
            stack.push(idx);
            while let Some(p) = stack.pop() {
                let (px, py) = ((p % w) as i64, (p / w) as i64);
                for ny in py - 1..=py + 1 {
                    for nx in px - 1..=px + 1 {
                        if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                            continue;
                        }
                        let n = ny as usize * w + nx as usize;
                        if candidate[n] && mag[n] >= low && !out.bits[n] {
                            out.bits[n] = true;
                            stack.push(n);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Morphological dilation with a square structuring element of half-width
/// `radius`. Radius 0 is the identity.
pub fn dilate(mask: &EdgeMask, radius: u32) -> EdgeMask {
    if radius == 0 {
        return mask.clone();
    }
    let (w, h) = (mask.width as usize, mask.height as usize);
    let r = radius as i64;
    // Separable: horizontal run spread, then vertical.
    let mut horiz = vec![false; w * h];
    for y in 0..h {
        for x in 0..w as i64 {
            let lo = (x - r).max(0) as usize;
            let hi = ((x + r) as usize).min(w - 1);
            horiz[y * w + x as usize] = (lo..=hi).any(|sx| mask.bits[y * w + sx]);
        }
    }
    let mut out = EdgeMask::new_false(mask.width, mask.height);
    for y in 0..h as i64 {
        for x in 0..w {
            let lo = (y - r).max(0) as usize;
            let hi = ((y + r) as usize).min(h - 1);
            out.bits[y as usize * w + x] = (lo..=hi).any(|sy| horiz[sy * w + x]);
        }
    }
    out
}

/// Keep exactly the points whose source pixel is masked true and whose
/// Euclidean distance from the camera origin is within `cfg.max_distance`.
pub fn filter_cloud(pc: &PixelCloud, mask: &EdgeMask, cfg: &CloudConfig) -> Result<PointCloud, DepthCloudError> {
    cfg.validate()?;
    let points: Vec<Vector3<f64>> = pc
        .cloud
        .points()
        .iter()
        .zip(&pc.pixels)
        .filter(|(p, (u, v))| mask.get(*u, *v) && p.norm() <= cfg.max_distance)
        .map(|(p, _)| *p)
        .collect();
    Ok(PointCloud::new_unchecked(points, pc.cloud.frame()))
}

/// Resize a cloud to exactly `n` points: a uniform subsample without
/// replacement when the cloud is large enough, otherwise the whole cloud
/// padded by sampling with replacement. Deterministic for a fixed seed.
pub fn sample_fixed(cloud: &PointCloud, n: usize, seed: u64) -> Result<PointCloud, DepthCloudError> {
    if n == 0 {
        return Err(DepthCloudError::InvalidConfig("target size must be positive".into()));
    }
    if cloud.is_empty() {
        return Err(DepthCloudError::DegenerateFrame);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = cloud.points();
    let indices: Vec<usize> = if pts.len() >= n {
        rand::seq::index::sample(&mut rng, pts.len(), n).into_vec()
    } else {
        let mut idx: Vec<usize> = (0..pts.len()).collect();
        idx.extend((pts.len()..n).map(|_| rng.gen_range(0..pts.len())));
        idx
    };
    let points = indices.into_iter().map(|i| pts[i]).collect();
    Ok(PointCloud::new_unchecked(points, cloud.frame()))
}

/// Estimate the depth scale factor from the camera's known height above the
/// road plane: the median camera-frame height of below-horizon pixels should
/// unproject to `camera_height`.
pub fn estimate_scale_factor(
    intr: &CameraIntrinsics,
    depth: &DepthMap,
    camera_height: f64,
) -> Result<f64, DepthCloudError> {
    if !(camera_height > 0.0) {
        return Err(DepthCloudError::InvalidConfig("camera height must be positive".into()));
    }
    let mut heights = Vec::new();
    for v in 0..depth.height {
        if (v as f64) <= intr.cy {
            continue;
        }
        for u in 0..depth.width {
            let raw = depth.get(u, v);
            if raw > 0.0 {
                heights.push(raw * (v as f64 - intr.cy) / intr.fy);
            }
        }
    }
    if heights.is_empty() {
        return Err(DepthCloudError::DegenerateFrame);
    }
    heights.sort_by(f64::total_cmp);
    let median = heights[heights.len() / 2];
    if !(median > 0.0) {
        return Err(DepthCloudError::DegenerateFrame);
    }
    Ok(camera_height / median)
}

/// Full per-frame pipeline: unproject, edge-filter (with dilation), limit
/// distance. The result still has variable size; call [`sample_fixed`] to fix
/// it for the model.
pub fn frame_cloud(
    intr: &CameraIntrinsics,
    depth: &DepthMap,
    intensity: &IntensityImage,
    cfg: &CloudConfig,
    low: f64,
    high: f64,
    frame: FrameId,
) -> Result<PointCloud, DepthCloudError> {
    cfg.validate()?;
    let pc = unproject(intr, depth, cfg.scale_factor, frame)?;
    let mask = dilate(&edge_mask(intensity, low, high)?, cfg.dilation_radius);
    filter_cloud(&pc, &mask, cfg)
}
