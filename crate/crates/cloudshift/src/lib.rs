//! Self-supervised lateral vehicle control from point clouds.
//!
//! The crate covers the full desk-scale pipeline:
//!
//! 1. [`synthworld`] renders ground-truth depth/intensity frames and camera
//!    poses along a procedural two-lane track (optionally with visual-odometry
//!    style pose noise).
//! 2. [`depthcloud`] converts depth maps into edge-filtered, distance-limited
//!    point clouds of a fixed size.
//! 3. [`augment`] synthesizes point clouds for laterally shifted camera
//!    positions by aligning preceding frames, shifting and cropping.
//! 4. [`labeling`] derives corrective lateral-offset labels from camera poses
//!    and maps offsets to steering angles through the kinematic bicycle model.
//! 5. [`model`] is a miniature point-feature regression network (shared MLP,
//!    max-pool, scaled tanh head) with hand-written backpropagation.
//! 6. [`simulator`] closes the loop: a kinematic bicycle vehicle driven by a
//!    trained model over synthetic tracks, scored with the ratio-on-lane
//!    metric.
//!
//! All heavy inner loops (rendering, cloud synthesis, batch gradients,
//! episode sweeps) run data-parallel through [`exec`] when the default
//! `parallel` feature is enabled, and fall back to equivalent sequential
//! code without it. Results are bit-identical either way.

pub mod augment;
pub mod depthcloud;
pub mod exec;
pub mod geometry;
pub mod io;
pub mod labeling;
pub mod model;
pub mod seeding;
pub mod simulator;
pub mod synthworld;
