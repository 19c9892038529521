//! Parallel vs sequential dispatch on the four pipeline stages that fan out
//! over `exec::map_slice`: rendering, trajectory synthesis, training batches
//! and episode sweeps. Both paths run the same per-item closures, so the
//! numbers isolate the dispatch overhead and the available speedup.

use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, Criterion};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cloudshift::augment::{self, AugmentConfig, FrameRecord};
use cloudshift::depthcloud::{frame_cloud, CloudConfig};
use cloudshift::exec;
use cloudshift::geometry::{CameraIntrinsics, FrameId, RigidTransform};
use cloudshift::labeling::SteeringParams;
use cloudshift::model::{NetConfig, PointNetLite};
use cloudshift::simulator::{run_episode, EpisodeConfig, ModelController, PipelineConfig};
use cloudshift::synthworld::{render_sequence, sample_reference, Track, TrackSpec};

fn bench_track() -> Track {
    let spec = TrackSpec::parse("segment straight 30\nsegment arc 40 45\nsegment straight 20\n")
        .unwrap();
    Track::compile(&spec).unwrap()
}

fn bench_intrinsics() -> CameraIntrinsics {
    CameraIntrinsics::from_horizontal_fov(64, 24, 90f64.to_radians()).unwrap()
}

fn render_batch(c: &mut Criterion) {
    let track = bench_track();
    let intr = bench_intrinsics();
    let poses: Vec<RigidTransform> = sample_reference(&track, 1.0).into_iter().take(40).collect();
    let item = |pose: &RigidTransform| {
        render_sequence(&track, std::slice::from_ref(pose), &intr, 0.1).unwrap()
    };

    let mut g = c.benchmark_group("render_batch");
    g.sample_size(10);
    g.bench_function("parallel", |b| b.iter(|| black_box(exec::map_slice(&poses, item))));
    g.bench_function("sequential", |b| b.iter(|| black_box(exec::map_slice_seq(&poses, item))));
    g.finish();
}

fn records(track: &Track, intr: &CameraIntrinsics, n: usize) -> Vec<FrameRecord> {
    let poses: Vec<RigidTransform> = sample_reference(track, 1.0).into_iter().take(n).collect();
    let frames = render_sequence(track, &poses, intr, 0.1).unwrap();
    frames
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let cloud = frame_cloud(
                intr,
                &f.depth,
                &f.intensity,
                &CloudConfig::default(),
                0.08,
                0.2,
                FrameId::Camera(i as u64),
            )
            .unwrap();
            FrameRecord::new(i as u64, f.pose, cloud, f.timestamp).unwrap()
        })
        .collect()
}

fn trajectory_synthesis(c: &mut Criterion) {
    let track = bench_track();
    let intr = bench_intrinsics();
    let recs = records(&track, &intr, 24);
    let cfg = AugmentConfig::default();
    let slots: Vec<(usize, f64)> = [8usize, 12, 16, 20]
        .iter()
        .flat_map(|&i| [-1.5, -0.5, 0.5, 1.5].iter().map(move |&x| (i, x)))
        .collect();
    let item = |&(base, x): &(usize, f64)| {
        augment::synthesize_frame(&recs, base, x, &intr, &cfg).unwrap()
    };

    let mut g = c.benchmark_group("trajectory_synthesis");
    g.sample_size(10);
    g.bench_function("parallel", |b| b.iter(|| black_box(exec::map_slice(&slots, item))));
    g.bench_function("sequential", |b| b.iter(|| black_box(exec::map_slice_seq(&slots, item))));
    g.finish();
}

fn training_batch(c: &mut Criterion) {
    let cfg = NetConfig {
        point_widths: vec![3, 16, 32],
        head_widths: vec![32, 16, 1],
        scale: 2.5,
        input_scale: 0.05,
        seed: 9,
    };
    let net = PointNetLite::new(&cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let batch: Vec<(Vec<Vector3<f64>>, f64)> = (0..64)
        .map(|_| {
            let pts = (0..128)
                .map(|_| {
                    Vector3::new(
                        rng.gen_range(-10.0..10.0),
                        rng.gen_range(-3.0..3.0),
                        rng.gen_range(0.5..20.0),
                    )
                })
                .collect();
            (pts, rng.gen_range(-2.0..2.0))
        })
        .collect();
    let item = |(pts, label): &(Vec<Vector3<f64>>, f64)| net.backward(pts, *label).unwrap();

    let mut g = c.benchmark_group("training_batch");
    g.sample_size(10);
    g.bench_function("parallel", |b| b.iter(|| black_box(exec::map_slice(&batch, item))));
    g.bench_function("sequential", |b| b.iter(|| black_box(exec::map_slice_seq(&batch, item))));
    g.finish();
}

fn episode_sweep(c: &mut Criterion) {
    let track = bench_track();
    let intr = bench_intrinsics();
    let net_cfg = NetConfig {
        point_widths: vec![3, 16, 32],
        head_widths: vec![32, 16, 1],
        scale: 2.5,
        input_scale: 0.05,
        seed: 11,
    };
    let controller = ModelController {
        label: "bench".into(),
        net: PointNetLite::new(&net_cfg).unwrap(),
        steering: SteeringParams::default(),
    };
    let pipeline = PipelineConfig::new(intr, 128);
    let episodes: Vec<EpisodeConfig> = [(5.0, 0.0), (5.0, 0.5), (5.0, -0.5), (10.0, 0.0)]
        .iter()
        .enumerate()
        .map(|(i, &(s, d))| EpisodeConfig {
            start: (s, d),
            frames: 20,
            speed: 10.0,
            dt: 0.1,
            perturbation: 0.0,
            seed: i as u64,
        })
        .collect();
    let item = |e: &EpisodeConfig| run_episode(&track, &controller, &pipeline, e).unwrap();

    let mut g = c.benchmark_group("episode_sweep");
    g.sample_size(10);
    g.measurement_time(Duration::from_secs(8));
    g.bench_function("parallel", |b| b.iter(|| black_box(exec::map_slice(&episodes, item))));
    g.bench_function("sequential", |b| b.iter(|| black_box(exec::map_slice_seq(&episodes, item))));
    g.finish();
}

criterion_group!(benches, render_batch, trajectory_synthesis, training_batch, episode_sweep);
criterion_main!(benches);
