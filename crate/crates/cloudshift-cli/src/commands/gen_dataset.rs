//! `gen-dataset`: load a rendered sequence, build per-frame point clouds,
//! synthesize the laterally shifted trajectories, and write them as PLY
//! files plus label and bookkeeping CSVs.

use crate::config::Config;
use crate::error::CliError;
use crate::manifest::{ManifestBuilder, MANIFEST_NAME};
use crate::CommonArgs;
use cloudshift::augment::{generate_trajectories, FrameRecord, Trajectory};
use cloudshift::depthcloud::{frame_cloud, sample_fixed, unproject};
use cloudshift::geometry::{lateral_shift, FrameId, RigidTransform};
use cloudshift::io::dmap::read_depth_map;
use cloudshift::io::ply_bytes;
use cloudshift::io::pose::read_tum;
use cloudshift::io::PlyFormat;
use cloudshift::labeling::build_dataset;
use cloudshift::seeding;
use std::fmt::Write as _;
use std::path::PathBuf;

#[derive(clap::Args, Debug)]
pub struct GenDatasetArgs {
    /// Sequence directory produced by gen-world.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Output dataset directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Keep only the reference trajectory (single-trajectory ablation).
    #[arg(long)]
    pub single: bool,
    /// Shift and crop without aligning preceding frames (shift-only ablation).
    #[arg(long)]
    pub no_align: bool,
    /// Disable the counteraction filter on aligned frames.
    #[arg(long)]
    pub no_counteract: bool,
    /// Keep full unprojected clouds instead of edge-filtered ones.
    #[arg(long)]
    pub no_edge_filter: bool,
    /// Override the distance cap in meters (both cloud and augmentation).
    #[arg(long)]
    pub max_distance: Option<f64>,
    #[command(flatten)]
    pub common: CommonArgs,
}

pub fn run(args: &GenDatasetArgs) -> Result<(), CliError> {
    let mut cfg = Config::load(args.common.config.as_deref())?;
    if args.single {
        cfg.ini.set("augment", "offsets", "");
    }
    if args.no_align {
        cfg.ini.set("augment", "align", "false");
    }
    if args.no_counteract {
        cfg.ini.set("augment", "counteract", "false");
    }
    if args.no_edge_filter {
        cfg.ini.set("cloud", "edge_filter", "false");
    }
    if let Some(d) = args.max_distance {
        cfg.ini.set("cloud", "max_distance", d.to_string());
        cfg.ini.set("augment", "max_distance", d.to_string());
    }
    let seed = cfg.seed("dataset", args.common.seed)?;

    let poses_path = args.input.join("poses.txt");
    let poses = read_tum(&poses_path).map_err(|e| {
        CliError::data(format!("{}: {e} (run gen-world first?)", poses_path.display()))
    })?;
    if poses.is_empty() {
        return Err(CliError::data(format!("{}: no poses", poses_path.display())));
    }

    let intr = cfg.intrinsics()?;
    let ccfg = cfg.cloud_config()?;
    let canny_low = cfg.f64("cloud", "canny_low")?;
    let canny_high = cfg.f64("cloud", "canny_high")?;
    let edge_filter = cfg.bool("cloud", "edge_filter")?;
    let acfg = cfg.augment_config()?;
    let lcfg = cfg.label_config(seed)?;

    let mut records = Vec::with_capacity(poses.len());
    for (i, (timestamp, pose)) in poses.iter().enumerate() {
        let depth = read_depth_map(&args.input.join(super::depth_name(i)))
            .map_err(|e| CliError::data(format!("frame {i}: {e}")))?;
        let frame_id = FrameId::Camera(i as u64);
        let cloud = if edge_filter {
            let intensity = read_depth_map(&args.input.join(super::intensity_name(i)))
                .map_err(|e| CliError::data(format!("frame {i}: {e}")))?;
            frame_cloud(&intr, &depth, &intensity, &ccfg, canny_low, canny_high, frame_id)
                .map_err(|e| CliError::data(format!("frame {i}: {e}")))?
        } else {
            unproject(&intr, &depth, ccfg.scale_factor, frame_id)
                .map_err(|e| CliError::data(format!("frame {i}: {e}")))?
                .cloud()
                .limit_distance(ccfg.max_distance)
        };
        // Cap per-frame clouds at the configured budget so the unfiltered
        // ablation stays tractable; edge-filtered clouds rarely exceed it.
        let cloud = if cloud.len() > ccfg.target_points {
            sample_fixed(&cloud, ccfg.target_points, seeding::mix(seed, &[0x7265_6373, i as u64]))
                .map_err(|e| CliError::internal(format!("frame {i}: {e}")))?
        } else {
            cloud
        };
        let record = FrameRecord::new(i as u64, pose.clone(), cloud, *timestamp)
            .map_err(|e| CliError::internal(format!("frame {i}: {e}")))?;
        records.push(record);
    }

    let trajectories = generate_trajectories(&records, &intr, &acfg);
    let (samples, counts) = build_dataset(&trajectories, &lcfg)
        .map_err(|e| CliError::data(format!("labeling failed: {e}")))?;

    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::internal(format!("{}: {e}", args.out.display())))?;
    let mut mb = ManifestBuilder::new(&args.out, "gen-dataset", &cfg);
    mb.seed("dataset", seed);
    let seq_manifest = args.input.join(MANIFEST_NAME);
    if seq_manifest.is_file() {
        mb.input("sequence_manifest", &seq_manifest)?;
    } else {
        mb.input("poses", &poses_path)?;
    }

    for t in &trajectories {
        let dir = super::offset_dir(t.offset);
        for frame in &t.frames {
            let rel = format!("{dir}/{}", super::ply_name(frame.record.id));
            mb.write_output(&rel, &ply_bytes(&frame.record.cloud, PlyFormat::BinaryLittleEndian))?;
        }
        mb.write_output(&format!("{dir}/frames.csv"), frames_csv(t, &records).as_bytes())?;
    }

    let mut labels = String::from("trajectory_offset,frame_id,future_frame_id,delta_x,ply_path\n");
    for s in &samples {
        let _ = writeln!(
            labels,
            "{},{},{},{},{}/{}",
            s.source.0,
            s.source.1,
            s.future_id,
            s.delta_x,
            super::offset_dir(s.source.0),
            super::ply_name(s.source.1)
        );
    }
    mb.write_output("labels.csv", labels.as_bytes())?;

    let mut stats = String::from("offset,samples,skipped,clamped\n");
    for c in &counts {
        let _ = writeln!(stats, "{},{},{},{}", c.offset, c.samples, c.skipped, c.clamped);
    }
    mb.write_output("counts.csv", stats.as_bytes())?;
    mb.finish()?;

    let dropped: usize = trajectories.iter().map(|t| t.dropped).sum();
    let clamped: usize = counts.iter().map(|c| c.clamped).sum();
    println!(
        "gen-dataset: {} trajectories, {} samples ({} dropped frames, {} clamped labels) -> {}",
        trajectories.len(),
        samples.len(),
        dropped,
        clamped,
        args.out.display()
    );
    Ok(())
}

/// Per-trajectory bookkeeping: every base frame id with the synthesized
/// pose (rotation and translation as the 12 row-major values of [R|t]) and
/// whether the frame was dropped for coming out empty.
fn frames_csv(t: &Trajectory, records: &[FrameRecord]) -> String {
    let mut out = String::from(
        "frame_id,offset,r00,r01,r02,tx,r10,r11,r12,ty,r20,r21,r22,tz,dropped\n",
    );
    let shift = lateral_shift(t.offset);
    let mut present: Vec<Option<&RigidTransform>> = vec![None; records.len()];
    for frame in &t.frames {
        present[frame.record.id as usize] = Some(&frame.record.pose);
    }
    for record in records {
        let synthesized;
        let (pose, dropped) = match present[record.id as usize] {
            Some(pose) => (pose, false),
            None => {
                synthesized = record.pose.compose(&shift);
                (&synthesized, true)
            }
        };
        let r = pose.rotation();
        let tr = pose.translation();
        let _ = write!(out, "{},{}", record.id, t.offset);
        for row in 0..3 {
            let _ = write!(out, ",{},{},{},{}", r[(row, 0)], r[(row, 1)], r[(row, 2)], tr[row]);
        }
        let _ = writeln!(out, ",{}", dropped as u8);
    }
    out
}
