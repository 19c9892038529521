//! `gen-world`: compile a track spec, sample reference poses along the
//! centerline, render depth/intensity frames, and write the sequence
//! (optionally with visual-odometry style pose noise on the recorded poses).

use crate::config::Config;
use crate::error::{read_input_text, CliError};
use crate::manifest::ManifestBuilder;
use crate::CommonArgs;
use cloudshift::io::tum_string;
use cloudshift::io::dmap::depth_map_bytes;
use cloudshift::synthworld::{perturb, render_sequence, sample_reference, PoseNoiseModel, Track, TrackSpec};
use std::path::PathBuf;

#[derive(clap::Args, Debug)]
pub struct GenWorldArgs {
    /// Track description file.
    #[arg(long)]
    pub spec: PathBuf,
    /// Output sequence directory.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
}

pub fn run(args: &GenWorldArgs) -> Result<(), CliError> {
    let cfg = Config::load(args.common.config.as_deref())?;
    let seed = cfg.seed("world", args.common.seed)?;

    let spec_text = read_input_text(&args.spec)?;
    let spec = TrackSpec::parse(&spec_text)
        .map_err(|e| CliError::data(format!("{}: {e}", args.spec.display())))?;
    let track = Track::compile(&spec)
        .map_err(|e| CliError::data(format!("{}: {e}", args.spec.display())))?;

    let intr = cfg.intrinsics()?;
    let spacing = cfg.f64("world", "spacing")?;
    if !(spacing > 0.0) {
        return Err(CliError::data("[world] spacing must be positive"));
    }
    let poses_gt = sample_reference(&track, spacing);
    if poses_gt.len() < 2 {
        return Err(CliError::data(format!(
            "track is too short: {} m yields {} frame(s) at {spacing} m spacing",
            track.total_length(),
            poses_gt.len()
        )));
    }
    let dt = spacing / cfg.f64("eval", "speed")?;
    let frames = render_sequence(&track, &poses_gt, &intr, dt)
        .map_err(|e| CliError::internal(format!("rendering failed: {e}")))?;

    let noise = PoseNoiseModel {
        sigma_translation: cfg.f64("world", "sigma_translation")?,
        sigma_rotation: cfg.f64("world", "sigma_rotation")?,
        seed,
    };
    let recorded = perturb(&poses_gt, &noise);

    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::internal(format!("{}: {e}", args.out.display())))?;
    let mut mb = ManifestBuilder::new(&args.out, "gen-world", &cfg);
    mb.seed("world", seed);
    mb.input("spec", &args.spec)?;
    for (i, frame) in frames.iter().enumerate() {
        mb.write_output(&super::depth_name(i), &depth_map_bytes(&frame.depth))?;
        mb.write_output(&super::intensity_name(i), &depth_map_bytes(&frame.intensity))?;
    }
    let stamped = |poses: &[cloudshift::geometry::RigidTransform]| {
        poses.iter().enumerate().map(|(i, p)| (i as f64 * dt, p.clone())).collect::<Vec<_>>()
    };
    mb.write_output("poses_gt.txt", tum_string(&stamped(&poses_gt)).as_bytes())?;
    mb.write_output("poses.txt", tum_string(&stamped(&recorded)).as_bytes())?;
    mb.write_output("track.trk", spec_text.as_bytes())?;
    mb.finish()?;

    println!(
        "gen-world: {} frames over {:.1} m -> {}",
        frames.len(),
        track.total_length(),
        args.out.display()
    );
    Ok(())
}
