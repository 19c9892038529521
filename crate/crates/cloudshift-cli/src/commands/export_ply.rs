//! `export-ply`: convert one depth map (optionally edge-filtered against an
//! intensity image) into a PLY point cloud.

use crate::config::Config;
use crate::error::CliError;
use crate::CommonArgs;
use cloudshift::depthcloud::{frame_cloud, unproject};
use cloudshift::geometry::FrameId;
use cloudshift::io::dmap::read_depth_map;
use cloudshift::io::{write_ply, PlyFormat};
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PlyFormatArg {
    Ascii,
    Binary,
}

#[derive(clap::Args, Debug)]
pub struct ExportPlyArgs {
    /// Input depth map (DMAP).
    #[arg(long)]
    pub depth: PathBuf,
    /// Intensity image (DMAP container). Enables edge filtering.
    #[arg(long)]
    pub intensity: Option<PathBuf>,
    /// Output PLY path.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "binary")]
    pub format: PlyFormatArg,
    /// Frame id to tag the cloud with.
    #[arg(long, default_value = "0")]
    pub frame: u64,
    #[command(flatten)]
    pub common: CommonArgs,
}

pub fn run(args: &ExportPlyArgs) -> Result<(), CliError> {
    let cfg = Config::load(args.common.config.as_deref())?;
    let intr = cfg.intrinsics()?;
    let ccfg = cfg.cloud_config()?;
    let frame_id = FrameId::Camera(args.frame);

    let depth = read_depth_map(&args.depth)
        .map_err(|e| CliError::data(format!("{}: {e}", args.depth.display())))?;
    let cloud = match &args.intensity {
        Some(path) => {
            let intensity = read_depth_map(path)
                .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
            let low = cfg.f64("cloud", "canny_low")?;
            let high = cfg.f64("cloud", "canny_high")?;
            frame_cloud(&intr, &depth, &intensity, &ccfg, low, high, frame_id)
                .map_err(|e| CliError::data(format!("{}: {e}", args.depth.display())))?
        }
        None => unproject(&intr, &depth, ccfg.scale_factor, frame_id)
            .map_err(|e| CliError::data(format!("{}: {e}", args.depth.display())))?
            .cloud()
            .limit_distance(ccfg.max_distance),
    };

    let format = match args.format {
        PlyFormatArg::Ascii => PlyFormat::Ascii,
        PlyFormatArg::Binary => PlyFormat::BinaryLittleEndian,
    };
    write_ply(&args.out, &cloud, format)
        .map_err(|e| CliError::internal(format!("{}: {e}", args.out.display())))?;
    println!("export-ply: {} points -> {}", cloud.len(), args.out.display());
    Ok(())
}
