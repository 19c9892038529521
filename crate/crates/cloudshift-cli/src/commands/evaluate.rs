//! `evaluate`: drive trained checkpoints (and optionally the ground-truth
//! oracle) closed-loop over a set of tracks, at one or more perturbation
//! levels, and write the report CSVs plus bird's-eye-view SVGs.

use crate::config::Config;
use crate::error::{read_input_text, CliError};
use crate::manifest::ManifestBuilder;
use crate::CommonArgs;
use cloudshift::model::load_checkpoint;
use cloudshift::seeding;
use cloudshift::simulator::{
    bev_svg, run_episode, sweep, Controller, EpisodeConfig, ModelController, OracleController,
    PipelineConfig, SweepReport,
};
use cloudshift::synthworld::{Track, TrackSpec};
use std::fmt::Write as _;
use std::path::PathBuf;

#[derive(clap::Args, Debug)]
pub struct EvaluateArgs {
    /// Named checkpoint, `name=path`; repeatable.
    #[arg(long = "model", value_name = "NAME=PATH")]
    pub models: Vec<String>,
    /// Also run the ground-truth oracle controller.
    #[arg(long)]
    pub oracle: bool,
    /// Track spec file; repeatable, at least one.
    #[arg(long = "track", required = true)]
    pub tracks: Vec<PathBuf>,
    /// Perturbation levels, overriding [eval] levels.
    #[arg(long, value_name = "L1,L2,...")]
    pub perturb: Option<String>,
    /// Output report directory.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
}

pub fn run(args: &EvaluateArgs) -> Result<(), CliError> {
    let mut cfg = Config::load(args.common.config.as_deref())?;
    if let Some(levels) = &args.perturb {
        cfg.ini.set("eval", "levels", levels.clone());
    }
    let seed = cfg.seed("eval", args.common.seed)?;

    if args.models.is_empty() && !args.oracle {
        return Err(CliError::usage("nothing to evaluate: pass --model and/or --oracle"));
    }

    let steering = cfg.steering()?;
    let mut controllers: Vec<Box<dyn Controller>> = Vec::new();
    let mut checkpoint_inputs = Vec::new();
    for entry in &args.models {
        let Some((name, path)) = entry.split_once('=') else {
            return Err(CliError::usage(format!("--model `{entry}` is not NAME=PATH")));
        };
        super::check_name("model", name)?;
        let path = PathBuf::from(path);
        let net = load_checkpoint(&path)
            .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        checkpoint_inputs.push((name.to_string(), path));
        controllers.push(Box::new(ModelController {
            label: name.to_string(),
            net,
            steering,
        }));
    }
    if args.oracle {
        controllers.push(Box::new(OracleController { steering }));
    }

    let mut tracks = Vec::new();
    for path in &args.tracks {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        super::check_name("track", &name)?;
        let spec = TrackSpec::parse(&read_input_text(path)?)
            .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        let track = Track::compile(&spec)
            .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        tracks.push((name, track));
    }

    let starts = cfg.starts()?;
    let levels = cfg.f64_list("eval", "levels")?;
    if levels.is_empty() {
        return Err(CliError::data("[eval] levels is empty"));
    }
    let pipeline = PipelineConfig {
        intr: cfg.intrinsics()?,
        cloud: cfg.cloud_config()?,
        canny_low: cfg.f64("cloud", "canny_low")?,
        canny_high: cfg.f64("cloud", "canny_high")?,
        n_points: cfg.usize("labels", "n_points")?,
        edge_filter: cfg.bool("cloud", "edge_filter")?,
    };
    let episode = cfg.episode_config(seed)?;

    let refs: Vec<&dyn Controller> = controllers.iter().map(|c| c.as_ref()).collect();
    let report = sweep(&tracks, &refs, &starts, &levels, &pipeline, &episode, seed)
        .map_err(|e| CliError::data(format!("sweep failed: {e}")))?;

    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::internal(format!("{}: {e}", args.out.display())))?;
    let mut mb = ManifestBuilder::new(&args.out, "evaluate", &cfg);
    mb.seed("eval", seed);
    for (name, path) in &checkpoint_inputs {
        mb.input(&format!("checkpoint_{name}"), path)?;
    }
    for path in &args.tracks {
        let stem = path.file_stem().unwrap_or_default().to_string_lossy();
        mb.input(&format!("track_{stem}"), path)?;
    }

    mb.write_output("report.csv", report.csv().as_bytes())?;
    mb.write_output("table.csv", table_csv(&report, levels[0]).as_bytes())?;
    mb.write_output("curves.csv", curves_csv(&report, &refs, &levels).as_bytes())?;

    for (ci, controller) in refs.iter().enumerate() {
        for (ti, (track_name, track)) in tracks.iter().enumerate() {
            let episode = EpisodeConfig {
                start: starts[0],
                perturbation: levels[0],
                seed: seeding::mix(seed, &[ci as u64, ti as u64, 0, levels[0].to_bits()]),
                ..episode.clone()
            };
            let result = run_episode(track, *controller, &pipeline, &episode)
                .map_err(|e| CliError::data(format!("episode failed: {e}")))?;
            let rel = format!("bev_{}_{track_name}.svg", controller.name());
            mb.write_output(&rel, bev_svg(track, &result).as_bytes())?;
        }
    }
    mb.finish()?;

    print!("{}", table_csv(&report, levels[0]).replace(',', "\t"));
    println!("evaluate: {} episodes -> {}", report.rows.len(), args.out.display());
    Ok(())
}

/// Mean ratio per controller and track at one perturbation level.
fn table_csv(report: &SweepReport, level: f64) -> String {
    let mut out = String::from("controller,track,mean_ratio\n");
    let mut seen: Vec<(String, String)> = Vec::new();
    for row in &report.rows {
        let key = (row.controller.clone(), row.track.clone());
        if seen.contains(&key) {
            continue;
        }
        let ratios: Vec<f64> = report
            .rows
            .iter()
            .filter(|r| {
                r.controller == key.0 && r.track == key.1 && r.perturbation == level
            })
            .map(|r| r.ratio_on_lane)
            .collect();
        let mean = ratios.iter().sum::<f64>() / ratios.len().max(1) as f64;
        let _ = writeln!(out, "{},{},{:.6}", key.0, key.1, mean);
        seen.push(key);
    }
    out
}

/// Mean ratio per controller across all tracks and starts, one row per
/// perturbation level.
fn curves_csv(report: &SweepReport, controllers: &[&dyn Controller], levels: &[f64]) -> String {
    let mut out = String::from("controller,perturbation,mean_ratio\n");
    for controller in controllers {
        for &level in levels {
            if let Some(mean) = report.mean_ratio(controller.name(), level) {
                let _ = writeln!(out, "{},{},{:.6}", controller.name(), level, mean);
            }
        }
    }
    out
}
