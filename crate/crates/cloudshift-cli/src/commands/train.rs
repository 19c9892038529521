//! `train`: load the labeled dataset, sample each cloud down to the fixed
//! model input size, run the optimizer, and write the checkpoint plus the
//! per-epoch loss history.

use crate::config::Config;
use crate::error::CliError;
use crate::manifest::{ManifestBuilder, MANIFEST_NAME};
use crate::CommonArgs;
use cloudshift::depthcloud::sample_fixed;
use cloudshift::geometry::FrameId;
use cloudshift::io::read_ply;
use cloudshift::labeling::LabeledSample;
use cloudshift::model::{checkpoint_bytes, train, PointNetLite};
use cloudshift::seeding;
use std::fmt::Write as _;
use std::path::PathBuf;

#[derive(clap::Args, Debug)]
pub struct TrainArgs {
    /// Dataset directory produced by gen-dataset.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Output directory for checkpoint and loss history.
    #[arg(long)]
    pub out: PathBuf,
    /// Override [train] epochs from the config.
    #[arg(long)]
    pub epochs: Option<usize>,
    #[command(flatten)]
    pub common: CommonArgs,
}

struct LabelRow {
    offset: f64,
    frame_id: u64,
    future_id: u64,
    delta_x: f64,
    ply_path: String,
}

fn parse_labels(text: &str) -> Result<Vec<LabelRow>, CliError> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header != "trajectory_offset,frame_id,future_frame_id,delta_x,ply_path" {
        return Err(CliError::data(format!("labels.csv: unexpected header `{header}`")));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let bad = |msg: String| CliError::data(format!("labels.csv line {}: {msg}", i + 2));
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(bad(format!("expected 5 fields, got {}", fields.len())));
        }
        rows.push(LabelRow {
            offset: fields[0].parse().map_err(|e| bad(format!("offset: {e}")))?,
            frame_id: fields[1].parse().map_err(|e| bad(format!("frame_id: {e}")))?,
            future_id: fields[2].parse().map_err(|e| bad(format!("future_frame_id: {e}")))?,
            delta_x: fields[3].parse().map_err(|e| bad(format!("delta_x: {e}")))?,
            ply_path: fields[4].to_string(),
        });
    }
    Ok(rows)
}

pub fn run(args: &TrainArgs) -> Result<(), CliError> {
    let mut cfg = Config::load(args.common.config.as_deref())?;
    if let Some(epochs) = args.epochs {
        cfg.ini.set("train", "epochs", epochs.to_string());
    }
    let seed = cfg.seed("train", args.common.seed)?;

    let labels_path = args.input.join("labels.csv");
    let rows = parse_labels(&crate::error::read_input_text(&labels_path)?)?;
    if rows.is_empty() {
        return Err(CliError::data(format!("{}: dataset is empty", labels_path.display())));
    }

    let n_points = cfg.usize("labels", "n_points")?;
    let mut data = Vec::with_capacity(rows.len());
    for (idx, row) in rows.iter().enumerate() {
        let path = args.input.join(&row.ply_path);
        let cloud = read_ply(&path, FrameId::Camera(row.frame_id))
            .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        let cloud = sample_fixed(&cloud, n_points, seeding::mix(seed, &[0x7361_6d70, idx as u64]))
            .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        data.push(LabeledSample {
            cloud,
            delta_x: row.delta_x,
            source: (row.offset, row.frame_id),
            future_id: row.future_id,
        });
    }

    let mut net = PointNetLite::new(&cfg.net_config(seed)?)
        .map_err(|e| CliError::data(format!("[net]: {e}")))?;
    let tcfg = cfg.train_config(seed)?;
    let stats = train(&mut net, &data, &tcfg)
        .map_err(|e| CliError::data(format!("training failed: {e}")))?;

    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::internal(format!("{}: {e}", args.out.display())))?;
    let mut mb = ManifestBuilder::new(&args.out, "train", &cfg);
    mb.seed("train", seed);
    let dataset_manifest = args.input.join(MANIFEST_NAME);
    if dataset_manifest.is_file() {
        mb.input("dataset_manifest", &dataset_manifest)?;
    } else {
        mb.input("labels", &labels_path)?;
    }
    mb.write_output("checkpoint.pnlt", &checkpoint_bytes(&net))?;

    let mut history = String::from("epoch,train_mse,val_mse\n");
    for s in &stats {
        let val = s.val_mse.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(history, "{},{},{val}", s.epoch, s.train_mse);
    }
    mb.write_output("loss_history.csv", history.as_bytes())?;
    mb.finish()?;

    let last = stats.last().expect("at least one epoch");
    match last.val_mse {
        Some(v) => println!(
            "train: {} samples, {} epochs, final train mse {:.6}, val mse {v:.6} -> {}",
            data.len(),
            stats.len(),
            last.train_mse,
            args.out.display()
        ),
        None => println!(
            "train: {} samples, {} epochs, final train mse {:.6} -> {}",
            data.len(),
            stats.len(),
            last.train_mse,
            args.out.display()
        ),
    }
    Ok(())
}
