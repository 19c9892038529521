//! Flat INI-style configuration: `[section]` headers, `key = value` pairs,
//! `#` comments. One file describes the whole experiment; every command
//! reads the sections it needs and snapshots the effective values into its
//! output manifest. Command-line flags override file values, file values
//! override built-in defaults.

use crate::error::CliError;
use cloudshift::augment::AugmentConfig;
use cloudshift::depthcloud::CloudConfig;
use cloudshift::geometry::CameraIntrinsics;
use cloudshift::labeling::{LabelConfig, SteeringParams};
use cloudshift::model::{NetConfig, TrainConfig};
use cloudshift::simulator::EpisodeConfig;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

/// Parsed INI document. Sections and keys iterate in sorted order, so the
/// rendered form is canonical.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Ini {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl Ini {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut ini = Ini::default();
        let mut current: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let bad = |msg: String| CliError::data(format!("config line {}: {msg}", i + 1));
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| bad("unterminated section header".into()))?
                    .trim();
                if name.is_empty() {
                    return Err(bad("empty section name".into()));
                }
                current = Some(name.to_string());
                ini.sections.entry(name.to_string()).or_default();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(bad(format!("expected `key = value`, got `{line}`")));
            };
            let Some(section) = &current else {
                return Err(bad(format!("`{}` appears before any [section]", key.trim())));
            };
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(bad("empty key".into()));
            }
            let prev = ini
                .sections
                .get_mut(section)
                .unwrap()
                .insert(key.clone(), value.trim().to_string());
            if prev.is_some() {
                return Err(bad(format!("duplicate key `{key}` in [{section}]")));
            }
        }
        Ok(ini)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (name, entries) in &self.sections {
            let _ = writeln!(out, "[{name}]");
            for (key, value) in entries {
                let _ = writeln!(out, "{key} = {value}");
            }
            out.push('\n');
        }
        out
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section)?.get(key).map(String::as_str)
    }

    pub fn set(&mut self, section: &str, key: &str, value: impl Into<String>) {
        self.sections
            .entry(section.to_string())
            .or_default()
            .insert(key.to_string(), value.into());
    }

    pub fn sections(&self) -> impl Iterator<Item = (&str, &BTreeMap<String, String>)> {
        self.sections.iter().map(|(n, e)| (n.as_str(), e))
    }

    /// Copy every entry of `other` over this document.
    pub fn merge_from(&mut self, other: &Ini) {
        for (section, entries) in &other.sections {
            for (key, value) in entries {
                self.set(section, key, value.clone());
            }
        }
    }
}

fn join<T: std::fmt::Display>(values: impl IntoIterator<Item = T>) -> String {
    let mut out = String::new();
    for (i, v) in values.into_iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{v}");
    }
    out
}

/// Every recognized key with its built-in default.
pub fn default_config() -> Ini {
    let mut ini = Ini::default();
    let cam = ("camera", [("width", "256"), ("height", "80"), ("hfov_deg", "90")]);
    for (k, v) in cam.1 {
        ini.set(cam.0, k, v);
    }

    ini.set("world", "spacing", "1");
    ini.set("world", "sigma_translation", "0");
    ini.set("world", "sigma_rotation", "0");

    let cloud = CloudConfig::default();
    ini.set("cloud", "max_distance", cloud.max_distance.to_string());
    ini.set("cloud", "target_points", cloud.target_points.to_string());
    ini.set("cloud", "dilation_radius", cloud.dilation_radius.to_string());
    ini.set("cloud", "scale_factor", cloud.scale_factor.to_string());
    ini.set("cloud", "canny_low", "0.08");
    ini.set("cloud", "canny_high", "0.2");
    ini.set("cloud", "edge_filter", "true");

    let aug = AugmentConfig::default();
    ini.set("augment", "offsets", join(aug.offsets.iter()));
    ini.set("augment", "max_lookback", aug.max_lookback.to_string());
    ini.set("augment", "counteract", aug.counteract.to_string());
    ini.set("augment", "align", aug.align.to_string());
    ini.set("augment", "max_distance", aug.max_distance.to_string());
    ini.set("augment", "coverage_stop", aug.coverage_stop.to_string());

    let labels = LabelConfig::default();
    ini.set("labels", "lookahead", labels.lookahead.to_string());
    ini.set("labels", "clamp", labels.clamp.to_string());
    ini.set("labels", "n_points", labels.n_points.to_string());

    let net = NetConfig::default();
    ini.set("net", "point_widths", join(net.point_widths.iter()));
    ini.set("net", "head_widths", join(net.head_widths.iter()));
    ini.set("net", "scale", net.scale.to_string());
    ini.set("net", "input_scale", net.input_scale.to_string());

    let train = TrainConfig::default();
    ini.set("train", "learning_rate", train.learning_rate.to_string());
    ini.set("train", "lr_decay", train.lr_decay.to_string());
    ini.set("train", "batch_size", train.batch_size.to_string());
    ini.set("train", "epochs", train.epochs.to_string());
    ini.set("train", "momentum", train.momentum.to_string());
    ini.set("train", "validation_fraction", train.validation_fraction.to_string());

    ini.set("eval", "alpha", "0.2");
    ini.set("eval", "starts", "5:0,5:0.9,5:-0.9,5:1.3,5:-1.3");
    ini.set("eval", "levels", "0");
    ini.set("eval", "frames", "135");
    ini.set("eval", "speed", "10");
    ini.set("eval", "dt", "0.1");

    ini.set("seeds", "world", "1");
    ini.set("seeds", "dataset", "2");
    ini.set("seeds", "train", "3");
    ini.set("seeds", "eval", "4");
    ini
}

/// The effective configuration: defaults, overlaid with the user's file.
#[derive(Debug, Clone)]
pub struct Config {
    pub ini: Ini,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let mut ini = default_config();
        if let Some(path) = path {
            let text = crate::error::read_input_text(path)?;
            let user = Ini::parse(&text)
                .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
            let known = default_config();
            for (section, entries) in user.sections() {
                for key in entries.keys() {
                    if known.get(section, key).is_none() {
                        return Err(CliError::data(format!(
                            "{}: unknown config key [{section}] {key}",
                            path.display()
                        )));
                    }
                }
            }
            ini.merge_from(&user);
        }
        Ok(Self { ini })
    }

    fn raw(&self, section: &str, key: &str) -> Result<&str, CliError> {
        self.ini
            .get(section, key)
            .ok_or_else(|| CliError::internal(format!("missing default for [{section}] {key}")))
    }

    pub fn f64(&self, section: &str, key: &str) -> Result<f64, CliError> {
        let raw = self.raw(section, key)?;
        raw.parse()
            .map_err(|_| CliError::data(format!("[{section}] {key}: `{raw}` is not a number")))
    }

    pub fn u64(&self, section: &str, key: &str) -> Result<u64, CliError> {
        let raw = self.raw(section, key)?;
        raw.parse()
            .map_err(|_| CliError::data(format!("[{section}] {key}: `{raw}` is not an integer")))
    }

    pub fn usize(&self, section: &str, key: &str) -> Result<usize, CliError> {
        let raw = self.raw(section, key)?;
        raw.parse()
            .map_err(|_| CliError::data(format!("[{section}] {key}: `{raw}` is not an integer")))
    }

    pub fn u32(&self, section: &str, key: &str) -> Result<u32, CliError> {
        let raw = self.raw(section, key)?;
        raw.parse()
            .map_err(|_| CliError::data(format!("[{section}] {key}: `{raw}` is not an integer")))
    }

    pub fn bool(&self, section: &str, key: &str) -> Result<bool, CliError> {
        let raw = self.raw(section, key)?;
        match raw {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(CliError::data(format!(
                "[{section}] {key}: expected true or false, got `{raw}`"
            ))),
        }
    }

    pub fn f64_list(&self, section: &str, key: &str) -> Result<Vec<f64>, CliError> {
        let raw = self.raw(section, key)?;
        if raw.is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|tok| {
                tok.trim().parse().map_err(|_| {
                    CliError::data(format!("[{section}] {key}: `{tok}` is not a number"))
                })
            })
            .collect()
    }

    pub fn usize_list(&self, section: &str, key: &str) -> Result<Vec<usize>, CliError> {
        let raw = self.raw(section, key)?;
        if raw.is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|tok| {
                tok.trim().parse().map_err(|_| {
                    CliError::data(format!("[{section}] {key}: `{tok}` is not an integer"))
                })
            })
            .collect()
    }

    /// `s:d` pairs, comma separated: start arc length and lateral offset.
    pub fn starts(&self) -> Result<Vec<(f64, f64)>, CliError> {
        let raw = self.raw("eval", "starts")?;
        raw.split(',')
            .map(|tok| {
                let bad =
                    || CliError::data(format!("[eval] starts: `{tok}` is not an `s:d` pair"));
                let (s, d) = tok.trim().split_once(':').ok_or_else(bad)?;
                Ok((s.parse().map_err(|_| bad())?, d.parse().map_err(|_| bad())?))
            })
            .collect()
    }

    pub fn seed(&self, which: &str, flag: Option<u64>) -> Result<u64, CliError> {
        match flag {
            Some(s) => Ok(s),
            None => self.u64("seeds", which),
        }
    }

    pub fn intrinsics(&self) -> Result<CameraIntrinsics, CliError> {
        let width = self.u32("camera", "width")?;
        let height = self.u32("camera", "height")?;
        let hfov = self.f64("camera", "hfov_deg")?.to_radians();
        CameraIntrinsics::from_horizontal_fov(width, height, hfov)
            .map_err(|e| CliError::data(format!("[camera]: {e}")))
    }

    pub fn cloud_config(&self) -> Result<CloudConfig, CliError> {
        Ok(CloudConfig {
            max_distance: self.f64("cloud", "max_distance")?,
            target_points: self.usize("cloud", "target_points")?,
            dilation_radius: self.u32("cloud", "dilation_radius")?,
            scale_factor: self.f64("cloud", "scale_factor")?,
        })
    }

    pub fn augment_config(&self) -> Result<AugmentConfig, CliError> {
        Ok(AugmentConfig {
            offsets: self.f64_list("augment", "offsets")?,
            max_lookback: self.usize("augment", "max_lookback")?,
            counteract: self.bool("augment", "counteract")?,
            align: self.bool("augment", "align")?,
            max_distance: self.f64("augment", "max_distance")?,
            coverage_stop: self.f64("augment", "coverage_stop")?,
        })
    }

    pub fn label_config(&self, seed: u64) -> Result<LabelConfig, CliError> {
        Ok(LabelConfig {
            lookahead: self.f64("labels", "lookahead")?,
            clamp: self.f64("labels", "clamp")?,
            n_points: self.usize("labels", "n_points")?,
            seed,
        })
    }

    pub fn net_config(&self, seed: u64) -> Result<NetConfig, CliError> {
        Ok(NetConfig {
            point_widths: self.usize_list("net", "point_widths")?,
            head_widths: self.usize_list("net", "head_widths")?,
            scale: self.f64("net", "scale")?,
            input_scale: self.f64("net", "input_scale")?,
            seed,
        })
    }

    pub fn train_config(&self, seed: u64) -> Result<TrainConfig, CliError> {
        Ok(TrainConfig {
            learning_rate: self.f64("train", "learning_rate")?,
            lr_decay: self.f64("train", "lr_decay")?,
            batch_size: self.usize("train", "batch_size")?,
            epochs: self.usize("train", "epochs")?,
            momentum: self.f64("train", "momentum")?,
            seed,
            validation_fraction: self.f64("train", "validation_fraction")?,
        })
    }

    pub fn steering(&self) -> Result<SteeringParams, CliError> {
        Ok(SteeringParams {
            alpha: self.f64("eval", "alpha")?,
            lookahead: self.f64("labels", "lookahead")?,
        })
    }

    pub fn episode_config(&self, seed: u64) -> Result<EpisodeConfig, CliError> {
        Ok(EpisodeConfig {
            start: (0.0, 0.0),
            frames: self.usize("eval", "frames")?,
            speed: self.f64("eval", "speed")?,
            dt: self.f64("eval", "dt")?,
            perturbation: 0.0,
            seed,
        })
    }
}
