//! Point-cloud regression network with manual backpropagation.
//!
//! Architecture: a shared per-point MLP lifts every point to a feature
//! vector, an elementwise max over points pools them into one global
//! feature, and a small head MLP regresses the lateral offset, squashed to
//! `(-a, a)` by `a * tanh`. All hidden layers use rectified-linear units;
//! there are no normalization layers, so training is bit-deterministic.
//!
//! Gradients are exact analytic derivatives of the squared error; the
//! max-pool routes each feature's gradient to the lowest-index point that
//! attains the maximum.

use crate::exec;
use crate::labeling::LabeledSample;
use crate::seeding;
use nalgebra::Vector3;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::Path;
use thiserror::Error;

const CHECKPOINT_MAGIC: &[u8; 4] = b"PNLT";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("input cloud contains a non-finite coordinate")]
    NonFiniteInput,
    #[error("input cloud is empty")]
    EmptyCloud,
    #[error("training dataset is empty (or fully consumed by the validation split)")]
    EmptyDataset,
    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Network shape and initialization parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct NetConfig {
    /// Per-point MLP widths, first entry must be 3.
    pub point_widths: Vec<usize>,
    /// Head MLP widths: first entry must match the last point width, last
    /// entry must be 1.
    pub head_widths: Vec<usize>,
    /// Output scale `a`: predictions lie in `(-a, a)` meters.
    pub scale: f64,
    /// Multiplier applied to input coordinates; roughly 1 / scene extent
    /// keeps early activations near unit magnitude.
    pub input_scale: f64,
    pub seed: u64,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            point_widths: vec![3, 64, 128, 256],
            head_widths: vec![256, 128, 32, 1],
            scale: 2.5,
            input_scale: 0.05,
            seed: 1,
        }
    }
}

impl NetConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidConfig(msg));
        if self.point_widths.len() < 2 || self.head_widths.len() < 2 {
            return bad("point and head MLPs need at least one layer each".into());
        }
        if self.point_widths[0] != 3 {
            return bad(format!("point MLP must take 3 inputs, got {}", self.point_widths[0]));
        }
        if self.point_widths.last() != self.head_widths.first() {
            return bad(format!(
                "pooled width {} does not feed head input {}",
                self.point_widths.last().unwrap(),
                self.head_widths.first().unwrap()
            ));
        }
        if *self.head_widths.last().unwrap() != 1 {
            return bad(format!("head must end in 1 output, got {}", self.head_widths.last().unwrap()));
        }
        if self.point_widths.iter().chain(&self.head_widths).any(|&w| w == 0) {
            return bad("zero-width layer".into());
        }
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return bad(format!("output scale must be positive, got {}", self.scale));
        }
        if !(self.input_scale > 0.0) || !self.input_scale.is_finite() {
            return bad(format!("input scale must be positive, got {}", self.input_scale));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Layer {
    input: usize,
    output: usize,
    /// Row-major `output x input`.
    w: Vec<f64>,
    b: Vec<f64>,
}

impl Layer {
    fn init(input: usize, output: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = 1.0 / (input as f64).sqrt();
        let w = (0..input * output).map(|_| rng.gen_range(-bound..bound)).collect();
        let b = (0..output).map(|_| rng.gen_range(-bound..bound)).collect();
        Self { input, output, w, b }
    }

    fn affine(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.output {
            let row = &self.w[o * self.input..(o + 1) * self.input];
            let mut acc = self.b[o];
            for (wi, xi) in row.iter().zip(x) {
                acc += wi * xi;
            }
            out.push(acc);
        }
    }
}

/// The regression network. Construct with [`PointNetLite::new`], train with
/// [`train`], persist with [`save_checkpoint`] / [`load_checkpoint`].
#[derive(Debug, Clone, PartialEq)]
pub struct PointNetLite {
    point_layers: Vec<Layer>,
    head_layers: Vec<Layer>,
    scale: f64,
    input_scale: f64,
}

impl PointNetLite {
    pub fn new(cfg: &NetConfig) -> Result<Self, ModelError> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let point_layers = cfg
            .point_widths
            .windows(2)
            .map(|p| Layer::init(p[0], p[1], &mut rng))
            .collect();
        let head_layers =
            cfg.head_widths.windows(2).map(|p| Layer::init(p[0], p[1], &mut rng)).collect();
        Ok(Self { point_layers, head_layers, scale: cfg.scale, input_scale: cfg.input_scale })
    }

    /// Output bound `a` in meters.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn num_params(&self) -> usize {
        self.layers().map(|l| l.w.len() + l.b.len()).sum()
    }

    fn layers(&self) -> impl Iterator<Item = &Layer> {
        self.point_layers.iter().chain(self.head_layers.iter())
    }

    /// Flat parameter access in canonical order (point layers then head
    /// layers; weights row-major, then biases). Used by the
    /// finite-difference oracle.
    pub fn param(&self, mut idx: usize) -> f64 {
        for l in self.layers() {
            if idx < l.w.len() {
                return l.w[idx];
            }
            idx -= l.w.len();
            if idx < l.b.len() {
                return l.b[idx];
            }
            idx -= l.b.len();
        }
        panic!("parameter index out of range");
    }

    pub fn set_param(&mut self, mut idx: usize, value: f64) {
        for l in self.point_layers.iter_mut().chain(self.head_layers.iter_mut()) {
            if idx < l.w.len() {
                l.w[idx] = value;
                return;
            }
            idx -= l.w.len();
            if idx < l.b.len() {
                l.b[idx] = value;
                return;
            }
            idx -= l.b.len();
        }
        panic!("parameter index out of range");
    }

    fn trace(&self, points: &[Vector3<f64>]) -> Result<Trace, ModelError> {
        if points.is_empty() {
            return Err(ModelError::EmptyCloud);
        }
        if points.iter().any(|p| !p.iter().all(|v| v.is_finite())) {
            return Err(ModelError::NonFiniteInput);
        }
        let feat = self.point_layers.last().unwrap().output;
        let mut pooled = vec![f64::NEG_INFINITY; feat];
        let mut argmax = vec![0usize; feat];
        let mut point_pre: Vec<Vec<Vec<f64>>> = Vec::with_capacity(points.len());
        let mut inputs: Vec<[f64; 3]> = Vec::with_capacity(points.len());
        let mut act: Vec<f64> = Vec::new();
        let mut next: Vec<f64> = Vec::new();
        for (pi, p) in points.iter().enumerate() {
            let x = [p.x * self.input_scale, p.y * self.input_scale, p.z * self.input_scale];
            inputs.push(x);
            act.clear();
            act.extend_from_slice(&x);
            let mut pres = Vec::with_capacity(self.point_layers.len());
            for layer in &self.point_layers {
                layer.affine(&act, &mut next);
                pres.push(next.clone());
                act.clear();
                act.extend(next.iter().map(|v| v.max(0.0)));
            }
            for (f, v) in act.iter().enumerate() {
                if *v > pooled[f] {
                    pooled[f] = *v;
                    argmax[f] = pi;
                }
            }
            point_pre.push(pres);
        }
        let mut head_pre = Vec::with_capacity(self.head_layers.len());
        act.clear();
        act.extend_from_slice(&pooled);
        for (li, layer) in self.head_layers.iter().enumerate() {
            layer.affine(&act, &mut next);
            head_pre.push(next.clone());
            act.clear();
            if li + 1 < self.head_layers.len() {
                act.extend(next.iter().map(|v| v.max(0.0)));
            } else {
                act.extend_from_slice(&next);
            }
        }
        let z = act[0];
        let pred = self.scale * z.tanh();
        Ok(Trace { inputs, point_pre, pooled, argmax, head_pre, z, pred })
    }

    /// Predicted lateral offset in meters, strictly inside `(-a, a)`.
    pub fn forward(&self, points: &[Vector3<f64>]) -> Result<f64, ModelError> {
        Ok(self.trace(points)?.pred)
    }

    /// Squared-error loss and its exact gradient for one sample.
    pub fn backward(
        &self,
        points: &[Vector3<f64>],
        label: f64,
    ) -> Result<(f64, Gradients), ModelError> {
        let trace = self.trace(points)?;
        let mut grads = Gradients::zeros_like(self);
        let loss = (trace.pred - label).powi(2);
        let dpred = 2.0 * (trace.pred - label);
        let th = trace.z.tanh();
        let mut delta = vec![dpred * self.scale * (1.0 - th * th)];

        // Head layers, last to first. ReLU applies between head layers only.
        let mut dpooled = vec![0.0; self.point_layers.last().unwrap().output];
        for (li, layer) in self.head_layers.iter().enumerate().rev() {
            let input_act: Vec<f64> = if li == 0 {
                trace.pooled.clone()
            } else {
                trace.head_pre[li - 1].iter().map(|v| v.max(0.0)).collect()
            };
            let g = &mut grads.head[li];
            for o in 0..layer.output {
                g.b[o] += delta[o];
                for i in 0..layer.input {
                    g.w[o * layer.input + i] += delta[o] * input_act[i];
                }
            }
            let mut prev = vec![0.0; layer.input];
            for o in 0..layer.output {
                let d = delta[o];
                for i in 0..layer.input {
                    prev[i] += d * layer.w[o * layer.input + i];
                }
            }
            if li == 0 {
                dpooled = prev;
            } else {
                for (v, pre) in prev.iter_mut().zip(&trace.head_pre[li - 1]) {
                    if *pre <= 0.0 {
                        *v = 0.0;
                    }
                }
                delta = prev;
            }
        }

        // Max-pool routing: each feature's gradient reaches exactly one
        // point. Group by point so each one is backpropagated once.
        let feat = dpooled.len();
        let mut per_point: Vec<Vec<f64>> = Vec::new();
        let mut point_of: Vec<usize> = Vec::new();
        for f in 0..feat {
            if dpooled[f] == 0.0 {
                continue;
            }
            let p = trace.argmax[f];
            let slot = match point_of.iter().position(|&q| q == p) {
                Some(s) => s,
                None => {
                    point_of.push(p);
                    per_point.push(vec![0.0; feat]);
                    per_point.len() - 1
                }
            };
            per_point[slot][f] += dpooled[f];
        }

        for (slot, &pi) in point_of.iter().enumerate() {
            let mut delta = per_point[slot].clone();
            for (li, layer) in self.point_layers.iter().enumerate().rev() {
                for (v, pre) in delta.iter_mut().zip(&trace.point_pre[pi][li]) {
                    if *pre <= 0.0 {
                        *v = 0.0;
                    }
                }
                let input_act: Vec<f64> = if li == 0 {
                    trace.inputs[pi].to_vec()
                } else {
                    trace.point_pre[pi][li - 1].iter().map(|v| v.max(0.0)).collect()
                };
                let g = &mut grads.point[li];
                for o in 0..layer.output {
                    let d = delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    g.b[o] += d;
                    for i in 0..layer.input {
                        g.w[o * layer.input + i] += d * input_act[i];
                    }
                }
                if li > 0 {
                    let mut prev = vec![0.0; layer.input];
                    for o in 0..layer.output {
                        let d = delta[o];
                        if d == 0.0 {
                            continue;
                        }
                        for i in 0..layer.input {
                            prev[i] += d * layer.w[o * layer.input + i];
                        }
                    }
                    delta = prev;
                }
            }
        }
        Ok((loss, grads))
    }

    fn apply_momentum_step(&mut self, velocity: &mut Gradients, grads: &Gradients, lr: f64, momentum: f64) {
        let layers = self.point_layers.iter_mut().chain(self.head_layers.iter_mut());
        let vels = velocity.point.iter_mut().chain(velocity.head.iter_mut());
        let gs = grads.point.iter().chain(grads.head.iter());
        for ((layer, vel), g) in layers.zip(vels).zip(gs) {
            for ((w, v), gw) in layer.w.iter_mut().zip(&mut vel.w).zip(&g.w) {
                *v = momentum * *v - lr * gw;
                *w += *v;
            }
            for ((b, v), gb) in layer.b.iter_mut().zip(&mut vel.b).zip(&g.b) {
                *v = momentum * *v - lr * gb;
                *b += *v;
            }
        }
    }
}

struct Trace {
    inputs: Vec<[f64; 3]>,
    point_pre: Vec<Vec<Vec<f64>>>,
    pooled: Vec<f64>,
    argmax: Vec<usize>,
    head_pre: Vec<Vec<f64>>,
    z: f64,
    pred: f64,
}

/// Parameter gradients, same shape as the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    point: Vec<LayerGrad>,
    head: Vec<LayerGrad>,
}

#[derive(Debug, Clone, PartialEq)]
struct LayerGrad {
    w: Vec<f64>,
    b: Vec<f64>,
}

impl Gradients {
    fn zeros_like(net: &PointNetLite) -> Self {
        let zero = |ls: &[Layer]| {
            ls.iter()
                .map(|l| LayerGrad { w: vec![0.0; l.w.len()], b: vec![0.0; l.b.len()] })
                .collect()
        };
        Self { point: zero(&net.point_layers), head: zero(&net.head_layers) }
    }

    fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.point.iter_mut().chain(&mut self.head).zip(other.point.iter().chain(&other.head))
        {
            for (x, y) in a.w.iter_mut().zip(&b.w) {
                *x += y;
            }
            for (x, y) in a.b.iter_mut().zip(&b.b) {
                *x += y;
            }
        }
    }

    fn scale(&mut self, s: f64) {
        for g in self.point.iter_mut().chain(&mut self.head) {
            for x in &mut g.w {
                *x *= s;
            }
            for x in &mut g.b {
                *x *= s;
            }
        }
    }

    /// Flat view in the same canonical order as [`PointNetLite::param`].
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for g in self.point.iter().chain(&self.head) {
            out.extend_from_slice(&g.w);
            out.extend_from_slice(&g.b);
        }
        out
    }
}

/// Squared error for one prediction.
pub fn mse(pred: f64, label: f64) -> f64 {
    (pred - label).powi(2)
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Per-epoch multiplicative learning-rate decay, in (0, 1]. 1 = none.
    pub lr_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub momentum: f64,
    pub seed: u64,
    /// Fraction of samples held out for validation, in [0, 1).
    pub validation_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.02,
            lr_decay: 1.0,
            batch_size: 32,
            epochs: 30,
            momentum: 0.9,
            seed: 0,
            validation_fraction: 0.15,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidConfig(msg));
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return bad(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return bad(format!("lr decay must be in (0, 1], got {}", self.lr_decay));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return bad("batch size and epochs must be positive".into());
        }
        if !(0.0..1.0).contains(&self.momentum) && self.momentum != 0.0 {
            return bad(format!("momentum must be in [0, 1), got {}", self.momentum));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return bad(format!("validation fraction must be in [0, 1), got {}", self.validation_fraction));
        }
        Ok(())
    }
}

/// Per-epoch loss statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_mse: f64,
    /// Absent when the validation split is empty.
    pub val_mse: Option<f64>,
}

/// Minibatch SGD with momentum. Deterministic for a fixed seed: the split,
/// the shuffles, and the gradient reduction order are all fixed. Per-sample
/// gradients inside a batch may be computed in parallel; they are summed in
/// index order.
pub fn train(
    net: &mut PointNetLite,
    data: &[LabeledSample],
    cfg: &TrainConfig,
) -> Result<Vec<EpochStats>, ModelError> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    let mut rng = seeding::stream(cfg.seed, &[0x504e_4c54]);
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut rng);
    let val_len = (data.len() as f64 * cfg.validation_fraction).floor() as usize;
    let (val_idx, train_idx) = order.split_at(val_len);
    if train_idx.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    let mut train_idx = train_idx.to_vec();

    let mut velocity = Gradients::zeros_like(net);
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut lr = cfg.learning_rate;
    for epoch in 0..cfg.epochs {
        train_idx.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in train_idx.chunks(cfg.batch_size) {
            let results: Vec<Result<(f64, Gradients), ModelError>> =
                exec::map_slice(batch, |&i| net.backward(data[i].cloud.points(), data[i].delta_x));
            let mut grads = Gradients::zeros_like(net);
            for r in results {
                let (loss, g) = r?;
                loss_sum += loss;
                grads.add_assign(&g);
            }
            grads.scale(1.0 / batch.len() as f64);
            net.apply_momentum_step(&mut velocity, &grads, lr, cfg.momentum);
        }
        lr *= cfg.lr_decay;
        let train_mse = loss_sum / train_idx.len() as f64;
        let val_mse = if val_idx.is_empty() {
            None
        } else {
            let losses: Vec<Result<f64, ModelError>> = exec::map_slice(val_idx, |&i| {
                Ok(mse(net.forward(data[i].cloud.points())?, data[i].delta_x))
            });
            let mut total = 0.0;
            for l in losses {
                total += l?;
            }
            Some(total / val_idx.len() as f64)
        };
        history.push(EpochStats { epoch, train_mse, val_mse });
    }
    Ok(history)
}

fn push_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn push_f64(buf: &mut Vec<u8>, v: f64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelError> {
        if self.pos + n > self.buf.len() {
            return Err(ModelError::BadCheckpoint("truncated file".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, ModelError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, ModelError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Serialize the network: magic, version, scales, layer dims, then all
/// parameters as little-endian f64 in canonical order.
pub fn checkpoint_bytes(net: &PointNetLite) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    push_u32(&mut buf, CHECKPOINT_VERSION);
    push_f64(&mut buf, net.input_scale);
    push_f64(&mut buf, net.scale);
    for layers in [&net.point_layers, &net.head_layers] {
        push_u32(&mut buf, layers.len() as u32);
        for l in layers.iter() {
            push_u32(&mut buf, l.input as u32);
            push_u32(&mut buf, l.output as u32);
        }
    }
    for l in net.layers() {
        for v in l.w.iter().chain(&l.b) {
            push_f64(&mut buf, *v);
        }
    }
    buf
}

pub fn checkpoint_from_bytes(bytes: &[u8]) -> Result<PointNetLite, ModelError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4)? != CHECKPOINT_MAGIC {
        return Err(ModelError::BadCheckpoint("bad magic".into()));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(ModelError::BadCheckpoint(format!(
            "unsupported version {version}, expected {CHECKPOINT_VERSION}"
        )));
    }
    let input_scale = r.f64()?;
    let scale = r.f64()?;
    if !(scale > 0.0) || !(input_scale > 0.0) {
        return Err(ModelError::BadCheckpoint("non-positive scale".into()));
    }
    let mut groups: [Vec<(usize, usize)>; 2] = [Vec::new(), Vec::new()];
    for dims in groups.iter_mut() {
        let count = r.u32()? as usize;
        if count == 0 {
            return Err(ModelError::BadCheckpoint("empty layer group".into()));
        }
        for _ in 0..count {
            let input = r.u32()? as usize;
            let output = r.u32()? as usize;
            if input == 0 || output == 0 {
                return Err(ModelError::BadCheckpoint("zero layer dimension".into()));
            }
            dims.push((input, output));
        }
    }
    if groups[0][0].0 != 3 {
        return Err(ModelError::BadCheckpoint("point MLP must take 3 inputs".into()));
    }
    if groups[0].last().unwrap().1 != groups[1][0].0 {
        return Err(ModelError::BadCheckpoint("pooled width does not feed the head".into()));
    }
    if groups[1].last().unwrap().1 != 1 {
        return Err(ModelError::BadCheckpoint("head must end in 1 output".into()));
    }
    for dims in &groups {
        for pair in dims.windows(2) {
            if pair[0].1 != pair[1].0 {
                return Err(ModelError::BadCheckpoint("layer dimensions do not chain".into()));
            }
        }
    }
    let read_layers = |dims: &[(usize, usize)]| -> Result<Vec<Layer>, ModelError> {
        dims.iter()
            .map(|&(input, output)| {
                Ok(Layer {
                    input,
                    output,
                    w: vec![0.0; input * output],
                    b: vec![0.0; output],
                })
            })
            .collect()
    };
    let mut point_layers = read_layers(&groups[0])?;
    let mut head_layers = read_layers(&groups[1])?;
    for l in point_layers.iter_mut().chain(head_layers.iter_mut()) {
        for v in l.w.iter_mut().chain(l.b.iter_mut()) {
            *v = r.f64()?;
            if !v.is_finite() {
                return Err(ModelError::BadCheckpoint("non-finite parameter".into()));
            }
        }
    }
    if r.pos != bytes.len() {
        return Err(ModelError::BadCheckpoint("trailing bytes".into()));
    }
    Ok(PointNetLite { point_layers, head_layers, scale, input_scale })
}

pub fn save_checkpoint(net: &PointNetLite, path: &Path) -> Result<(), ModelError> {
    std::fs::write(path, checkpoint_bytes(net))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<PointNetLite, ModelError> {
    checkpoint_from_bytes(&std::fs::read(path)?)
}
