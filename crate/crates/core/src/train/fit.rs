use std::fmt::Write as _;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::loss::{batch_loss, reg_penalty, Loss};
use super::schedule::Schedule;
use super::split::{split_dataset, DEFAULT_TRAIN_FRACTION};
use crate::config::ConfigText;
use crate::error::{Error, Result};
use crate::model::{argmax, build_model, head_probabilities, ModelSpec, ModelWeights, Network};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub const DEFAULT_BATCH_SIZE: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub base_lr: f64,
    pub schedule: Schedule,
    pub l1_lambda: f64,
    pub l2_lambda: f64,
    pub seed: u64,
    pub loss: Loss,
}

const TRAIN_KEYS: [&str; 8] = ["batch_size", "epochs", "base_lr", "schedule", "l1_lambda", "l2_lambda", "seed", "loss"];

impl TrainConfig {
    /// Defaults for everything except the two settings without one.
    pub fn new(epochs: usize, base_lr: f64) -> Self {
        Self {
            batch_size: DEFAULT_BATCH_SIZE,
            epochs,
            base_lr,
            schedule: Schedule::Constant,
            l1_lambda: 0.0,
            l2_lambda: 0.0,
            seed: 0,
            loss: Loss::Ce,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be at least 1"));
        }
        if !(self.base_lr.is_finite() && self.base_lr >= 0.0) {
            return Err(Error::config(format!("base_lr must be finite and non-negative, got {}", self.base_lr)));
        }
        for (name, v) in [("l1_lambda", self.l1_lambda), ("l2_lambda", self.l2_lambda)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        self.schedule.validate()
    }

    /// Learning rate at a 0-based global step within a 0-based epoch.
    pub fn lr_at(&self, global_step: u64, epoch: usize) -> f64 {
        self.schedule.rate(self.base_lr, global_step, epoch)
    }

    /// Reads the training keys; `epochs` and `base_lr` are required.
    pub fn from_config(doc: &ConfigText) -> Result<Self> {
        let mut cfg = Self::new(doc.required("epochs")?, doc.required("base_lr")?);
        cfg.batch_size = doc.parsed_or("batch_size", cfg.batch_size)?;
        if let Some(s) = doc.get("schedule") {
            cfg.schedule = s.parse()?;
        }
        cfg.l1_lambda = doc.parsed_or("l1_lambda", 0.0)?;
        cfg.l2_lambda = doc.parsed_or("l2_lambda", 0.0)?;
        cfg.seed = doc.parsed_or("seed", 0)?;
        if let Some(l) = doc.get("loss") {
            cfg.loss = l.parse()?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Like [`from_config`](Self::from_config) but rejects unknown keys.
    pub fn from_config_strict(doc: &ConfigText) -> Result<Self> {
        doc.check_keys(&TRAIN_KEYS)?;
        Self::from_config(doc)
    }

    pub fn to_config(&self) -> ConfigText {
        let mut doc = ConfigText::new();
        doc.set("batch_size", self.batch_size);
        doc.set("epochs", self.epochs);
        doc.set("base_lr", self.base_lr);
        doc.set("schedule", &self.schedule);
        doc.set("l1_lambda", self.l1_lambda);
        doc.set("l2_lambda", self.l2_lambda);
        doc.set("seed", self.seed);
        doc.set("loss", self.loss);
        doc
    }
}

/// Images (N×C×H×W) with one class index per item.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T> {
    pub images: Tensor<T>,
    pub labels: Vec<usize>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(images: Tensor<T>, labels: Vec<usize>) -> Result<Self> {
        if images.shape().n != labels.len() {
            return Err(Error::dim("labels", images.shape().n, labels.len(), "one label per image"));
        }
        Ok(Self { images, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            images: self.images.gather(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

/// One completed epoch. Epochs are numbered from 1. Training loss and
/// accuracy are averaged over the epoch's batches as they were trained;
/// the loss includes the regularization penalty.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Rate used by the epoch's first step.
    pub lr: f64,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: Option<f64>,
    pub val_acc: Option<f64>,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainLog {
    pub records: Vec<EpochRecord>,
}

pub const TRAIN_LOG_HEADER: &str = "epoch,lr,train_loss,train_acc,val_loss,val_acc,wall_ms";

/// Formats with 6 significant digits.
pub fn sig6(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..15).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{v:.5e}")
    }
}

impl TrainLog {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{TRAIN_LOG_HEADER}\n");
        let opt = |v: Option<f64>| v.map(sig6).unwrap_or_default();
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.epoch,
                sig6(r.lr),
                sig6(r.train_loss),
                sig6(r.train_acc),
                opt(r.val_loss),
                opt(r.val_acc),
                sig6(r.wall_ms)
            );
        }
        out
    }

    pub fn last(&self) -> Option<&EpochRecord> {
        self.records.last()
    }
}

/// `w ← w − lr·g` for every trainable parameter.
pub fn sgd_step<T: Scalar>(weights: &mut ModelWeights<T>, grads: &[Tensor<T>], lr: f64) -> Result<()> {
    if grads.len() != weights.params.len() {
        return Err(Error::dim("gradients", weights.params.len(), grads.len(), "one gradient per parameter"));
    }
    let lr = T::lit(lr);
    for (p, g) in weights.params.iter_mut().zip(grads) {
        if g.shape() != p.tensor.shape() {
            return Err(Error::dim("gradient", p.tensor.len(), g.len(), format!("{}: {} vs {}", p.name, g.shape(), p.tensor.shape())));
        }
        if !p.role.trainable() {
            continue;
        }
        for (w, &d) in p.tensor.data_mut().iter_mut().zip(g.data()) {
            *w = *w - lr * d;
        }
    }
    Ok(())
}

/// Inference-mode scores of a model on a dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: f64,
    pub predicted: Vec<usize>,
}

const EVAL_CHUNK: usize = 256;

pub fn evaluate<T: Scalar>(net: &Network, weights: &ModelWeights<T>, data: &Dataset<T>, loss: Loss) -> Result<Evaluation> {
    if data.is_empty() {
        return Err(Error::config("cannot evaluate on an empty dataset"));
    }
    let head = net.spec().head;
    let mut predicted = Vec::with_capacity(data.len());
    let mut total = 0.0;
    let all: Vec<usize> = (0..data.len()).collect();
    for chunk in all.chunks(EVAL_CHUNK) {
        let logits = net.forward(weights, &data.images.gather(chunk))?;
        let labels: Vec<usize> = chunk.iter().map(|&i| data.labels[i]).collect();
        let (l, _) = batch_loss(loss, &logits, &labels)?;
        total += l * chunk.len() as f64;
        for n in 0..chunk.len() {
            predicted.push(argmax(&head_probabilities(head, logits.item(n))));
        }
    }
    let correct = predicted.iter().zip(&data.labels).filter(|(p, y)| p == y).count();
    Ok(Evaluation {
        loss: total / data.len() as f64,
        accuracy: correct as f64 / data.len() as f64,
        predicted,
    })
}

/// Mini-batch SGD. Each epoch reshuffles the training set with a generator
/// seeded from `config.seed`; the final short batch is trained with its
/// gradient averaged over its actual size.
pub fn fit<T: Scalar>(
    spec: &ModelSpec,
    weights: ModelWeights<T>,
    train: &Dataset<T>,
    val: Option<&Dataset<T>>,
    config: &TrainConfig,
) -> Result<(ModelWeights<T>, TrainLog)> {
    fit_with(spec, weights, train, val, config, |_| {})
}

/// [`fit`] with a callback after every epoch.
pub fn fit_with<T: Scalar>(
    spec: &ModelSpec,
    mut weights: ModelWeights<T>,
    train: &Dataset<T>,
    val: Option<&Dataset<T>>,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(ModelWeights<T>, TrainLog)> {
    config.validate()?;
    config.loss.check_head(spec.head)?;
    if train.is_empty() {
        return Err(Error::config("training set is empty"));
    }
    let k = spec.num_classes();
    if let Some(&bad) = train.labels.iter().chain(val.iter().flat_map(|v| &v.labels)).find(|&&y| y >= k) {
        return Err(Error::config(format!("label {bad} outside the {k} classes")));
    }
    let net = Network::new(spec)?;
    net.check_weights(&weights)?;
    let head = spec.head;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut step: u64 = 0;
    let mut log = TrainLog::default();
    for epoch in 0..config.epochs {
        let started = Instant::now();
        order.shuffle(&mut rng);
        let epoch_lr = config.lr_at(step, epoch);
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for (b, batch_idx) in order.chunks(config.batch_size).enumerate() {
            let images = train.images.gather(batch_idx);
            let labels: Vec<usize> = batch_idx.iter().map(|&i| train.labels[i]).collect();
            let (logits, tape) = net.forward_train(&mut weights, &images)?;
            let (data_loss, dlogits) = batch_loss(config.loss, &logits, &labels)?;
            let (penalty, reg_grads) = reg_penalty(&weights, config.l1_lambda, config.l2_lambda);
            let loss = data_loss + penalty;
            let numeric = Error::Numeric { epoch: epoch + 1, batch: b + 1, loss };
            if !loss.is_finite() {
                return Err(numeric);
            }
            let mut grads = net.backward(&weights, &tape, &dlogits)?;
            if !grads.iter().all(Tensor::is_finite) {
                return Err(numeric);
            }
            for (g, r) in grads.iter_mut().zip(&reg_grads) {
                for (a, &b) in g.data_mut().iter_mut().zip(r.data()) {
                    *a = *a + b;
                }
            }
            sgd_step(&mut weights, &grads, config.lr_at(step, epoch))?;
            step += 1;
            loss_sum += loss * labels.len() as f64;
            correct += (0..labels.len()).filter(|&n| argmax(&head_probabilities(head, logits.item(n))) == labels[n]).count();
        }
        let (val_loss, val_acc) = match val {
            Some(v) if !v.is_empty() => {
                let e = evaluate(&net, &weights, v, config.loss)?;
                (Some(e.loss), Some(e.accuracy))
            }
            _ => (None, None),
        };
        let record = EpochRecord {
            epoch: epoch + 1,
            lr: epoch_lr,
            train_loss: loss_sum / train.len() as f64,
            train_acc: correct as f64 / train.len() as f64,
            val_loss,
            val_acc,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        };
        on_epoch(&record);
        log.records.push(record);
    }
    Ok((weights, log))
}

/// Hyper-parameter values to cross. Cells enumerate in declaration order
/// with `base_lr` varying slowest; an empty list keeps the template value.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Grid {
    pub base_lr: Vec<f64>,
    pub l1_lambda: Vec<f64>,
    pub l2_lambda: Vec<f64>,
    pub batch_size: Vec<usize>,
}

impl Grid {
    pub fn cells(&self, template: &TrainConfig) -> Vec<TrainConfig> {
        fn or<T: Copy>(v: &[T], d: T) -> Vec<T> {
            if v.is_empty() {
                vec![d]
            } else {
                v.to_vec()
            }
        }
        let mut out = Vec::new();
        for &lr in &or(&self.base_lr, template.base_lr) {
            for &l1 in &or(&self.l1_lambda, template.l1_lambda) {
                for &l2 in &or(&self.l2_lambda, template.l2_lambda) {
                    for &bs in &or(&self.batch_size, template.batch_size) {
                        out.push(TrainConfig {
                            base_lr: lr,
                            l1_lambda: l1,
                            l2_lambda: l2,
                            batch_size: bs,
                            ..template.clone()
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridResult {
    pub best_index: usize,
    pub best: TrainConfig,
    /// Every cell with its validation accuracy, in grid order.
    pub cells: Vec<(TrainConfig, f64)>,
}

/// Trains one model per grid cell on the 80% split of `data` (seeded by
/// the template seed) and scores it on the remaining 20%. The best cell
/// has the highest validation accuracy; ties go to the earliest cell.
pub fn grid_search<T: Scalar>(spec: &ModelSpec, data: &Dataset<T>, grid: &Grid, template: &TrainConfig) -> Result<GridResult> {
    let plan = split_dataset(data.len(), DEFAULT_TRAIN_FRACTION, template.seed)?;
    if plan.val.is_empty() || plan.train.is_empty() {
        return Err(Error::config(format!("dataset of {} items is too small to split", data.len())));
    }
    let (train, val) = (data.subset(&plan.train), data.subset(&plan.val));
    let net = Network::new(spec)?;
    let configs = grid.cells(template);
    let scores = configs
        .par_iter()
        .map(|cfg| {
            let init = build_model::<T>(spec, cfg.seed)?;
            let (w, _) = fit(spec, init, &train, None, cfg)?;
            Ok(evaluate(&net, &w, &val, cfg.loss)?.accuracy)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut best_index = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best_index] {
            best_index = i;
        }
    }
    Ok(GridResult {
        best_index,
        best: configs[best_index].clone(),
        cells: configs.into_iter().zip(scores).collect(),
    })
}
