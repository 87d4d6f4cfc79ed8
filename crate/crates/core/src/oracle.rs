//! Feed-forward classifier that predicts whether each job is early.
//!
//! Two hidden layers of 80 rectified units feed a two-way softmax whose
//! second component is the early score. Training minimises mean
//! cross-entropy with Adam on shuffled mini-batches.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{featurize, FeatureMatrix, FeatureMode};
use crate::problem::{Instance, Label, LabelVector, ScoreVector};

pub const HIDDEN_WIDTH: usize = 80;
pub const OUTPUTS: usize = 2;
pub const MODEL_FORMAT: &str = "tardy-mlp/1";

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;
/// Rows per forward pass during evaluation.
const EVAL_CHUNK: usize = 4096;

/// Feature rows with binary targets (1 = early).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    labels: Vec<u8>,
}

impl Dataset {
    pub fn new(features: Array2<f64>, labels: Vec<u8>) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::Validation(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::Validation(format!("label {bad} is not 0 or 1")));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite feature value".into()));
        }
        Ok(Self { features, labels })
    }

    pub fn from_rows(width: usize, rows: Vec<f64>, labels: Vec<u8>) -> Result<Self> {
        if width == 0 || rows.len() != width * labels.len() {
            return Err(Error::Validation(format!(
                "{} values do not form {} rows of width {width}",
                rows.len(),
                labels.len()
            )));
        }
        let features = Array2::from_shape_vec((labels.len(), width), rows)
            .map_err(|e| Error::Internal(e.to_string()))?;
        Self::new(features, labels)
    }

    /// Rows of `matrix` labelled from `labels`.
    pub fn from_instance(matrix: &FeatureMatrix, labels: &LabelVector) -> Result<Self> {
        if matrix.rows() != labels.len() {
            return Err(Error::Validation("label count differs from row count".into()));
        }
        let y = labels.as_slice().iter().map(|l| l.as_class() as u8).collect();
        Self::from_rows(matrix.width(), matrix.as_slice().to_vec(), y)
    }

    pub fn append(&mut self, other: &Dataset) -> Result<()> {
        if self.width() != other.width() && !self.is_empty() {
            return Err(Error::Validation("dataset widths differ".into()));
        }
        if self.is_empty() {
            *self = other.clone();
            return Ok(());
        }
        self.features
            .append(Axis(0), other.features.view())
            .map_err(|e| Error::Internal(e.to_string()))?;
        self.labels.extend_from_slice(&other.labels);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn width(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(0), rows),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
        }
    }

    /// Shuffled split into (train, validation) with `validation_fraction` of
    /// the rows, rounded down, in the second part.
    pub fn split(&self, validation_fraction: f64, seed: u64) -> (Dataset, Dataset) {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let cut = self.len() - (self.len() as f64 * validation_fraction) as usize;
        (self.subset(&idx[..cut]), self.subset(&idx[cut..]))
    }
}

impl Default for Dataset {
    fn default() -> Self {
        Self {
            features: Array2::zeros((0, 0)),
            labels: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub validation_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 256,
            epochs: 20,
            seed: 0,
            validation_fraction: 0.2,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Parameter(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Parameter("batch size must be positive".into()));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::Parameter(format!(
                "validation fraction {} outside (0, 1)",
                self.validation_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub validation_loss: f64,
    pub validation_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_rows: usize,
    pub validation_rows: usize,
    pub epochs: Vec<EpochMetrics>,
    /// Validation metrics of the returned model.
    pub validation_loss: f64,
    pub validation_accuracy: f64,
}

/// Loss, accuracy and row count over a dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: f64,
    pub rows: usize,
}

/// Gradients of the mean loss, one entry per layer.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    dims: Vec<usize>,
    /// `weights[l]` has shape `dims[l] x dims[l + 1]`.
    weights: Vec<Array2<f64>>,
    biases: Vec<Array1<f64>>,
    seed: u64,
    feature_mode: FeatureMode,
    config: Option<TrainConfig>,
    report: Option<TrainReport>,
}

impl MlpModel {
    /// He-initialised network with hidden layers of [`HIDDEN_WIDTH`] units.
    pub fn new(feature_mode: FeatureMode, seed: u64) -> Self {
        Self::with_dims(
            vec![feature_mode.width(), HIDDEN_WIDTH, HIDDEN_WIDTH, OUTPUTS],
            feature_mode,
            seed,
        )
    }

    pub fn with_dims(dims: Vec<usize>, feature_mode: FeatureMode, seed: u64) -> Self {
        assert!(dims.len() >= 2 && dims.iter().all(|&d| d > 0), "bad layer dims");
        assert_eq!(*dims.last().unwrap(), OUTPUTS, "two output units");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for pair in dims.windows(2) {
            let normal = Normal::new(0.0, (2.0 / pair[0] as f64).sqrt()).expect("finite std");
            weights.push(Array2::from_shape_fn((pair[0], pair[1]), |_| normal.sample(&mut rng)));
            biases.push(Array1::zeros(pair[1]));
        }
        Self {
            dims,
            weights,
            biases,
            seed,
            feature_mode,
            config: None,
            report: None,
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_width(&self) -> usize {
        self.dims[0]
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn feature_mode(&self) -> FeatureMode {
        self.feature_mode
    }

    pub fn train_config(&self) -> Option<&TrainConfig> {
        self.config.as_ref()
    }

    pub fn train_report(&self) -> Option<&TrainReport> {
        self.report.as_ref()
    }

    pub fn weights(&self) -> &[Array2<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Array1<f64>] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [Array2<f64>] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [Array1<f64>] {
        &mut self.biases
    }

    /// Pre-activations of every layer; the last entry holds the logits.
    fn forward_all(&self, x: ArrayView2<'_, f64>) -> Vec<Array2<f64>> {
        let mut outs: Vec<Array2<f64>> = Vec::with_capacity(self.weights.len());
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = if l == 0 {
                x.dot(w)
            } else {
                outs[l - 1].mapv(relu).dot(w)
            };
            z += b;
            outs.push(z);
        }
        outs
    }

    /// Output logits, one row per input row.
    pub fn logits(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        self.forward_all(x).pop().expect("at least one layer")
    }

    /// Early-class softmax component for each row.
    pub fn early_probabilities(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        let mut out = Vec::with_capacity(x.nrows());
        let mut start = 0;
        while start < x.nrows() {
            let end = (start + EVAL_CHUNK).min(x.nrows());
            let logits = self.logits(x.slice(s![start..end, ..]));
            out.extend(logits.rows().into_iter().map(|r| early_score(r[0], r[1])));
            start = end;
        }
        out
    }

    /// Mean cross-entropy and its gradients over a batch.
    pub fn loss_and_gradients(&self, x: ArrayView2<'_, f64>, y: &[u8]) -> (f64, Gradients) {
        let (loss, _, grads) = self.backward(x, y);
        (loss, grads)
    }

    /// Mean cross-entropy over a batch.
    pub fn loss(&self, x: ArrayView2<'_, f64>, y: &[u8]) -> f64 {
        let logits = self.logits(x);
        let total: f64 = logits
            .rows()
            .into_iter()
            .zip(y)
            .map(|(r, &t)| cross_entropy(r[0], r[1], t))
            .sum();
        total / y.len() as f64
    }

    /// Returns (mean loss, correct count, gradients).
    fn backward(&self, x: ArrayView2<'_, f64>, y: &[u8]) -> (f64, usize, Gradients) {
        let batch = y.len() as f64;
        let outs = self.forward_all(x);
        let logits = outs.last().expect("at least one layer");
        let mut loss = 0.0;
        let mut correct = 0;
        let mut delta = Array2::zeros(logits.raw_dim());
        for (i, (row, &t)) in logits.rows().into_iter().zip(y).enumerate() {
            loss += cross_entropy(row[0], row[1], t);
            let p1 = early_score(row[0], row[1]);
            if (p1 >= 0.5) == (t == 1) {
                correct += 1;
            }
            delta[[i, 0]] = (1.0 - p1 - if t == 0 { 1.0 } else { 0.0 }) / batch;
            delta[[i, 1]] = (p1 - if t == 1 { 1.0 } else { 0.0 }) / batch;
        }
        let layers = self.weights.len();
        let mut gw = vec![Array2::zeros((0, 0)); layers];
        let mut gb = vec![Array1::zeros(0); layers];
        for l in (0..layers).rev() {
            let input = if l == 0 {
                x.to_owned()
            } else {
                outs[l - 1].mapv(relu)
            };
            gw[l] = input.t().dot(&delta);
            gb[l] = delta.sum_axis(Axis(0));
            if l > 0 {
                let mut back = delta.dot(&self.weights[l].t());
                back.zip_mut_with(&outs[l - 1], |g, &z| {
                    if z <= 0.0 {
                        *g = 0.0;
                    }
                });
                delta = back;
            }
        }
        (
            loss / batch,
            correct,
            Gradients {
                weights: gw,
                biases: gb,
            },
        )
    }

    pub fn evaluate(&self, data: &Dataset) -> Evaluation {
        if data.is_empty() {
            return Evaluation {
                loss: 0.0,
                accuracy: 0.0,
                rows: 0,
            };
        }
        let mut loss = 0.0;
        let mut correct = 0;
        let mut start = 0;
        while start < data.len() {
            let end = (start + EVAL_CHUNK).min(data.len());
            let logits = self.logits(data.features.slice(s![start..end, ..]));
            for (row, &t) in logits.rows().into_iter().zip(&data.labels[start..end]) {
                loss += cross_entropy(row[0], row[1], t);
                if (early_score(row[0], row[1]) >= 0.5) == (t == 1) {
                    correct += 1;
                }
            }
            start = end;
        }
        Evaluation {
            loss: loss / data.len() as f64,
            accuracy: correct as f64 / data.len() as f64,
            rows: data.len(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format: MODEL_FORMAT.to_string(),
            dims: self.dims.clone(),
            feature_mode: self.feature_mode.to_string(),
            weights: self.weights.iter().map(|w| w.iter().copied().collect()).collect(),
            biases: self.biases.iter().map(|b| b.to_vec()).collect(),
            seed: self.seed,
            config: self.config,
            report: self.report.clone(),
        };
        serde_json::to_string(&file).map_err(|e| Error::Internal(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::Validation(format!("model file: {e}")))?;
        if file.format != MODEL_FORMAT {
            return Err(Error::Validation(format!(
                "unsupported model format {:?}",
                file.format
            )));
        }
        let feature_mode: FeatureMode = file.feature_mode.parse()?;
        let dims = file.dims;
        if dims.len() < 2 || dims.iter().any(|&d| d == 0) || dims[dims.len() - 1] != OUTPUTS {
            return Err(Error::Validation(format!("bad layer dims {dims:?}")));
        }
        if dims[0] != feature_mode.width() {
            return Err(Error::Validation(format!(
                "input width {} does not match {feature_mode} features",
                dims[0]
            )));
        }
        if file.weights.len() != dims.len() - 1 || file.biases.len() != dims.len() - 1 {
            return Err(Error::Validation("layer count does not match dims".into()));
        }
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for (l, (w, b)) in file.weights.into_iter().zip(file.biases).enumerate() {
            let (fan_in, fan_out) = (dims[l], dims[l + 1]);
            if w.len() != fan_in * fan_out || b.len() != fan_out {
                return Err(Error::Validation(format!("layer {l} has wrong size")));
            }
            if w.iter().chain(&b).any(|v| !v.is_finite()) {
                return Err(Error::Validation(format!("layer {l} has non-finite values")));
            }
            weights.push(
                Array2::from_shape_vec((fan_in, fan_out), w)
                    .map_err(|e| Error::Internal(e.to_string()))?,
            );
            biases.push(Array1::from(b));
        }
        Ok(Self {
            dims,
            weights,
            biases,
            seed: file.seed,
            feature_mode,
            config: file.config,
            report: file.report,
        })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format: String,
    dims: Vec<usize>,
    feature_mode: String,
    /// Row-major `fan_in x fan_out` per layer.
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    seed: u64,
    config: Option<TrainConfig>,
    report: Option<TrainReport>,
}

fn relu(x: f64) -> f64 {
    x.max(0.0)
}

/// Softmax component of the second logit.
fn early_score(z0: f64, z1: f64) -> f64 {
    1.0 / (1.0 + (z0 - z1).exp())
}

fn cross_entropy(z0: f64, z1: f64, target: u8) -> f64 {
    let (own, other) = if target == 1 { (z1, z0) } else { (z0, z1) };
    // -log softmax = log(1 + exp(other - own)), computed stably
    let d = other - own;
    if d > 0.0 {
        d + (-d).exp().ln_1p()
    } else {
        d.exp().ln_1p()
    }
}

struct Adam {
    step: i32,
    m_w: Vec<Array2<f64>>,
    v_w: Vec<Array2<f64>>,
    m_b: Vec<Array1<f64>>,
    v_b: Vec<Array1<f64>>,
}

impl Adam {
    fn new(model: &MlpModel) -> Self {
        Self {
            step: 0,
            m_w: model.weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
            v_w: model.weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
            m_b: model.biases.iter().map(|b| Array1::zeros(b.raw_dim())).collect(),
            v_b: model.biases.iter().map(|b| Array1::zeros(b.raw_dim())).collect(),
        }
    }

    fn apply(&mut self, model: &mut MlpModel, grads: &Gradients, lr: f64) {
        self.step += 1;
        let c1 = 1.0 - ADAM_BETA1.powi(self.step);
        let c2 = 1.0 - ADAM_BETA2.powi(self.step);
        let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
            *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
            *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
        };
        for l in 0..model.weights.len() {
            ndarray::Zip::from(&mut model.weights[l])
                .and(&mut self.m_w[l])
                .and(&mut self.v_w[l])
                .and(&grads.weights[l])
                .for_each(|p, m, v, &g| update(p, m, v, g));
            ndarray::Zip::from(&mut model.biases[l])
                .and(&mut self.m_b[l])
                .and(&mut self.v_b[l])
                .and(&grads.biases[l])
                .for_each(|p, m, v, &g| update(p, m, v, g));
        }
    }
}

/// Trains a fresh model on `data` after a seeded train/validation split.
pub fn train(
    data: &Dataset,
    feature_mode: FeatureMode,
    config: &TrainConfig,
) -> Result<(MlpModel, TrainReport)> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::Training("empty dataset".into()));
    }
    if data.width() != feature_mode.width() {
        return Err(Error::Training(format!(
            "data width {} does not match {feature_mode} features ({})",
            data.width(),
            feature_mode.width()
        )));
    }
    let early = data.labels.iter().filter(|&&l| l == 1).count();
    if early == 0 || early == data.len() {
        return Err(Error::Training("dataset has a single class".into()));
    }
    let (train_set, validation) = data.split(config.validation_fraction, config.seed);
    if train_set.is_empty() || validation.is_empty() {
        return Err(Error::Training("too few rows to split".into()));
    }

    let mut model = MlpModel::new(feature_mode, config.seed);
    let mut adam = Adam::new(&model);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_0f_ba7c);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut epochs = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0;
        for batch in order.chunks(config.batch_size) {
            let x = train_set.features.select(Axis(0), batch);
            let y: Vec<u8> = batch.iter().map(|&r| train_set.labels[r]).collect();
            let (loss, hits, grads) = model.backward(x.view(), &y);
            loss_sum += loss * batch.len() as f64;
            correct += hits;
            adam.apply(&mut model, &grads, config.learning_rate);
        }
        if model.weights.iter().any(|w| w.iter().any(|v| !v.is_finite())) {
            return Err(Error::Training(format!("weights diverged in epoch {epoch}")));
        }
        let val = model.evaluate(&validation);
        epochs.push(EpochMetrics {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            train_accuracy: correct as f64 / train_set.len() as f64,
            validation_loss: val.loss,
            validation_accuracy: val.accuracy,
        });
    }
    let val = model.evaluate(&validation);
    let report = TrainReport {
        train_rows: train_set.len(),
        validation_rows: validation.len(),
        epochs,
        validation_loss: val.loss,
        validation_accuracy: val.accuracy,
    };
    model.config = Some(*config);
    model.report = Some(report.clone());
    Ok((model, report))
}

/// Early score of every row.
pub fn predict_scores(model: &MlpModel, features: &FeatureMatrix) -> Result<ScoreVector> {
    if features.width() != model.input_width() {
        return Err(Error::Validation(format!(
            "feature width {} does not match model input {}",
            features.width(),
            model.input_width()
        )));
    }
    let x = ArrayView2::from_shape((features.rows(), features.width()), features.as_slice())
        .map_err(|e| Error::Internal(e.to_string()))?;
    ScoreVector::new(model.early_probabilities(x))
}

/// Labels every job early iff its score is at least `alpha`.
pub fn classify(
    instance: &Instance,
    model: &MlpModel,
    alpha: f64,
) -> Result<(LabelVector, ScoreVector)> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Parameter(format!("alpha {alpha} outside [0, 1]")));
    }
    let features = featurize(instance, model.feature_mode());
    let scores = predict_scores(model, &features)?;
    Ok((threshold(&scores, alpha), scores))
}

pub fn threshold(scores: &ScoreVector, alpha: f64) -> LabelVector {
    scores
        .as_slice()
        .iter()
        .map(|&s| if s >= alpha { Label::Early } else { Label::Tardy })
        .collect()
}
