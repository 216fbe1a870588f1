//! Regression network mapping (POS, ODR, POF) features of an observed state to
//! its ideal probability. Baseline training learns a backend's general noise
//! pattern; fine-tuning continues from a baseline on one circuit's data.
//!
//! Training is plain mini-batch gradient descent on mean absolute error,
//! single-threaded and fully determined by the configured seed.

mod network;

pub use network::{Gradients, Network};

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datagen::TrainingRow;
use crate::features::FeatureVector;
use crate::rng::{derive_seed, stream_rng};

pub const MODEL_FORMAT: &str = "qnt-model/1";
pub const DEFAULT_HIDDEN: [usize; 2] = [64, 32];
/// Fewest rows accepted by [`train_baseline`].
pub const MIN_TRAINING_ROWS: usize = 20;
/// Most distinct test inputs a tuning corpus may draw from.
pub const MAX_TUNE_INPUTS: usize = 4;

#[derive(Debug, Error)]
pub enum MlpError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("need at least {need} rows, got {got}")]
    TooFewRows { need: usize, got: usize },
    #[error("training diverged at epoch {0} (non-finite loss)")]
    DivergenceDetected(usize),
    #[error("length mismatch: {0} predictions vs {1} targets")]
    LengthMismatch(usize, usize),
    #[error("fine-tuning requires a BASELINE model, got {0:?}")]
    NotBaseline(ModelKind),
    #[error("tuning rows span {got} distinct inputs, at most {max} allowed")]
    TooManyTuneInputs { got: usize, max: usize },
    #[error("invalid train config: {0}")]
    InvalidConfig(String),
    #[error("invalid model file: {0}")]
    InvalidModel(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LrSchedule {
    Constant,
    /// Learning rate ramps linearly `min → max → min` over `period` optimizer steps.
    TriangularCycle { min: f64, max: f64, period: usize },
}

impl LrSchedule {
    pub fn rate(&self, base: f64, step: usize) -> f64 {
        match *self {
            LrSchedule::Constant => base,
            LrSchedule::TriangularCycle { min, max, period } => {
                let period = period.max(2);
                let phase = (step % period) as f64 / period as f64;
                let tri = 1.0 - (2.0 * phase - 1.0).abs();
                min + (max - min) * tri
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub lr_schedule: LrSchedule,
    pub split_ratio: f64,
    pub seed: u64,
    pub fine_tune_lr_scale: f64,
    pub hidden_layers: Vec<usize>,
}

impl TrainConfig {
    /// Baseline defaults: 200 epochs, batch 32, learning rate 0.05, 80:20 split.
    pub fn baseline(seed: u64) -> Self {
        Self {
            epochs: 200,
            batch_size: 32,
            learning_rate: 0.05,
            lr_schedule: LrSchedule::Constant,
            split_ratio: 0.8,
            seed,
            fine_tune_lr_scale: 0.1,
            hidden_layers: DEFAULT_HIDDEN.to_vec(),
        }
    }

    /// Fine-tuning defaults: the baseline settings with 50 epochs.
    pub fn tuning(seed: u64) -> Self {
        Self {
            epochs: 50,
            ..Self::baseline(seed)
        }
    }

    fn validate(&self) -> Result<(), MlpError> {
        let bad = |m: &str| Err(MlpError::InvalidConfig(m.to_string()));
        if self.epochs < 1 {
            return bad("epochs must be at least 1");
        }
        if self.batch_size < 1 {
            return bad("batch_size must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return bad("split_ratio must be in (0, 1)");
        }
        if !(self.fine_tune_lr_scale > 0.0 && self.fine_tune_lr_scale <= 1.0) {
            return bad("fine_tune_lr_scale must be in (0, 1]");
        }
        if self.hidden_layers.iter().any(|&h| h == 0) {
            return bad("hidden layer widths must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ModelKind {
    Baseline,
    Tuned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub kind: ModelKind,
    pub backend_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub circuit_id: Option<String>,
    pub seed: u64,
    pub epochs: usize,
}

/// Min-max statistics per feature, after ODR is passed through `log1p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureNorm {
    pub odr_log1p: bool,
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl FeatureNorm {
    fn raw(&self, f: &FeatureVector) -> [f64; 3] {
        let odr = if self.odr_log1p { f.odr.ln_1p() } else { f.odr };
        [f.pos, odr, f.pof]
    }

    /// Fits statistics on the given feature vectors. A constant feature gets
    /// the identity normalization (min 0, max 1).
    pub fn fit<'a>(features: impl IntoIterator<Item = &'a FeatureVector>) -> Self {
        let mut norm = FeatureNorm {
            odr_log1p: true,
            min: [f64::INFINITY; 3],
            max: [f64::NEG_INFINITY; 3],
        };
        for f in features {
            let x = norm.raw(f);
            for i in 0..3 {
                norm.min[i] = norm.min[i].min(x[i]);
                norm.max[i] = norm.max[i].max(x[i]);
            }
        }
        for i in 0..3 {
            if !(norm.min[i] < norm.max[i]) {
                norm.min[i] = 0.0;
                norm.max[i] = 1.0;
            }
        }
        norm
    }

    pub fn apply(&self, f: &FeatureVector) -> [f64; 3] {
        let x = self.raw(f);
        std::array::from_fn(|i| (x[i] - self.min[i]) / (self.max[i] - self.min[i]))
    }
}

/// A trained regression model together with everything needed to use it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub format: String,
    #[serde(flatten)]
    pub network: Network,
    pub hidden_activation: String,
    pub output_activation: String,
    pub feature_norm: FeatureNorm,
    pub provenance: Provenance,
}

impl MlpModel {
    pub fn kind(&self) -> ModelKind {
        self.provenance.kind
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, MlpError> {
        let m: MlpModel = serde_json::from_str(text).map_err(|e| MlpError::InvalidModel(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self, MlpError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| MlpError::InvalidModel(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), MlpError> {
        let bad = |m: String| Err(MlpError::InvalidModel(m));
        if self.format != MODEL_FORMAT {
            return bad(format!("format {:?}, expected {MODEL_FORMAT:?}", self.format));
        }
        if self.hidden_activation != "relu" || self.output_activation != "logistic" {
            return bad("only relu hidden / logistic output activations are supported".into());
        }
        let n = &self.network;
        let dims = &n.layer_dims;
        if dims.len() < 2 || dims[0] != 3 || *dims.last().unwrap() != 1 {
            return bad(format!("layer_dims {dims:?} must start at 3 and end at 1"));
        }
        if n.weights.len() != dims.len() - 1 || n.biases.len() != dims.len() - 1 {
            return bad("layer count does not match layer_dims".into());
        }
        for l in 0..dims.len() - 1 {
            if n.weights[l].len() != dims[l] * dims[l + 1] || n.biases[l].len() != dims[l + 1] {
                return bad(format!("layer {l} has the wrong shape"));
            }
        }
        if !n.is_finite() {
            return bad("non-finite weights".into());
        }
        if (0..3).any(|i| !(self.feature_norm.min[i] < self.feature_norm.max[i])) {
            return bad("feature_norm requires min < max".into());
        }
        Ok(())
    }
}

/// Predicted ideal probability for a state with features `f`; always in (0, 1).
pub fn predict(m: &MlpModel, f: &FeatureVector) -> f64 {
    m.network.forward(&m.feature_norm.apply(f))
}

pub fn mae_loss(pred: &[f64], target: &[f64]) -> Result<f64, MlpError> {
    if pred.len() != target.len() {
        return Err(MlpError::LengthMismatch(pred.len(), target.len()));
    }
    if pred.is_empty() {
        return Err(MlpError::EmptyDataset);
    }
    Ok(pred.iter().zip(target).map(|(p, t)| (p - t).abs()).sum::<f64>() / pred.len() as f64)
}

/// Seeded shuffle followed by a prefix split: the first `ceil(ratio · n)` rows
/// train, the rest test.
pub fn split_dataset(
    rows: &[TrainingRow],
    ratio: f64,
    seed: u64,
) -> Result<(Vec<TrainingRow>, Vec<TrainingRow>), MlpError> {
    if rows.is_empty() {
        return Err(MlpError::EmptyDataset);
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(MlpError::InvalidConfig(format!("split ratio {ratio} outside (0, 1)")));
    }
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.shuffle(&mut stream_rng(derive_seed(seed, &[0x5eed]), 0));
    let n_train = crate::datagen::selection_size(ratio * 100.0, rows.len());
    let pick = |idx: &[usize]| idx.iter().map(|&i| rows[i].clone()).collect::<Vec<_>>();
    Ok((pick(&order[..n_train]), pick(&order[n_train..])))
}

pub fn evaluate_mae(m: &MlpModel, rows: &[TrainingRow]) -> Result<f64, MlpError> {
    let pred: Vec<f64> = rows.iter().map(|r| predict(m, &r.features())).collect();
    let target: Vec<f64> = rows.iter().map(|r| r.target).collect();
    mae_loss(&pred, &target)
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub model: MlpModel,
    pub train_mae: f64,
    /// `None` when the split leaves no test rows.
    pub test_mae: Option<f64>,
    pub train_rows: usize,
    pub test_rows: usize,
}

/// Runs `epochs` epochs of mini-batch gradient descent in place.
fn descend(
    net: &mut Network,
    norm: &FeatureNorm,
    rows: &[TrainingRow],
    cfg: &TrainConfig,
    lr_scale: f64,
) -> Result<(), MlpError> {
    let xs: Vec<[f64; 3]> = rows.iter().map(|r| norm.apply(&r.features())).collect();
    let ts: Vec<f64> = rows.iter().map(|r| r.target).collect();
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let mut rng = stream_rng(derive_seed(cfg.seed, &[0xba7c]), 0);
    let mut step = 0usize;
    let mut batch_x = Vec::with_capacity(cfg.batch_size);
    let mut batch_t = Vec::with_capacity(cfg.batch_size);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            batch_x.clear();
            batch_t.clear();
            batch_x.extend(chunk.iter().map(|&i| xs[i]));
            batch_t.extend(chunk.iter().map(|&i| ts[i]));
            let (loss, grads) = net.mae_gradients(&batch_x, &batch_t);
            epoch_loss += loss * chunk.len() as f64;
            let lr = cfg.lr_schedule.rate(cfg.learning_rate, step) * lr_scale;
            net.apply_gradients(&grads, lr);
            step += 1;
        }
        if !epoch_loss.is_finite() || !net.is_finite() {
            return Err(MlpError::DivergenceDetected(epoch));
        }
    }
    Ok(())
}

/// Trains a baseline model on `rows` for the backend named `backend_name`.
/// Normalization statistics come from the training split only.
pub fn train_baseline(rows: &[TrainingRow], cfg: &TrainConfig, backend_name: &str) -> Result<TrainReport, MlpError> {
    cfg.validate()?;
    if rows.is_empty() {
        return Err(MlpError::EmptyDataset);
    }
    if rows.len() < MIN_TRAINING_ROWS {
        return Err(MlpError::TooFewRows {
            need: MIN_TRAINING_ROWS,
            got: rows.len(),
        });
    }
    let (train, test) = split_dataset(rows, cfg.split_ratio, cfg.seed)?;
    let norm = FeatureNorm::fit(train.iter().map(|r| r.features()).collect::<Vec<_>>().iter());
    let mut dims = vec![3];
    dims.extend(&cfg.hidden_layers);
    dims.push(1);
    let mut net = Network::new(&dims, derive_seed(cfg.seed, &[0x1417]));
    descend(&mut net, &norm, &train, cfg, 1.0)?;
    let model = MlpModel {
        format: MODEL_FORMAT.into(),
        network: net,
        hidden_activation: "relu".into(),
        output_activation: "logistic".into(),
        feature_norm: norm,
        provenance: Provenance {
            kind: ModelKind::Baseline,
            backend_name: backend_name.into(),
            circuit_id: None,
            seed: cfg.seed,
            epochs: cfg.epochs,
        },
    };
    let train_mae = evaluate_mae(&model, &train)?;
    let test_mae = if test.is_empty() {
        None
    } else {
        Some(evaluate_mae(&model, &test)?)
    };
    Ok(TrainReport {
        model,
        train_mae,
        test_mae,
        train_rows: train.len(),
        test_rows: test.len(),
    })
}

/// Transfer learning: continues training a copy of `base` on one circuit's
/// rows with the learning rate scaled by `cfg.fine_tune_lr_scale`. All layers
/// are updated; the baseline's feature normalization is kept.
pub fn fine_tune(base: &MlpModel, rows: &[TrainingRow], cfg: &TrainConfig) -> Result<MlpModel, MlpError> {
    fine_tune_epochs(base, rows, cfg, cfg.epochs)
}

/// [`fine_tune`] with an explicit epoch count (0 returns the base weights).
pub fn fine_tune_epochs(
    base: &MlpModel,
    rows: &[TrainingRow],
    cfg: &TrainConfig,
    epochs: usize,
) -> Result<MlpModel, MlpError> {
    if base.kind() != ModelKind::Baseline {
        return Err(MlpError::NotBaseline(base.kind()));
    }
    if rows.is_empty() {
        return Err(MlpError::EmptyDataset);
    }
    let inputs: BTreeSet<_> = rows.iter().map(|r| (&r.circuit_id, r.input)).collect();
    if inputs.len() > MAX_TUNE_INPUTS {
        return Err(MlpError::TooManyTuneInputs {
            got: inputs.len(),
            max: MAX_TUNE_INPUTS,
        });
    }
    let mut tuned = base.clone();
    if epochs > 0 {
        let cfg = TrainConfig { epochs, ..cfg.clone() };
        cfg.validate()?;
        descend(&mut tuned.network, &base.feature_norm, rows, &cfg, cfg.fine_tune_lr_scale)?;
    }
    let circuits: BTreeSet<_> = rows.iter().map(|r| r.circuit_id.as_str()).collect();
    tuned.provenance = Provenance {
        kind: ModelKind::Tuned,
        backend_name: base.provenance.backend_name.clone(),
        circuit_id: Some(circuits.into_iter().collect::<Vec<_>>().join("+")),
        seed: cfg.seed,
        epochs,
    };
    Ok(tuned)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitstring::{bits, BitString};
    use rand::Rng;

    fn row(input: &str, pos: f64, target: f64) -> TrainingRow {
        let f = FeatureVector::from_pos(pos);
        TrainingRow {
            circuit_id: "t".into(),
            input: bits(input),
            state: bits("000"),
            pos: f.pos,
            odr: f.odr,
            pof: f.pof,
            target,
        }
    }

    fn corpus(n: usize, seed: u64, target: impl Fn(f64) -> f64) -> Vec<TrainingRow> {
        let mut rng = stream_rng(seed, 0);
        (0..n)
            .map(|i| {
                let p: f64 = rng.random_range(0.0..1.0);
                let input = BitString::new((i % 4) as u64, 3).unwrap().to_string();
                row(&input, p, target(p))
            })
            .collect()
    }

    #[test]
    fn mae_examples() {
        assert_eq!(mae_loss(&[0.5], &[0.5]).unwrap(), 0.0);
        assert_eq!(mae_loss(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert!((mae_loss(&[0.2, 0.4], &[0.3, 0.1]).unwrap() - 0.2).abs() < 1e-15);
        assert!(matches!(mae_loss(&[0.1], &[]), Err(MlpError::LengthMismatch(1, 0))));
        assert!(matches!(mae_loss(&[], &[]), Err(MlpError::EmptyDataset)));
    }

    #[test]
    fn split_sizes_and_determinism() {
        let rows = corpus(10, 1, |p| p);
        let (a, b) = split_dataset(&rows, 0.8, 3).unwrap();
        assert_eq!((a.len(), b.len()), (8, 2));
        let (a2, b2) = split_dataset(&rows, 0.8, 3).unwrap();
        assert_eq!((a, b), (a2, b2));
        let big = corpus(1000, 2, |p| p);
        let (a, b) = split_dataset(&big, 0.8, 3).unwrap();
        assert_eq!((a.len(), b.len()), (800, 200));
        assert!(matches!(split_dataset(&[], 0.8, 1), Err(MlpError::EmptyDataset)));
    }

    #[test]
    fn triangular_schedule() {
        let s = LrSchedule::TriangularCycle { min: 0.01, max: 0.1, period: 10 };
        assert!((s.rate(0.05, 0) - 0.01).abs() < 1e-12);
        assert!((s.rate(0.05, 5) - 0.1).abs() < 1e-12);
        assert!((s.rate(0.05, 10) - 0.01).abs() < 1e-12);
        assert_eq!(LrSchedule::Constant.rate(0.05, 99), 0.05);
    }

    #[test]
    fn learns_identity() {
        let rows = corpus(2000, 7, |p| p);
        let report = train_baseline(&rows, &TrainConfig::baseline(1), "test").unwrap();
        assert!(report.test_mae.unwrap() < 0.02, "test MAE {:?}", report.test_mae);
        let y = predict(&report.model, &FeatureVector::from_pos(0.5));
        assert!((y - 0.5).abs() < 0.05);
    }

    #[test]
    fn learns_constant() {
        let rows = corpus(500, 8, |_| 0.5);
        let report = train_baseline(&rows, &TrainConfig::baseline(2), "test").unwrap();
        assert!(report.train_mae < 0.01 && report.test_mae.unwrap() < 0.01);
    }

    #[test]
    fn shuffled_labels_do_worse_than_identity() {
        let identity = corpus(1000, 9, |p| p);
        let mut shuffled = identity.clone();
        let mut targets: Vec<f64> = shuffled.iter().map(|r| r.target).collect();
        targets.shuffle(&mut stream_rng(4, 0));
        for (r, t) in shuffled.iter_mut().zip(targets) {
            r.target = t;
        }
        let cfg = TrainConfig { epochs: 50, ..TrainConfig::baseline(3) };
        let good = train_baseline(&identity, &cfg, "b").unwrap().test_mae.unwrap();
        let bad = train_baseline(&shuffled, &cfg, "b").unwrap().test_mae.unwrap();
        assert!(bad >= good, "{bad} < {good}");
    }

    #[test]
    fn normalization_fit_on_train_split_only() {
        let mut rows = corpus(100, 10, |p| p * 0.5);
        for (i, r) in rows.iter_mut().enumerate() {
            r.circuit_id = i.to_string();
        }
        let cfg = TrainConfig { epochs: 1, ..TrainConfig::baseline(5) };
        let (_, test) = split_dataset(&rows, cfg.split_ratio, cfg.seed).unwrap();
        // Give every held-out row an extreme feature value; it must not leak.
        for t in &test {
            let f = FeatureVector::from_pos(0.9999);
            let r = &mut rows[t.circuit_id.parse::<usize>().unwrap()];
            (r.pos, r.odr, r.pof) = (f.pos, f.odr, f.pof);
        }
        let report = train_baseline(&rows, &cfg, "b").unwrap();
        let (train, _) = split_dataset(&rows, cfg.split_ratio, cfg.seed).unwrap();
        let expected = FeatureNorm::fit(train.iter().map(|r| r.features()).collect::<Vec<_>>().iter());
        assert_eq!(report.model.feature_norm, expected);
        assert!(report.model.feature_norm.max[0] < 0.9999);
    }

    #[test]
    fn degenerate_feature_gets_identity_norm() {
        let f = [FeatureVector::from_pos(0.3), FeatureVector::from_pos(0.3)];
        let n = FeatureNorm::fit(f.iter());
        assert_eq!(n.min, [0.0; 3]);
        assert_eq!(n.max, [1.0; 3]);
    }

    #[test]
    fn rejects_small_or_bad_inputs() {
        let rows = corpus(10, 1, |p| p);
        assert!(matches!(
            train_baseline(&rows, &TrainConfig::baseline(1), "b"),
            Err(MlpError::TooFewRows { need: 20, got: 10 })
        ));
        let cfg = TrainConfig { batch_size: 0, ..TrainConfig::baseline(1) };
        assert!(matches!(train_baseline(&corpus(30, 1, |p| p), &cfg, "b"), Err(MlpError::InvalidConfig(_))));
    }

    #[test]
    fn divergence_detected() {
        let rows = corpus(100, 1, |p| p);
        let cfg = TrainConfig { learning_rate: f64::MAX, epochs: 3, ..TrainConfig::baseline(1) };
        assert!(matches!(train_baseline(&rows, &cfg, "b"), Err(MlpError::DivergenceDetected(_))));
    }

    fn small_baseline() -> MlpModel {
        let cfg = TrainConfig { epochs: 5, ..TrainConfig::baseline(11) };
        train_baseline(&corpus(200, 12, |p| p), &cfg, "b").unwrap().model
    }

    #[test]
    fn zero_epoch_tune_preserves_predictions() {
        let base = small_baseline();
        let tuned = fine_tune_epochs(&base, &corpus(50, 13, |p| p * 0.5), &TrainConfig::tuning(1), 0).unwrap();
        assert_eq!(tuned.network, base.network);
        assert_eq!(tuned.kind(), ModelKind::Tuned);
        for p in [0.0, 0.1, 0.5, 0.9, 1.0] {
            let f = FeatureVector::from_pos(p);
            assert_eq!(predict(&tuned, &f), predict(&base, &f));
        }
    }

    #[test]
    fn tuning_is_deterministic_and_leaves_base_alone() {
        let base = small_baseline();
        let snapshot = base.clone();
        let rows = corpus(100, 14, |p| p * 0.5);
        let cfg = TrainConfig { epochs: 5, ..TrainConfig::tuning(2) };
        let a = fine_tune(&base, &rows, &cfg).unwrap();
        let b = fine_tune(&base, &rows, &cfg).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_ne!(a.network, base.network);
        assert_eq!(base, snapshot);
        assert!(matches!(fine_tune(&a, &rows, &cfg), Err(MlpError::NotBaseline(ModelKind::Tuned))));
    }

    #[test]
    fn tuning_input_limit() {
        let base = small_baseline();
        let rows: Vec<_> = ["000", "001", "010", "011", "100"].iter().map(|x| row(x, 0.3, 0.3)).collect();
        assert!(matches!(
            fine_tune(&base, &rows, &TrainConfig::tuning(1)),
            Err(MlpError::TooManyTuneInputs { got: 5, max: 4 })
        ));
    }

    #[test]
    fn model_json_round_trip() {
        let m = small_baseline();
        let text = m.to_json();
        assert!(text.contains("\"format\": \"qnt-model/1\""));
        assert!(text.contains("\"layer_dims\""));
        assert_eq!(MlpModel::from_json(&text).unwrap(), m);
        let broken = text.replace("qnt-model/1", "qnt-model/0");
        assert!(MlpModel::from_json(&broken).is_err());
    }

    #[test]
    fn predictions_in_open_unit_interval() {
        let m = small_baseline();
        for p in [0.0, 1e-9, 0.25, 0.999, 1.0] {
            let y = predict(&m, &FeatureVector::from_pos(p));
            assert!(y > 0.0 && y < 1.0);
            assert_eq!(y, predict(&m, &FeatureVector::from_pos(p)));
        }
    }
}
