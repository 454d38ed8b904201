//! The three detector families (LR, RF, NN) over any feature-set projection.
//!
//! Training is deterministic for a fixed (config, data order); trained models
//! are immutable, serializable to versioned JSON, and safe for concurrent
//! prediction.

pub mod forest;
pub mod logreg;
pub mod nn;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Label;
use crate::features::FeatureSetId;

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Lr,
    Rf,
    Nn,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Lr, Algorithm::Rf, Algorithm::Nn];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Lr => "lr",
            Algorithm::Rf => "rf",
            Algorithm::Nn => "nn",
        }
    }

    pub fn parse(s: &str) -> Option<Algorithm> {
        match s.to_ascii_lowercase().as_str() {
            "lr" => Some(Algorithm::Lr),
            "rf" => Some(Algorithm::Rf),
            "nn" | "cn" => Some(Algorithm::Nn),
            _ => None,
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LrParams {
    pub learning_rate: f64,
    pub epochs: u32,
    pub l2: f64,
}

impl Default for LrParams {
    fn default() -> LrParams {
        LrParams {
            learning_rate: 0.5,
            epochs: 300,
            l2: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSubsetRule {
    Sqrt,
    All,
    Fixed(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RfParams {
    pub n_trees: u32,
    pub max_depth: Option<u32>,
    pub min_leaf: u32,
    pub bagging: bool,
    pub features_per_split: FeatureSubsetRule,
}

impl Default for RfParams {
    fn default() -> RfParams {
        RfParams {
            n_trees: 100,
            max_depth: None,
            min_leaf: 1,
            bagging: true,
            features_per_split: FeatureSubsetRule::Sqrt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvParams {
    pub filters: usize,
    pub kernel: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NnParams {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub epochs: u32,
    pub learning_rate: f64,
    pub batch_size: u32,
    pub conv: Option<ConvParams>,
}

impl Default for NnParams {
    fn default() -> NnParams {
        NnParams {
            hidden: vec![32, 16],
            activation: Activation::Relu,
            epochs: 40,
            learning_rate: 0.05,
            batch_size: 32,
            conv: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub algorithm: Algorithm,
    pub feature_set: FeatureSetId,
    pub seed: u64,
    pub decision_threshold: f64,
    pub lr: LrParams,
    pub rf: RfParams,
    pub nn: NnParams,
}

impl TrainingConfig {
    pub fn new(algorithm: Algorithm, feature_set: FeatureSetId, seed: u64) -> TrainingConfig {
        TrainingConfig {
            algorithm,
            feature_set,
            seed,
            decision_threshold: 0.5,
            lr: LrParams::default(),
            rf: RfParams::default(),
            nn: NnParams::default(),
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::BadConfig(m.to_string()));
        if !(self.decision_threshold > 0.0 && self.decision_threshold < 1.0) {
            return bad("decision_threshold must be in (0,1)");
        }
        if self.lr.learning_rate <= 0.0 || self.nn.learning_rate <= 0.0 {
            return bad("learning rates must be > 0");
        }
        if self.lr.l2 < 0.0 {
            return bad("l2 must be >= 0");
        }
        if self.rf.n_trees == 0 {
            return bad("rf.n_trees must be >= 1");
        }
        if self.rf.min_leaf == 0 {
            return bad("rf.min_leaf must be >= 1");
        }
        if self.nn.batch_size == 0 {
            return bad("nn.batch_size must be >= 1");
        }
        if self.nn.hidden.iter().any(|&h| h == 0) {
            return bad("nn.hidden widths must be >= 1");
        }
        if let Some(conv) = &self.nn.conv {
            if conv.filters == 0 || conv.kernel == 0 {
                return bad("nn.conv filters and kernel must be >= 1");
            }
            if conv.kernel > self.feature_set.width() {
                return bad("nn.conv kernel exceeds the projected width");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelParams {
    Lr(logreg::LrModel),
    Rf(forest::RfModel),
    Nn(nn::NnModel),
}

/// A trained detector: algorithm config plus learned parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub schema_version: u32,
    pub config: TrainingConfig,
    pub params: ModelParams,
}

/// tpr/fpr of a detector on a labeled set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tpr: f64,
    pub fpr: f64,
    pub n_pos: usize,
    pub n_neg: usize,
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training data contains a single class")]
    SingleClass,
    #[error("vector width {actual} does not match the projected width {expected}")]
    WidthMismatch { expected: usize, actual: usize },
    #[error("invalid training config: {0}")]
    BadConfig(String),
    #[error("evaluation set is missing the {0} class")]
    MissingClass(Label),
    #[error("model file schema_version {found}, supported {expected}")]
    SchemaVersion { found: u32, expected: u32 },
    #[error("model io: {0}")]
    Io(#[from] std::io::Error),
    #[error("model encoding: {0}")]
    Json(#[from] serde_json::Error),
}

fn check_data(cfg: &TrainingConfig, data: &[(Vec<i8>, Label)]) -> Result<(), TrainError> {
    let expected = cfg.feature_set.width();
    for (x, _) in data {
        if x.len() != expected {
            return Err(TrainError::WidthMismatch {
                expected,
                actual: x.len(),
            });
        }
    }
    let has_pos = data.iter().any(|(_, l)| *l == Label::Phishing);
    let has_neg = data.iter().any(|(_, l)| *l == Label::Benign);
    if !has_pos || !has_neg {
        return Err(TrainError::SingleClass);
    }
    Ok(())
}

/// Trains a detector. Deterministic for fixed (config, data order).
pub fn train(cfg: &TrainingConfig, data: &[(Vec<i8>, Label)]) -> Result<Model, TrainError> {
    cfg.validate()?;
    check_data(cfg, data)?;
    let width = cfg.feature_set.width();
    let params = match cfg.algorithm {
        Algorithm::Lr => ModelParams::Lr(logreg::train(
            width,
            data,
            cfg.lr.learning_rate,
            cfg.lr.epochs,
            cfg.lr.l2,
        )),
        Algorithm::Rf => ModelParams::Rf(forest::train(
            width,
            data,
            cfg.rf.n_trees,
            cfg.rf.max_depth,
            cfg.rf.min_leaf,
            cfg.rf.bagging,
            cfg.rf.features_per_split,
            cfg.seed,
        )),
        Algorithm::Nn => ModelParams::Nn(nn::train(width, data, &cfg.nn, cfg.seed)),
    };
    Ok(Model {
        schema_version: MODEL_SCHEMA_VERSION,
        config: cfg.clone(),
        params,
    })
}

/// Phishing score in [0,1] for a projected vector.
pub fn predict_score(model: &Model, x: &[i8]) -> Result<f64, TrainError> {
    let expected = model.config.feature_set.width();
    if x.len() != expected {
        return Err(TrainError::WidthMismatch {
            expected,
            actual: x.len(),
        });
    }
    Ok(match &model.params {
        ModelParams::Lr(m) => logreg::predict_score(m, x),
        ModelParams::Rf(m) => forest::predict_score(m, x),
        ModelParams::Nn(m) => nn::predict_score(m, x),
    })
}

/// Thresholded label: phishing iff score >= decision_threshold.
pub fn predict_label(model: &Model, x: &[i8]) -> Result<Label, TrainError> {
    let score = predict_score(model, x)?;
    Ok(if score >= model.config.decision_threshold {
        Label::Phishing
    } else {
        Label::Benign
    })
}

/// tpr over positives, fpr over negatives.
pub fn evaluate(model: &Model, data: &[(Vec<i8>, Label)]) -> Result<Metrics, TrainError> {
    let mut n_pos = 0usize;
    let mut n_neg = 0usize;
    let mut true_pos = 0usize;
    let mut false_pos = 0usize;
    for (x, label) in data {
        let predicted = predict_label(model, x)?;
        match label {
            Label::Phishing => {
                n_pos += 1;
                true_pos += usize::from(predicted == Label::Phishing);
            }
            Label::Benign => {
                n_neg += 1;
                false_pos += usize::from(predicted == Label::Phishing);
            }
        }
    }
    if n_pos == 0 {
        return Err(TrainError::MissingClass(Label::Phishing));
    }
    if n_neg == 0 {
        return Err(TrainError::MissingClass(Label::Benign));
    }
    Ok(Metrics {
        tpr: true_pos as f64 / n_pos as f64,
        fpr: false_pos as f64 / n_neg as f64,
        n_pos,
        n_neg,
    })
}

/// tpr on a positives-only set (used for adversarial basis evaluation).
pub fn tpr_on_positives(model: &Model, vectors: &[Vec<i8>]) -> Result<f64, TrainError> {
    if vectors.is_empty() {
        return Err(TrainError::MissingClass(Label::Phishing));
    }
    let mut detected = 0usize;
    for x in vectors {
        detected += usize::from(predict_label(model, x)? == Label::Phishing);
    }
    Ok(detected as f64 / vectors.len() as f64)
}

/// Exposes the per-operation loss/gradient of the LR trainer.
pub fn lr_loss_and_gradient(
    weights: &[f64],
    bias: f64,
    data: &[(Vec<i8>, Label)],
    l2: f64,
) -> Result<(f64, Vec<f64>, f64), TrainError> {
    for (x, _) in data {
        if x.len() != weights.len() {
            return Err(TrainError::WidthMismatch {
                expected: weights.len(),
                actual: x.len(),
            });
        }
    }
    Ok(logreg::loss_and_gradient(weights, bias, data, l2))
}

impl Model {
    pub fn to_json(&self) -> Result<String, TrainError> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Model, TrainError> {
        #[derive(Deserialize)]
        struct VersionProbe {
            schema_version: u32,
        }
        let probe: VersionProbe = serde_json::from_str(text)?;
        if probe.schema_version != MODEL_SCHEMA_VERSION {
            return Err(TrainError::SchemaVersion {
                found: probe.schema_version,
                expected: MODEL_SCHEMA_VERSION,
            });
        }
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), TrainError> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Model, TrainError> {
        let text = std::fs::read_to_string(path)?;
        Model::from_json(&text)
    }
}
