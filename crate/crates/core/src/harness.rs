//! Experiment orchestration: per-trial split, train nine detectors, isolate
//! basis samples, generate the configured attacks, evaluate everything, and
//! aggregate over trials.
//!
//! Trials are independent: each derives its seed from the master seed and
//! trial index, so results are identical whether trials run serially or
//! concurrently, and adding trials never perturbs earlier ones.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::classifiers::{
    evaluate, predict_label, train, Algorithm, LrParams, Metrics, Model, NnParams, RfParams,
    TrainError, TrainingConfig,
};
use crate::corpus::{self, CorpusError, Dataset, Label, Webpage};
use crate::evasion::{
    generate_adversarial, AttackFamily, AttackSpec, EvasionError, IntegrityRuleSet, WspMode,
};
use crate::features::{
    extract, project_values, ExternalLookupProvider, FeatureSetId, OfflineLookupProvider,
    ThresholdConfig,
};
use crate::seed;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// The nine detectors, algorithm-major, feature sets in u, r, c order.
pub const DETECTOR_IDS: [&str; 9] = [
    "LR^u", "LR^r", "LR^c", "RF^u", "RF^r", "RF^c", "NN^u", "NN^r", "NN^c",
];

/// The twelve attacks, family-major, variants in u, r, c order.
pub const ATTACK_IDS: [&str; 12] = [
    "WA^u", "WA^r", "WA^c", "WA_ADV^u", "WA_ADV^r", "WA_ADV^c", "PA^u", "PA^r", "PA^c", "MA^u",
    "MA^r", "MA^c",
];

/// (algorithm, feature set) per detector ordinal, matching [`DETECTOR_IDS`].
pub fn detector_grid() -> [(Algorithm, FeatureSetId); 9] {
    let mut grid = [(Algorithm::Lr, FeatureSetId::U); 9];
    let mut i = 0;
    for algorithm in Algorithm::ALL {
        for set in [FeatureSetId::U, FeatureSetId::R, FeatureSetId::C] {
            grid[i] = (algorithm, set);
            i += 1;
        }
    }
    grid
}

/// Ordinal of a detector in the grid.
pub fn detector_ordinal(algorithm: Algorithm, set: FeatureSetId) -> usize {
    detector_grid()
        .iter()
        .position(|&(a, s)| a == algorithm && s == set)
        .expect("grid covers all combinations")
}

// deny_unknown_fields is incompatible with the internally-tagged flatten,
// so unknown keys inside [[dataset]] tables are tolerated
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DatasetSource {
    Manifest {
        manifest: PathBuf,
    },
    Synthetic {
        n_benign: u64,
        n_phish: u64,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    #[serde(flatten)]
    pub source: DatasetSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceDetector {
    pub algorithm: Algorithm,
    pub feature_set: FeatureSetId,
}

impl Default for ReferenceDetector {
    fn default() -> ReferenceDetector {
        ReferenceDetector {
            algorithm: Algorithm::Rf,
            feature_set: FeatureSetId::C,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifierGrid {
    pub decision_threshold: f64,
    pub lr: LrParams,
    pub rf: RfParams,
    pub nn: NnParams,
}

impl Default for ClassifierGrid {
    fn default() -> ClassifierGrid {
        ClassifierGrid {
            decision_threshold: 0.5,
            lr: LrParams::default(),
            rf: RfParams::default(),
            nn: NnParams::default(),
        }
    }
}

fn default_n_trials() -> u64 {
    50
}
fn default_train_fraction() -> f64 {
    0.8
}
fn default_n_isolate() -> usize {
    100
}
fn default_schema_version() -> u32 {
    1
}
fn default_attack_families() -> Vec<AttackFamily> {
    AttackFamily::ALL.to_vec()
}
fn default_attack_variants() -> Vec<String> {
    vec!["u".into(), "r".into(), "c".into()]
}

/// Full experiment configuration (the TOML surface of `pwdbench experiment`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub name: String,
    #[serde(default = "default_n_trials")]
    pub n_trials: u64,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default = "default_n_isolate")]
    pub n_isolate: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub wsp_mode: WspMode,
    #[serde(default = "default_attack_families")]
    pub attack_families: Vec<AttackFamily>,
    #[serde(default = "default_attack_variants")]
    pub attack_variants: Vec<String>,
    #[serde(default)]
    pub thresholds: Option<PathBuf>,
    #[serde(default)]
    pub rules: Option<PathBuf>,
    #[serde(default)]
    pub reference_detector: ReferenceDetector,
    #[serde(rename = "dataset")]
    pub datasets: Vec<DatasetSpec>,
    #[serde(default)]
    pub classifiers: ClassifierGrid,
}

impl ExperimentConfig {
    /// Minimal config for a synthetic run (test and example support).
    pub fn synthetic(n_benign: u64, n_phish: u64, corpus_seed: u64, master_seed: u64) -> Self {
        ExperimentConfig {
            schema_version: 1,
            name: "synthetic".into(),
            n_trials: default_n_trials(),
            train_fraction: default_train_fraction(),
            n_isolate: default_n_isolate(),
            master_seed,
            workers: 0,
            wsp_mode: WspMode::default(),
            attack_families: default_attack_families(),
            attack_variants: default_attack_variants(),
            thresholds: None,
            rules: None,
            reference_detector: ReferenceDetector::default(),
            datasets: vec![DatasetSpec {
                name: "synthetic".into(),
                source: DatasetSource::Synthetic {
                    n_benign,
                    n_phish,
                    seed: corpus_seed,
                },
            }],
            classifiers: ClassifierGrid::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<ExperimentConfig, HarnessError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<ExperimentConfig, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|_| {
            HarnessError::Config(format!("cannot read config {}", path.display()))
        })?;
        ExperimentConfig::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.schema_version != 1 {
            return Err(HarnessError::Config(format!(
                "unsupported schema_version {}",
                self.schema_version
            )));
        }
        if self.n_trials < 2 {
            return Err(HarnessError::Config(
                "n_trials must be >= 2 (statistics need variance)".into(),
            ));
        }
        if self.n_isolate == 0 {
            return Err(HarnessError::Config("n_isolate must be >= 1".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(HarnessError::Config(
                "train_fraction must be in (0,1)".into(),
            ));
        }
        if self.datasets.is_empty() {
            return Err(HarnessError::Config("at least one [[dataset]]".into()));
        }
        if self.attack_families.is_empty() || self.attack_variants.is_empty() {
            return Err(HarnessError::Config(
                "attack_families and attack_variants must be non-empty".into(),
            ));
        }
        for v in &self.attack_variants {
            if FeatureSetId::parse(v).is_none() {
                return Err(HarnessError::Config(format!("unknown attack variant `{v}`")));
            }
        }
        Ok(())
    }

    /// The attack specs this config enables, in [`ATTACK_IDS`] order, with
    /// per-trial seeds.
    pub fn attack_specs(&self, trial_seed: u64) -> Vec<AttackSpec> {
        let variants: Vec<FeatureSetId> = self
            .attack_variants
            .iter()
            .filter_map(|v| FeatureSetId::parse(v))
            .collect();
        AttackSpec::standard_twelve(seed::mix(trial_seed, 2), self.wsp_mode)
            .into_iter()
            .filter(|s| {
                self.attack_families.contains(&s.family) && variants.contains(&s.variant)
            })
            .collect()
    }

    /// Canonical hash of the configuration (provenance).
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Expected object counts of a configuration, before running it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalePlan {
    pub datasets: usize,
    pub trials_per_dataset: u64,
    pub detectors: usize,
    pub attacks: usize,
    pub n_isolate: usize,
    /// datasets x trials x detectors
    pub total_models: u64,
    /// attacks x n_isolate
    pub adversarial_per_trial: u64,
}

/// Scale bookkeeping for a configuration.
pub fn bookkeeping(cfg: &ExperimentConfig) -> ScalePlan {
    let attacks = cfg.attack_specs(0).len();
    ScalePlan {
        datasets: cfg.datasets.len(),
        trials_per_dataset: cfg.n_trials,
        detectors: DETECTOR_IDS.len(),
        attacks,
        n_isolate: cfg.n_isolate,
        total_models: cfg.datasets.len() as u64 * cfg.n_trials * DETECTOR_IDS.len() as u64,
        adversarial_per_trial: attacks as u64 * cfg.n_isolate as u64,
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Evasion(#[from] EvasionError),
    #[error("isolation shortfall: {achievable} of {needed} available")]
    IsolationShortfall { needed: usize, achievable: usize },
    #[error("all {0} trials failed")]
    AllTrialsFailed(u64),
    #[error("report io: {0}")]
    Io(#[from] std::io::Error),
    #[error("report encoding: {0}")]
    Json(#[from] serde_json::Error),
    #[error("report schema_version {found}, supported {expected}")]
    SchemaVersion { found: u32, expected: u32 },
    #[error("report aggregates do not match trial records (corrupt or edited report)")]
    AggregateMismatch,
    #[error(transparent)]
    Synth(#[from] corpus::SynthError),
}

/// Result of one successful trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    /// Baseline metrics on the full inference partition, detector order.
    pub baselines: Vec<Metrics>,
    /// Ids of the isolated basis samples (shared by every attack).
    pub basis_ids: Vec<String>,
    /// Per-detector tpr on the unperturbed basis samples.
    pub basis_tpr: Vec<f64>,
    /// Per-detector, per-attack tpr on the adversarial sets.
    pub attack_tpr: Vec<Vec<f64>>,
    /// Phishing candidates examined before `n_isolate` detected ones.
    pub isolation_candidates: usize,
    /// Adversarial vectors generated in this trial.
    pub adversarial_vectors: u64,
    /// Samples skipped by integrity violations, per attack.
    pub skipped: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial_index: u64,
    pub trial_seed: u64,
    pub models_trained: u64,
    pub result: Option<TrialResult>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellStat {
    pub mean: f64,
    pub std: f64,
}

fn cell_stat(values: &[f64]) -> CellStat {
    if values.is_empty() {
        return CellStat {
            mean: f64::NAN,
            std: f64::NAN,
        };
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    CellStat { mean, std }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub n_successful_trials: usize,
    pub baseline_tpr: Vec<CellStat>,
    pub baseline_fpr: Vec<CellStat>,
    pub basis_tpr: Vec<CellStat>,
    pub attack_tpr: Vec<Vec<CellStat>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetReport {
    pub dataset: String,
    pub trials: Vec<TrialOutcome>,
    pub aggregates: Aggregates,
    pub models_trained: u64,
    pub adversarial_vectors: u64,
}

impl DatasetReport {
    pub fn successful_trials(&self) -> impl Iterator<Item = &TrialResult> {
        self.trials.iter().filter_map(|t| t.result.as_ref())
    }
}

/// The persisted experiment output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub code_version: String,
    pub datasets: Vec<DatasetReport>,
}

fn compute_aggregates(trials: &[TrialOutcome], n_attacks: usize) -> Aggregates {
    let results: Vec<&TrialResult> = trials.iter().filter_map(|t| t.result.as_ref()).collect();
    let n_detectors = DETECTOR_IDS.len();
    let collect = |f: &dyn Fn(&TrialResult) -> f64| -> Vec<f64> {
        results.iter().map(|r| f(r)).collect()
    };
    let mut baseline_tpr = Vec::with_capacity(n_detectors);
    let mut baseline_fpr = Vec::with_capacity(n_detectors);
    let mut basis_tpr = Vec::with_capacity(n_detectors);
    let mut attack_tpr = Vec::with_capacity(n_detectors);
    for d in 0..n_detectors {
        baseline_tpr.push(cell_stat(&collect(&|r| r.baselines[d].tpr)));
        baseline_fpr.push(cell_stat(&collect(&|r| r.baselines[d].fpr)));
        basis_tpr.push(cell_stat(&collect(&|r| r.basis_tpr[d])));
        let mut per_attack = Vec::with_capacity(n_attacks);
        for a in 0..n_attacks {
            per_attack.push(cell_stat(&collect(&|r| r.attack_tpr[d][a])));
        }
        attack_tpr.push(per_attack);
    }
    Aggregates {
        n_successful_trials: results.len(),
        baseline_tpr,
        baseline_fpr,
        basis_tpr,
        attack_tpr,
    }
}

/// Everything shared across trials of one dataset.
pub struct ExperimentContext {
    pub thresholds: ThresholdConfig,
    pub rules: IntegrityRuleSet,
    pub provider: OfflineLookupProvider,
}

impl ExperimentContext {
    pub fn for_config(
        cfg: &ExperimentConfig,
        dataset_spec: &DatasetSpec,
        dataset: &Dataset,
    ) -> Result<ExperimentContext, HarnessError> {
        let thresholds = match &cfg.thresholds {
            Some(path) => ThresholdConfig::from_path(path)
                .map_err(|e| HarnessError::Config(e.to_string()))?,
            None => ThresholdConfig::default_config().clone(),
        };
        let rules = match &cfg.rules {
            Some(path) => IntegrityRuleSet::from_path(path)?,
            None => IntegrityRuleSet::default_rules().clone(),
        };
        let provider = match &dataset_spec.source {
            DatasetSource::Manifest { manifest } => {
                let dir = manifest.parent().unwrap_or(Path::new("."));
                OfflineLookupProvider::load_sidecars(dir, dataset)
            }
            DatasetSource::Synthetic { .. } => OfflineLookupProvider::empty(),
        };
        Ok(ExperimentContext {
            thresholds,
            rules,
            provider,
        })
    }
}

/// Loads a dataset from its spec.
pub fn load_dataset(spec: &DatasetSpec) -> Result<Dataset, HarnessError> {
    let mut dataset = match &spec.source {
        DatasetSource::Manifest { manifest } => corpus::load_manifest(manifest)?,
        DatasetSource::Synthetic {
            n_benign,
            n_phish,
            seed,
        } => corpus::synth_generate(*n_benign, *n_phish, *seed)?,
    };
    dataset.name = spec.name.clone();
    Ok(dataset)
}

/// First `n` phishing samples of `p_infer` (partition order) that the
/// reference model classifies as phishing. Fails with the achievable count
/// when fewer than `n` are detected.
pub fn isolate<'a>(
    reference_model: &Model,
    p_infer: &'a [Webpage],
    n: usize,
    provider: &dyn ExternalLookupProvider,
    cfg: &ThresholdConfig,
) -> Result<(Vec<&'a Webpage>, usize), HarnessError> {
    let set = reference_model.config.feature_set;
    let mut isolated = Vec::with_capacity(n);
    let mut examined = 0usize;
    for page in p_infer {
        if isolated.len() == n {
            break;
        }
        examined += 1;
        let (vector, _) = extract(page, provider, cfg);
        let projected = project_values(&vector.values, set);
        if predict_label(reference_model, &projected)? == Label::Phishing {
            isolated.push(page);
        }
    }
    if isolated.len() < n {
        return Err(HarnessError::IsolationShortfall {
            needed: n,
            achievable: isolated.len(),
        });
    }
    Ok((isolated, examined))
}

struct TrainedGrid {
    models: Vec<Model>,
}

fn train_grid(
    cfg: &ExperimentConfig,
    trial_seed: u64,
    train_pages: &[&Webpage],
    ctx: &ExperimentContext,
) -> Result<TrainedGrid, HarnessError> {
    // one extraction per page, projected per detector
    let full: Vec<(Vec<i8>, Label)> = train_pages
        .iter()
        .map(|p| {
            let (v, _) = extract(p, &ctx.provider, &ctx.thresholds);
            (v.values.to_vec(), p.label)
        })
        .collect();
    let mut models = Vec::with_capacity(DETECTOR_IDS.len());
    for (ordinal, (algorithm, set)) in detector_grid().iter().enumerate() {
        let mut tc = TrainingConfig::new(*algorithm, *set, seed::mix(trial_seed, 100 + ordinal as u64));
        tc.decision_threshold = cfg.classifiers.decision_threshold;
        tc.lr = cfg.classifiers.lr;
        tc.rf = cfg.classifiers.rf;
        tc.nn = cfg.classifiers.nn.clone();
        let projected: Vec<(Vec<i8>, Label)> = full
            .iter()
            .map(|(values, label)| {
                let array: [i8; crate::features::N_FEATURES] =
                    values.as_slice().try_into().expect("57 values");
                (project_values(&array, *set), *label)
            })
            .collect();
        models.push(train(&tc, &projected)?);
    }
    Ok(TrainedGrid { models })
}

/// Runs one trial. Deterministic for a fixed (config, dataset, trial index).
pub fn run_trial(
    cfg: &ExperimentConfig,
    dataset: &Dataset,
    ctx: &ExperimentContext,
    trial_index: u64,
) -> TrialOutcome {
    let trial_seed = seed::mix(cfg.master_seed, trial_index);
    match run_trial_inner(cfg, dataset, ctx, trial_seed) {
        Ok((result, models_trained)) => TrialOutcome {
            trial_index,
            trial_seed,
            models_trained,
            result: Some(result),
            failure: None,
        },
        Err((e, models_trained)) => TrialOutcome {
            trial_index,
            trial_seed,
            models_trained,
            result: None,
            failure: Some(e.to_string()),
        },
    }
}

fn run_trial_inner(
    cfg: &ExperimentConfig,
    dataset: &Dataset,
    ctx: &ExperimentContext,
    trial_seed: u64,
) -> Result<(TrialResult, u64), (HarnessError, u64)> {
    let part = corpus::split(dataset, trial_seed, cfg.train_fraction)
        .map_err(|e| (HarnessError::from(e), 0))?;
    let train_pages: Vec<&Webpage> = part.train_iter().collect();
    let grid =
        train_grid(cfg, trial_seed, &train_pages, ctx).map_err(|e| (e, 0))?;
    let models_trained = grid.models.len() as u64;
    let fail = |e: HarnessError| (e, models_trained);

    // baseline metrics on the full inference partition
    let infer_pages: Vec<&Webpage> = part.infer_iter().collect();
    let infer_full: Vec<([i8; crate::features::N_FEATURES], Label)> = infer_pages
        .iter()
        .map(|p| {
            let (v, _) = extract(p, &ctx.provider, &ctx.thresholds);
            (v.values, p.label)
        })
        .collect();
    let mut baselines = Vec::with_capacity(grid.models.len());
    for model in &grid.models {
        let set = model.config.feature_set;
        let projected: Vec<(Vec<i8>, Label)> = infer_full
            .iter()
            .map(|(values, label)| (project_values(values, set), *label))
            .collect();
        baselines.push(evaluate(model, &projected).map_err(|e| fail(e.into()))?);
    }

    // isolate the attack basis from the phishing inference partition
    let reference =
        &grid.models[detector_ordinal(cfg.reference_detector.algorithm, cfg.reference_detector.feature_set)];
    let (basis_refs, examined) = isolate(
        reference,
        &part.infer_phish,
        cfg.n_isolate,
        &ctx.provider,
        &ctx.thresholds,
    )
    .map_err(|e| fail(e))?;
    let basis: Vec<Webpage> = basis_refs.iter().map(|&p| p.clone()).collect();
    let basis_ids: Vec<String> = basis.iter().map(|p| p.id.clone()).collect();

    // no-attack tpr on the basis samples, per detector
    let basis_full: Vec<[i8; crate::features::N_FEATURES]> = basis
        .iter()
        .map(|p| extract(p, &ctx.provider, &ctx.thresholds).0.values)
        .collect();
    let mut basis_tpr = Vec::with_capacity(grid.models.len());
    for model in &grid.models {
        let set = model.config.feature_set;
        let detected = basis_full
            .iter()
            .map(|values| project_values(values, set))
            .filter(|x| {
                predict_label(model, x).map(|l| l == Label::Phishing).unwrap_or(false)
            })
            .count();
        basis_tpr.push(detected as f64 / basis_full.len() as f64);
    }

    // generate every configured attack once, evaluate all detectors on it
    let specs = cfg.attack_specs(trial_seed);
    let mut attack_tpr = vec![Vec::with_capacity(specs.len()); grid.models.len()];
    let mut adversarial_vectors = 0u64;
    let mut skipped = Vec::with_capacity(specs.len());
    for spec in &specs {
        let batch = generate_adversarial(spec, &basis, &ctx.provider, &ctx.thresholds, &ctx.rules)
            .map_err(|e| fail(e.into()))?;
        adversarial_vectors += batch.vectors.len() as u64;
        skipped.push(batch.skipped.len() as u64);
        for (d, model) in grid.models.iter().enumerate() {
            let set = model.config.feature_set;
            let detected = batch
                .vectors
                .iter()
                .map(|v| project_values(&v.values, set))
                .filter(|x| {
                    predict_label(model, x).map(|l| l == Label::Phishing).unwrap_or(false)
                })
                .count();
            let tpr = if batch.vectors.is_empty() {
                f64::NAN
            } else {
                detected as f64 / batch.vectors.len() as f64
            };
            attack_tpr[d].push(tpr);
        }
    }

    Ok((
        TrialResult {
            baselines,
            basis_ids,
            basis_tpr,
            attack_tpr,
            isolation_candidates: examined,
            adversarial_vectors,
            skipped,
        },
        models_trained,
    ))
}

/// Runs the full experiment over every configured dataset.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    cfg.validate()?;
    let mut dataset_reports = Vec::with_capacity(cfg.datasets.len());
    for dataset_spec in &cfg.datasets {
        let dataset = load_dataset(dataset_spec)?;
        let ctx = ExperimentContext::for_config(cfg, dataset_spec, &dataset)?;
        let run = |trial_index: u64| run_trial(cfg, &dataset, &ctx, trial_index);
        let mut trials: Vec<TrialOutcome> = if cfg.workers == 1 {
            (0..cfg.n_trials).map(run).collect()
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.workers)
                .build()
                .map_err(|e| HarnessError::Config(e.to_string()))?;
            pool.install(|| (0..cfg.n_trials).into_par_iter().map(run).collect())
        };
        trials.sort_by_key(|t| t.trial_index);
        if trials.iter().all(|t| t.result.is_none()) {
            return Err(HarnessError::AllTrialsFailed(cfg.n_trials));
        }
        for t in trials.iter().filter(|t| t.failure.is_some()) {
            log::warn!(
                "dataset {} trial {} failed: {}",
                dataset_spec.name,
                t.trial_index,
                t.failure.as_deref().unwrap_or("")
            );
        }
        let n_attacks = cfg.attack_specs(0).len();
        let aggregates = compute_aggregates(&trials, n_attacks);
        let models_trained = trials.iter().map(|t| t.models_trained).sum();
        let adversarial_vectors = trials
            .iter()
            .filter_map(|t| t.result.as_ref())
            .map(|r| r.adversarial_vectors)
            .sum();
        dataset_reports.push(DatasetReport {
            dataset: dataset_spec.name.clone(),
            trials,
            aggregates,
            models_trained,
            adversarial_vectors,
        });
    }
    Ok(ExperimentReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config: cfg.clone(),
        config_hash: cfg.hash(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        datasets: dataset_reports,
    })
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String, HarnessError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    /// Loads a report, checking the schema version and that the stored
    /// aggregates are recomputable from the trial records.
    pub fn load(path: &Path) -> Result<ExperimentReport, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        ExperimentReport::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<ExperimentReport, HarnessError> {
        #[derive(Deserialize)]
        struct VersionProbe {
            schema_version: u32,
        }
        let probe: VersionProbe = serde_json::from_str(text)?;
        if probe.schema_version != REPORT_SCHEMA_VERSION {
            return Err(HarnessError::SchemaVersion {
                found: probe.schema_version,
                expected: REPORT_SCHEMA_VERSION,
            });
        }
        let report: ExperimentReport = serde_json::from_str(text)?;
        let n_attacks = report.config.attack_specs(0).len();
        for ds in &report.datasets {
            let recomputed = compute_aggregates(&ds.trials, n_attacks);
            if !aggregates_close(&recomputed, &ds.aggregates) {
                return Err(HarnessError::AggregateMismatch);
            }
        }
        Ok(report)
    }
}

fn stat_close(a: &CellStat, b: &CellStat) -> bool {
    let close = |x: f64, y: f64| (x.is_nan() && y.is_nan()) || (x - y).abs() <= 1e-9;
    close(a.mean, b.mean) && close(a.std, b.std)
}

fn aggregates_close(a: &Aggregates, b: &Aggregates) -> bool {
    a.n_successful_trials == b.n_successful_trials
        && a.baseline_tpr.len() == b.baseline_tpr.len()
        && a.baseline_tpr.iter().zip(&b.baseline_tpr).all(|(x, y)| stat_close(x, y))
        && a.baseline_fpr.iter().zip(&b.baseline_fpr).all(|(x, y)| stat_close(x, y))
        && a.basis_tpr.iter().zip(&b.basis_tpr).all(|(x, y)| stat_close(x, y))
        && a.attack_tpr.len() == b.attack_tpr.len()
        && a.attack_tpr
            .iter()
            .zip(&b.attack_tpr)
            .all(|(row_a, row_b)| {
                row_a.len() == row_b.len()
                    && row_a.iter().zip(row_b).all(|(x, y)| stat_close(x, y))
            })
}

/// No basis sample may appear in any training partition of its trial.
pub fn check_no_leakage(result: &TrialResult, train_ids: &BTreeSet<String>) -> bool {
    result.basis_ids.iter().all(|id| !train_ids.contains(id))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detector_grid_order_matches_ids() {
        let grid = detector_grid();
        for (i, (algorithm, set)) in grid.iter().enumerate() {
            let expected = format!(
                "{}^{}",
                algorithm.as_str().to_ascii_uppercase(),
                set.as_str()
            );
            assert_eq!(DETECTOR_IDS[i], expected);
        }
        assert_eq!(detector_ordinal(Algorithm::Rf, FeatureSetId::C), 5);
    }

    #[test]
    fn paper_shaped_bookkeeping() {
        let mut cfg = ExperimentConfig::synthetic(100, 100, 1, 2);
        cfg.n_trials = 50;
        cfg.datasets.push(DatasetSpec {
            name: "second".into(),
            source: DatasetSource::Synthetic {
                n_benign: 100,
                n_phish: 100,
                seed: 3,
            },
        });
        let plan = bookkeeping(&cfg);
        assert_eq!(plan.total_models, 900);
        assert_eq!(plan.adversarial_per_trial, 1200);
        assert_eq!(plan.detectors, 9);
        assert_eq!(plan.attacks, 12);
    }

    #[test]
    fn config_toml_round_trip_and_validation() {
        let text = r#"
            name = "desk"
            n_trials = 10
            master_seed = 42

            [[dataset]]
            name = "syn"
            kind = "synthetic"
            n_benign = 100
            n_phish = 100
            seed = 7
        "#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.n_trials, 10);
        assert_eq!(cfg.train_fraction, 0.8);
        assert_eq!(cfg.attack_specs(1).len(), 12);

        let bad = ExperimentConfig::from_toml(&text.replace("n_trials = 10", "n_trials = 1"));
        assert!(bad.is_err());
        let unknown = ExperimentConfig::from_toml(
            &text.replace("master_seed = 42", "master_seed = 42\nmystery_key = 1"),
        );
        let err = unknown.unwrap_err().to_string();
        assert!(err.contains("mystery_key"), "{err}");
    }

    #[test]
    fn attack_specs_follow_the_id_order() {
        let cfg = ExperimentConfig::synthetic(10, 10, 1, 2);
        let specs = cfg.attack_specs(5);
        let ids: Vec<String> = specs.iter().map(|s| s.id()).collect();
        assert_eq!(ids, ATTACK_IDS.to_vec());
    }

    #[test]
    fn config_hash_is_stable_and_sensitive() {
        let a = ExperimentConfig::synthetic(10, 10, 1, 2);
        let b = ExperimentConfig::synthetic(10, 10, 1, 2);
        assert_eq!(a.hash(), b.hash());
        let mut c = ExperimentConfig::synthetic(10, 10, 1, 2);
        c.master_seed = 3;
        assert_ne!(a.hash(), c.hash());
    }
}
