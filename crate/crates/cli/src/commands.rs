//! Subcommand implementations.

use std::fs::File;
use std::io::{BufWriter, Write as _};
use std::path::Path;

use anyhow::{anyhow, Context};

use pwdbench_core::classifiers::{self, Algorithm, TrainingConfig};
use pwdbench_core::corpus::{self, Label};
use pwdbench_core::evasion::{
    generate_adversarial, msp_apply, psp_apply, AttackSpecFile, IntegrityRuleSet,
};
use pwdbench_core::features::{
    self,
    io::{read_feature_csv, write_adversarial_csv, write_feature_csv, FeatureRow},
    FeatureSetId, OfflineLookupProvider, ThresholdConfig,
};
use pwdbench_core::harness::{run_experiment, ExperimentConfig, ExperimentReport};
use pwdbench_core::{report as report_mod, stats};

/// Failure carrying its process exit code: 1 runtime, 2 usage/config.
pub struct AppError {
    pub code: u8,
    pub message: anyhow::Error,
}

pub type AppResult = Result<(), AppError>;

fn usage<E: Into<anyhow::Error>>(e: E) -> AppError {
    AppError {
        code: 2,
        message: e.into(),
    }
}

fn runtime<E: Into<anyhow::Error>>(e: E) -> AppError {
    AppError {
        code: 1,
        message: e.into(),
    }
}

fn load_thresholds(path: Option<&Path>) -> Result<ThresholdConfig, AppError> {
    match path {
        Some(p) => ThresholdConfig::from_path(p).map_err(usage),
        None => Ok(ThresholdConfig::default_config().clone()),
    }
}

pub fn extract(manifest: &Path, thresholds: Option<&Path>, out: &Path) -> AppResult {
    let cfg = load_thresholds(thresholds)?;
    if !manifest.is_file() {
        return Err(usage(anyhow!("manifest not found: {}", manifest.display())));
    }
    let dataset = corpus::load_manifest(manifest).map_err(runtime)?;
    let dir = manifest.parent().unwrap_or(Path::new("."));
    let provider = OfflineLookupProvider::load_sidecars(dir, &dataset);
    let file = File::create(out)
        .with_context(|| format!("cannot create {}", out.display()))
        .map_err(usage)?;
    let rows = dataset.samples.iter().map(|page| {
        let (vector, _) = features::extract(page, &provider, &cfg);
        FeatureRow {
            id: page.id.clone(),
            label: page.label,
            values: vector.values,
        }
    });
    write_feature_csv(BufWriter::new(file), rows).map_err(runtime)?;
    log::info!("wrote {} rows to {}", dataset.len(), out.display());
    Ok(())
}

pub fn synth(benign: u64, phish: u64, seed: u64, out: &Path) -> AppResult {
    let dataset = corpus::synth_generate(benign, phish, seed).map_err(usage)?;
    std::fs::create_dir_all(out)
        .with_context(|| format!("cannot create {}", out.display()))
        .map_err(usage)?;
    let manifest = corpus::write_manifest(&dataset, out).map_err(runtime)?;
    println!("{}", manifest.display());
    Ok(())
}

pub fn train(features_csv: &Path, algo: &str, set: &str, seed: u64, out: &Path) -> AppResult {
    let algorithm =
        Algorithm::parse(algo).ok_or_else(|| usage(anyhow!("unknown algorithm `{algo}`")))?;
    let feature_set =
        FeatureSetId::parse(set).ok_or_else(|| usage(anyhow!("unknown feature set `{set}`")))?;
    if !features_csv.is_file() {
        return Err(usage(anyhow!(
            "feature csv not found: {}",
            features_csv.display()
        )));
    }
    let rows = read_feature_csv(features_csv).map_err(runtime)?;
    let data: Vec<(Vec<i8>, Label)> = rows
        .iter()
        .map(|r| (features::project_values(&r.values, feature_set), r.label))
        .collect();
    let cfg = TrainingConfig::new(algorithm, feature_set, seed);
    let model = classifiers::train(&cfg, &data).map_err(runtime)?;
    model.save(out).map_err(runtime)?;
    let metrics = classifiers::evaluate(&model, &data).map_err(runtime)?;
    log::info!(
        "trained {algorithm}/{feature_set}: training tpr {:.3} fpr {:.3}",
        metrics.tpr,
        metrics.fpr
    );
    Ok(())
}

pub fn attack(
    spec_path: &Path,
    basis: &Path,
    thresholds: Option<&Path>,
    out: &Path,
) -> AppResult {
    let spec_text = std::fs::read_to_string(spec_path)
        .with_context(|| format!("cannot read attack spec {}", spec_path.display()))
        .map_err(usage)?;
    let spec_file: AttackSpecFile = toml::from_str(&spec_text)
        .with_context(|| format!("invalid attack spec {}", spec_path.display()))
        .map_err(usage)?;
    let (spec, rules_path) = spec_file.into_spec().map_err(usage)?;
    let rules = match rules_path {
        Some(p) => IntegrityRuleSet::from_path(&p).map_err(usage)?,
        None => IntegrityRuleSet::default_rules().clone(),
    };
    let cfg = load_thresholds(thresholds)?;

    let is_csv = basis
        .extension()
        .map(|e| e.eq_ignore_ascii_case("csv"))
        .unwrap_or(false)
        && read_feature_csv(basis).is_ok();

    let out_file = File::create(out)
        .with_context(|| format!("cannot create {}", out.display()))
        .map_err(usage)?;
    let writer = BufWriter::new(out_file);

    if is_csv {
        if spec.family.is_website_space() {
            return Err(usage(anyhow!(
                "family {} needs raw pages; supply a manifest, not a feature csv",
                spec.family
            )));
        }
        let rows = read_feature_csv(basis).map_err(runtime)?;
        let mut out_rows = Vec::new();
        for row in rows.into_iter().filter(|r| r.label == Label::Phishing) {
            let vector = row.vector();
            let mutated = match spec.family {
                pwdbench_core::evasion::AttackFamily::Pa => {
                    match psp_apply(&vector, &spec, &rules) {
                        Ok((v, _)) => v,
                        Err(report) => {
                            log::warn!("sample {} skipped: {}", report.sample_id, report.message);
                            continue;
                        }
                    }
                }
                _ => msp_apply(&vector, &spec).0,
            };
            out_rows.push((
                spec.id(),
                FeatureRow {
                    id: row.id,
                    label: row.label,
                    values: mutated.values,
                },
            ));
        }
        write_adversarial_csv(writer, out_rows.into_iter()).map_err(runtime)?;
    } else {
        let dataset = corpus::load_manifest(basis).map_err(runtime)?;
        let dir = basis.parent().unwrap_or(Path::new("."));
        let provider = OfflineLookupProvider::load_sidecars(dir, &dataset);
        let pages: Vec<_> = dataset
            .samples
            .iter()
            .filter(|p| p.label == Label::Phishing)
            .cloned()
            .collect();
        if pages.is_empty() {
            return Err(runtime(anyhow!("basis contains no phishing samples")));
        }
        let batch =
            generate_adversarial(&spec, &pages, &provider, &cfg, &rules).map_err(runtime)?;
        let rows = batch.vectors.into_iter().map(|v| {
            (
                spec.id(),
                FeatureRow {
                    id: v.source_id.clone(),
                    label: Label::Phishing,
                    values: v.values,
                },
            )
        });
        write_adversarial_csv(writer, rows).map_err(runtime)?;
        for skip in batch.skipped {
            log::warn!("sample {} skipped: {}", skip.sample_id, skip.message);
        }
    }
    Ok(())
}

pub fn experiment(config: &Path, out: &Path, workers: Option<usize>) -> AppResult {
    let mut cfg = ExperimentConfig::from_path(config).map_err(usage)?;
    if let Some(w) = workers {
        cfg.workers = w;
    }
    std::fs::create_dir_all(out)
        .with_context(|| format!("cannot create {}", out.display()))
        .map_err(usage)?;
    let report = run_experiment(&cfg).map_err(runtime)?;
    write_experiment_outputs(&report, out).map_err(runtime)?;
    println!("{}", out.join("report.json").display());
    Ok(())
}

fn write_experiment_outputs(report: &ExperimentReport, out: &Path) -> anyhow::Result<()> {
    report.save(&out.join("report.json"))?;
    std::fs::write(out.join("report.csv"), report_mod::flattened_csv(report))?;
    let significance = stats::significance_table(report, 0.05);
    std::fs::write(out.join("significance.csv"), significance.to_csv_string())?;
    for (name, svg) in report_mod::charts(report) {
        std::fs::write(out.join(name), svg)?;
    }
    Ok(())
}

pub fn report(input: &Path, format: &str, out: Option<&Path>) -> AppResult {
    let report = ExperimentReport::load(input).map_err(|e| {
        use pwdbench_core::harness::HarnessError;
        match e {
            HarnessError::SchemaVersion { .. } | HarnessError::Io(_) => usage(e),
            other => runtime(other),
        }
    })?;
    if report
        .datasets
        .iter()
        .all(|d| d.aggregates.n_successful_trials == 0)
    {
        return Err(runtime(anyhow!("no successful trials in {}", input.display())));
    }
    let significance = stats::significance_table(&report, 0.05);
    match format {
        "text" => {
            let mut stdout = std::io::stdout().lock();
            write!(
                stdout,
                "{}",
                report_mod::baseline_table(&report, &significance)
            )
            .map_err(runtime)?;
            write!(stdout, "{}", significance.to_text_matrix()).map_err(runtime)?;
        }
        "csv" => {
            let mut stdout = std::io::stdout().lock();
            write!(stdout, "{}", report_mod::baseline_csv(&report)).map_err(runtime)?;
            write!(stdout, "{}", significance.to_csv_string()).map_err(runtime)?;
        }
        "svg" => {
            let dir = out.ok_or_else(|| usage(anyhow!("--out DIR is required for svg")))?;
            std::fs::create_dir_all(dir)
                .with_context(|| format!("cannot create {}", dir.display()))
                .map_err(usage)?;
            for (name, svg) in report_mod::charts(&report) {
                std::fs::write(dir.join(&name), svg)
                    .with_context(|| format!("cannot write {name}"))
                    .map_err(runtime)?;
            }
        }
        other => return Err(usage(anyhow!("unknown format `{other}`"))),
    }
    Ok(())
}
