//! Cross-module integration: synthetic corpus through extraction, training,
//! attacks and trials.

use std::collections::BTreeSet;

use pwdbench_core::classifiers::{
    self, evaluate, forest, train, Algorithm, Model, ModelParams, TrainingConfig,
    MODEL_SCHEMA_VERSION,
};
use pwdbench_core::corpus::{self, synth_generate, Label, Webpage};
use pwdbench_core::evasion::{
    generate_adversarial, wsp_add_hidden_links, AttackSpec, IntegrityRuleSet,
};
use pwdbench_core::features::{
    extract, feature_index, object_census, parse_url, project_values, FeatureSetId,
    OfflineLookupProvider, ThresholdConfig, N_FEATURES,
};
use pwdbench_core::harness::{
    detector_ordinal, isolate, run_experiment, run_trial, ExperimentConfig, ExperimentContext,
    ATTACK_IDS, DETECTOR_IDS,
};
use pwdbench_core::seed;

fn provider() -> OfflineLookupProvider {
    OfflineLookupProvider::empty()
}

fn thresholds() -> &'static ThresholdConfig {
    ThresholdConfig::default_config()
}

fn labeled_vectors(pages: &[Webpage], set: FeatureSetId) -> Vec<(Vec<i8>, Label)> {
    let provider = provider();
    pages
        .iter()
        .map(|p| {
            let (v, _) = extract(p, &provider, thresholds());
            (project_values(&v.values, set), p.label)
        })
        .collect()
}

#[test]
fn phishing_pole_url_length_on_most_phishing_samples() {
    let data = synth_generate(1, 1000, 7).unwrap();
    let provider = provider();
    let idx = feature_index("URL_length").unwrap();
    let pole = data
        .samples
        .iter()
        .filter(|p| p.label == Label::Phishing)
        .filter(|p| extract(p, &provider, thresholds()).0.values[idx] == 1)
        .count();
    assert!(pole >= 600, "URL_length phishing-pole on {pole}/1000");
}

#[test]
fn feature_removal_costs_detection_power() {
    // expectation over seeds: the combined detector is at least as good as
    // the projected ones, within a small noise margin
    let mean = |set: FeatureSetId| -> f64 {
        let mut total = 0.0;
        for trial_seed in 0..10u64 {
            let data = synth_generate(260, 260, 900 + trial_seed).unwrap();
            let part = corpus::split(&data, trial_seed, 0.8).unwrap();
            let train_pages: Vec<Webpage> = part.train_iter().cloned().collect();
            let infer_pages: Vec<Webpage> = part.infer_iter().cloned().collect();
            let mut cfg = TrainingConfig::new(Algorithm::Rf, set, trial_seed);
            cfg.rf.n_trees = 40;
            let model = train(&cfg, &labeled_vectors(&train_pages, set)).unwrap();
            total += evaluate(&model, &labeled_vectors(&infer_pages, set))
                .unwrap()
                .tpr;
        }
        total / 10.0
    };
    let tpr_c = mean(FeatureSetId::C);
    let tpr_u = mean(FeatureSetId::U);
    let tpr_r = mean(FeatureSetId::R);
    assert!(tpr_c >= tpr_u - 0.02, "tpr_c={tpr_c} tpr_u={tpr_u}");
    assert!(tpr_c >= tpr_r - 0.02, "tpr_c={tpr_c} tpr_r={tpr_r}");
}

#[test]
fn hidden_link_injection_moves_only_link_structure_features() {
    let mut html = String::from("<html><body><p>verify account</p>");
    for i in 0..12 {
        html.push_str(&format!("<a href=\"https://brand{i}.com/\">b</a>"));
    }
    html.push_str("</body></html>");
    let page = Webpage::new(
        "appb",
        "https://x9k2-verify.example-host.xyz/login",
        html.into_bytes(),
        Label::Phishing,
    );
    let provider = provider();
    let (before, _) = extract(&page, &provider, thresholds());
    let mutated = page.with_html(wsp_add_hidden_links(&page.html, 12, "", 3).unwrap());
    let (after, _) = extract(&mutated, &provider, thresholds());
    let allowed: BTreeSet<usize> = [
        feature_index("HTML_freqDom").unwrap(),
        feature_index("HTML_objectRatio").unwrap(),
        feature_index("HTML_commPage").unwrap(),
        feature_index("HTML_nullLnkWeb").unwrap(),
        feature_index("HTML_anchors").unwrap(),
    ]
    .into_iter()
    .collect();
    let diff = before.diff_indices(&after);
    assert!(
        diff.contains(&feature_index("HTML_objectRatio").unwrap()),
        "object ratio must move"
    );
    for idx in &diff {
        assert!(allowed.contains(idx), "unexpected change at index {idx}");
    }
}

#[test]
fn hidden_links_never_increase_external_ratio() {
    let data = synth_generate(1, 40, 17).unwrap();
    for page in &data.samples {
        let parts = parse_url(&page.url);
        let before = object_census(&page.html, &parts)
            .external_ratio()
            .unwrap_or(0.0);
        for k in [1usize, 3, 10, 25] {
            let html = wsp_add_hidden_links(&page.html, k, "", 5).unwrap();
            let after = object_census(&html, &parts).external_ratio().unwrap_or(0.0);
            assert!(
                after <= before + 1e-12,
                "{}: ratio rose from {before} to {after} at k={k}",
                page.id
            );
        }
    }
}

fn constant_model(posterior: f64, set: FeatureSetId) -> Model {
    Model {
        schema_version: MODEL_SCHEMA_VERSION,
        config: TrainingConfig::new(Algorithm::Rf, set, 0),
        params: ModelParams::Rf(forest::RfModel {
            trees: vec![forest::Tree {
                nodes: vec![forest::TreeNode {
                    feature: -1,
                    threshold: 0.0,
                    left: 0,
                    right: 0,
                    posterior,
                }],
            }],
        }),
    }
}

#[test]
fn isolate_contract() {
    let data = synth_generate(5, 160, 21).unwrap();
    let phish: Vec<Webpage> = data
        .samples
        .iter()
        .filter(|p| p.label == Label::Phishing)
        .cloned()
        .collect();
    let provider = provider();

    // a perfect detector takes the first n in partition order
    let perfect = constant_model(1.0, FeatureSetId::C);
    let (basis, examined) = isolate(&perfect, &phish, 100, &provider, thresholds()).unwrap();
    assert_eq!(examined, 100);
    let expected: Vec<&str> = phish[..100].iter().map(|p| p.id.as_str()).collect();
    let got: Vec<&str> = basis.iter().map(|p| p.id.as_str()).collect();
    assert_eq!(got, expected);

    // a blind detector yields a shortfall carrying the achievable count
    let blind = constant_model(0.0, FeatureSetId::C);
    let err = isolate(&blind, &phish, 100, &provider, thresholds()).unwrap_err();
    assert!(err.to_string().contains("0 of 100"), "{err}");

    // every returned sample re-scores as phishing under a real model
    let data = synth_generate(160, 160, 22).unwrap();
    let part = corpus::split(&data, 1, 0.8).unwrap();
    let train_pages: Vec<Webpage> = part.train_iter().cloned().collect();
    let mut cfg = TrainingConfig::new(Algorithm::Rf, FeatureSetId::C, 5);
    cfg.rf.n_trees = 30;
    let model = train(&cfg, &labeled_vectors(&train_pages, FeatureSetId::C)).unwrap();
    let (basis, _) = isolate(&model, &part.infer_phish, 20, &provider, thresholds()).unwrap();
    let basis_pages: Vec<Webpage> = basis.into_iter().cloned().collect();
    let tpr = classifiers::tpr_on_positives(
        &model,
        &labeled_vectors(&basis_pages, FeatureSetId::C)
            .into_iter()
            .map(|(v, _)| v)
            .collect::<Vec<_>>(),
    )
    .unwrap();
    assert_eq!(tpr, 1.0);
}

fn small_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::synthetic(260, 260, 5, 99);
    cfg.n_trials = 3;
    cfg.n_isolate = 30;
    cfg.workers = 2;
    cfg.classifiers.rf.n_trees = 30;
    cfg.classifiers.nn.epochs = 10;
    cfg
}

#[test]
fn trials_are_deterministic_and_leak_free() {
    let cfg = small_config();
    let spec = &cfg.datasets[0];
    let dataset = pwdbench_core::harness::load_dataset(spec).unwrap();
    let ctx = ExperimentContext::for_config(&cfg, spec, &dataset).unwrap();

    let a = run_trial(&cfg, &dataset, &ctx, 1);
    let b = run_trial(&cfg, &dataset, &ctx, 1);
    assert_eq!(a, b);
    let result = a.result.expect("trial succeeds");

    // adversarial sets share the basis across detectors by construction;
    // verify the basis is disjoint from this trial's training partition
    let trial_seed = seed::mix(cfg.master_seed, 1);
    assert_eq!(a.trial_seed, trial_seed);
    let part = corpus::split(&dataset, trial_seed, cfg.train_fraction).unwrap();
    let train_ids: BTreeSet<String> = part.train_iter().map(|p| p.id.clone()).collect();
    assert!(pwdbench_core::harness::check_no_leakage(&result, &train_ids));
    assert_eq!(result.baselines.len(), DETECTOR_IDS.len());
    assert_eq!(result.attack_tpr.len(), DETECTOR_IDS.len());
    assert_eq!(result.attack_tpr[0].len(), ATTACK_IDS.len());
    assert_eq!(result.adversarial_vectors, 30 * 12);
}

#[test]
fn locality_across_attack_and_detector_spaces() {
    let cfg = small_config();
    let spec = &cfg.datasets[0];
    let dataset = pwdbench_core::harness::load_dataset(spec).unwrap();
    let ctx = ExperimentContext::for_config(&cfg, spec, &dataset).unwrap();
    let outcome = run_trial(&cfg, &dataset, &ctx, 0);
    let result = outcome.result.expect("trial succeeds");

    let u_detectors: Vec<usize> = Algorithm::ALL
        .iter()
        .map(|&a| detector_ordinal(a, FeatureSetId::U))
        .collect();
    let r_detectors: Vec<usize> = Algorithm::ALL
        .iter()
        .map(|&a| detector_ordinal(a, FeatureSetId::R))
        .collect();
    for (a_idx, attack) in ATTACK_IDS.iter().enumerate() {
        if attack.ends_with("^r") {
            for &d in &u_detectors {
                assert_eq!(
                    result.attack_tpr[d][a_idx], result.basis_tpr[d],
                    "{attack} vs {}",
                    DETECTOR_IDS[d]
                );
            }
        }
        if attack.ends_with("^u") {
            for &d in &r_detectors {
                assert_eq!(
                    result.attack_tpr[d][a_idx], result.basis_tpr[d],
                    "{attack} vs {}",
                    DETECTOR_IDS[d]
                );
            }
        }
    }
}

#[test]
fn experiment_is_schedule_independent() {
    let mut serial = small_config();
    serial.workers = 1;
    let mut parallel = small_config();
    parallel.workers = 4;
    let a = run_experiment(&serial).unwrap();
    let b = run_experiment(&parallel).unwrap();
    // reports differ only in the echoed worker count
    assert_eq!(
        serde_json::to_string(&a.datasets).unwrap(),
        serde_json::to_string(&b.datasets).unwrap()
    );
}

#[test]
fn report_round_trip_checks_aggregates() {
    let cfg = small_config();
    let report = run_experiment(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    report.save(&path).unwrap();
    let loaded = pwdbench_core::harness::ExperimentReport::load(&path).unwrap();
    assert_eq!(report, loaded);

    // tamper with an aggregate: load must reject
    let text = std::fs::read_to_string(&path).unwrap();
    let ds = &report.datasets[0].aggregates.baseline_tpr[0];
    // the persisted report is pretty-printed
    let needle = format!("\"mean\": {}", serde_json::to_string(&ds.mean).unwrap());
    let tampered = text.replacen(&needle, "\"mean\":0.123456789", 1);
    assert_ne!(text, tampered, "tamper needle not found");
    let tampered_path = dir.path().join("tampered.json");
    std::fs::write(&tampered_path, tampered).unwrap();
    let err = pwdbench_core::harness::ExperimentReport::load(&tampered_path).unwrap_err();
    assert!(err.to_string().contains("aggregates"), "{err}");
}

#[test]
fn significance_table_has_all_cells() {
    let cfg = small_config();
    let report = run_experiment(&cfg).unwrap();
    let table = pwdbench_core::stats::significance_table(&report, 0.05);
    assert_eq!(table.cells.len(), DETECTOR_IDS.len() * ATTACK_IDS.len());
    for cell in &table.cells {
        if let (Ok(test), Some(sig)) = (&cell.test, cell.significant) {
            assert_eq!(sig, test.p_value < 0.05);
        }
    }
    // u-attacks against F^r detectors are identical series: p = 1
    for detector in ["LR^r", "RF^r", "NN^r"] {
        for attack in ["WA^u", "WA_ADV^u", "PA^u", "MA^u"] {
            let cell = table.cell("synthetic", detector, attack).unwrap();
            let p = cell.test.as_ref().unwrap().p_value;
            assert_eq!(p, 1.0, "{detector} vs {attack}");
        }
    }
}

#[test]
fn twelve_specs_cover_the_id_table() {
    let specs = AttackSpec::standard_twelve(3, pwdbench_core::evasion::WspMode::AddFakeLinks);
    let ids: Vec<String> = specs.iter().map(|s| s.id()).collect();
    assert_eq!(ids, ATTACK_IDS);
    // family/variant grid is exactly 4 x 3
    let set: BTreeSet<(String, String)> = specs
        .iter()
        .map(|s| (s.family.to_string(), s.variant.to_string()))
        .collect();
    assert_eq!(set.len(), 12);
}

#[test]
fn adversarial_generation_composes_with_all_detectors() {
    let data = synth_generate(80, 80, 31).unwrap();
    let part = corpus::split(&data, 3, 0.8).unwrap();
    let train_pages: Vec<Webpage> = part.train_iter().cloned().collect();
    let basis: Vec<Webpage> = part.infer_phish[..10].to_vec();
    let provider = provider();
    let rules = IntegrityRuleSet::default_rules();
    let mut cfg = TrainingConfig::new(Algorithm::Lr, FeatureSetId::C, 9);
    cfg.lr.epochs = 120;
    let model = train(&cfg, &labeled_vectors(&train_pages, FeatureSetId::C)).unwrap();
    for spec in AttackSpec::standard_twelve(11, pwdbench_core::evasion::WspMode::LinkWrapping) {
        let batch = generate_adversarial(&spec, &basis, &provider, thresholds(), rules).unwrap();
        for v in &batch.vectors {
            let projected = project_values(&v.values, FeatureSetId::C);
            let score = classifiers::predict_score(&model, &projected).unwrap();
            assert!((0.0..=1.0).contains(&score));
        }
    }
}
