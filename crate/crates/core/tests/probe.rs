//! Temporary diagnostics probe (deleted before release).

use pwdbench_core::classifiers::Algorithm;
use pwdbench_core::corpus::{synth_generate, Label};
use pwdbench_core::features::{
    extract, feature_index, FeatureSetId, OfflineLookupProvider, ThresholdConfig, FEATURE_NAMES,
};
use pwdbench_core::harness::{
    bookkeeping, detector_ordinal, run_experiment, ExperimentConfig, ATTACK_IDS, DETECTOR_IDS,
};

#[test]
#[ignore]
fn probe_feature_distribution() {
    let data = synth_generate(500, 500, 7).unwrap();
    let provider = OfflineLookupProvider::empty();
    let cfg = ThresholdConfig::default_config();
    let mut pole_counts = vec![[0usize; 3]; 57]; // [-1,0,1] per feature for phishing
    let mut benign_counts = vec![[0usize; 3]; 57];
    for page in &data.samples {
        let (v, _) = extract(page, &provider, cfg);
        for (i, val) in v.values.iter().enumerate() {
            let slot = (*val + 1) as usize;
            if page.label == Label::Phishing {
                pole_counts[i][slot] += 1;
            } else {
                benign_counts[i][slot] += 1;
            }
        }
    }
    println!("feature | benign(-1/0/+1) | phish(-1/0/+1)");
    for i in 0..57 {
        println!(
            "{:>2} {:<18} | {:>3}/{:>3}/{:>3} | {:>3}/{:>3}/{:>3}",
            i + 1,
            FEATURE_NAMES[i],
            benign_counts[i][0],
            benign_counts[i][1],
            benign_counts[i][2],
            pole_counts[i][0],
            pole_counts[i][1],
            pole_counts[i][2]
        );
    }
    let len_idx = feature_index("URL_length").unwrap();
    let pole_frac = pole_counts[len_idx][2] as f64 / 500.0;
    println!("URL_length phishing-pole fraction: {pole_frac:.3}");
}

#[test]
#[ignore]
fn probe_experiment() {
    let mut cfg = ExperimentConfig::synthetic(1000, 1000, 7, 42);
    cfg.n_trials = 3;
    cfg.n_isolate = 100;
    cfg.workers = 4;
    let plan = bookkeeping(&cfg);
    println!("plan: {plan:?}");
    let start = std::time::Instant::now();
    let report = run_experiment(&cfg).unwrap();
    println!("elapsed: {:?}", start.elapsed());
    let ds = &report.datasets[0];
    println!("models_trained={} adversarial={}", ds.models_trained, ds.adversarial_vectors);
    for (d, id) in DETECTOR_IDS.iter().enumerate() {
        let tpr = ds.aggregates.baseline_tpr[d];
        let fpr = ds.aggregates.baseline_fpr[d];
        println!(
            "{id}: tpr {:.3}±{:.3} fpr {:.3}±{:.3} basis {:.3}",
            tpr.mean, tpr.std, fpr.mean, fpr.std, ds.aggregates.basis_tpr[d].mean
        );
    }
    println!("\nattack tpr per detector:");
    for (d, id) in DETECTOR_IDS.iter().enumerate() {
        let row: Vec<String> = ATTACK_IDS
            .iter()
            .enumerate()
            .map(|(a, atk)| format!("{atk}={:.3}", ds.aggregates.attack_tpr[d][a].mean))
            .collect();
        println!("{id}: {}", row.join(" "));
    }
    // f^c mean per family^c
    let fc: Vec<usize> = Algorithm::ALL
        .iter()
        .map(|&a| detector_ordinal(a, FeatureSetId::C))
        .collect();
    for atk in ["WA^c", "WA_ADV^c", "PA^c", "MA^c"] {
        let a_idx = ATTACK_IDS.iter().position(|x| *x == atk).unwrap();
        let mean: f64 = fc
            .iter()
            .map(|&d| ds.aggregates.attack_tpr[d][a_idx].mean)
            .sum::<f64>()
            / 3.0;
        println!("F^c mean tpr under {atk}: {mean:.3}");
    }
}
