//! Report rendering: flattened CSV, mean/std tables, and SVG grouped-bar
//! charts of tpr per detector and condition.

use crate::harness::{detector_grid, DatasetReport, ExperimentReport, DETECTOR_IDS};
use crate::stats::SignificanceTable;

/// Flattened CSV: one row per trial x detector x condition. Conditions are
/// `baseline` (full inference partition, tpr and fpr), `no-atk` (basis
/// samples), and one per attack id.
pub fn flattened_csv(report: &ExperimentReport) -> String {
    let attack_ids: Vec<String> = report
        .config
        .attack_specs(0)
        .iter()
        .map(|s| s.id())
        .collect();
    let mut out = String::from("dataset,trial,detector,condition,tpr,fpr\n");
    for ds in &report.datasets {
        for trial in &ds.trials {
            let Some(result) = &trial.result else {
                continue;
            };
            for (d, detector) in DETECTOR_IDS.iter().enumerate() {
                let m = &result.baselines[d];
                out.push_str(&format!(
                    "{},{},{},baseline,{:.6},{:.6}\n",
                    ds.dataset, trial.trial_index, detector, m.tpr, m.fpr
                ));
                out.push_str(&format!(
                    "{},{},{},no-atk,{:.6},\n",
                    ds.dataset, trial.trial_index, detector, result.basis_tpr[d]
                ));
                for (a, attack) in attack_ids.iter().enumerate() {
                    out.push_str(&format!(
                        "{},{},{},{},{:.6},\n",
                        ds.dataset, trial.trial_index, detector, attack, result.attack_tpr[d][a]
                    ));
                }
            }
        }
    }
    out
}

/// Baseline table: mean +/- std tpr and fpr per detector, one block per
/// dataset, with a column counting attacks significant at the table's alpha.
pub fn baseline_table(report: &ExperimentReport, significance: &SignificanceTable) -> String {
    let mut out = String::new();
    for ds in &report.datasets {
        out.push_str(&format!(
            "[{}] {} successful trials\n",
            ds.dataset, ds.aggregates.n_successful_trials
        ));
        out.push_str(&format!(
            "{:<10}{:>18}{:>18}{:>24}\n",
            "detector", "tpr", "fpr", "significant attacks"
        ));
        for (d, detector) in DETECTOR_IDS.iter().enumerate() {
            let tpr = &ds.aggregates.baseline_tpr[d];
            let fpr = &ds.aggregates.baseline_fpr[d];
            let significant: Vec<&str> = significance
                .cells
                .iter()
                .filter(|c| {
                    c.dataset == ds.dataset
                        && c.detector == *detector
                        && c.significant == Some(true)
                })
                .map(|c| c.attack.as_str())
                .collect();
            let marker = if significant.is_empty() {
                "-".to_string()
            } else {
                significant.join(" ")
            };
            out.push_str(&format!(
                "{:<10}{:>9.3}±{:<8.3}{:>9.3}±{:<8.3}{:>24}\n",
                detector, tpr.mean, tpr.std, fpr.mean, fpr.std, marker
            ));
        }
        out.push('\n');
    }
    out
}

/// Baseline table as CSV.
pub fn baseline_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("dataset,detector,tpr_mean,tpr_std,fpr_mean,fpr_std\n");
    for ds in &report.datasets {
        for (d, detector) in DETECTOR_IDS.iter().enumerate() {
            let tpr = &ds.aggregates.baseline_tpr[d];
            let fpr = &ds.aggregates.baseline_fpr[d];
            out.push_str(&format!(
                "{},{},{:.6},{:.6},{:.6},{:.6}\n",
                ds.dataset, detector, tpr.mean, tpr.std, fpr.mean, fpr.std
            ));
        }
    }
    out
}

const BAR_COLORS: [&str; 5] = ["#2e7d32", "#c62828", "#ef6c00", "#6a1b9a", "#1565c0"];

fn condition_color(condition: &str) -> &'static str {
    if condition == "no-atk" {
        BAR_COLORS[0]
    } else if condition.starts_with("WA_ADV") {
        BAR_COLORS[2]
    } else if condition.starts_with("WA") {
        BAR_COLORS[1]
    } else if condition.starts_with("PA") {
        BAR_COLORS[3]
    } else {
        BAR_COLORS[4]
    }
}

/// Grouped-bar SVG for one algorithm of one dataset: three groups (feature
/// sets c, u, r), one bar per condition (no-atk plus each attack).
fn algorithm_chart(ds: &DatasetReport, algorithm_label: &str, detector_rows: &[usize], attack_ids: &[String]) -> String {
    let conditions: Vec<String> = std::iter::once("no-atk".to_string())
        .chain(attack_ids.iter().cloned())
        .collect();
    let groups = ["F^c", "F^u", "F^r"];
    // detector_rows come in grid order (u, r, c); display order is c, u, r
    let display_order = [2usize, 0, 1];

    let bar_w = 14.0;
    let bar_gap = 3.0;
    let group_gap = 40.0;
    let group_w = conditions.len() as f64 * (bar_w + bar_gap);
    let margin_left = 50.0;
    let margin_top = 40.0;
    let plot_h = 240.0;
    let width = margin_left + 3.0 * (group_w + group_gap) + 20.0;
    let height = margin_top + plot_h + 90.0;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" \
         viewBox=\"0 0 {width:.0} {height:.0}\" font-family=\"sans-serif\" font-size=\"11\">\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{:.0}\" y=\"20\" font-size=\"14\">{} — tpr by condition ({})</text>\n",
        margin_left,
        algorithm_label,
        ds.dataset
    ));
    // y axis with gridlines
    for tick in 0..=5 {
        let frac = tick as f64 / 5.0;
        let y = margin_top + plot_h * (1.0 - frac);
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#ddd\"/>\n",
            margin_left,
            width - 10.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{frac:.1}</text>\n",
            margin_left - 6.0,
            y + 4.0
        ));
    }

    for (g, &row_pick) in display_order.iter().enumerate() {
        let detector_idx = detector_rows[row_pick];
        let x0 = margin_left + g as f64 * (group_w + group_gap);
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\">{}</text>\n",
            x0 + group_w / 2.0 - 10.0,
            margin_top + plot_h + 30.0,
            groups[g]
        ));
        for (c, condition) in conditions.iter().enumerate() {
            let value = if c == 0 {
                ds.aggregates.basis_tpr[detector_idx].mean
            } else {
                ds.aggregates.attack_tpr[detector_idx][c - 1].mean
            };
            let value = if value.is_finite() { value.clamp(0.0, 1.0) } else { 0.0 };
            let h = plot_h * value;
            let x = x0 + c as f64 * (bar_w + bar_gap);
            let y = margin_top + plot_h - h;
            svg.push_str(&format!(
                "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{bar_w:.1}\" height=\"{h:.1}\" \
                 fill=\"{}\"><title>{} {}: {value:.3}</title></rect>\n",
                condition_color(condition),
                groups[g],
                condition
            ));
        }
    }
    // legend
    let legend_y = margin_top + plot_h + 50.0;
    let mut lx = margin_left;
    for (label, color) in [
        ("no-atk", BAR_COLORS[0]),
        ("WA", BAR_COLORS[1]),
        ("WA_ADV", BAR_COLORS[2]),
        ("PA", BAR_COLORS[3]),
        ("MA", BAR_COLORS[4]),
    ] {
        svg.push_str(&format!(
            "<rect x=\"{lx:.1}\" y=\"{:.1}\" width=\"12\" height=\"12\" fill=\"{color}\"/>\n",
            legend_y
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\">{label}</text>\n",
            lx + 16.0,
            legend_y + 10.0
        ));
        lx += 80.0;
    }
    svg.push_str("</svg>\n");
    svg
}

/// One SVG chart per (dataset, algorithm): returns (file name, svg text).
pub fn charts(report: &ExperimentReport) -> Vec<(String, String)> {
    let attack_ids: Vec<String> = report
        .config
        .attack_specs(0)
        .iter()
        .map(|s| s.id())
        .collect();
    let grid = detector_grid();
    let mut out = Vec::new();
    for ds in &report.datasets {
        for algorithm in crate::classifiers::Algorithm::ALL {
            let rows: Vec<usize> = (0..grid.len()).filter(|&i| grid[i].0 == algorithm).collect();
            let label = algorithm.as_str().to_ascii_uppercase();
            let svg = algorithm_chart(ds, &label, &rows, &attack_ids);
            out.push((format!("chart_{}_{}.svg", ds.dataset, algorithm.as_str()), svg));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::Metrics;
    use crate::harness::{
        Aggregates, CellStat, DatasetReport, ExperimentConfig, TrialOutcome, TrialResult,
        ATTACK_IDS, REPORT_SCHEMA_VERSION,
    };

    fn tiny_report() -> ExperimentReport {
        let cfg = {
            let mut c = ExperimentConfig::synthetic(10, 10, 1, 2);
            c.n_trials = 2;
            c
        };
        let metrics = Metrics {
            tpr: 0.9,
            fpr: 0.05,
            n_pos: 10,
            n_neg: 10,
        };
        let result = TrialResult {
            baselines: vec![metrics; 9],
            basis_ids: vec!["p1".into()],
            basis_tpr: vec![1.0; 9],
            attack_tpr: vec![vec![0.5; 12]; 9],
            isolation_candidates: 10,
            adversarial_vectors: 12,
            skipped: vec![0; 12],
        };
        let trials = vec![
            TrialOutcome {
                trial_index: 0,
                trial_seed: 1,
                models_trained: 9,
                result: Some(result.clone()),
                failure: None,
            },
            TrialOutcome {
                trial_index: 1,
                trial_seed: 2,
                models_trained: 9,
                result: Some(result),
                failure: None,
            },
        ];
        let stat = CellStat { mean: 0.9, std: 0.0 };
        let aggregates = Aggregates {
            n_successful_trials: 2,
            baseline_tpr: vec![stat; 9],
            baseline_fpr: vec![CellStat { mean: 0.05, std: 0.0 }; 9],
            basis_tpr: vec![CellStat { mean: 1.0, std: 0.0 }; 9],
            attack_tpr: vec![vec![CellStat { mean: 0.5, std: 0.0 }; 12]; 9],
        };
        ExperimentReport {
            schema_version: REPORT_SCHEMA_VERSION,
            config_hash: cfg.hash(),
            code_version: "test".into(),
            config: cfg,
            datasets: vec![DatasetReport {
                dataset: "synthetic".into(),
                trials,
                aggregates,
                models_trained: 18,
                adversarial_vectors: 24,
            }],
        }
    }

    #[test]
    fn flattened_csv_row_count() {
        let report = tiny_report();
        let csv = flattened_csv(&report);
        // header + trials x detectors x (baseline + no-atk + 12 attacks)
        let expected = 1 + 2 * 9 * (1 + 1 + ATTACK_IDS.len());
        assert_eq!(csv.lines().count(), expected);
    }

    #[test]
    fn charts_one_per_dataset_algorithm() {
        let report = tiny_report();
        let charts = charts(&report);
        assert_eq!(charts.len(), 3);
        for (name, svg) in charts {
            assert!(name.ends_with(".svg"));
            assert!(svg.starts_with("<svg"));
            assert!(svg.contains("</svg>"));
            // one bar per condition per group
            assert_eq!(svg.matches("<rect").count(), 3 * 13 + 5);
        }
    }

    #[test]
    fn baseline_table_mentions_every_detector() {
        let report = tiny_report();
        let table = baseline_table(&report, &crate::stats::significance_table(&report, 0.05));
        for d in DETECTOR_IDS {
            assert!(table.contains(d), "missing {d}");
        }
    }
}
