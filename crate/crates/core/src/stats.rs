//! Statistical validation: mean/std aggregation and the Welch two-sample
//! t-test used to decide whether an attack's tpr degradation is significant.
//!
//! The Student-t CDF is computed in-house via the regularized incomplete
//! beta function (Lentz continued fraction), targeting 1e-10 accuracy, so
//! the toolkit has no runtime dependency on an external stats library.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::{ExperimentReport, DETECTOR_IDS};

/// Alphas reported by default in [`TestResult::significant_at`].
pub const DEFAULT_ALPHAS: [f64; 3] = [0.01, 0.05, 0.10];

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("series `{0}` is empty")]
    Empty(String),
    #[error("series `{0}` has {1} values; the test needs at least 2")]
    TooShort(String, usize),
    #[error("series `{0}` contains a non-finite value")]
    NonFinite(String),
}

/// A named series of observations (for example per-trial tpr values).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleSeries {
    pub label: String,
    pub values: Vec<f64>,
}

impl SampleSeries {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> SampleSeries {
        SampleSeries {
            label: label.into(),
            values,
        }
    }

    fn check(&self, min_len: usize) -> Result<(), StatsError> {
        if self.values.is_empty() {
            return Err(StatsError::Empty(self.label.clone()));
        }
        if self.values.len() < min_len {
            return Err(StatsError::TooShort(self.label.clone(), self.values.len()));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite(self.label.clone()));
        }
        Ok(())
    }
}

/// Result of a two-sample test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestResult {
    pub t_statistic: f64,
    /// Welch–Satterthwaite degrees of freedom.
    pub degrees_of_freedom: f64,
    /// Two-tailed p-value.
    pub p_value: f64,
    /// (alpha, p < alpha) pairs for the default alpha grid.
    pub significant_at: Vec<(f64, bool)>,
}

impl TestResult {
    pub fn is_significant(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }

    fn new(t: f64, df: f64, p: f64) -> TestResult {
        TestResult {
            t_statistic: t,
            degrees_of_freedom: df,
            p_value: p,
            significant_at: DEFAULT_ALPHAS.iter().map(|&a| (a, p < a)).collect(),
        }
    }
}

/// Natural log of the gamma function (Lanczos approximation), for z > 0.
pub fn ln_gamma(z: f64) -> f64 {
    const COEFFS: [f64; 6] = [
        76.18009172947146,
        -86.50532032941677,
        24.01409824083091,
        -1.231739572450155,
        0.1208650973866179e-2,
        -0.5395239384953e-5,
    ];
    let mut sum = 1.000000000190015;
    for (i, c) in COEFFS.iter().enumerate() {
        sum += c / (z + i as f64 + 1.0);
    }
    let tmp = z + 5.5;
    (z + 0.5) * tmp.ln() - tmp + (2.5066282746310005 * sum / z).ln()
}

/// Regularized incomplete beta function I_x(a, b) for a,b > 0, x in [0,1].
/// Continued fraction evaluated with the modified Lentz method.
pub fn inc_beta(x: f64, a: f64, b: f64) -> f64 {
    if !(0.0..=1.0).contains(&x) || a <= 0.0 || b <= 0.0 {
        return f64::NAN;
    }
    if x == 0.0 {
        return 0.0;
    }
    if x == 1.0 {
        return 1.0;
    }
    // symmetry keeps the continued fraction in its fast-converging region
    if x > (a + 1.0) / (a + b + 2.0) {
        return 1.0 - inc_beta(1.0 - x, b, a);
    }
    let ln_front =
        a * x.ln() + b * (1.0 - x).ln() - (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b));
    let front = ln_front.exp();

    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-15;
    const MAX_ITER: usize = 500;

    let mut c = 1.0;
    let mut d = 1.0 - (a + b) * x / (a + 1.0);
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m_f = m as f64;
        let two_m = 2.0 * m_f;
        // even step
        let numerator = m_f * (b - m_f) * x / ((a + two_m - 1.0) * (a + two_m));
        d = 1.0 + numerator * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + numerator / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        // odd step
        let numerator = -(a + m_f) * (a + b + m_f) * x / ((a + two_m) * (a + two_m + 1.0));
        d = 1.0 + numerator * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + numerator / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    (front * h / a).clamp(0.0, 1.0)
}

/// Two-tailed p-value of a t statistic under `df` degrees of freedom.
pub fn student_t_two_tailed_p(t: f64, df: f64) -> f64 {
    if df <= 0.0 {
        return f64::NAN;
    }
    if !t.is_finite() {
        return 0.0;
    }
    if t == 0.0 {
        return 1.0;
    }
    inc_beta(df / (df + t * t), df / 2.0, 0.5)
}

/// Mean and sample (n-1) standard deviation. A single observation has
/// standard deviation 0 by convention here (aggregate-display convenience).
pub fn mean_std(series: &SampleSeries) -> Result<(f64, f64), StatsError> {
    series.check(1)?;
    let n = series.values.len() as f64;
    let mean = series.values.iter().sum::<f64>() / n;
    if series.values.len() < 2 {
        return Ok((mean, 0.0));
    }
    let var = series
        .values
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / (n - 1.0);
    Ok((mean, var.sqrt()))
}

/// Welch unequal-variance two-sample t-test, two-tailed.
///
/// Zero-variance handling: both series constant and equal gives p = 1;
/// constant and different gives p = 0; a single constant series falls back
/// to the standard formula with its variance term 0.
pub fn welch_t(a: &SampleSeries, b: &SampleSeries) -> Result<TestResult, StatsError> {
    a.check(2)?;
    b.check(2)?;
    let (mean_a, std_a) = mean_std(a)?;
    let (mean_b, std_b) = mean_std(b)?;
    let n_a = a.values.len() as f64;
    let n_b = b.values.len() as f64;
    let var_a = std_a * std_a;
    let var_b = std_b * std_b;

    if var_a == 0.0 && var_b == 0.0 {
        let df = (n_a + n_b - 2.0).max(1.0);
        return Ok(if mean_a == mean_b {
            TestResult::new(0.0, df, 1.0)
        } else {
            let t = if mean_a > mean_b {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            };
            TestResult::new(t, df, 0.0)
        });
    }

    let se_a = var_a / n_a;
    let se_b = var_b / n_b;
    let se2 = se_a + se_b;
    let t = (mean_a - mean_b) / se2.sqrt();
    let mut df_denominator = 0.0;
    if var_a > 0.0 {
        df_denominator += se_a * se_a / (n_a - 1.0);
    }
    if var_b > 0.0 {
        df_denominator += se_b * se_b / (n_b - 1.0);
    }
    let df = se2 * se2 / df_denominator;
    let p = student_t_two_tailed_p(t, df);
    Ok(TestResult::new(t, df, p))
}

/// One cell of the significance table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignificanceCell {
    pub dataset: String,
    pub detector: String,
    pub attack: String,
    pub baseline_mean: f64,
    pub attack_mean: f64,
    /// `Err` carries the reason a cell is degenerate (too few trials, ...).
    pub test: Result<TestResult, String>,
    pub significant: Option<bool>,
}

/// Significance of every (dataset, detector, attack) cell of a report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignificanceTable {
    pub alpha: f64,
    pub cells: Vec<SignificanceCell>,
}

/// Tests, per (detector, attack), the per-trial adversarial tpr series
/// against the per-trial no-attack tpr series on the same basis samples.
pub fn significance_table(report: &ExperimentReport, alpha: f64) -> SignificanceTable {
    let attack_ids: Vec<String> = report
        .config
        .attack_specs(0)
        .iter()
        .map(|s| s.id())
        .collect();
    let mut cells = Vec::new();
    for ds in &report.datasets {
        let trials: Vec<_> = ds.successful_trials().collect();
        for (d_idx, detector) in DETECTOR_IDS.iter().enumerate() {
            let baseline: Vec<f64> = trials.iter().map(|t| t.basis_tpr[d_idx]).collect();
            for (a_idx, attack) in attack_ids.iter().enumerate() {
                let adversarial: Vec<f64> =
                    trials.iter().map(|t| t.attack_tpr[d_idx][a_idx]).collect();
                let series_a = SampleSeries::new(format!("{attack} tpr"), adversarial.clone());
                let series_b = SampleSeries::new("no-atk tpr", baseline.clone());
                let test = welch_t(&series_a, &series_b).map_err(|e| e.to_string());
                let mean_of = |v: &[f64]| {
                    if v.is_empty() {
                        f64::NAN
                    } else {
                        v.iter().sum::<f64>() / v.len() as f64
                    }
                };
                let significant = test.as_ref().ok().map(|t| t.is_significant(alpha));
                cells.push(SignificanceCell {
                    dataset: ds.dataset.clone(),
                    detector: detector.to_string(),
                    attack: attack.clone(),
                    baseline_mean: mean_of(&baseline),
                    attack_mean: mean_of(&adversarial),
                    test,
                    significant,
                });
            }
        }
    }
    SignificanceTable { alpha, cells }
}

impl SignificanceTable {
    pub fn cell(&self, dataset: &str, detector: &str, attack: &str) -> Option<&SignificanceCell> {
        self.cells
            .iter()
            .find(|c| c.dataset == dataset && c.detector == detector && c.attack == attack)
    }

    /// CSV rendering: one row per cell.
    pub fn to_csv_string(&self) -> String {
        let mut out =
            String::from("dataset,detector,attack,baseline_tpr,attack_tpr,t,df,p,significant\n");
        for cell in &self.cells {
            match &cell.test {
                Ok(test) => out.push_str(&format!(
                    "{},{},{},{:.6},{:.6},{:.6},{:.4},{:.6e},{}\n",
                    cell.dataset,
                    cell.detector,
                    cell.attack,
                    cell.baseline_mean,
                    cell.attack_mean,
                    test.t_statistic,
                    test.degrees_of_freedom,
                    test.p_value,
                    cell.significant.unwrap_or(false),
                )),
                Err(reason) => out.push_str(&format!(
                    "{},{},{},{:.6},{:.6},,,,degenerate: {}\n",
                    cell.dataset,
                    cell.detector,
                    cell.attack,
                    cell.baseline_mean,
                    cell.attack_mean,
                    reason
                )),
            }
        }
        out
    }

    /// Human-readable matrix per dataset: detectors as rows, attacks as
    /// columns.
    pub fn to_text_matrix(&self) -> String {
        let mut datasets: Vec<&str> = self.cells.iter().map(|c| c.dataset.as_str()).collect();
        datasets.dedup();
        let mut attacks: Vec<&str> = Vec::new();
        for c in &self.cells {
            if !attacks.contains(&c.attack.as_str()) {
                attacks.push(c.attack.as_str());
            }
        }
        let mut out = String::new();
        out.push_str(&format!(
            "p-values (two-tailed Welch t-test, * marks p < {}):\n",
            self.alpha
        ));
        for dataset in datasets {
            out.push_str(&format!("\n[{dataset}]\n"));
            out.push_str(&format!("{:<9}", "detector"));
            for attack in &attacks {
                out.push_str(&format!("{attack:>10}"));
            }
            out.push('\n');
            for detector in DETECTOR_IDS.iter() {
                out.push_str(&format!("{detector:<9}"));
                for attack in &attacks {
                    let cell = self.cell(dataset, detector, attack);
                    let rendered = match cell.map(|c| (&c.test, c.significant)) {
                        Some((Ok(test), Some(sig))) => {
                            format!("{:.3}{}", test.p_value, if sig { "*" } else { " " })
                        }
                        Some((Err(_), _)) => "degen".to_string(),
                        _ => "-".to_string(),
                    };
                    out.push_str(&format!("{rendered:>10}"));
                }
                out.push('\n');
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn series(values: &[f64]) -> SampleSeries {
        SampleSeries::new("test", values.to_vec())
    }

    #[test]
    fn identical_nonconstant_series_give_p_one() {
        let a = series(&[0.9, 0.8, 0.95, 0.85]);
        let res = welch_t(&a, &a.clone()).unwrap();
        assert_abs_diff_eq!(res.t_statistic, 0.0);
        assert_abs_diff_eq!(res.p_value, 1.0);
    }

    #[test]
    fn symmetry_flips_t_and_keeps_p() {
        let a = series(&[0.80, 0.82, 0.78, 0.81, 0.79]);
        let b = series(&[0.60, 0.62, 0.58, 0.61, 0.59]);
        let ab = welch_t(&a, &b).unwrap();
        let ba = welch_t(&b, &a).unwrap();
        assert_abs_diff_eq!(ab.t_statistic, -ba.t_statistic, epsilon = 1e-12);
        assert_abs_diff_eq!(ab.p_value, ba.p_value, epsilon = 1e-12);
    }

    #[test]
    fn constant_series_conventions() {
        let flat = series(&[1.0, 1.0, 1.0]);
        let equal = welch_t(&flat, &flat.clone()).unwrap();
        assert_eq!(equal.p_value, 1.0);
        let other = series(&[0.5, 0.5, 0.5]);
        let diff = welch_t(&flat, &other).unwrap();
        assert_eq!(diff.p_value, 0.0);
        assert!(diff.t_statistic.is_infinite());
        // one constant series: standard formula applies
        let mixed = welch_t(&flat, &series(&[0.4, 0.6, 0.5])).unwrap();
        assert!(mixed.p_value > 0.0 && mixed.p_value < 0.05);
    }

    #[test]
    fn short_series_rejected() {
        let short = series(&[1.0]);
        let ok = series(&[0.5, 0.6]);
        assert!(matches!(
            welch_t(&short, &ok),
            Err(StatsError::TooShort(_, 1))
        ));
        assert_eq!(
            mean_std(&series(&[])).unwrap_err(),
            StatsError::Empty("test".into())
        );
    }

    #[test]
    fn mean_std_closed_forms() {
        let (m, s) = mean_std(&series(&[0.5, 0.5, 0.5])).unwrap();
        assert_abs_diff_eq!(m, 0.5);
        assert_abs_diff_eq!(s, 0.0);
        let (m, s) = mean_std(&series(&[0.0, 1.0])).unwrap();
        assert_abs_diff_eq!(m, 0.5);
        assert_abs_diff_eq!(s, 0.5f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn affine_rescaling_leaves_p_unchanged() {
        let a = series(&[0.8, 0.7, 0.9, 0.85, 0.75]);
        let b = series(&[0.6, 0.5, 0.65, 0.7, 0.55]);
        let base = welch_t(&a, &b).unwrap();
        for (scale, shift) in [(2.0, 0.0), (0.3, 1.0), (17.5, -4.0)] {
            let scale_series = |s: &SampleSeries| {
                SampleSeries::new(
                    s.label.clone(),
                    s.values.iter().map(|v| v * scale + shift).collect(),
                )
            };
            let res = welch_t(&scale_series(&a), &scale_series(&b)).unwrap();
            assert_abs_diff_eq!(res.p_value, base.p_value, epsilon = 1e-9);
        }
    }

    #[test]
    fn widening_gap_never_increases_p() {
        let a = series(&[0.80, 0.82, 0.78, 0.81, 0.79]);
        let base: Vec<f64> = vec![0.80, 0.82, 0.78, 0.81, 0.79];
        let mut last_p = 1.0;
        for step in 0..20 {
            let delta = step as f64 * 0.005;
            let shifted = series(&base.iter().map(|v| v - delta).collect::<Vec<_>>());
            let p = welch_t(&a, &shifted).unwrap().p_value;
            assert!(
                p <= last_p + 1e-12,
                "p increased from {last_p} to {p} at delta {delta}"
            );
            last_p = p;
        }
    }

    #[test]
    fn inc_beta_edges() {
        assert_eq!(inc_beta(0.0, 2.0, 3.0), 0.0);
        assert_eq!(inc_beta(1.0, 2.0, 3.0), 1.0);
        assert!(inc_beta(-0.1, 2.0, 3.0).is_nan());
        assert!(inc_beta(0.5, -1.0, 3.0).is_nan());
        // I_x(1,1) = x
        assert_abs_diff_eq!(inc_beta(0.37, 1.0, 1.0), 0.37, epsilon = 1e-12);
    }
}
