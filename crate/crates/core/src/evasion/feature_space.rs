//! Feature-space perturbations: preprocessing-space (integrity-checked) and
//! ML-space (unconstrained).

use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::{AttackSpec, Edit, EvasionError, Perturbation, PerturbationSpace};
use crate::features::{feature_index, FeatureVector, FEATURE_NAMES};

/// One implication: (antecedent = value) => consequent in allowed set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub antecedent: usize,
    pub antecedent_value: i8,
    pub consequent: usize,
    pub allowed: Vec<i8>,
}

impl Rule {
    pub fn describe(&self) -> String {
        format!(
            "{}={} => {} in {:?}",
            FEATURE_NAMES[self.antecedent],
            self.antecedent_value,
            FEATURE_NAMES[self.consequent],
            self.allowed
        )
    }
}

/// Inter-feature implications enforced on preprocessing-space outputs.
/// An empty set makes PsP coincide with MsP.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IntegrityRuleSet {
    pub rules: Vec<Rule>,
}

#[derive(Debug, Deserialize)]
struct RuleFileEntry {
    if_feature: String,
    is: i8,
    then_feature: String,
    allowed: Vec<i8>,
}

#[derive(Debug, Deserialize)]
struct RuleFile {
    #[allow(dead_code)]
    schema_version: u32,
    #[serde(default)]
    rule: Vec<RuleFileEntry>,
}

const DEFAULT_RULES: &str = include_str!("../../data/rules.default.toml");

static DEFAULT_RULE_SET: OnceLock<IntegrityRuleSet> = OnceLock::new();

impl IntegrityRuleSet {
    pub fn empty() -> IntegrityRuleSet {
        IntegrityRuleSet::default()
    }

    /// The six built-in conservative implications.
    pub fn default_rules() -> &'static IntegrityRuleSet {
        DEFAULT_RULE_SET.get_or_init(|| {
            IntegrityRuleSet::from_toml(DEFAULT_RULES).expect("built-in rules parse")
        })
    }

    pub fn from_toml(text: &str) -> Result<IntegrityRuleSet, EvasionError> {
        let file: RuleFile =
            toml::from_str(text).map_err(|e| EvasionError::BadRules(e.to_string()))?;
        let mut rules = Vec::new();
        for entry in file.rule {
            let antecedent = feature_index(&entry.if_feature)
                .ok_or_else(|| EvasionError::UnknownFeature(entry.if_feature.clone()))?;
            let consequent = feature_index(&entry.then_feature)
                .ok_or_else(|| EvasionError::UnknownFeature(entry.then_feature.clone()))?;
            if entry.allowed.is_empty() || entry.allowed.iter().any(|v| !(-1..=1).contains(v)) {
                return Err(EvasionError::BadRules(format!(
                    "rule {} -> {}: allowed set must be non-empty ternary",
                    entry.if_feature, entry.then_feature
                )));
            }
            if !(-1..=1).contains(&entry.is) {
                return Err(EvasionError::BadRules(format!(
                    "rule {}: antecedent value must be ternary",
                    entry.if_feature
                )));
            }
            let mut allowed = entry.allowed;
            allowed.sort_unstable();
            allowed.dedup();
            rules.push(Rule {
                antecedent,
                antecedent_value: entry.is,
                consequent,
                allowed,
            });
        }
        Ok(IntegrityRuleSet { rules })
    }

    pub fn from_path(path: &Path) -> Result<IntegrityRuleSet, EvasionError> {
        let text = std::fs::read_to_string(path)
            .map_err(|_| EvasionError::BadRules(format!("cannot read {}", path.display())))?;
        IntegrityRuleSet::from_toml(&text)
    }
}

/// Why a preprocessing-space perturbation was rejected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub sample_id: String,
    pub rule: String,
    pub message: String,
}

/// Sets every target feature to the benign pole (-1). The shared primitive
/// behind both feature-space attacks.
pub fn force_targets(v: &FeatureVector, targets: &[usize]) -> (FeatureVector, Perturbation) {
    let mut out = v.clone();
    let mut edits = Vec::new();
    for &idx in targets {
        if out.values[idx] != -1 {
            out.values[idx] = -1;
            edits.push(Edit::Feature {
                index: idx,
                value: -1,
            });
        }
    }
    (
        out,
        Perturbation {
            space: PerturbationSpace::Ml,
            edits,
        },
    )
}

/// ML-space perturbation: forces the spec's resolved target list to -1,
/// ignoring integrity entirely. Family MA is the canonical caller; any spec
/// is accepted and its own target list applied (this is what makes PsP and
/// MsP coincide under an empty rule set).
pub fn msp_apply(v: &FeatureVector, spec: &AttackSpec) -> (FeatureVector, Perturbation) {
    force_targets(v, &spec.resolved_targets())
}

/// Preprocessing-space perturbation: forces the spec's targets to -1, then
/// cascades forced consequents of the rules. Cascades only propagate from
/// features the perturbation changed: a pre-existing oddity of the sample is
/// the extractor's business, not the attacker's.
pub fn psp_apply(
    v: &FeatureVector,
    spec: &AttackSpec,
    rules: &IntegrityRuleSet,
) -> Result<(FeatureVector, Perturbation), ViolationReport> {
    let targets = spec.resolved_targets();
    let (mut out, mut perturbation) = force_targets(v, &targets);
    perturbation.space = PerturbationSpace::Preprocessing;

    // frozen: set by the attack itself, or already coerced by a rule
    let mut frozen = vec![false; FEATURE_NAMES.len()];
    let mut changed = vec![false; FEATURE_NAMES.len()];
    for &t in &targets {
        frozen[t] = true;
        changed[t] = true;
    }

    let mut iterations = 0;
    loop {
        iterations += 1;
        if iterations > 100 {
            return Err(ViolationReport {
                sample_id: v.source_id.clone(),
                rule: "<cascade>".into(),
                message: "rule cascade did not converge".into(),
            });
        }
        let mut fired = false;
        for rule in &rules.rules {
            if !changed[rule.antecedent] {
                continue;
            }
            if out.values[rule.antecedent] != rule.antecedent_value {
                continue;
            }
            if rule.allowed.contains(&out.values[rule.consequent]) {
                continue;
            }
            if frozen[rule.consequent] {
                return Err(ViolationReport {
                    sample_id: v.source_id.clone(),
                    rule: rule.describe(),
                    message: format!(
                        "consequent {} already fixed to {}",
                        FEATURE_NAMES[rule.consequent], out.values[rule.consequent]
                    ),
                });
            }
            let coerced = *rule.allowed.iter().min().expect("non-empty allowed");
            out.values[rule.consequent] = coerced;
            frozen[rule.consequent] = true;
            changed[rule.consequent] = true;
            perturbation.edits.push(Edit::Feature {
                index: rule.consequent,
                value: coerced,
            });
            fired = true;
        }
        if !fired {
            return Ok((out, perturbation));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evasion::{AttackFamily, Variant};
    use crate::features::{FeatureSetId, N_FEATURES};

    fn all_plus_vector() -> FeatureVector {
        FeatureVector::new([1i8; N_FEATURES], "v")
    }

    fn spec(family: AttackFamily, variant: Variant) -> AttackSpec {
        AttackSpec::new(family, variant, 7)
    }

    #[test]
    fn default_rules_parse_with_six_entries() {
        let rules = IntegrityRuleSet::default_rules();
        assert_eq!(rules.rules.len(), 6);
    }

    #[test]
    fn empty_rules_make_psp_equal_msp() {
        let v = all_plus_vector();
        for variant in [Variant::U, Variant::R, Variant::C] {
            let pa = spec(AttackFamily::Pa, variant);
            let (psp, _) = psp_apply(&v, &pa, &IntegrityRuleSet::empty()).unwrap();
            let (msp, _) = msp_apply(&v, &pa);
            assert_eq!(psp, msp);
        }
    }

    #[test]
    fn ma_targets_spare_lookup_features() {
        let v = all_plus_vector();
        let ma_c = spec(AttackFamily::Ma, Variant::C);
        let (out, _) = msp_apply(&v, &ma_c);
        for idx in crate::features::LOOKUP_FEATURE_INDICES {
            assert_eq!(out.values[idx], 1, "lookup feature {idx} must be untouched");
        }
        for idx in ma_c.resolved_targets() {
            assert_eq!(out.values[idx], -1);
        }
        assert!(out.is_ternary());
    }

    #[test]
    fn ma_r_leaves_url_features_alone() {
        let v = all_plus_vector();
        let (out, _) = msp_apply(&v, &spec(AttackFamily::Ma, Variant::R));
        assert_eq!(
            crate::features::project(&out, FeatureSetId::U),
            crate::features::project(&v, FeatureSetId::U)
        );
    }

    #[test]
    fn pa_r_leaves_url_features_alone() {
        let v = all_plus_vector();
        let (out, _) =
            psp_apply(&v, &spec(AttackFamily::Pa, Variant::R), IntegrityRuleSet::default_rules())
                .unwrap();
        assert_eq!(out.values[..35], v.values[..35]);
    }

    #[test]
    fn cascade_coerces_free_consequents() {
        // PA^r pins HTML_objectRatio to -1; the default rules then require
        // HTML_nullLnkWeb out of the phishing pole.
        let mut values = [1i8; N_FEATURES];
        values[crate::features::feature_index("HTML_nullLnkWeb").unwrap()] = 1;
        let v = FeatureVector::new(values, "v");
        let (out, p) =
            psp_apply(&v, &spec(AttackFamily::Pa, Variant::R), IntegrityRuleSet::default_rules())
                .unwrap();
        assert_eq!(
            out.values[crate::features::feature_index("HTML_nullLnkWeb").unwrap()],
            -1
        );
        assert!(p.edits.len() >= 4);
    }

    #[test]
    fn conflicting_rule_yields_violation_report() {
        // constructed contradiction: the attack pins URL_length to -1 while a
        // rule insists a shortened URL implies URL_length = +1
        let contradictory = IntegrityRuleSet::from_toml(
            r#"
            schema_version = 1
            [[rule]]
            if_feature = "URL_short"
            is = -1
            then_feature = "URL_length"
            allowed = [1]
            "#,
        )
        .unwrap();
        let v = all_plus_vector();
        let err = psp_apply(&v, &spec(AttackFamily::Pa, Variant::U), &contradictory).unwrap_err();
        assert!(err.rule.contains("URL_short"));
        assert!(err.message.contains("URL_length"));
    }

    #[test]
    fn unknown_feature_names_rejected() {
        let result = IntegrityRuleSet::from_toml(
            r#"
            schema_version = 1
            [[rule]]
            if_feature = "URL_bogus"
            is = 1
            then_feature = "URL_length"
            allowed = [-1]
            "#,
        );
        assert!(matches!(result, Err(EvasionError::UnknownFeature(_))));
    }
}
