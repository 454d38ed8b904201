//! The evasion space: website-space mutators on raw pages, preprocessing-
//! space mutators on feature vectors under integrity constraints, ML-space
//! mutators unconstrained. Four families x three variants instantiate the
//! twelve attacks.

mod feature_space;
mod wsp;

pub use feature_space::{
    force_targets, msp_apply, psp_apply, IntegrityRuleSet, Rule, ViolationReport,
};
pub use wsp::{craft_wsp, wsp_add_hidden_links, wsp_shorten_url, wsp_wrap_links};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Label, Webpage};
use crate::features::{
    extract, feature_index, ExternalLookupProvider, FeatureSetId, FeatureVector, ThresholdConfig,
    FEATURE_NAMES,
};
use crate::seed;

/// The feature group an attack targets: u (URL), r (representation), or c.
pub type Variant = FeatureSetId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackFamily {
    /// Cheap website attacks: blind WsP.
    Wa,
    /// Advanced website attacks: WsP with extractor-threshold knowledge.
    WaAdv,
    /// Preprocessing attacks: PsP under integrity rules.
    Pa,
    /// ML-space attacks: unconstrained MsP.
    Ma,
}

impl AttackFamily {
    pub const ALL: [AttackFamily; 4] = [
        AttackFamily::Wa,
        AttackFamily::WaAdv,
        AttackFamily::Pa,
        AttackFamily::Ma,
    ];

    pub fn is_website_space(self) -> bool {
        matches!(self, AttackFamily::Wa | AttackFamily::WaAdv)
    }

    pub fn is_advanced(self) -> bool {
        self == AttackFamily::WaAdv
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AttackFamily::Wa => "WA",
            AttackFamily::WaAdv => "WA_ADV",
            AttackFamily::Pa => "PA",
            AttackFamily::Ma => "MA",
        }
    }
}

impl std::fmt::Display for AttackFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WspMode {
    AddFakeLinks,
    LinkWrapping,
}

impl Default for WspMode {
    fn default() -> WspMode {
        WspMode::AddFakeLinks
    }
}

/// Where in the pipeline a perturbation is introduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationSpace {
    Website,
    Preprocessing,
    Ml,
}

/// One concrete edit of a perturbation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Edit {
    HtmlInsertion { description: String },
    UrlRewrite { from: String, to: String },
    Feature { index: usize, value: i8 },
}

/// A concrete perturbation: the space it lives in plus its edits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub space: PerturbationSpace,
    pub edits: Vec<Edit>,
}

impl Perturbation {
    /// Website-space edits reference raw content only; feature-space edits
    /// reference valid indices and ternary values.
    pub fn is_well_formed(&self) -> bool {
        self.edits.iter().all(|e| match (self.space, e) {
            (PerturbationSpace::Website, Edit::Feature { .. }) => false,
            (PerturbationSpace::Preprocessing | PerturbationSpace::Ml, Edit::Feature { index, value }) => {
                *index < FEATURE_NAMES.len() && (-1..=1).contains(value)
            }
            (PerturbationSpace::Preprocessing | PerturbationSpace::Ml, _) => false,
            (PerturbationSpace::Website, _) => true,
        })
    }
}

/// One of the twelve attacks: family, variant, knowledge set, seed, and the
/// website-space mode for r-variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackSpec {
    pub family: AttackFamily,
    pub variant: Variant,
    /// Feature names the attacker believes the detector analyzes.
    pub knowledge: Vec<String>,
    pub seed: u64,
    pub wsp_mode: WspMode,
    /// Override for the feature-space target list (names); `None` uses the
    /// family/variant defaults.
    pub targets: Option<Vec<String>>,
}

/// Default preprocessing-space targets per variant (0-based indices).
///
/// Both lists anticipate the feature-space footprint of the corresponding
/// website perturbation: the u-list covers the lexical features a URL
/// rewrite moves (with the shortener flag written to its benign pole, which
/// the raw rewrite cannot do), the r-list covers every link-structure
/// feature the preprocessing stage derives from the HTML.
fn pa_targets(variant: Variant) -> Vec<usize> {
    let u = [
        "URL_length",
        "URL_short",
        "URL_subdomains",
        "URL_hasIPaddr",
        "URL_atSymbol",
        "URL_fakeHTTPS",
        "URL_dash",
        "URL_commonTerms",
        "URL_numerical",
        "URL_pathExtend",
        "URL_sensitiveWrd",
        "URL_TLDinPath",
        "URL_totalWords",
        "URL_lngWordURL",
        "URL_avgWordPath",
        "URL_avgWordHost",
        "URL_avgWordURL",
        "URL_lngWordPath",
        "URL_lngWordHost",
    ];
    let r = [
        "HTML_objectRatio",
        "HTML_anchors",
        "HTML_metaScripts",
        "HTML_freqDom",
        "HTML_commPage",
        "HTML_nullLnkWeb",
    ];
    let names: Vec<&str> = match variant {
        Variant::U => u.to_vec(),
        Variant::R => r.to_vec(),
        Variant::C => u.iter().chain(r.iter()).copied().collect(),
    };
    names
        .into_iter()
        .map(|n| feature_index(n).expect("known feature"))
        .collect()
}

/// Default ML-space targets per variant: every lexical URL feature (lookup
/// features excluded) and/or every HTML feature.
fn ma_targets(variant: Variant) -> Vec<usize> {
    let u: Vec<usize> = (0..=20).chain(30..=34).collect();
    let r: Vec<usize> = (35..=56).collect();
    match variant {
        Variant::U => u,
        Variant::R => r,
        Variant::C => u.into_iter().chain(r).collect(),
    }
}

impl AttackSpec {
    /// Spec with the family's default knowledge set and mode.
    pub fn new(family: AttackFamily, variant: Variant, seed: u64) -> AttackSpec {
        let knowledge = match variant {
            Variant::U => vec!["URL_length".to_string()],
            Variant::R => vec!["HTML_objectRatio".to_string()],
            Variant::C => vec!["URL_length".to_string(), "HTML_objectRatio".to_string()],
        };
        AttackSpec {
            family,
            variant,
            knowledge,
            seed,
            wsp_mode: WspMode::default(),
            targets: None,
        }
    }

    /// Stable identifier used in reports, e.g. `WA^u`.
    pub fn id(&self) -> String {
        format!("{}^{}", self.family, self.variant)
    }

    pub fn validate(&self) -> Result<(), EvasionError> {
        for name in &self.knowledge {
            if feature_index(name).is_none() {
                return Err(EvasionError::UnknownFeature(name.clone()));
            }
        }
        if let Some(targets) = &self.targets {
            for name in targets {
                if feature_index(name).is_none() {
                    return Err(EvasionError::UnknownFeature(name.clone()));
                }
            }
        }
        Ok(())
    }

    /// Feature-space target indices for this spec (override or defaults).
    /// Website-space families have none.
    pub fn resolved_targets(&self) -> Vec<usize> {
        if let Some(names) = &self.targets {
            let mut idx: Vec<usize> = names
                .iter()
                .filter_map(|n| feature_index(n))
                .collect();
            idx.sort_unstable();
            idx.dedup();
            return idx;
        }
        match self.family {
            AttackFamily::Wa | AttackFamily::WaAdv => Vec::new(),
            AttackFamily::Pa => pa_targets(self.variant),
            AttackFamily::Ma => ma_targets(self.variant),
        }
    }

    /// The twelve standard attacks, ordered family-major then u/r/c, with
    /// per-attack seeds derived from `base_seed`.
    pub fn standard_twelve(base_seed: u64, wsp_mode: WspMode) -> Vec<AttackSpec> {
        let mut specs = Vec::with_capacity(12);
        for (f_idx, family) in AttackFamily::ALL.iter().enumerate() {
            for (v_idx, variant) in [Variant::U, Variant::R, Variant::C].iter().enumerate() {
                let mut spec = AttackSpec::new(
                    *family,
                    *variant,
                    seed::mix(base_seed, (f_idx * 3 + v_idx) as u64),
                );
                spec.wsp_mode = wsp_mode;
                specs.push(spec);
            }
        }
        specs
    }
}

/// TOML form of an attack spec for the CLI (`pwdbench attack --spec`).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSpecFile {
    pub family: AttackFamily,
    pub variant: String,
    pub seed: u64,
    #[serde(default)]
    pub wsp_mode: WspMode,
    #[serde(default)]
    pub knowledge: Option<Vec<String>>,
    #[serde(default)]
    pub targets: Option<Vec<String>>,
    /// Path to an integrity-rules file; empty uses the built-in defaults.
    #[serde(default)]
    pub rules: Option<PathBuf>,
}

impl AttackSpecFile {
    pub fn into_spec(self) -> Result<(AttackSpec, Option<PathBuf>), EvasionError> {
        let variant = FeatureSetId::parse(&self.variant)
            .ok_or_else(|| EvasionError::BadSpec(format!("unknown variant `{}`", self.variant)))?;
        let mut spec = AttackSpec::new(self.family, variant, self.seed);
        spec.wsp_mode = self.wsp_mode;
        if let Some(k) = self.knowledge {
            spec.knowledge = k;
        }
        spec.targets = self.targets;
        spec.validate()?;
        Ok((spec, self.rules))
    }
}

#[derive(Debug, Error)]
pub enum EvasionError {
    #[error("hidden-link injection needs k >= 1")]
    ZeroLinks,
    #[error("{operation} does not accept family {family}")]
    BadFamily {
        family: AttackFamily,
        operation: &'static str,
    },
    #[error("advanced website attacks need extractor knowledge (thresholds)")]
    MissingKnowledge,
    #[error("basis sample `{id}` is not phishing")]
    BenignBasis { id: String },
    #[error("unknown feature name `{0}`")]
    UnknownFeature(String),
    #[error("invalid attack spec: {0}")]
    BadSpec(String),
    #[error("invalid rules file: {0}")]
    BadRules(String),
}

/// Adversarial vectors for one attack over a basis, in basis order.
/// Preprocessing-space violations skip the sample and are reported here.
#[derive(Debug, Clone)]
pub struct AdversarialBatch {
    pub attack_id: String,
    pub vectors: Vec<FeatureVector>,
    pub skipped: Vec<ViolationReport>,
}

/// Runs one attack over a phishing basis. Website-space families mutate the
/// page then extract; feature-space families extract then mutate.
/// Deterministic per spec seed (per-sample streams derive from the sample id).
pub fn generate_adversarial(
    spec: &AttackSpec,
    basis: &[Webpage],
    provider: &dyn ExternalLookupProvider,
    cfg: &ThresholdConfig,
    rules: &IntegrityRuleSet,
) -> Result<AdversarialBatch, EvasionError> {
    spec.validate()?;
    if let Some(bad) = basis.iter().find(|p| p.label != Label::Phishing) {
        return Err(EvasionError::BenignBasis {
            id: bad.id.clone(),
        });
    }
    let mut vectors = Vec::with_capacity(basis.len());
    let mut skipped = Vec::new();
    for page in basis {
        if spec.family.is_website_space() {
            let knowledge = spec.family.is_advanced().then_some(cfg);
            let (mutated, perturbation) = craft_wsp(page, spec, knowledge)?;
            debug_assert!(perturbation.is_well_formed());
            let (vector, _) = extract(&mutated, provider, cfg);
            vectors.push(vector);
        } else {
            let (baseline, _) = extract(page, provider, cfg);
            match spec.family {
                AttackFamily::Pa => match psp_apply(&baseline, spec, rules) {
                    Ok((vector, perturbation)) => {
                        debug_assert!(perturbation.is_well_formed());
                        vectors.push(vector);
                    }
                    Err(report) => {
                        log::warn!(
                            "{}: sample {} skipped: {}",
                            spec.id(),
                            report.sample_id,
                            report.message
                        );
                        skipped.push(report);
                    }
                },
                AttackFamily::Ma => {
                    let (vector, perturbation) = msp_apply(&baseline, spec);
                    debug_assert!(perturbation.is_well_formed());
                    vectors.push(vector);
                }
                _ => unreachable!("website-space handled above"),
            }
        }
    }
    Ok(AdversarialBatch {
        attack_id: spec.id(),
        vectors,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::synth_generate;
    use crate::features::OfflineLookupProvider;

    fn basis(n: u64) -> Vec<Webpage> {
        synth_generate(1, n, 77)
            .unwrap()
            .samples
            .into_iter()
            .filter(|s| s.label == Label::Phishing)
            .collect()
    }

    #[test]
    fn twelve_specs_over_a_basis_give_twelve_times_the_vectors() {
        let basis = basis(100);
        assert_eq!(basis.len(), 100);
        let provider = OfflineLookupProvider::empty();
        let cfg = ThresholdConfig::default_config();
        let rules = IntegrityRuleSet::default_rules();
        let specs = AttackSpec::standard_twelve(42, WspMode::AddFakeLinks);
        assert_eq!(specs.len(), 12);
        let mut total = 0usize;
        for spec in &specs {
            let batch = generate_adversarial(spec, &basis, &provider, cfg, rules).unwrap();
            assert!(batch.skipped.is_empty(), "{}: {:?}", spec.id(), batch.skipped);
            assert!(batch.vectors.iter().all(|v| v.is_ternary()));
            total += batch.vectors.len();
        }
        assert_eq!(total, 1200);
    }

    #[test]
    fn generation_is_deterministic() {
        let basis = basis(20);
        let provider = OfflineLookupProvider::empty();
        let cfg = ThresholdConfig::default_config();
        let rules = IntegrityRuleSet::default_rules();
        for spec in AttackSpec::standard_twelve(7, WspMode::LinkWrapping) {
            let a = generate_adversarial(&spec, &basis, &provider, cfg, rules).unwrap();
            let b = generate_adversarial(&spec, &basis, &provider, cfg, rules).unwrap();
            assert_eq!(a.vectors, b.vectors, "{}", spec.id());
        }
    }

    #[test]
    fn wa_u_diffs_are_confined_to_url_derived_indices() {
        let basis = basis(30);
        let provider = OfflineLookupProvider::empty();
        let cfg = ThresholdConfig::default_config();
        let rules = IntegrityRuleSet::empty();
        let spec = AttackSpec::new(AttackFamily::Wa, Variant::U, 5);
        let batch = generate_adversarial(&spec, &basis, &provider, cfg, &rules).unwrap();
        use crate::features::HTML_DOMAIN_DEPENDENT;
        for (page, adversarial) in basis.iter().zip(batch.vectors.iter()) {
            let (baseline, _) = extract(page, &provider, cfg);
            for idx in baseline.diff_indices(adversarial) {
                assert!(
                    idx < 35 || HTML_DOMAIN_DEPENDENT.contains(&idx),
                    "index {idx} changed under a URL-only attack"
                );
            }
        }
    }

    #[test]
    fn benign_basis_is_rejected() {
        let pages = vec![Webpage::new("b", "https://a.example/", vec![], Label::Benign)];
        let provider = OfflineLookupProvider::empty();
        let cfg = ThresholdConfig::default_config();
        let spec = AttackSpec::new(AttackFamily::Ma, Variant::C, 1);
        assert!(matches!(
            generate_adversarial(&spec, &pages, &provider, cfg, &IntegrityRuleSet::empty()),
            Err(EvasionError::BenignBasis { .. })
        ));
    }

    #[test]
    fn spec_file_parses_and_validates() {
        let file: AttackSpecFile = toml::from_str(
            r#"
            family = "wa_adv"
            variant = "r"
            seed = 3
            wsp_mode = "link_wrapping"
            knowledge = ["HTML_objectRatio"]
            "#,
        )
        .unwrap();
        let (spec, rules) = file.into_spec().unwrap();
        assert_eq!(spec.family, AttackFamily::WaAdv);
        assert_eq!(spec.id(), "WA_ADV^r");
        assert!(rules.is_none());

        let bad: AttackSpecFile = toml::from_str(
            r#"
            family = "pa"
            variant = "r"
            seed = 3
            targets = ["HTML_bogus"]
            "#,
        )
        .unwrap();
        assert!(matches!(
            bad.into_spec(),
            Err(EvasionError::UnknownFeature(_))
        ));
    }

    #[test]
    fn psp_outputs_are_msp_reachable() {
        let basis = basis(10);
        let provider = OfflineLookupProvider::empty();
        let cfg = ThresholdConfig::default_config();
        let rules = IntegrityRuleSet::default_rules();
        let spec = AttackSpec::new(AttackFamily::Pa, Variant::C, 11);
        for page in &basis {
            let (baseline, _) = extract(page, &provider, cfg);
            if let Ok((psp_vec, _)) = psp_apply(&baseline, &spec, rules) {
                // the changed index set, used as an MsP target list, must
                // reproduce the PsP output exactly
                let changed = baseline.diff_indices(&psp_vec);
                let (msp_vec, _) = force_targets(&baseline, &changed);
                assert_eq!(msp_vec, psp_vec);
            }
        }
    }
}
