//! The 57-feature webpage representation.
//!
//! Every feature is encoded ternary: -1 legitimate-indicative, 0 suspicious,
//! +1 phishing-indicative. Features 1–35 are lexical or lookup-dependent URL
//! features; 36–57 come from a lenient pass over the HTML. Cut points and
//! word lists live in a versioned config (`thresholds.default.toml`).

pub mod html;
pub mod io;
mod lookup;
mod url;

pub use lookup::{ExternalLookupProvider, LookupFeature, OfflineLookupProvider};
pub use url::{is_known_tld, parse_url, word_stats, words, UrlParts};

use std::collections::HashMap;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Webpage;

/// Number of features in the full representation.
pub const N_FEATURES: usize = 57;
/// Number of URL features (table positions 1–35).
pub const N_URL_FEATURES: usize = 35;
/// Number of HTML features (table positions 36–57).
pub const N_HTML_FEATURES: usize = 22;

/// Feature names in table order.
pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "URL_length",
    "URL_hasIPaddr",
    "URL_redirect",
    "URL_short",
    "URL_subdomains",
    "URL_atSymbol",
    "URL_fakeHTTPS",
    "URL_dash",
    "URL_dataURI",
    "URL_commonTerms",
    "URL_numerical",
    "URL_pathExtend",
    "URL_punyCode",
    "URL_sensitiveWrd",
    "URL_TLDinPath",
    "URL_TLDinSub",
    "URL_totalWords",
    "URL_shrtWordURL",
    "URL_shrtWordHost",
    "URL_shrtWordPath",
    "URL_lngWordURL",
    "URL_DNS",
    "URL_domAge",
    "URL_abnormal",
    "URL_ports",
    "URL_SSL",
    "URL_statisticRe",
    "URL_pageRank",
    "URL_regLen",
    "URL_checkGI",
    "URL_avgWordPath",
    "URL_avgWordHost",
    "URL_avgWordURL",
    "URL_lngWordPath",
    "URL_lngWordHost",
    "HTML_freqDom",
    "HTML_objectRatio",
    "HTML_metaScripts",
    "HTML_commPage",
    "HTML_commPageFoot",
    "HTML_SFH",
    "HTML_popUp",
    "HTML_rightClick",
    "HTML_domCopyright",
    "HTML_nullLnkWeb",
    "HTML_nullLnkFooter",
    "HTML_brokenLnk",
    "HTML_loginForm",
    "HTML_hiddenDiv",
    "HTML_hiddenButton",
    "HTML_hiddenInput",
    "HTML_URLBrand",
    "HTML_iframe",
    "HTML_favicon",
    "HTML_statBar",
    "HTML_css",
    "HTML_anchors",
];

/// 0-based indices of the nine lookup-dependent features (table 22–30).
pub const LOOKUP_FEATURE_INDICES: [usize; 9] = [21, 22, 23, 24, 25, 26, 27, 28, 29];

/// 0-based indices of HTML features whose value references the URL's
/// registered domain (internal/external classification, brand matching).
/// Only these HTML features may move when a perturbation edits the URL.
pub const HTML_DOMAIN_DEPENDENT: [usize; 9] = [35, 36, 37, 40, 43, 51, 53, 55, 56];

/// Index of a feature name, if it is one of the 57.
pub fn feature_index(name: &str) -> Option<usize> {
    FEATURE_NAMES.iter().position(|n| *n == name)
}

mod serde_values {
    use super::N_FEATURES;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(values: &[i8; N_FEATURES], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(values.iter())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[i8; N_FEATURES], D::Error> {
        let v = Vec::<i8>::deserialize(d)?;
        let n = v.len();
        v.try_into()
            .map_err(|_| D::Error::custom(format!("expected {N_FEATURES} values, got {n}")))
    }
}

/// The 57-slot ternary representation of one webpage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureVector {
    #[serde(with = "serde_values")]
    pub values: [i8; N_FEATURES],
    pub source_id: String,
}

impl FeatureVector {
    pub fn new(values: [i8; N_FEATURES], source_id: impl Into<String>) -> FeatureVector {
        let v = FeatureVector {
            values,
            source_id: source_id.into(),
        };
        debug_assert!(v.is_ternary());
        v
    }

    pub fn is_ternary(&self) -> bool {
        self.values.iter().all(|v| (-1..=1).contains(v))
    }

    /// 0-based indices where `self` and `other` differ.
    pub fn diff_indices(&self, other: &FeatureVector) -> Vec<usize> {
        (0..N_FEATURES)
            .filter(|&i| self.values[i] != other.values[i])
            .collect()
    }
}

/// A feature-set projection: URL-only, representation-only, or combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureSetId {
    U,
    R,
    C,
}

impl FeatureSetId {
    pub const ALL: [FeatureSetId; 3] = [FeatureSetId::U, FeatureSetId::R, FeatureSetId::C];

    /// 0-based indices selected by this set, ascending.
    pub fn indices(self) -> std::ops::Range<usize> {
        match self {
            FeatureSetId::U => 0..N_URL_FEATURES,
            FeatureSetId::R => N_URL_FEATURES..N_FEATURES,
            FeatureSetId::C => 0..N_FEATURES,
        }
    }

    pub fn width(self) -> usize {
        self.indices().len()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSetId::U => "u",
            FeatureSetId::R => "r",
            FeatureSetId::C => "c",
        }
    }

    pub fn parse(s: &str) -> Option<FeatureSetId> {
        match s.to_ascii_lowercase().as_str() {
            "u" => Some(FeatureSetId::U),
            "r" => Some(FeatureSetId::R),
            "c" => Some(FeatureSetId::C),
            _ => None,
        }
    }
}

impl std::fmt::Display for FeatureSetId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Projects a feature vector onto a set, in ascending table order.
pub fn project(v: &FeatureVector, set: FeatureSetId) -> Vec<i8> {
    set.indices().map(|i| v.values[i]).collect()
}

/// Projects a raw value slice (used for already-projected storage).
pub fn project_values(values: &[i8; N_FEATURES], set: FeatureSetId) -> Vec<i8> {
    set.indices().map(|i| values[i]).collect()
}

/// Two cut points for a count where larger values are more phishing-like.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutHigh {
    pub legit_max: f64,
    pub suspicious_max: f64,
}

impl CutHigh {
    pub fn bucket(&self, v: f64) -> i8 {
        if v <= self.legit_max {
            -1
        } else if v <= self.suspicious_max {
            0
        } else {
            1
        }
    }
}

/// Two cut points for a measure where smaller values are more phishing-like.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutLow {
    pub legit_min: f64,
    pub suspicious_min: f64,
}

impl CutLow {
    pub fn bucket(&self, v: f64) -> i8 {
        if v >= self.legit_min {
            -1
        } else if v >= self.suspicious_min {
            0
        } else {
            1
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read thresholds file {0}")]
    Unreadable(String),
    #[error("thresholds file {path}: {message}")]
    Invalid { path: String, message: String },
}

/// Cut points and word lists for every thresholded feature.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdConfig {
    pub schema_version: u32,
    pub shortening_services: Vec<String>,
    pub sensitive_words: Vec<String>,
    pub common_terms: Vec<String>,
    pub url_length: CutHigh,
    pub subdomains: CutHigh,
    pub host_digit_ratio: CutHigh,
    pub path_depth: CutHigh,
    pub common_term_count: CutHigh,
    pub total_words: CutHigh,
    pub shortest_word_url: CutLow,
    pub shortest_word_host: CutLow,
    pub shortest_word_path: CutLow,
    pub longest_word_url: CutHigh,
    pub longest_word_path: CutHigh,
    pub longest_word_host: CutHigh,
    pub average_word_url: CutHigh,
    pub average_word_path: CutHigh,
    pub average_word_host: CutHigh,
    pub object_ratio: CutHigh,
    pub anchor_ratio: CutHigh,
    pub meta_script_ratio: CutHigh,
    pub null_link_ratio: CutHigh,
    pub common_page_ratio: CutHigh,
    pub broken_links: CutHigh,
}

const DEFAULT_THRESHOLDS: &str = include_str!("../../data/thresholds.default.toml");

static DEFAULT_CONFIG: OnceLock<ThresholdConfig> = OnceLock::new();

impl ThresholdConfig {
    /// The built-in defaults.
    pub fn default_config() -> &'static ThresholdConfig {
        DEFAULT_CONFIG.get_or_init(|| {
            let cfg: ThresholdConfig =
                toml::from_str(DEFAULT_THRESHOLDS).expect("built-in thresholds parse");
            cfg.validate("<built-in>").expect("built-in thresholds valid");
            cfg
        })
    }

    pub fn from_path(path: &Path) -> Result<ThresholdConfig, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|_| ConfigError::Unreadable(path.display().to_string()))?;
        let cfg: ThresholdConfig = toml::from_str(&text).map_err(|e| ConfigError::Invalid {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        cfg.validate(&path.display().to_string())?;
        Ok(cfg)
    }

    fn validate(&self, path: &str) -> Result<(), ConfigError> {
        let bad = |message: &str| {
            Err(ConfigError::Invalid {
                path: path.to_string(),
                message: message.to_string(),
            })
        };
        let highs = [
            ("url_length", self.url_length),
            ("subdomains", self.subdomains),
            ("host_digit_ratio", self.host_digit_ratio),
            ("path_depth", self.path_depth),
            ("common_term_count", self.common_term_count),
            ("total_words", self.total_words),
            ("longest_word_url", self.longest_word_url),
            ("longest_word_path", self.longest_word_path),
            ("longest_word_host", self.longest_word_host),
            ("average_word_url", self.average_word_url),
            ("average_word_path", self.average_word_path),
            ("average_word_host", self.average_word_host),
            ("object_ratio", self.object_ratio),
            ("anchor_ratio", self.anchor_ratio),
            ("meta_script_ratio", self.meta_script_ratio),
            ("null_link_ratio", self.null_link_ratio),
            ("common_page_ratio", self.common_page_ratio),
            ("broken_links", self.broken_links),
        ];
        for (name, cut) in highs {
            if !(cut.legit_max < cut.suspicious_max) {
                return bad(&format!("{name}: legit_max must be < suspicious_max"));
            }
        }
        let lows = [
            ("shortest_word_url", self.shortest_word_url),
            ("shortest_word_host", self.shortest_word_host),
            ("shortest_word_path", self.shortest_word_path),
        ];
        for (name, cut) in lows {
            if !(cut.suspicious_min < cut.legit_min) {
                return bad(&format!("{name}: suspicious_min must be < legit_min"));
            }
        }
        if self.shortening_services.is_empty() {
            return bad("shortening_services must not be empty");
        }
        if self.sensitive_words.is_empty() {
            return bad("sensitive_words must not be empty");
        }
        if self.common_terms.is_empty() {
            return bad("common_terms must not be empty");
        }
        Ok(())
    }
}

/// Where a raw href/src reference points, relative to the page's own
/// registered domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RefClass {
    /// Relative reference or absolute URL on the page's registered domain.
    Internal,
    /// Absolute URL on a different registered domain.
    External(String),
    /// Placeholder link: `#`, `javascript:void(0)`, ...
    NullLink,
    /// Syntactically unusable: empty, contains raw spaces, scheme without host.
    Broken,
    /// Non-web scheme (mailto:, tel:, data:, other javascript:).
    Other,
}

/// Classifies one reference against the page's registered domain.
pub fn classify_ref(target: &str, own_registered_domain: &str) -> RefClass {
    let t = target.trim();
    if t.is_empty() {
        return RefClass::Broken;
    }
    let lower = t.to_ascii_lowercase();
    if lower.starts_with('#') {
        return RefClass::NullLink;
    }
    if lower == "javascript:" || lower == "javascript:;" || lower.starts_with("javascript:void") {
        return RefClass::NullLink;
    }
    if lower.starts_with("javascript:") {
        return RefClass::Other;
    }
    if lower.starts_with("mailto:") || lower.starts_with("tel:") || lower.starts_with("data:") {
        return RefClass::Other;
    }
    if t.contains(' ') {
        return RefClass::Broken;
    }
    let absolute = if let Some(rest) = lower.strip_prefix("//") {
        Some(format!("http://{rest}"))
    } else if lower.contains("://") {
        Some(t.to_string())
    } else {
        None
    };
    match absolute {
        None => RefClass::Internal,
        Some(url) => {
            let parts = parse_url(&url);
            if parts.host.is_empty() {
                return RefClass::Broken;
            }
            if !matches!(parts.scheme.as_str(), "http" | "https" | "ftp") {
                return RefClass::Other;
            }
            if !own_registered_domain.is_empty()
                && parts.registered_domain == own_registered_domain
            {
                RefClass::Internal
            } else {
                RefClass::External(parts.registered_domain)
            }
        }
    }
}

/// Census of a set of references after classification.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LinkCensus {
    pub internal: usize,
    pub external: usize,
    pub null: usize,
    pub broken: usize,
    pub other: usize,
}

impl LinkCensus {
    pub fn total(&self) -> usize {
        self.internal + self.external + self.null + self.broken + self.other
    }

    /// internal + external: references that resolve somewhere.
    pub fn counted(&self) -> usize {
        self.internal + self.external
    }

    /// external / (internal + external); `None` with no countable refs.
    pub fn external_ratio(&self) -> Option<f64> {
        let denom = self.counted();
        (denom > 0).then(|| self.external as f64 / denom as f64)
    }

    fn add(&mut self, class: &RefClass) {
        match class {
            RefClass::Internal => self.internal += 1,
            RefClass::External(_) => self.external += 1,
            RefClass::NullLink => self.null += 1,
            RefClass::Broken => self.broken += 1,
            RefClass::Other => self.other += 1,
        }
    }
}

fn census<'a>(targets: impl Iterator<Item = &'a str>, own_domain: &str) -> LinkCensus {
    let mut census = LinkCensus::default();
    for t in targets {
        census.add(&classify_ref(t, own_domain));
    }
    census
}

/// Census over anchor hrefs only.
pub fn link_census(html: &[u8], parts: &UrlParts) -> LinkCensus {
    let stats = html::analyze(html);
    census(
        stats.anchors.iter().map(|a| a.target.as_str()),
        &parts.registered_domain,
    )
}

/// Census over the object set used by the internal/external ratio
/// (anchors plus resource references).
pub fn object_census(html: &[u8], parts: &UrlParts) -> LinkCensus {
    let stats = html::analyze(html);
    let targets = stats
        .anchors
        .iter()
        .map(|a| a.target.as_str())
        .chain(stats.resources.iter().map(|r| r.target.as_str()));
    census(targets, &parts.registered_domain)
}

/// Extraction side information.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExtractionDiagnostics {
    /// Lookup-provider misses mapped to the suspicious value 0.
    pub provider_misses: u32,
}

fn bool_feat(b: bool) -> i8 {
    if b {
        1
    } else {
        -1
    }
}

/// Computes features 1–35 from the URL. Total and pure for a fixed provider
/// state; provider misses become 0 and are counted.
pub fn extract_url_features(
    parts: &UrlParts,
    raw_url: &str,
    provider: &dyn ExternalLookupProvider,
    cfg: &ThresholdConfig,
) -> ([i8; N_URL_FEATURES], ExtractionDiagnostics) {
    let mut out = [0i8; N_URL_FEATURES];
    let mut diagnostics = ExtractionDiagnostics::default();
    let lower = raw_url.to_ascii_lowercase();

    let url_words = words(raw_url);
    let host_words = words(&parts.host);
    let path_words = words(&parts.path);

    out[0] = cfg.url_length.bucket(raw_url.chars().count() as f64);
    out[1] = bool_feat(parts.is_ip_literal);
    out[2] = bool_feat(match raw_url.find("://") {
        Some(i) => raw_url[i + 3..].contains("//"),
        None => raw_url.contains("//"),
    });
    out[3] = bool_feat(cfg.shortening_services.iter().any(|s| {
        s.eq_ignore_ascii_case(&parts.host) || s.eq_ignore_ascii_case(&parts.registered_domain)
    }));
    let sub_count = {
        let labels = &parts.subdomain_labels;
        let skip_www = usize::from(labels.first().map(|l| l == "www").unwrap_or(false));
        labels.len() - skip_www
    };
    out[4] = cfg.subdomains.bucket(sub_count as f64);
    out[5] = bool_feat(raw_url.contains('@'));
    out[6] = bool_feat(parts.host.contains("https"));
    out[7] = bool_feat(parts.host.contains('-'));
    out[8] = bool_feat(parts.scheme == "data");
    let sub_joined = parts.subdomain_labels.join(".");
    let mut abnormal_zone_words = words(&parts.path);
    abnormal_zone_words.extend(words(&parts.query));
    abnormal_zone_words.extend(words(&sub_joined));
    let common_count = abnormal_zone_words
        .iter()
        .filter(|w| cfg.common_terms.iter().any(|t| t == *w))
        .count();
    out[9] = cfg.common_term_count.bucket(common_count as f64);
    let host_alnum = parts.host.chars().filter(|c| c.is_alphanumeric()).count();
    let host_digits = parts.host.chars().filter(|c| c.is_ascii_digit()).count();
    let digit_ratio = if host_alnum == 0 {
        0.0
    } else {
        host_digits as f64 / host_alnum as f64
    };
    out[10] = cfg.host_digit_ratio.bucket(digit_ratio);
    out[11] = cfg.path_depth.bucket(parts.path_segments.len() as f64);
    out[12] = bool_feat(parts.host.contains("xn--"));
    out[13] = bool_feat(cfg.sensitive_words.iter().any(|w| lower.contains(w.as_str())));
    out[14] = bool_feat(path_words.iter().any(|w| is_known_tld(w)));
    out[15] = bool_feat(words(&sub_joined).iter().any(|w| is_known_tld(w)));
    out[16] = cfg.total_words.bucket(url_words.len() as f64);

    let url_stats = word_stats(&url_words);
    let host_stats = word_stats(&host_words);
    let path_stats = word_stats(&path_words);
    out[17] = url_stats
        .map(|(min, _, _)| cfg.shortest_word_url.bucket(min as f64))
        .unwrap_or(-1);
    out[18] = host_stats
        .map(|(min, _, _)| cfg.shortest_word_host.bucket(min as f64))
        .unwrap_or(-1);
    out[19] = path_stats
        .map(|(min, _, _)| cfg.shortest_word_path.bucket(min as f64))
        .unwrap_or(-1);
    out[20] = url_stats
        .map(|(_, max, _)| cfg.longest_word_url.bucket(max as f64))
        .unwrap_or(-1);

    for (slot, feature) in LookupFeature::ALL.iter().enumerate() {
        let idx = LOOKUP_FEATURE_INDICES[slot];
        match provider.lookup(raw_url, *feature) {
            Some(v) if (-1..=1).contains(&v) => out[idx] = v,
            _ => {
                out[idx] = 0;
                diagnostics.provider_misses += 1;
            }
        }
    }

    out[30] = path_stats
        .map(|(_, _, avg)| cfg.average_word_path.bucket(avg))
        .unwrap_or(-1);
    out[31] = host_stats
        .map(|(_, _, avg)| cfg.average_word_host.bucket(avg))
        .unwrap_or(-1);
    out[32] = url_stats
        .map(|(_, _, avg)| cfg.average_word_url.bucket(avg))
        .unwrap_or(-1);
    out[33] = path_stats
        .map(|(_, max, _)| cfg.longest_word_path.bucket(max as f64))
        .unwrap_or(-1);
    out[34] = host_stats
        .map(|(_, max, _)| cfg.longest_word_host.bucket(max as f64))
        .unwrap_or(-1);

    (out, diagnostics)
}

/// Defaults for a page with empty HTML: ratio features are suspicious, the
/// rest legitimate-indicative, so blank pages stay distinguishable without
/// being maximally phishy.
const EMPTY_HTML_DEFAULTS: [i8; N_HTML_FEATURES] = [
    0, // freqDom
    0, // objectRatio
    0, // metaScripts
    0, // commPage
    0, // commPageFoot
    -1, // SFH
    -1, // popUp
    -1, // rightClick
    -1, // domCopyright
    0, // nullLnkWeb
    0, // nullLnkFooter
    -1, // brokenLnk
    -1, // loginForm
    -1, // hiddenDiv
    -1, // hiddenButton
    -1, // hiddenInput
    -1, // URLBrand
    -1, // iframe
    -1, // favicon
    -1, // statBar
    -1, // css
    0, // anchors
];

fn squeeze_lower(s: &str) -> String {
    s.chars()
        .filter(|c| !c.is_whitespace())
        .collect::<String>()
        .to_ascii_lowercase()
}

fn brand_label(parts: &UrlParts) -> String {
    parts
        .registered_domain
        .split('.')
        .next()
        .unwrap_or("")
        .to_ascii_lowercase()
}

fn text_tokens(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in s.chars() {
        if c.is_alphanumeric() || c == '-' {
            cur.extend(c.to_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn most_common_count<'a>(items: impl Iterator<Item = &'a str>) -> usize {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for item in items {
        *counts.entry(item).or_insert(0) += 1;
    }
    counts.values().copied().max().unwrap_or(0)
}

/// Computes features 36–57 from the HTML. Lenient: never rejects input;
/// undecodable bytes are replaced.
pub fn extract_html_features(
    html: &[u8],
    parts: &UrlParts,
    cfg: &ThresholdConfig,
) -> [i8; N_HTML_FEATURES] {
    if html.is_empty() {
        return EMPTY_HTML_DEFAULTS;
    }
    let stats = html::analyze(html);
    let own = parts.registered_domain.as_str();
    let mut out = [0i8; N_HTML_FEATURES];

    let anchor_census = census(stats.anchors.iter().map(|a| a.target.as_str()), own);
    let object_census = census(
        stats
            .anchors
            .iter()
            .map(|a| a.target.as_str())
            .chain(stats.resources.iter().map(|r| r.target.as_str())),
        own,
    );
    let meta_script_census = census(
        stats
            .script_srcs
            .iter()
            .chain(stats.stylesheets.iter())
            .chain(stats.favicons.iter())
            .chain(stats.meta_refresh.iter())
            .map(|s| s.as_str()),
        own,
    );

    // freqDom: does some foreign domain dominate the internal references?
    out[0] = {
        let mut domain_counts: HashMap<String, usize> = HashMap::new();
        for t in stats
            .anchors
            .iter()
            .map(|a| a.target.as_str())
            .chain(stats.resources.iter().map(|r| r.target.as_str()))
        {
            if let RefClass::External(d) = classify_ref(t, own) {
                *domain_counts.entry(d).or_insert(0) += 1;
            }
        }
        if domain_counts.is_empty() {
            -1
        } else {
            let top = domain_counts.values().copied().max().unwrap_or(0);
            if top <= object_census.internal {
                0
            } else {
                1
            }
        }
    };
    out[1] = object_census
        .external_ratio()
        .map(|r| cfg.object_ratio.bucket(r))
        .unwrap_or(-1);
    out[2] = meta_script_census
        .external_ratio()
        .map(|r| cfg.meta_script_ratio.bucket(r))
        .unwrap_or(-1);
    let comm_ratio = |targets: Vec<&str>| -> Option<f64> {
        if targets.is_empty() {
            return None;
        }
        let top = most_common_count(targets.iter().copied());
        Some(top as f64 / targets.len() as f64)
    };
    out[3] = comm_ratio(stats.anchors.iter().map(|a| a.target.as_str()).collect())
        .map(|r| cfg.common_page_ratio.bucket(r))
        .unwrap_or(-1);
    out[4] = comm_ratio(
        stats
            .anchors
            .iter()
            .filter(|a| a.in_footer)
            .map(|a| a.target.as_str())
            .collect(),
    )
    .map(|r| cfg.common_page_ratio.bucket(r))
    .unwrap_or(-1);

    // SFH: form handlers
    out[5] = {
        let mut value = -1i8;
        for form in &stats.forms {
            match &form.action {
                Some(a) if a.is_empty() || a.eq_ignore_ascii_case("about:blank") => {
                    value = 1;
                    break;
                }
                Some(a) => {
                    if matches!(classify_ref(a, own), RefClass::External(_)) {
                        value = value.max(0);
                    }
                }
                None => {}
            }
        }
        value
    };

    let behavior = squeeze_lower(&format!("{};{}", stats.script_text, stats.event_attrs));
    out[6] = bool_feat(behavior.contains("window.open"));
    out[7] = bool_feat(
        behavior.contains("oncontextmenu") || behavior.contains("event.button==2"),
    );

    let brand = brand_label(parts);
    out[8] = if stats.copyright_segments.is_empty() {
        0
    } else if brand.is_empty() {
        0
    } else {
        let found = stats
            .copyright_segments
            .iter()
            .any(|seg| text_tokens(seg).iter().any(|t| *t == brand));
        if found {
            -1
        } else {
            1
        }
    };

    let null_ratio = |c: &LinkCensus| -> Option<f64> {
        (c.total() > 0).then(|| c.null as f64 / c.total() as f64)
    };
    out[9] = null_ratio(&anchor_census)
        .map(|r| cfg.null_link_ratio.bucket(r))
        .unwrap_or(-1);
    let footer_census = census(
        stats
            .anchors
            .iter()
            .filter(|a| a.in_footer)
            .map(|a| a.target.as_str()),
        own,
    );
    out[10] = null_ratio(&footer_census)
        .map(|r| cfg.null_link_ratio.bucket(r))
        .unwrap_or(-1);
    out[11] = cfg
        .broken_links
        .bucket((object_census.broken) as f64);
    out[12] = {
        if stats.forms.iter().any(|f| f.has_password) {
            1
        } else if stats.forms.iter().any(|f| {
            f.action
                .as_deref()
                .map(|a| {
                    let a = a.to_ascii_lowercase();
                    cfg.sensitive_words.iter().any(|w| a.contains(w.as_str()))
                })
                .unwrap_or(false)
        }) {
            0
        } else {
            -1
        }
    };
    out[13] = bool_feat(stats.hidden_div);
    out[14] = bool_feat(stats.hidden_button);
    out[15] = bool_feat(stats.hidden_input);
    out[16] = if brand.is_empty() {
        0
    } else {
        let tokens = text_tokens(&format!("{} {}", stats.title, stats.visible_text));
        if tokens.iter().any(|t| *t == brand) {
            -1
        } else {
            1
        }
    };
    out[17] = if stats.iframe_invisible {
        1
    } else if stats.iframe_present {
        0
    } else {
        -1
    };
    out[18] = bool_feat(
        stats
            .favicons
            .iter()
            .any(|f| matches!(classify_ref(f, own), RefClass::External(_))),
    );
    out[19] = bool_feat(behavior.contains("window.status"));
    out[20] = {
        let css_census = census(stats.stylesheets.iter().map(|s| s.as_str()), own);
        match css_census.external_ratio() {
            None => -1,
            Some(r) if r > 0.5 => 1,
            Some(r) if r > 0.0 => 0,
            Some(_) => -1,
        }
    };
    out[21] = {
        if anchor_census.total() == 0 {
            -1
        } else {
            let bad = anchor_census.null + anchor_census.broken + anchor_census.external;
            cfg.anchor_ratio.bucket(bad as f64 / anchor_census.total() as f64)
        }
    };
    out
}

/// Full extraction: features 1–57 in table order plus diagnostics.
pub fn extract(
    page: &Webpage,
    provider: &dyn ExternalLookupProvider,
    cfg: &ThresholdConfig,
) -> (FeatureVector, ExtractionDiagnostics) {
    let parts = parse_url(&page.url);
    let (url_feats, diagnostics) = extract_url_features(&parts, &page.url, provider, cfg);
    let html_feats = extract_html_features(&page.html, &parts, cfg);
    let mut values = [0i8; N_FEATURES];
    values[..N_URL_FEATURES].copy_from_slice(&url_feats);
    values[N_URL_FEATURES..].copy_from_slice(&html_feats);
    (FeatureVector::new(values, page.id.clone()), diagnostics)
}
