//! Third-party-lookup features (DNS, WHOIS age, page rank, ...) behind a
//! pluggable provider.
//!
//! Historical lookup state is not reproducible, so the default provider is
//! offline: it serves values recorded in per-sample sidecar files
//! (`<id>.meta.json`) and reports a miss for anything else. A miss is mapped
//! to 0 (suspicious) by the extractor and counted in its diagnostics.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Dataset;

/// The nine lookup-dependent features, in feature-table order (22–30).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LookupFeature {
    Dns,
    DomainAge,
    Abnormal,
    Ports,
    Ssl,
    StatisticReport,
    PageRank,
    RegistrationLength,
    GoogleIndex,
}

impl LookupFeature {
    pub const ALL: [LookupFeature; 9] = [
        LookupFeature::Dns,
        LookupFeature::DomainAge,
        LookupFeature::Abnormal,
        LookupFeature::Ports,
        LookupFeature::Ssl,
        LookupFeature::StatisticReport,
        LookupFeature::PageRank,
        LookupFeature::RegistrationLength,
        LookupFeature::GoogleIndex,
    ];

    /// Feature-table name, as used in sidecar files and CSV headers.
    pub fn name(self) -> &'static str {
        match self {
            LookupFeature::Dns => "URL_DNS",
            LookupFeature::DomainAge => "URL_domAge",
            LookupFeature::Abnormal => "URL_abnormal",
            LookupFeature::Ports => "URL_ports",
            LookupFeature::Ssl => "URL_SSL",
            LookupFeature::StatisticReport => "URL_statisticRe",
            LookupFeature::PageRank => "URL_pageRank",
            LookupFeature::RegistrationLength => "URL_regLen",
            LookupFeature::GoogleIndex => "URL_checkGI",
        }
    }

    pub fn from_name(name: &str) -> Option<LookupFeature> {
        LookupFeature::ALL.iter().copied().find(|f| f.name() == name)
    }
}

/// Resolves lookup-dependent features for a URL. `None` is a miss; the
/// extractor maps it to 0 (suspicious). Implementations must be
/// deterministic for a fixed provider state.
pub trait ExternalLookupProvider: Sync {
    fn lookup(&self, url: &str, feature: LookupFeature) -> Option<i8>;
}

/// Offline provider backed by sidecar metadata files.
#[derive(Debug, Default, Clone)]
pub struct OfflineLookupProvider {
    by_url: HashMap<String, HashMap<LookupFeature, i8>>,
}

impl OfflineLookupProvider {
    /// Provider with no recorded state: every lookup is a miss.
    pub fn empty() -> OfflineLookupProvider {
        OfflineLookupProvider::default()
    }

    /// Loads `<id>.meta.json` sidecars from `dir` for every sample of
    /// `dataset` that has one. Unknown feature names and out-of-range values
    /// are ignored.
    pub fn load_sidecars(dir: &Path, dataset: &Dataset) -> OfflineLookupProvider {
        let mut by_url = HashMap::new();
        for sample in &dataset.samples {
            let sidecar = dir.join(format!("{}.meta.json", sample.id));
            let Ok(bytes) = std::fs::read(&sidecar) else {
                continue;
            };
            let Ok(map) = serde_json::from_slice::<HashMap<String, i8>>(&bytes) else {
                log::warn!("ignoring malformed sidecar {}", sidecar.display());
                continue;
            };
            let mut values = HashMap::new();
            for (name, value) in map {
                if let Some(feature) = LookupFeature::from_name(&name) {
                    if (-1..=1).contains(&value) {
                        values.insert(feature, value);
                    }
                }
            }
            by_url.insert(sample.url.clone(), values);
        }
        OfflineLookupProvider { by_url }
    }

    pub fn insert(&mut self, url: &str, feature: LookupFeature, value: i8) {
        self.by_url
            .entry(url.to_string())
            .or_default()
            .insert(feature, value);
    }
}

impl ExternalLookupProvider for OfflineLookupProvider {
    fn lookup(&self, url: &str, feature: LookupFeature) -> Option<i8> {
        self.by_url.get(url).and_then(|m| m.get(&feature)).copied()
    }
}
