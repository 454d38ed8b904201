//! Total URL decomposition for lexical feature extraction.
//!
//! `parse_url` never fails: malformed input yields an empty parts record.
//! Registered-domain extraction is public-suffix aware against a built-in
//! suffix table (no network, no external list fetch).

use url::{Host, Url};

/// Decomposed URL. All strings lowercase where the syntax is
/// case-insensitive (scheme, host).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UrlParts {
    pub scheme: String,
    pub host: String,
    pub registered_domain: String,
    pub subdomain_labels: Vec<String>,
    pub port: Option<u16>,
    pub path: String,
    pub path_segments: Vec<String>,
    pub query: String,
    pub is_ip_literal: bool,
}

/// Single-label public suffixes (generic and country TLDs).
const SUFFIXES_1: &[&str] = &[
    "com", "org", "net", "edu", "gov", "mil", "int", "info", "biz", "io", "ly", "co", "me", "cc",
    "tv", "xyz", "top", "site", "online", "app", "dev", "shop", "club", "ru", "de", "uk", "fr",
    "it", "nl", "cn", "jp", "br", "in", "au", "ca", "es", "se", "ch", "at", "be", "dk", "fi",
    "no", "pl", "pt", "gr", "cz", "ro", "hu", "ie", "il", "kr", "mx", "nz", "za", "tr", "ua",
    "sk", "si", "lt", "lv", "ee", "vn", "th", "id", "my", "ph", "sg", "hk", "tw", "ar", "cl",
    "pe", "gd", "gl", "to", "ws", "su", "pw", "icu", "click", "link", "live", "work", "space",
];

/// Multi-label public suffixes, including common hosted-platform suffixes.
const SUFFIXES_2: &[&str] = &[
    "co.uk", "org.uk", "ac.uk", "gov.uk", "com.au", "net.au", "org.au", "co.nz", "co.jp",
    "ne.jp", "or.jp", "com.br", "com.cn", "com.mx", "com.ar", "co.in", "co.kr", "com.tr",
    "com.sg", "com.hk", "com.tw", "co.za", "com.ua", "github.io", "gitlab.io", "herokuapp.com",
    "netlify.app", "web.app", "firebaseapp.com", "blogspot.com", "wordpress.com", "pages.dev",
];

/// True when `label` is a known single-label public suffix.
pub fn is_known_tld(label: &str) -> bool {
    SUFFIXES_1.contains(&label)
}

fn registered_domain_of(host: &str) -> (String, Vec<String>) {
    let host = host.trim_end_matches('.');
    let labels: Vec<&str> = host.split('.').collect();
    if labels.len() <= 1 {
        return (host.to_string(), Vec::new());
    }
    // longest multi-label suffix first, then single-label, else default to
    // the last label as the suffix
    let mut suffix_len = 1usize;
    if labels.len() >= 2 {
        let last2 = labels[labels.len() - 2..].join(".");
        if SUFFIXES_2.contains(&last2.as_str()) {
            suffix_len = 2;
        }
    }
    if suffix_len == 1 && !SUFFIXES_1.contains(&labels[labels.len() - 1]) {
        // unknown TLD: treat the last label as a suffix anyway
        suffix_len = 1;
    }
    let reg_len = (suffix_len + 1).min(labels.len());
    let registered = labels[labels.len() - reg_len..].join(".");
    let subs = labels[..labels.len() - reg_len]
        .iter()
        .map(|s| s.to_string())
        .collect();
    (registered, subs)
}

/// Total URL parser. Malformed or relative input yields empty parts.
pub fn parse_url(raw: &str) -> UrlParts {
    let parsed = match Url::parse(raw.trim()) {
        Ok(u) => u,
        Err(_) => return UrlParts::default(),
    };
    let mut parts = UrlParts {
        scheme: parsed.scheme().to_ascii_lowercase(),
        port: parsed.port(),
        query: parsed.query().unwrap_or("").to_string(),
        path: parsed.path().to_string(),
        ..UrlParts::default()
    };
    parts.path_segments = parsed
        .path_segments()
        .map(|segs| {
            segs.filter(|s| !s.is_empty())
                .map(|s| s.to_string())
                .collect()
        })
        .unwrap_or_default();
    match parsed.host() {
        Some(Host::Domain(d)) => {
            parts.host = d.to_ascii_lowercase();
            let (reg, subs) = registered_domain_of(&parts.host);
            parts.registered_domain = reg;
            parts.subdomain_labels = subs;
        }
        Some(Host::Ipv4(ip)) => {
            parts.host = ip.to_string();
            parts.registered_domain = parts.host.clone();
            parts.is_ip_literal = true;
        }
        Some(Host::Ipv6(ip)) => {
            parts.host = ip.to_string();
            parts.registered_domain = parts.host.clone();
            parts.is_ip_literal = true;
        }
        None => {}
    }
    parts
}

/// Maximal alphanumeric runs of `s`, lowercased.
pub fn words(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in s.chars() {
        if c.is_alphanumeric() {
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

/// (shortest, longest, average) word length; `None` when there are no words.
pub fn word_stats(words: &[String]) -> Option<(usize, usize, f64)> {
    if words.is_empty() {
        return None;
    }
    let mut min = usize::MAX;
    let mut max = 0usize;
    let mut sum = 0usize;
    for w in words {
        let n = w.chars().count();
        min = min.min(n);
        max = max.max(n);
        sum += n;
    }
    Some((min, max, sum as f64 / words.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subdomained_hosting_registers_the_platform_domain() {
        let parts = parse_url("https://www.63y3hfh-fj39f30-f30if0f-f392.weebly.com/");
        assert_eq!(parts.host, "www.63y3hfh-fj39f30-f30if0f-f392.weebly.com");
        assert_eq!(parts.registered_domain, "weebly.com");
        assert_eq!(
            parts.subdomain_labels,
            vec!["www".to_string(), "63y3hfh-fj39f30-f30if0f-f392".to_string()]
        );
        assert!(!parts.is_ip_literal);
    }

    #[test]
    fn ip_literal_host() {
        let parts = parse_url("http://192.168.4.1/login");
        assert!(parts.is_ip_literal);
        assert_eq!(parts.host, "192.168.4.1");
        assert_eq!(parts.path_segments, vec!["login".to_string()]);
    }

    #[test]
    fn garbage_yields_empty_parts() {
        let parts = parse_url("not a url");
        assert_eq!(parts.host, "");
        assert_eq!(parts.scheme, "");
        assert!(!parts.is_ip_literal);
        assert_eq!(parse_url(""), UrlParts::default());
    }

    #[test]
    fn multi_label_suffixes() {
        assert_eq!(
            parse_url("https://shop.example.co.uk/x").registered_domain,
            "example.co.uk"
        );
        assert_eq!(
            parse_url("https://evil.github.io/").registered_domain,
            "evil.github.io"
        );
    }

    #[test]
    fn data_uri_has_no_host() {
        let parts = parse_url("data:text/html,<h1>x</h1>");
        assert_eq!(parts.scheme, "data");
        assert_eq!(parts.host, "");
    }

    #[test]
    fn explicit_port_captured() {
        assert_eq!(parse_url("http://example.com:8080/").port, Some(8080));
        assert_eq!(parse_url("http://example.com/").port, None);
    }

    #[test]
    fn words_and_stats() {
        let w = words("https://www.acme-shop.com/a/b?id=42");
        assert_eq!(w[0], "https");
        assert!(w.contains(&"acme".to_string()));
        assert!(w.contains(&"42".to_string()));
        let (min, max, avg) = word_stats(&w).unwrap();
        assert_eq!(min, 1);
        assert!(max >= 4);
        assert!(avg > 1.0);
    }
}
