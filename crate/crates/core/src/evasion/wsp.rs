//! Website-space mutators: raw-page edits a phisher can apply without any
//! access to the detector.

use rand::Rng as _;

use super::{AttackSpec, Edit, EvasionError, Perturbation, PerturbationSpace, Variant, WspMode};
use crate::corpus::{Label, Webpage};
use crate::features::{object_census, parse_url, ThresholdConfig};
use crate::seed;

const PATH_WORDS: &[&str] = &[
    "assets", "static", "media", "pages", "content", "images", "files", "docs", "info", "news",
];

fn fabricated_path(rng: &mut seed::Rng) -> String {
    let dir = PATH_WORDS[rng.gen_range(0..PATH_WORDS.len())];
    let mut token = String::new();
    for _ in 0..8 {
        let c = b"abcdefghijklmnopqrstuvwxyz0123456789"[rng.gen_range(0..36)];
        token.push(char::from(c));
    }
    format!("/{dir}/{token}.html")
}

/// Inserts `k` invisible anchors pointing at fabricated paths. When
/// `internal_domain` is empty the hrefs are relative, which keeps them
/// internal even if a combined attack later rewrites the page URL.
/// Visible rendered text is unchanged: the anchors are empty and styled
/// `display:none`.
pub fn wsp_add_hidden_links(
    html: &[u8],
    k: usize,
    internal_domain: &str,
    seed_value: u64,
) -> Result<Vec<u8>, EvasionError> {
    if k == 0 {
        return Err(EvasionError::ZeroLinks);
    }
    let mut rng = seed::rng(seed_value);
    let mut block = String::with_capacity(k * 64);
    for _ in 0..k {
        let path = fabricated_path(&mut rng);
        let href = if internal_domain.is_empty() {
            path
        } else {
            format!("https://{internal_domain}{path}")
        };
        block.push_str(&format!("<a href=\"{href}\" style=\"display:none\"></a>"));
    }

    // insert before the closing body tag when there is one
    let lower: Vec<u8> = html.to_ascii_lowercase();
    let needle = b"</body>";
    let insert_at = lower
        .windows(needle.len())
        .rposition(|w| w == needle);
    let mut out = Vec::with_capacity(html.len() + block.len() + 32);
    match insert_at {
        Some(pos) => {
            out.extend_from_slice(&html[..pos]);
            out.extend_from_slice(block.as_bytes());
            out.extend_from_slice(&html[pos..]);
        }
        None if html.is_empty() => {
            out.extend_from_slice(b"<html><body>");
            out.extend_from_slice(block.as_bytes());
            out.extend_from_slice(b"</body></html>");
        }
        None => {
            out.extend_from_slice(html);
            out.extend_from_slice(block.as_bytes());
        }
    }
    Ok(out)
}

fn is_absolute_ref(value: &str) -> bool {
    let v = value.trim().to_ascii_lowercase();
    v.starts_with("http://") || v.starts_with("https://") || v.starts_with("//")
}

/// Byte spans of `href=...` attributes inside `<a>` tags, with their values.
fn anchor_href_spans(html: &[u8]) -> Vec<(std::ops::Range<usize>, String)> {
    let mut spans = Vec::new();
    let mut i = 0usize;
    while i + 1 < html.len() {
        if html[i] != b'<' {
            i += 1;
            continue;
        }
        let is_anchor = (html[i + 1] == b'a' || html[i + 1] == b'A')
            && html
                .get(i + 2)
                .map(|&b| b.is_ascii_whitespace() || b == b'>' || b == b'/')
                .unwrap_or(true);
        if !is_anchor {
            i += 1;
            continue;
        }
        // scan attributes until the tag ends
        let mut j = i + 2;
        while j < html.len() && html[j] != b'>' {
            while j < html.len() && html[j].is_ascii_whitespace() {
                j += 1;
            }
            let attr_start = j;
            while j < html.len()
                && !html[j].is_ascii_whitespace()
                && html[j] != b'='
                && html[j] != b'>'
            {
                j += 1;
            }
            let name = html[attr_start..j.min(html.len())].to_ascii_lowercase();
            let mut value = Vec::new();
            let mut value_end = j;
            if j < html.len() && html[j] == b'=' {
                j += 1;
                while j < html.len() && html[j].is_ascii_whitespace() {
                    j += 1;
                }
                if j < html.len() && (html[j] == b'"' || html[j] == b'\'') {
                    let quote = html[j];
                    j += 1;
                    let vs = j;
                    while j < html.len() && html[j] != quote {
                        j += 1;
                    }
                    value = html[vs..j.min(html.len())].to_vec();
                    if j < html.len() {
                        j += 1;
                    }
                } else {
                    let vs = j;
                    while j < html.len() && !html[j].is_ascii_whitespace() && html[j] != b'>' {
                        j += 1;
                    }
                    value = html[vs..j].to_vec();
                }
                value_end = j;
            }
            if name == b"href" {
                spans.push((
                    attr_start..value_end,
                    String::from_utf8_lossy(&value).into_owned(),
                ));
            }
        }
        i = j + 1;
    }
    spans
}

/// Rewrites absolute anchor hrefs into onclick assignments so a static href
/// pass no longer counts them; a click still reaches the target. Idempotent:
/// wrapped anchors have no href left to wrap. `limit` bounds how many anchors
/// are rewritten (document order); `None` wraps them all.
pub fn wrap_links_limited(html: &[u8], limit: Option<usize>) -> (Vec<u8>, usize) {
    let spans = anchor_href_spans(html);
    let mut out = Vec::with_capacity(html.len() + 64);
    let mut cursor = 0usize;
    let mut wrapped = 0usize;
    for (span, value) in spans {
        if let Some(max) = limit {
            if wrapped >= max {
                break;
            }
        }
        // only absolute refs; skip values that cannot sit in single quotes
        if !is_absolute_ref(&value) || value.contains('\'') {
            continue;
        }
        out.extend_from_slice(&html[cursor..span.start]);
        out.extend_from_slice(format!("onclick=\"this.href='{}'\"", value.trim()).as_bytes());
        cursor = span.end;
        wrapped += 1;
    }
    out.extend_from_slice(&html[cursor..]);
    (out, wrapped)
}

/// Wraps every external (absolute) anchor href. Deterministic; the seed is
/// accepted for mutator-signature uniformity.
pub fn wsp_wrap_links(html: &[u8], _seed: u64) -> Vec<u8> {
    wrap_links_limited(html, None).0
}

/// Simulated URL shortening: a deterministic 7-character base62 token under
/// the first configured shortener domain.
pub fn wsp_shorten_url(url: &str, cfg: &ThresholdConfig) -> String {
    let domain = cfg
        .shortening_services
        .first()
        .map(String::as_str)
        .unwrap_or("bit.ly");
    const ALPHABET: &[u8] = b"0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz";
    let mut h = seed::splitmix64(seed::hash_str(url));
    let mut token = String::with_capacity(7);
    for _ in 0..7 {
        token.push(char::from(ALPHABET[(h % 62) as usize]));
        h /= 62;
    }
    format!("https://{domain}/{token}")
}

/// Minimal number of hidden internal links that pushes the external-object
/// ratio into the legitimate bucket.
fn minimal_links_for_legit(external: usize, counted: usize, legit_max: f64) -> usize {
    if external == 0 {
        return 0;
    }
    let mut k = 0usize;
    loop {
        let ratio = external as f64 / (counted + k) as f64;
        if ratio <= legit_max {
            return k;
        }
        k += 1;
        if k > 1_000_000 {
            return k; // unreachable for sane cuts; guards a zero cut
        }
    }
}

/// Minimal number of wrapped external anchors that pushes the ratio into the
/// legitimate bucket, capped at the number of wrappable anchors.
fn minimal_wraps_for_legit(
    external: usize,
    counted: usize,
    wrappable: usize,
    legit_max: f64,
) -> usize {
    for w in 0..=wrappable.min(external) {
        let ext = external - w;
        let denom = counted - w;
        if denom == 0 || ext as f64 / denom as f64 <= legit_max {
            return w;
        }
    }
    wrappable.min(external)
}

/// Applies the website-space attack. Variant u edits only the URL, r only
/// the HTML, c both. The blind family (WA) uses fixed heuristics; the
/// advanced family computes threshold-crossing minimal edits from the
/// supplied extractor knowledge.
pub fn craft_wsp(
    page: &Webpage,
    spec: &AttackSpec,
    extractor_knowledge: Option<&ThresholdConfig>,
) -> Result<(Webpage, Perturbation), EvasionError> {
    if !spec.family.is_website_space() {
        return Err(EvasionError::BadFamily {
            family: spec.family,
            operation: "craft_wsp",
        });
    }
    if page.label != Label::Phishing {
        return Err(EvasionError::BenignBasis {
            id: page.id.clone(),
        });
    }
    let advanced = spec.family.is_advanced();
    if advanced && extractor_knowledge.is_none() {
        return Err(EvasionError::MissingKnowledge);
    }
    // the blind attacker still owns tooling with stock thresholds
    let cfg = extractor_knowledge.unwrap_or_else(|| ThresholdConfig::default_config());
    let page_seed = seed::mix_str(spec.seed, &page.id);

    let mut edits = Vec::new();
    let mut out = page.clone();

    if matches!(spec.variant, Variant::U | Variant::C) {
        let short = wsp_shorten_url(&page.url, cfg);
        edits.push(Edit::UrlRewrite {
            from: page.url.clone(),
            to: short.clone(),
        });
        out = out.with_url(short);
    }

    if matches!(spec.variant, Variant::R | Variant::C) {
        let parts = parse_url(&page.url);
        let census = object_census(&page.html, &parts);
        match spec.wsp_mode {
            WspMode::AddFakeLinks => {
                let k = if advanced {
                    minimal_links_for_legit(
                        census.external,
                        census.counted(),
                        cfg.object_ratio.legit_max,
                    )
                } else {
                    census.external // blind heuristic: match the external count
                };
                if k > 0 {
                    // relative hrefs stay internal under the c-variant's URL
                    // rewrite
                    let html = wsp_add_hidden_links(&page.html, k, "", page_seed)?;
                    out = out.with_html(html);
                    edits.push(Edit::HtmlInsertion {
                        description: format!("{k} hidden internal links"),
                    });
                }
            }
            WspMode::LinkWrapping => {
                let spans_wrappable = anchor_href_spans(&page.html)
                    .iter()
                    .filter(|(_, v)| is_absolute_ref(v) && !v.contains('\''))
                    .count();
                let limit = if advanced {
                    minimal_wraps_for_legit(
                        census.external,
                        census.counted(),
                        spans_wrappable,
                        cfg.object_ratio.legit_max,
                    )
                } else {
                    spans_wrappable
                };
                if limit > 0 {
                    let (html, wrapped) = wrap_links_limited(&page.html, Some(limit));
                    if wrapped > 0 {
                        out = out.with_html(html);
                        edits.push(Edit::HtmlInsertion {
                            description: format!("{wrapped} anchors wrapped into onclick"),
                        });
                    }
                }
            }
        }
    }

    Ok((
        out,
        Perturbation {
            space: PerturbationSpace::Website,
            edits,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evasion::AttackFamily;
    use crate::features::{feature_index, html::visible_text, FeatureVector};
    use crate::features::{extract, OfflineLookupProvider};

    fn cfg() -> &'static ThresholdConfig {
        ThresholdConfig::default_config()
    }

    fn page_with_links(external: usize, internal: usize) -> Webpage {
        let mut html = String::from("<html><body><p>pay now</p>");
        for i in 0..external {
            html.push_str(&format!("<a href=\"https://brand{i}.com/x\">b{i}</a>"));
        }
        for i in 0..internal {
            html.push_str(&format!("<a href=\"/p{i}\">p{i}</a>"));
        }
        html.push_str("</body></html>");
        Webpage::new(
            "atk-1",
            "https://xk3-secure-login.phish-host.xyz/verify/account?id=0a9f8e7d6c5b4a39",
            html.into_bytes(),
            Label::Phishing,
        )
    }

    fn extract_vec(p: &Webpage) -> FeatureVector {
        extract(p, &OfflineLookupProvider::empty(), cfg()).0
    }

    #[test]
    fn hidden_links_halve_a_fully_external_ratio() {
        let page = page_with_links(10, 0);
        let parts = parse_url(&page.url);
        let before = object_census(&page.html, &parts);
        assert_eq!(before.external, 10);
        assert_eq!(before.counted(), 10);
        let html = wsp_add_hidden_links(&page.html, 10, "", 1).unwrap();
        let after = object_census(&html, &parts);
        assert_eq!(after.external, 10);
        assert_eq!(after.counted(), 20);
        assert!((after.external_ratio().unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn hidden_links_zero_k_rejected() {
        assert!(matches!(
            wsp_add_hidden_links(b"<body></body>", 0, "", 1),
            Err(EvasionError::ZeroLinks)
        ));
    }

    #[test]
    fn hidden_links_keep_visible_text_identical() {
        let page = page_with_links(6, 3);
        let before = visible_text(&page.html);
        let html = wsp_add_hidden_links(&page.html, 12, "", 99).unwrap();
        assert_eq!(visible_text(&html), before);
        // absolute internal form also keeps text unchanged
        let html = wsp_add_hidden_links(&page.html, 3, "phish-host.xyz", 99).unwrap();
        assert_eq!(visible_text(&html), before);
    }

    #[test]
    fn hidden_links_wrap_empty_html() {
        let html = wsp_add_hidden_links(b"", 2, "", 5).unwrap();
        let parts = parse_url("https://x.example.com/");
        assert_eq!(object_census(&html, &parts).internal, 2);
    }

    #[test]
    fn hidden_links_deterministic_per_seed() {
        let page = page_with_links(4, 4);
        assert_eq!(
            wsp_add_hidden_links(&page.html, 5, "", 3).unwrap(),
            wsp_add_hidden_links(&page.html, 5, "", 3).unwrap()
        );
        assert_ne!(
            wsp_add_hidden_links(&page.html, 5, "", 3).unwrap(),
            wsp_add_hidden_links(&page.html, 5, "", 4).unwrap()
        );
    }

    #[test]
    fn wrapping_removes_external_hrefs_from_the_census() {
        let page = page_with_links(5, 5);
        let parts = parse_url(&page.url);
        let wrapped = wsp_wrap_links(&page.html, 0);
        let census = object_census(&wrapped, &parts);
        assert_eq!(census.external, 0);
        assert_eq!(census.counted(), 5);
    }

    #[test]
    fn wrapping_is_idempotent_and_noop_without_anchors() {
        let page = page_with_links(3, 2);
        let once = wsp_wrap_links(&page.html, 0);
        let twice = wsp_wrap_links(&once, 0);
        assert_eq!(once, twice);
        let plain = b"<html><body><p>no links</p></body></html>".to_vec();
        assert_eq!(wsp_wrap_links(&plain, 0), plain);
    }

    #[test]
    fn shortened_urls_are_22_chars_and_deterministic() {
        let original = "https://www.63y3hfh-fj39f30-f30if0f-f392.weebly.com/";
        assert_eq!(original.chars().count(), 52);
        let short = wsp_shorten_url(original, cfg());
        assert_eq!(short.chars().count(), 22);
        assert!(short.starts_with("https://bit.ly/"));
        assert_eq!(short, wsp_shorten_url(original, cfg()));
        assert_ne!(short, wsp_shorten_url("https://other.example/", cfg()));
    }

    #[test]
    fn shortened_url_extracts_as_short_and_legit_length() {
        let page = page_with_links(2, 2);
        let short = wsp_shorten_url(&page.url, cfg());
        let shortened = page.with_url(short);
        let v = extract_vec(&shortened);
        assert_eq!(v.values[feature_index("URL_short").unwrap()], 1);
        assert_eq!(v.values[feature_index("URL_length").unwrap()], -1);
    }

    #[test]
    fn craft_rejects_bad_inputs() {
        let page = page_with_links(2, 2);
        let benign = Webpage::new("b", "https://a.example/", vec![], Label::Benign);
        let wa = AttackSpec::new(AttackFamily::Wa, Variant::U, 1);
        assert!(matches!(
            craft_wsp(&benign, &wa, None),
            Err(EvasionError::BenignBasis { .. })
        ));
        let adv = AttackSpec::new(AttackFamily::WaAdv, Variant::U, 1);
        assert!(matches!(
            craft_wsp(&page, &adv, None),
            Err(EvasionError::MissingKnowledge)
        ));
        let pa = AttackSpec::new(AttackFamily::Pa, Variant::U, 1);
        assert!(matches!(
            craft_wsp(&page, &pa, Some(cfg())),
            Err(EvasionError::BadFamily { .. })
        ));
    }

    #[test]
    fn adv_u_crosses_the_length_threshold() {
        let page = page_with_links(2, 2);
        assert!(page.url.chars().count() > 54);
        let adv = AttackSpec::new(AttackFamily::WaAdv, Variant::U, 1);
        let (out, _) = craft_wsp(&page, &adv, Some(cfg())).unwrap();
        assert!(out.url.chars().count() <= 54);
        let v = extract_vec(&out);
        assert_eq!(v.values[feature_index("URL_length").unwrap()], -1);
        assert_eq!(out.html, page.html);
    }

    #[test]
    fn blind_and_adv_u_produce_identical_outputs_under_default_knowledge() {
        let page = page_with_links(4, 1);
        let wa = AttackSpec::new(AttackFamily::Wa, Variant::U, 9);
        let adv = AttackSpec::new(AttackFamily::WaAdv, Variant::U, 9);
        let (wa_out, _) = craft_wsp(&page, &wa, None).unwrap();
        let (adv_out, _) = craft_wsp(&page, &adv, Some(cfg())).unwrap();
        assert_eq!(wa_out.url, adv_out.url);
        assert_eq!(wa_out.html, adv_out.html);
        assert_eq!(extract_vec(&wa_out), extract_vec(&adv_out));
    }

    #[test]
    fn blind_r_with_no_external_links_changes_nothing() {
        let page = page_with_links(0, 6);
        let wa = AttackSpec::new(AttackFamily::Wa, Variant::R, 3);
        let (out, p) = craft_wsp(&page, &wa, None).unwrap();
        assert_eq!(out.html, page.html);
        assert_eq!(out.url, page.url);
        assert!(p.edits.is_empty());
    }

    #[test]
    fn adv_r_reaches_the_legit_bucket_exactly() {
        let page = page_with_links(10, 0);
        let adv = AttackSpec::new(AttackFamily::WaAdv, Variant::R, 3);
        let (out, _) = craft_wsp(&page, &adv, Some(cfg())).unwrap();
        let v = extract_vec(&out);
        assert_eq!(v.values[feature_index("HTML_objectRatio").unwrap()], -1);
        // minimality: one link fewer stays above the cut
        let parts = parse_url(&page.url);
        let census = object_census(&out.html, &parts);
        let added = census.counted() - 10;
        assert!(added >= 1);
        let one_less = 10.0 / (10 + added - 1) as f64;
        assert!(one_less > cfg().object_ratio.legit_max);
    }

    #[test]
    fn adv_r_wrapping_variant_crosses_threshold() {
        let page = page_with_links(6, 6);
        let mut adv = AttackSpec::new(AttackFamily::WaAdv, Variant::R, 3);
        adv.wsp_mode = WspMode::LinkWrapping;
        let (out, _) = craft_wsp(&page, &adv, Some(cfg())).unwrap();
        let parts = parse_url(&page.url);
        let census = object_census(&out.html, &parts);
        assert!(census.external_ratio().unwrap() <= cfg().object_ratio.legit_max);
    }

    #[test]
    fn u_variants_never_touch_html_and_r_never_touch_url() {
        let page = page_with_links(5, 3);
        for family in [AttackFamily::Wa, AttackFamily::WaAdv] {
            let (u_out, _) =
                craft_wsp(&page, &AttackSpec::new(family, Variant::U, 2), Some(cfg())).unwrap();
            assert_eq!(u_out.html, page.html);
            assert_ne!(u_out.url, page.url);
            let (r_out, _) =
                craft_wsp(&page, &AttackSpec::new(family, Variant::R, 2), Some(cfg())).unwrap();
            assert_eq!(r_out.url, page.url);
            assert_ne!(r_out.html, page.html);
            assert_eq!(r_out.label, Label::Phishing);
            assert_eq!(r_out.id, page.id);
        }
    }
}
