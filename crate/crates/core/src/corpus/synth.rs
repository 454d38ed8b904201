//! Synthetic corpus generation for desk-scale experiments.
//!
//! Pages are built so that class-correlated properties match what the feature
//! extractor measures: phishing pages get long gibberish URLs, external-heavy
//! link sets, login forms and hidden elements; benign pages get short
//! brand-like URLs and internal-heavy (relative) link sets. Every property is
//! sampled with noise, and both classes contain hard cases (stealthy phishing,
//! messy benign), so the classes are separable but not trivially.
//!
//! Internal references are always relative and third-party references always
//! absolute, so a URL-only perturbation cannot move any HTML feature of a
//! generated page.

use rand::Rng as _;
use thiserror::Error;

use super::{Dataset, Label, Webpage};
use crate::seed;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("synthetic corpus needs at least one sample per class (benign={0}, phishing={1})")]
    ZeroCount(u64, u64),
}

const WORDS: &[&str] = &[
    "harbor", "meadow", "cedar", "lantern", "summit", "willow", "copper", "ember", "garnet",
    "juniper", "marble", "nectar", "onward", "prairie", "quarry", "raven", "saffron", "timber",
    "umber", "violet", "walnut", "yonder", "zephyr", "anchor", "breeze", "canyon", "delta",
    "estuary", "fjord", "glacier",
];

const BENIGN_BRANDS: &[&str] = &[
    "northwind", "bluecedar", "acmetools", "greenleaf", "stonepath", "clearlake", "redmaple",
    "silverfox", "oakridge", "brightsky", "fairview", "goldcrest", "irongate", "lakeshore",
    "pinehill",
];

const SPOOFED_BRANDS: &[&str] = &[
    "paypal", "amazon", "chase", "netflix", "microsoft", "appleid", "dropbox", "instagram",
    "wellsfargo", "linkedin",
];

const BENIGN_TLDS: &[&str] = &["com", "org", "net", "io", "de", "co.uk"];
const PHISH_TLDS: &[&str] = &["xyz", "top", "online", "site", "info", "ru", "cc", "com"];

const SENSITIVE_PATH_WORDS: &[&str] = &[
    "login", "secure", "account", "verify", "update", "signin", "banking", "confirm", "webscr",
    "password",
];

const URGENCY_LINES: &[&str] = &[
    "Your account has been temporarily suspended pending verification.",
    "Unusual activity was detected. Confirm your identity to restore access.",
    "Action required: validate your payment details within 24 hours.",
    "We could not process your last statement. Sign in to review.",
];

const CALM_LINES: &[&str] = &[
    "Our team has been serving the region since 1998.",
    "Browse the catalogue or get in touch with support.",
    "Read the latest updates from the engineering group.",
    "Quality service and transparent pricing, every day.",
];

const SHORT_HOST_SUFFIXES: &[&str] = &["hub", "lab", "zone", "base", "spot", "deck"];

const GENERIC_TITLES: &[&str] = &[
    "Welcome to the customer portal",
    "Home page",
    "Online services",
    "Member area",
];

fn pick<'a>(rng: &mut seed::Rng, pool: &'a [&'a str]) -> &'a str {
    pool[rng.gen_range(0..pool.len())]
}

fn gibberish(rng: &mut seed::Rng, len: usize, digits: bool, dashes: bool) -> String {
    let mut out = String::with_capacity(len);
    for i in 0..len {
        let roll = rng.gen_range(0u32..10);
        if digits && roll < 3 {
            out.push(char::from(b'0' + rng.gen_range(0..10u8)));
        } else if dashes && roll == 3 && i > 0 && i + 1 < len {
            out.push('-');
        } else {
            out.push(char::from(b'a' + rng.gen_range(0..26u8)));
        }
    }
    out
}

struct PageBuilder {
    head: Vec<String>,
    body: Vec<String>,
    footer: Vec<String>,
}

impl PageBuilder {
    fn new() -> PageBuilder {
        PageBuilder {
            head: Vec::new(),
            body: Vec::new(),
            footer: Vec::new(),
        }
    }

    fn render(self, title: &str, body_attrs: &str) -> Vec<u8> {
        let mut html = String::with_capacity(4096);
        html.push_str("<!DOCTYPE html>\n<html>\n<head>\n");
        html.push_str(&format!("<title>{title}</title>\n"));
        html.push_str("<meta charset=\"utf-8\">\n");
        for h in self.head {
            html.push_str(&h);
            html.push('\n');
        }
        html.push_str("</head>\n");
        html.push_str(&format!("<body{body_attrs}>\n"));
        for b in self.body {
            html.push_str(&b);
            html.push('\n');
        }
        if !self.footer.is_empty() {
            html.push_str("<footer>\n");
            for f in self.footer {
                html.push_str(&f);
                html.push('\n');
            }
            html.push_str("</footer>\n");
        }
        html.push_str("</body>\n</html>\n");
        html.into_bytes()
    }
}

fn internal_nav(page: &mut PageBuilder, rng: &mut seed::Rng, n: usize) {
    page.body.push("<nav>".into());
    for _ in 0..n {
        let w = pick(rng, WORDS);
        page.body.push(format!("<a href=\"/{w}\">{w}</a>"));
    }
    page.body.push("</nav>".into());
}

fn benign_page(rng: &mut seed::Rng, index: u64) -> Webpage {
    let brand = pick(rng, BENIGN_BRANDS);
    let tld = pick(rng, BENIGN_TLDS);
    let www = if rng.gen_bool(0.7) { "www." } else { "" };
    let host = if rng.gen_bool(0.05) {
        format!("{www}{brand}-{}.{tld}", pick(rng, WORDS))
    } else {
        format!("{www}{brand}.{tld}")
    };
    let path = match rng.gen_range(0..4u32) {
        0 => "/".to_string(),
        1 => format!("/{}", pick(rng, WORDS)),
        2 => format!("/{}/{}", pick(rng, WORDS), pick(rng, WORDS)),
        _ => format!("/{}.html", pick(rng, WORDS)),
    };
    // occasional long query keeps URL_length from being a perfect separator
    let query = if rng.gen_bool(0.06) {
        format!("?ref={}&session={}", pick(rng, WORDS), gibberish(rng, 24, true, false))
    } else {
        String::new()
    };
    let url = format!("https://{host}{path}{query}");

    let messy = rng.gen_bool(0.05);
    let mut page = PageBuilder::new();
    page.head
        .push("<link rel=\"stylesheet\" href=\"/css/main.css\">".into());
    if rng.gen_bool(0.8) {
        page.head
            .push("<link rel=\"icon\" href=\"/favicon.ico\">".into());
    }
    page.head
        .push("<script src=\"/js/app.js\"></script>".into());
    if rng.gen_bool(0.15) {
        page.head.push(format!(
            "<script src=\"https://cdn.{}.com/lib.js\"></script>",
            pick(rng, WORDS)
        ));
    }

    if rng.gen_bool(0.65) {
        page.body.push(format!("<h1>{brand} home</h1>"));
    } else {
        page.body.push(format!("<h1>{}</h1>", pick(rng, GENERIC_TITLES)));
    }
    let nav_n = rng.gen_range(8..24);
    internal_nav(&mut page, rng, nav_n);
    // messy benign pages link out heavily (aggregators, blogs)
    let n_external = if messy {
        rng.gen_range(8..18)
    } else if rng.gen_bool(0.4) {
        rng.gen_range(1..4)
    } else {
        0
    };
    for _ in 0..n_external {
        let partner = pick(rng, WORDS);
        page.body.push(format!(
            "<a href=\"https://{partner}.org/\">{partner} partner</a>"
        ));
    }
    for _ in 0..rng.gen_range(2..5) {
        page.body.push(format!("<p>{}</p>", pick(rng, CALM_LINES)));
    }
    for _ in 0..rng.gen_range(1..4) {
        page.body.push(format!(
            "<img src=\"/images/{}.png\" alt=\"photo\">",
            pick(rng, WORDS)
        ));
    }
    if rng.gen_bool(0.2) {
        page.body.push(
            "<form action=\"/search\" method=\"get\"><input type=\"text\" name=\"q\"></form>"
                .into(),
        );
    }
    if rng.gen_bool(if messy { 0.4 } else { 0.05 }) {
        // legitimate sign-in pages exist
        page.body.push(
            "<form action=\"/session\" method=\"post\">\
             <input type=\"text\" name=\"user\"><input type=\"password\" name=\"pass\">\
             <button type=\"submit\">Sign in</button></form>"
                .into(),
        );
    }
    if rng.gen_bool(if messy { 0.3 } else { 0.03 }) {
        page.body
            .push("<div style=\"display:none\">tracking pixel</div>".into());
    }
    if messy && rng.gen_bool(0.4) {
        page.body
            .push("<input type=\"hidden\" name=\"csrf\" value=\"token\">".into());
    }
    for _ in 0..rng.gen_range(2..6) {
        let w = pick(rng, WORDS);
        page.footer.push(format!("<a href=\"/{w}\">{w}</a>"));
    }
    if rng.gen_bool(0.1) {
        page.footer.push("<a href=\"#\">top</a>".into());
    }
    // brand-in-copyright is common, not universal
    match rng.gen_range(0..10u32) {
        0..=6 => page
            .footer
            .push(format!("<p>&copy; 2024 {brand} Inc. All rights reserved.</p>")),
        7..=8 => page
            .footer
            .push("<p>&copy; 2024 All rights reserved.</p>".into()),
        _ => {}
    }

    // likewise brand-in-title
    let title = if rng.gen_bool(0.75) {
        format!("{brand} — {}", pick(rng, WORDS))
    } else {
        pick(rng, GENERIC_TITLES).to_string()
    };
    let html = page.render(&title, "");
    Webpage::new(format!("syn-b{index:05}"), url, html, Label::Benign)
}

/// A carefully built phishing page: benign-looking URL and link structure,
/// detectable (if at all) only through weaker signals. A sub-fraction drops
/// the credential form entirely and is feature-indistinguishable from
/// generic benign pages, giving the classes an irreducible overlap.
///
/// Neither variant ever names its own domain in the title or copyright, so
/// a URL rewrite cannot move any HTML feature of these pages.
fn stealth_phishing_page(rng: &mut seed::Rng, index: u64) -> Webpage {
    let mimic = rng.gen_bool(0.4);
    let host_label = if mimic {
        format!("{}{}", pick(rng, WORDS), pick(rng, SHORT_HOST_SUFFIXES))
    } else {
        format!("{}{}", pick(rng, WORDS), pick(rng, WORDS))
    };
    let tld = if mimic { pick(rng, BENIGN_TLDS) } else { pick(rng, PHISH_TLDS) };
    let www = if rng.gen_bool(0.5) { "www." } else { "" };
    let path = if !mimic && rng.gen_bool(0.25) {
        format!("/{}", pick(rng, SENSITIVE_PATH_WORDS))
    } else {
        format!("/{}", pick(rng, WORDS))
    };
    let url = format!("https://{www}{host_label}.{tld}{path}");

    let mut page = PageBuilder::new();
    page.head
        .push("<link rel=\"stylesheet\" href=\"style.css\">".into());
    if rng.gen_bool(0.6) {
        page.head
            .push("<link rel=\"icon\" href=\"/favicon.ico\">".into());
    }
    page.body.push(format!("<h1>{}</h1>", pick(rng, GENERIC_TITLES)));
    let nav_n = rng.gen_range(8..20);
    internal_nav(&mut page, rng, nav_n);
    for _ in 0..rng.gen_range(0..3u32) {
        let partner = pick(rng, WORDS);
        page.body
            .push(format!("<a href=\"https://{partner}.org/\">{partner}</a>"));
    }
    page.body.push(format!("<p>{}</p>", pick(rng, CALM_LINES)));
    if mimic {
        if rng.gen_bool(0.3) {
            page.body.push(
                "<form action=\"/search\" method=\"get\"><input type=\"text\" name=\"q\"></form>"
                    .into(),
            );
        }
        for _ in 0..rng.gen_range(1..3) {
            page.body.push(format!(
                "<img src=\"/images/{}.png\" alt=\"photo\">",
                pick(rng, WORDS)
            ));
        }
    } else if rng.gen_bool(0.85) {
        let action = match rng.gen_range(0..10u32) {
            0..=4 => "/session".to_string(),
            5..=7 => String::new(),
            _ => format!("https://{}.{}/drop.php", gibberish(rng, 8, true, false), tld),
        };
        let hidden = if rng.gen_bool(0.4) {
            "<input type=\"hidden\" name=\"t\" value=\"1\">"
        } else {
            ""
        };
        page.body.push(format!(
            "<form action=\"{action}\" method=\"post\">\
             <input type=\"text\" name=\"user\"><input type=\"password\" name=\"pass\">{hidden}\
             <button type=\"submit\">Continue</button></form>"
        ));
    }
    if !mimic && rng.gen_bool(0.25) {
        page.body.push(format!(
            "<div style=\"display:none\">{}</div>",
            gibberish(rng, 10, false, false)
        ));
    }
    for _ in 0..rng.gen_range(1..4) {
        let w = pick(rng, WORDS);
        page.footer.push(format!("<a href=\"/{w}\">{w}</a>"));
    }
    match rng.gen_range(0..10u32) {
        // copyright never names the serving domain
        0..=4 => page.footer.push(format!(
            "<p>&copy; {} {} Inc.</p>",
            rng.gen_range(2020..2025),
            pick(rng, SPOOFED_BRANDS)
        )),
        5..=6 => page
            .footer
            .push("<p>&copy; 2024 All rights reserved.</p>".into()),
        _ => {}
    }
    let title = pick(rng, GENERIC_TITLES).to_string();
    let html = page.render(&title, "");
    Webpage::new(format!("syn-p{index:05}"), url, html, Label::Phishing)
}

fn phishing_page(rng: &mut seed::Rng, index: u64) -> Webpage {
    if rng.gen_bool(0.08) {
        return stealth_phishing_page(rng, index);
    }
    let spoofed = pick(rng, SPOOFED_BRANDS);
    let tld = pick(rng, PHISH_TLDS);

    let use_shortener = rng.gen_bool(0.10);
    let use_ip = !use_shortener && rng.gen_bool(0.06);
    let url = if use_shortener {
        let host = if rng.gen_bool(0.5) { "cut.ly" } else { "tinyurl.com" };
        format!("https://{host}/{}", gibberish(rng, 7, true, false))
    } else if use_ip {
        format!(
            "http://{}.{}.{}.{}/{}/{}",
            rng.gen_range(11..224u8),
            rng.gen_range(0..=255u8),
            rng.gen_range(0..=255u8),
            rng.gen_range(1..255u8),
            pick(rng, SENSITIVE_PATH_WORDS),
            gibberish(rng, 10, true, false)
        )
    } else {
        let dashes = rng.gen_bool(0.65);
        let digits = rng.gen_bool(0.55);
        let core_len = rng.gen_range(8..22);
        let core = gibberish(rng, core_len, digits, dashes);
        let mut host = match rng.gen_range(0..10u32) {
            0..=1 => format!(
                "{}.{}.{}.{core}.{tld}",
                pick(rng, SENSITIVE_PATH_WORDS),
                spoofed,
                gibberish(rng, 4, false, false)
            ),
            2 => format!("{spoofed}.com.{core}.{tld}"),
            3 => format!("https-{spoofed}.{core}.{tld}"),
            _ => format!("{core}.{tld}"),
        };
        if rng.gen_bool(0.15) {
            host = format!("www.{host}");
        }
        let scheme = if rng.gen_bool(0.8) { "https" } else { "http" };
        let at = if rng.gen_bool(0.08) {
            format!("{}@", pick(rng, WORDS))
        } else {
            String::new()
        };
        let mut path = String::new();
        let long = rng.gen_bool(0.88);
        let segments = if long { rng.gen_range(3..6) } else { rng.gen_range(1..3) };
        for _ in 0..segments {
            if rng.gen_bool(0.7) {
                path.push_str(&format!("/{}", pick(rng, SENSITIVE_PATH_WORDS)));
            } else {
                let seg_len = rng.gen_range(4..14);
                path.push_str(&format!("/{}", gibberish(rng, seg_len, true, false)));
            }
        }
        if rng.gen_bool(0.3) {
            path.push_str(&format!("/{}.com", spoofed));
        }
        let mut u = format!("{scheme}://{at}{host}{path}");
        if long {
            let pad = 78usize.saturating_sub(u.len()) + rng.gen_range(0..30);
            if pad > 0 {
                u.push_str(&format!("?id={}", gibberish(rng, pad, true, false)));
            }
        }
        u
    };

    let mut page = PageBuilder::new();
    if rng.gen_bool(0.5) {
        page.head.push(format!(
            "<link rel=\"stylesheet\" href=\"https://cdn-{}.{}/style.css\">",
            pick(rng, WORDS),
            pick(rng, PHISH_TLDS)
        ));
    } else {
        page.head
            .push("<link rel=\"stylesheet\" href=\"style.css\">".into());
    }
    if rng.gen_bool(0.35) {
        page.head.push(format!(
            "<link rel=\"icon\" href=\"https://{spoofed}.com/favicon.ico\">"
        ));
    }
    let n_ext_scripts = if rng.gen_bool(0.7) { rng.gen_range(1..4) } else { 0 };
    for _ in 0..n_ext_scripts {
        page.head.push(format!(
            "<script src=\"https://track-{}.{}/collect.js\"></script>",
            gibberish(rng, 6, true, false),
            pick(rng, PHISH_TLDS)
        ));
    }
    if rng.gen_bool(0.25) {
        page.body
            .push("<script>document.oncontextmenu = function(){return false;}</script>".into());
    }
    if rng.gen_bool(0.3) {
        page.body.push(format!(
            "<script>window.open('https://{}.{}/promo')</script>",
            gibberish(rng, 8, false, false),
            pick(rng, PHISH_TLDS)
        ));
    }
    if rng.gen_bool(0.2) {
        page.body.push(
            "<a href=\"/offer\" onmouseover=\"window.status='https://trusted.example';return true\">offer</a>"
                .into(),
        );
    }

    page.body.push(format!("<h1>{spoofed} security center</h1>"));
    page.body.push(format!("<p>{}</p>", pick(rng, URGENCY_LINES)));

    let n_external = rng.gen_range(8..28);
    for _ in 0..n_external {
        let w = pick(rng, WORDS);
        page.body.push(format!(
            "<a href=\"https://www.{spoofed}.com/{w}\">{w}</a>"
        ));
    }
    let n_internal = if rng.gen_bool(0.6) { rng.gen_range(0..5) } else { 0 };
    for _ in 0..n_internal {
        let w = pick(rng, WORDS);
        page.body.push(format!("<a href=\"/{w}\">{w}</a>"));
    }
    if rng.gen_bool(0.4) {
        for _ in 0..rng.gen_range(2..6) {
            page.body.push("<a href=\"#\">more</a>".into());
        }
    }
    for _ in 0..rng.gen_range(1..4) {
        page.body.push(format!(
            "<img src=\"https://www.{spoofed}.com/logo{}.png\" alt=\"logo\">",
            rng.gen_range(1..9)
        ));
    }

    if rng.gen_bool(0.85) {
        let action = if rng.gen_bool(0.35) {
            format!("https://{}.{}/drop.php", gibberish(rng, 9, true, true), pick(rng, PHISH_TLDS))
        } else {
            String::new()
        };
        let hidden = if rng.gen_bool(0.6) {
            format!(
                "<input type=\"hidden\" name=\"token\" value=\"{}\">",
                gibberish(rng, 16, true, false)
            )
        } else {
            String::new()
        };
        page.body.push(format!(
            "<form action=\"{action}\" method=\"post\">\
             <input type=\"text\" name=\"email\" placeholder=\"Email\">\
             <input type=\"password\" name=\"password\" placeholder=\"Password\">{hidden}\
             <button type=\"submit\">Verify now</button></form>"
        ));
    }
    if rng.gen_bool(0.5) {
        page.body.push(format!(
            "<div style=\"display:none\">{}</div>",
            gibberish(rng, 12, false, false)
        ));
    }
    if rng.gen_bool(0.3) {
        page.body
            .push("<button style=\"visibility:hidden\" disabled>submit</button>".into());
    }
    if rng.gen_bool(0.4) {
        page.body.push(format!(
            "<iframe src=\"https://www.{spoofed}.com/frame\" width=\"0\" height=\"0\" frameborder=\"0\"></iframe>"
        ));
    }
    if rng.gen_bool(0.5) {
        for _ in 0..rng.gen_range(1..4) {
            page.footer.push("<a href=\"#\">help</a>".into());
        }
        page.footer.push(format!(
            "<p>&copy; {} {spoofed} Inc. All rights reserved.</p>",
            rng.gen_range(2020..2025)
        ));
    }

    let title = format!("{spoofed} — verify your account");
    let body_attrs = if rng.gen_bool(0.15) {
        " oncontextmenu=\"return false\""
    } else {
        ""
    };
    let html = page.render(&title, body_attrs);
    Webpage::new(format!("syn-p{index:05}"), url, html, Label::Phishing)
}

/// Generates a labelled synthetic corpus. Deterministic per seed.
pub fn synth_generate(n_benign: u64, n_phish: u64, seed_value: u64) -> Result<Dataset, SynthError> {
    if n_benign == 0 || n_phish == 0 {
        return Err(SynthError::ZeroCount(n_benign, n_phish));
    }
    let mut samples = Vec::with_capacity((n_benign + n_phish) as usize);
    for i in 0..n_benign {
        let mut rng = seed::rng(seed::mix(seed_value, i));
        samples.push(benign_page(&mut rng, i));
    }
    for i in 0..n_phish {
        let mut rng = seed::rng(seed::mix(seed_value, (1 << 40) + i));
        samples.push(phishing_page(&mut rng, i));
    }
    Ok(Dataset::new(format!("synthetic-{seed_value}"), samples))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_request() {
        let data = synth_generate(1000, 1000, 7).unwrap();
        assert_eq!(data.len(), 2000);
        assert_eq!(data.count(Label::Benign), 1000);
        assert_eq!(data.count(Label::Phishing), 1000);
    }

    #[test]
    fn same_seed_is_identical() {
        let a = synth_generate(40, 40, 11).unwrap();
        let b = synth_generate(40, 40, 11).unwrap();
        assert_eq!(a.samples, b.samples);
        let c = synth_generate(40, 40, 12).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn zero_counts_rejected() {
        assert!(synth_generate(0, 5, 1).is_err());
        assert!(synth_generate(5, 0, 1).is_err());
    }

    #[test]
    fn benign_urls_are_short_and_phishing_urls_long() {
        let data = synth_generate(300, 300, 3).unwrap();
        let benign_long = data
            .samples
            .iter()
            .filter(|s| s.label == Label::Benign && s.url.len() > 75)
            .count();
        let phish_long = data
            .samples
            .iter()
            .filter(|s| s.label == Label::Phishing && s.url.len() > 75)
            .count();
        assert!(benign_long < 15, "benign_long={benign_long}");
        assert!(phish_long > 180, "phish_long={phish_long}");
    }
}
