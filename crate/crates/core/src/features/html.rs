//! Lenient single-pass HTML analysis.
//!
//! Phishing pages are routinely malformed, so the tokenizer is total: it
//! recovers from unclosed tags, stray `<`, unterminated comments and
//! attributes, and undecodable bytes (replaced). One pass over the byte
//! stream produces a [`DocumentStats`] record with everything the feature
//! extractor and the website-space mutators need.

/// One reference found in the markup (anchor href, resource src, ...).
#[derive(Debug, Clone)]
pub struct RawRef {
    pub target: String,
    pub in_footer: bool,
}

/// A form encountered in the document.
#[derive(Debug, Clone, Default)]
pub struct FormInfo {
    pub action: Option<String>,
    pub has_password: bool,
    pub has_text_input: bool,
}

/// Aggregated single-pass analysis of a document.
#[derive(Debug, Clone, Default)]
pub struct DocumentStats {
    pub title: String,
    pub visible_text: String,
    /// Anchor hrefs, in document order. Anchors without an href attribute are
    /// not represented: a static pass cannot count them as links.
    pub anchors: Vec<RawRef>,
    /// src/href/data references of resource tags (img, script, iframe, embed,
    /// object, source, audio, video).
    pub resources: Vec<RawRef>,
    /// hrefs of `<link rel=stylesheet>`.
    pub stylesheets: Vec<String>,
    /// hrefs of `<link rel*=icon>`.
    pub favicons: Vec<String>,
    /// src attributes of `<script>` tags.
    pub script_srcs: Vec<String>,
    /// URLs found in `<meta http-equiv=refresh content=...>`.
    pub meta_refresh: Vec<String>,
    pub forms: Vec<FormInfo>,
    /// Concatenated inline script bodies.
    pub script_text: String,
    /// Concatenated `on*` event-handler attribute names and values.
    pub event_attrs: String,
    /// Text segments that contain a copyright marker.
    pub copyright_segments: Vec<String>,
    pub hidden_div: bool,
    pub hidden_button: bool,
    pub hidden_input: bool,
    pub iframe_present: bool,
    pub iframe_invisible: bool,
}

#[derive(Debug, Clone)]
struct Tag {
    name: String,
    attrs: Vec<(String, String)>,
    closing: bool,
    self_closing: bool,
}

impl Tag {
    fn attr(&self, name: &str) -> Option<&str> {
        self.attrs
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
    }
}

const VOID_ELEMENTS: &[&str] = &[
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "param",
    "source", "track", "wbr",
];

fn is_void(name: &str) -> bool {
    VOID_ELEMENTS.contains(&name)
}

struct Tokenizer<'a> {
    bytes: &'a [u8],
    pos: usize,
}

enum Piece {
    Text(String),
    Element(Tag),
    /// Raw content of a script/style/title element plus its tag name.
    RawText { name: String, text: String },
}

impl<'a> Tokenizer<'a> {
    fn new(bytes: &'a [u8]) -> Tokenizer<'a> {
        Tokenizer { bytes, pos: 0 }
    }

    fn rest(&self) -> &[u8] {
        &self.bytes[self.pos.min(self.bytes.len())..]
    }

    fn starts_with_ci(&self, prefix: &str) -> bool {
        let rest = self.rest();
        rest.len() >= prefix.len()
            && rest[..prefix.len()].eq_ignore_ascii_case(prefix.as_bytes())
    }

    fn take_until(&mut self, needle: &str) -> String {
        let rest = self.rest();
        let needle_bytes = needle.as_bytes();
        let mut i = 0;
        while i + needle_bytes.len() <= rest.len() {
            if rest[i..i + needle_bytes.len()].eq_ignore_ascii_case(needle_bytes) {
                let text = String::from_utf8_lossy(&rest[..i]).into_owned();
                self.pos += i + needle_bytes.len();
                return text;
            }
            i += 1;
        }
        // unterminated: consume to end
        let text = String::from_utf8_lossy(rest).into_owned();
        self.pos = self.bytes.len();
        text
    }

    fn parse_tag(&mut self) -> Option<Tag> {
        // self.pos is at '<'
        let mut i = self.pos + 1;
        let bytes = self.bytes;
        let closing = if i < bytes.len() && bytes[i] == b'/' {
            i += 1;
            true
        } else {
            false
        };
        let name_start = i;
        while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'-') {
            i += 1;
        }
        if i == name_start {
            return None; // not a tag, treat '<' as text
        }
        let name = String::from_utf8_lossy(&bytes[name_start..i]).to_ascii_lowercase();
        let mut attrs = Vec::new();
        let mut self_closing = false;
        loop {
            while i < bytes.len() && bytes[i].is_ascii_whitespace() {
                i += 1;
            }
            if i >= bytes.len() {
                break;
            }
            match bytes[i] {
                b'>' => {
                    i += 1;
                    break;
                }
                b'/' => {
                    self_closing = true;
                    i += 1;
                }
                _ => {
                    let attr_start = i;
                    while i < bytes.len()
                        && !bytes[i].is_ascii_whitespace()
                        && bytes[i] != b'='
                        && bytes[i] != b'>'
                        && bytes[i] != b'/'
                    {
                        i += 1;
                    }
                    if i == attr_start {
                        i += 1; // skip stray byte
                        continue;
                    }
                    let attr_name =
                        String::from_utf8_lossy(&bytes[attr_start..i]).to_ascii_lowercase();
                    while i < bytes.len() && bytes[i].is_ascii_whitespace() {
                        i += 1;
                    }
                    let mut value = String::new();
                    if i < bytes.len() && bytes[i] == b'=' {
                        i += 1;
                        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
                            i += 1;
                        }
                        if i < bytes.len() && (bytes[i] == b'"' || bytes[i] == b'\'') {
                            let quote = bytes[i];
                            i += 1;
                            let val_start = i;
                            while i < bytes.len() && bytes[i] != quote {
                                i += 1;
                            }
                            value = String::from_utf8_lossy(&bytes[val_start..i]).into_owned();
                            if i < bytes.len() {
                                i += 1; // closing quote
                            }
                        } else {
                            let val_start = i;
                            while i < bytes.len()
                                && !bytes[i].is_ascii_whitespace()
                                && bytes[i] != b'>'
                            {
                                i += 1;
                            }
                            value = String::from_utf8_lossy(&bytes[val_start..i]).into_owned();
                        }
                    }
                    attrs.push((attr_name, value));
                }
            }
        }
        self.pos = i;
        Some(Tag {
            name,
            attrs,
            closing,
            self_closing,
        })
    }

    fn next_piece(&mut self) -> Option<Piece> {
        if self.pos >= self.bytes.len() {
            return None;
        }
        if self.bytes[self.pos] == b'<' {
            if self.starts_with_ci("<!--") {
                self.pos += 4;
                self.take_until("-->");
                return Some(Piece::Text(String::new()));
            }
            if self.starts_with_ci("<!") || self.starts_with_ci("<?") {
                self.pos += 2;
                self.take_until(">");
                return Some(Piece::Text(String::new()));
            }
            let saved = self.pos;
            if let Some(tag) = self.parse_tag() {
                if !tag.closing && matches!(tag.name.as_str(), "script" | "style" | "title") {
                    let close = format!("</{}", tag.name);
                    let text = self.take_until(&close);
                    self.take_until(">"); // rest of the close tag
                    if tag.name == "script" {
                        // keep src-bearing scripts visible as resources
                        if tag.attr("src").is_some() {
                            return Some(Piece::Element(tag));
                        }
                    }
                    return Some(Piece::RawText {
                        name: tag.name,
                        text,
                    });
                }
                return Some(Piece::Element(tag));
            }
            // stray '<': emit as text
            self.pos = saved + 1;
            return Some(Piece::Text("<".into()));
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos] != b'<' {
            self.pos += 1;
        }
        Some(Piece::Text(
            String::from_utf8_lossy(&self.bytes[start..self.pos]).into_owned(),
        ))
    }
}

fn style_hides(style: &str) -> bool {
    let squeezed: String = style
        .chars()
        .filter(|c| !c.is_whitespace())
        .collect::<String>()
        .to_ascii_lowercase();
    squeezed.contains("display:none") || squeezed.contains("visibility:hidden")
}

fn tag_hidden(tag: &Tag) -> bool {
    tag.attrs.iter().any(|(k, _)| k == "hidden")
        || tag.attr("style").map(style_hides).unwrap_or(false)
}

fn contains_copyright_marker(text: &str) -> bool {
    let lower = text.to_ascii_lowercase();
    lower.contains('\u{a9}') || lower.contains("&copy;") || lower.contains("copyright")
}

struct OpenElement {
    name: String,
    hides: bool,
    is_footer: bool,
}

/// Analyzes a document in one pass. Total: any byte sequence is accepted.
pub fn analyze(html: &[u8]) -> DocumentStats {
    let mut stats = DocumentStats::default();
    let mut tokenizer = Tokenizer::new(html);
    let mut stack: Vec<OpenElement> = Vec::new();
    let mut hidden_depth = 0usize;
    let mut footer_depth = 0usize;
    let mut form_stack: Vec<usize> = Vec::new();

    while let Some(piece) = tokenizer.next_piece() {
        match piece {
            Piece::Text(text) => {
                if text.is_empty() {
                    continue;
                }
                if contains_copyright_marker(&text) {
                    stats.copyright_segments.push(text.clone());
                }
                if hidden_depth == 0 {
                    let trimmed = text.trim();
                    if !trimmed.is_empty() {
                        if !stats.visible_text.is_empty() {
                            stats.visible_text.push(' ');
                        }
                        stats.visible_text.push_str(trimmed);
                    }
                }
            }
            Piece::RawText { name, text } => match name.as_str() {
                "script" => stats.script_text.push_str(&text),
                "title" => {
                    if stats.title.is_empty() {
                        stats.title = text.trim().to_string();
                    }
                }
                _ => {}
            },
            Piece::Element(tag) => {
                if tag.closing {
                    if let Some(idx) = stack.iter().rposition(|e| e.name == tag.name) {
                        for closed in stack.drain(idx..) {
                            if closed.hides {
                                hidden_depth -= 1;
                            }
                            if closed.is_footer {
                                footer_depth -= 1;
                            }
                            if closed.name == "form" {
                                form_stack.pop();
                            }
                        }
                    }
                    continue;
                }

                for (k, v) in &tag.attrs {
                    if k.starts_with("on") {
                        stats.event_attrs.push_str(k);
                        stats.event_attrs.push('=');
                        stats.event_attrs.push_str(v);
                        stats.event_attrs.push(';');
                    }
                }

                let in_footer = footer_depth > 0;
                let hidden_here = tag_hidden(&tag);
                match tag.name.as_str() {
                    "a" => {
                        if let Some(href) = tag.attr("href") {
                            stats.anchors.push(RawRef {
                                target: href.trim().to_string(),
                                in_footer,
                            });
                        }
                    }
                    "img" | "embed" | "source" | "audio" | "video" | "track" => {
                        if let Some(src) = tag.attr("src") {
                            stats.resources.push(RawRef {
                                target: src.trim().to_string(),
                                in_footer,
                            });
                        }
                    }
                    "script" => {
                        if let Some(src) = tag.attr("src") {
                            stats.script_srcs.push(src.trim().to_string());
                            stats.resources.push(RawRef {
                                target: src.trim().to_string(),
                                in_footer,
                            });
                        }
                    }
                    "iframe" | "frame" => {
                        stats.iframe_present = true;
                        let zero_sized = ["width", "height", "frameborder"]
                            .iter()
                            .any(|a| tag.attr(a).map(|v| v.trim() == "0").unwrap_or(false));
                        if zero_sized || hidden_here {
                            stats.iframe_invisible = true;
                        }
                        if let Some(src) = tag.attr("src") {
                            stats.resources.push(RawRef {
                                target: src.trim().to_string(),
                                in_footer,
                            });
                        }
                    }
                    "object" => {
                        if let Some(data) = tag.attr("data") {
                            stats.resources.push(RawRef {
                                target: data.trim().to_string(),
                                in_footer,
                            });
                        }
                    }
                    "link" => {
                        let rel = tag.attr("rel").unwrap_or("").to_ascii_lowercase();
                        if let Some(href) = tag.attr("href") {
                            let href = href.trim().to_string();
                            if rel.contains("stylesheet") {
                                stats.stylesheets.push(href.clone());
                            } else if rel.contains("icon") {
                                stats.favicons.push(href.clone());
                            }
                            stats.resources.push(RawRef {
                                target: href,
                                in_footer,
                            });
                        }
                    }
                    "meta" => {
                        let http_equiv = tag.attr("http-equiv").unwrap_or("").to_ascii_lowercase();
                        if http_equiv == "refresh" {
                            if let Some(content) = tag.attr("content") {
                                if let Some(idx) = content.to_ascii_lowercase().find("url=") {
                                    stats
                                        .meta_refresh
                                        .push(content[idx + 4..].trim().to_string());
                                }
                            }
                        }
                    }
                    "form" => {
                        stats.forms.push(FormInfo {
                            action: tag.attr("action").map(|a| a.trim().to_string()),
                            ..FormInfo::default()
                        });
                        form_stack.push(stats.forms.len() - 1);
                    }
                    "input" => {
                        let ty = tag.attr("type").unwrap_or("text").to_ascii_lowercase();
                        if ty == "hidden" {
                            stats.hidden_input = true;
                        }
                        if hidden_here && (ty == "button" || ty == "submit") {
                            stats.hidden_button = true;
                        }
                        if let Some(&form_idx) = form_stack.last() {
                            match ty.as_str() {
                                "password" => stats.forms[form_idx].has_password = true,
                                "text" | "email" | "tel" => {
                                    stats.forms[form_idx].has_text_input = true
                                }
                                _ => {}
                            }
                        }
                    }
                    "button" => {
                        if hidden_here || tag.attrs.iter().any(|(k, _)| k == "disabled") {
                            stats.hidden_button = true;
                        }
                    }
                    "div" | "span" => {
                        if hidden_here {
                            stats.hidden_div = true;
                        }
                    }
                    _ => {}
                }

                let is_footer_el = tag.name == "footer"
                    || ["id", "class"].iter().any(|a| {
                        tag.attr(a)
                            .map(|v| v.to_ascii_lowercase().contains("footer"))
                            .unwrap_or(false)
                    });
                if !tag.self_closing && !is_void(&tag.name) {
                    if hidden_here {
                        hidden_depth += 1;
                    }
                    if is_footer_el {
                        footer_depth += 1;
                    }
                    stack.push(OpenElement {
                        name: tag.name,
                        hides: hidden_here,
                        is_footer: is_footer_el,
                    });
                }
            }
        }
    }
    stats
}

/// Text a user would see: outside script/style/title and not under an
/// element hidden via `display:none`, `visibility:hidden` or `hidden`.
pub fn visible_text(html: &[u8]) -> String {
    analyze(html).visible_text
}
