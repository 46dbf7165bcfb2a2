//! HTML rendering of blocks and inlines, shared by the book and slide
//! emitters. [`HtmlRenderer::plain`] produces CommonMark-style output with
//! no numbering or anchors.

use std::collections::{HashMap, HashSet};
use std::fmt::Write;

use crate::ast::{Block, BlockKind, Fragment, Inline, InlineKind, TagSet, Target};
use crate::bibliography::{CitationMap, Reference};
use crate::filter::{visibility, Visibility};
use crate::xref::LabelTable;

pub fn escape_text(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

/// Percent-encodes characters not allowed in an href, then escapes `&`.
pub fn escape_href(url: &str) -> String {
    let mut out = String::with_capacity(url.len());
    for c in url.chars() {
        if c.is_ascii_alphanumeric() || "-._~:/?#@!$&'()*+,;=%".contains(c) {
            if c == '&' {
                out.push_str("&amp;");
            } else if c == '\'' {
                out.push_str("&#x27;");
            } else {
                out.push(c);
            }
        } else {
            let mut buf = [0u8; 4];
            for b in c.encode_utf8(&mut buf).bytes() {
                let _ = write!(out, "%{b:02X}");
            }
        }
    }
    out
}

/// True for URLs that point outside the build (scheme or protocol-relative).
pub fn is_external(url: &str) -> bool {
    url.starts_with("//") || url.split_once(':').is_some_and(|(scheme, _)| {
        !scheme.is_empty() && scheme.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
    })
}

/// Output path under `assets/` for a local figure or image path, with
/// `.`/`..` and root components dropped. `None` for external URLs and
/// in-page anchors.
pub fn asset_path(target: &str) -> Option<String> {
    if target.is_empty() || is_external(target) || target.starts_with('#') {
        return None;
    }
    let parts: Vec<&str> = target
        .split(['/', '\\'])
        .filter(|p| !p.is_empty() && *p != "." && *p != "..")
        .collect();
    if parts.is_empty() {
        return None;
    }
    Some(format!("assets/{}", parts.join("/")))
}

/// Slug used as the id of an unlabeled heading.
pub fn slugify(text: &str) -> String {
    let mut out = String::new();
    for c in text.chars().flat_map(char::to_lowercase) {
        if c.is_ascii_alphanumeric() || c == '_' {
            out.push(c);
        } else if (c.is_whitespace() || c == '-') && !out.ends_with('-') && !out.is_empty() {
            out.push('-');
        }
    }
    let out = out.trim_end_matches('-').to_string();
    if out.is_empty() {
        "section".to_string()
    } else {
        out
    }
}

/// How internal links (`#label` or `page.html#label`) are emitted.
#[derive(Debug, Clone, Copy)]
pub enum LinkMode<'a> {
    /// Links are written as they are.
    Verbatim,
    /// Multi-page site; links to labels missing from the build become text.
    Pages { available: &'a HashSet<String> },
    /// Single HTML file; internal links collapse to `#anchor`.
    SingleFile { available: &'a HashSet<String> },
}

#[derive(Debug, Clone, Copy)]
pub struct HtmlOptions<'a> {
    pub target: Target,
    pub labels: Option<&'a LabelTable>,
    pub citations: Option<&'a CitationMap>,
    /// Page holding the reference list; citations link there when set.
    pub references_page: Option<&'a str>,
    pub links: LinkMode<'a>,
    /// Rewrite local image paths to `assets/...`.
    pub rewrite_assets: bool,
    /// Emit heading numbers and anchors.
    pub numbered: bool,
}

pub struct HtmlRenderer<'a> {
    opts: HtmlOptions<'a>,
    source_name: String,
    heading_ids: HashMap<u32, String>,
    fragment_tags: TagSet,
}

impl<'a> HtmlRenderer<'a> {
    pub fn new(opts: HtmlOptions<'a>) -> Self {
        HtmlRenderer { opts, source_name: String::new(), heading_ids: HashMap::new(), fragment_tags: TagSet::new() }
    }

    /// CommonMark-style rendering: no numbers, ids or link rewriting.
    pub fn plain() -> HtmlRenderer<'static> {
        HtmlRenderer::new(HtmlOptions {
            target: Target::Book,
            labels: None,
            citations: None,
            references_page: None,
            links: LinkMode::Verbatim,
            rewrite_assets: false,
            numbered: false,
        })
    }

    /// Sets the document whose blocks are rendered next, and the ids to use
    /// for its headings (keyed by source line).
    pub fn set_source(&mut self, source_name: &str, heading_ids: HashMap<u32, String>) {
        self.source_name = source_name.to_string();
        self.heading_ids = heading_ids;
    }

    pub fn render_fragment(&mut self, fragment: &Fragment, out: &mut String) {
        self.fragment_tags = fragment.tags.clone();
        self.render_blocks(&fragment.blocks, false, out);
        self.fragment_tags = TagSet::new();
    }

    pub fn render_blocks(&self, blocks: &[Block], tight: bool, out: &mut String) {
        for block in blocks {
            self.render_block(block, tight, out);
        }
    }

    fn number(&self, block: &Block) -> Option<&str> {
        if !self.opts.numbered {
            return None;
        }
        self.opts.labels?.number_of(&self.source_name, block)
    }

    pub fn render_block(&self, block: &Block, tight: bool, out: &mut String) {
        match &block.kind {
            BlockKind::Heading { level, content, label } => {
                let id = label.clone().or_else(|| self.heading_ids.get(&block.span.start_line).cloned());
                match (&id, self.opts.numbered) {
                    (Some(id), true) => {
                        let _ = write!(out, "<h{level} id=\"{}\">", escape_text(id));
                    }
                    _ => {
                        let _ = write!(out, "<h{level}>");
                    }
                }
                if let Some(n) = self.number(block) {
                    let _ = write!(out, "{n}&nbsp;");
                }
                self.render_inlines(content, out);
                let _ = writeln!(out, "</h{level}>");
            }
            BlockKind::Paragraph(content) => {
                if tight {
                    self.render_inlines(content, out);
                    out.push('\n');
                } else {
                    out.push_str("<p>");
                    self.render_inlines(content, out);
                    out.push_str("</p>\n");
                }
            }
            BlockKind::CodeBlock { language, source } => code_block(language.as_deref(), source, out),
            BlockKind::CodeCell { language, source, tags, .. } => {
                let tags = self.fragment_tags.union(tags);
                let classes: Vec<String> = tags.iter().map(|t| format!(" tag-{t}")).collect();
                let classes = classes.concat();
                match visibility(&tags, self.opts.target) {
                    Visibility::InputHidden if self.opts.target == Target::Slides => {}
                    Visibility::InputHidden => {
                        let _ = write!(out, "<details class=\"cell code-cell{classes}\">\n<summary>Show code</summary>\n");
                        code_block(Some(language), source, out);
                        out.push_str("</details>\n");
                    }
                    Visibility::Shown | Visibility::OutputHidden => {
                        let _ = writeln!(out, "<div class=\"cell code-cell{classes}\">");
                        code_block(Some(language), source, out);
                        out.push_str("</div>\n");
                    }
                }
            }
            BlockKind::MathBlock { latex, label } => {
                match label {
                    Some(l) if self.opts.numbered => {
                        let _ = write!(out, "<div class=\"math-block\" id=\"{}\">", escape_text(l));
                    }
                    _ => out.push_str("<div class=\"math-block\">"),
                }
                let _ = write!(out, "\\[{}\\]", escape_text(latex));
                if let Some(n) = self.number(block) {
                    let _ = write!(out, "<span class=\"eqno\">({n})</span>");
                }
                out.push_str("</div>\n");
            }
            BlockKind::Figure { target, alt, label, caption } => {
                match label {
                    Some(l) if self.opts.numbered => {
                        let _ = writeln!(out, "<figure id=\"{}\">", escape_text(l));
                    }
                    _ => out.push_str("<figure>\n"),
                }
                let _ = writeln!(out, "<img src=\"{}\" alt=\"{}\" />", escape_href(&self.image_src(target)), escape_text(alt));
                out.push_str("<figcaption>");
                if let Some(n) = self.number(block) {
                    let _ = write!(out, "Figure {n}: ");
                }
                self.render_inlines(caption, out);
                out.push_str("</figcaption>\n</figure>\n");
            }
            BlockKind::Admonition { kind, title, body } => {
                let _ = writeln!(out, "<aside class=\"admonition {}\">", escape_text(kind));
                out.push_str("<p class=\"admonition-title\">");
                match title {
                    Some(t) => self.render_inlines(t, out),
                    None => out.push_str(&escape_text(&title_case(kind))),
                }
                out.push_str("</p>\n");
                self.render_blocks(body, false, out);
                out.push_str("</aside>\n");
            }
            BlockKind::Bibliography => {
                out.push_str("<section class=\"bibliography\">\n");
                if let Some(c) = self.opts.citations {
                    render_reference_list(&c.references, false, out);
                }
                out.push_str("</section>\n");
            }
            BlockKind::List { start, tight: list_tight, items } => {
                match start {
                    Some(1) => out.push_str("<ol>\n"),
                    Some(n) => {
                        let _ = writeln!(out, "<ol start=\"{n}\">");
                    }
                    None => out.push_str("<ul>\n"),
                }
                for item in items {
                    out.push_str("<li>");
                    if !*list_tight {
                        out.push('\n');
                    }
                    self.render_blocks(item, *list_tight, out);
                    out.push_str("</li>\n");
                }
                out.push_str(if start.is_some() { "</ol>\n" } else { "</ul>\n" });
            }
            BlockKind::BlockQuote(body) => {
                out.push_str("<blockquote>\n");
                self.render_blocks(body, false, out);
                out.push_str("</blockquote>\n");
            }
            BlockKind::Table { header, rows } => {
                out.push_str("<table>\n<thead>\n<tr>\n");
                for cell in header {
                    out.push_str("<th>");
                    self.render_inlines(cell, out);
                    out.push_str("</th>\n");
                }
                out.push_str("</tr>\n</thead>\n");
                if !rows.is_empty() {
                    out.push_str("<tbody>\n");
                    for row in rows {
                        out.push_str("<tr>\n");
                        for cell in row {
                            out.push_str("<td>");
                            self.render_inlines(cell, out);
                            out.push_str("</td>\n");
                        }
                        out.push_str("</tr>\n");
                    }
                    out.push_str("</tbody>\n");
                }
                out.push_str("</table>\n");
            }
            BlockKind::ThematicBreak => out.push_str("<hr />\n"),
        }
    }

    fn image_src(&self, url: &str) -> String {
        if self.opts.rewrite_assets {
            if let Some(p) = asset_path(url) {
                return p;
            }
        }
        url.to_string()
    }

    /// Resolves an internal link; `None` means render the content as text.
    fn link_href(&self, url: &str) -> Option<String> {
        let (available, single) = match self.opts.links {
            LinkMode::Verbatim => return Some(url.to_string()),
            LinkMode::Pages { available } => (available, false),
            LinkMode::SingleFile { available } => (available, true),
        };
        let Some((page, anchor)) = url.split_once('#') else {
            return Some(url.to_string());
        };
        let internal = !is_external(url)
            && (page.is_empty() || (page.ends_with(".html") && !page.contains('/')));
        let is_label = self.opts.labels.is_some_and(|t| t.get(anchor).is_some());
        if !internal || !is_label {
            return Some(url.to_string());
        }
        if !available.contains(anchor) {
            return None;
        }
        Some(if single { format!("#{anchor}") } else { url.to_string() })
    }

    pub fn render_inlines(&self, inlines: &[Inline], out: &mut String) {
        for inline in inlines {
            self.render_inline(inline, out);
        }
    }

    fn render_inline(&self, inline: &Inline, out: &mut String) {
        match &inline.kind {
            InlineKind::Text(t) => out.push_str(&escape_text(t)),
            InlineKind::Emph(c) => {
                out.push_str("<em>");
                self.render_inlines(c, out);
                out.push_str("</em>");
            }
            InlineKind::Strong(c) => {
                out.push_str("<strong>");
                self.render_inlines(c, out);
                out.push_str("</strong>");
            }
            InlineKind::CodeSpan(code) => {
                let _ = write!(out, "<code>{}</code>", escape_text(code));
            }
            InlineKind::Link { url, content } => match self.link_href(url) {
                Some(href) => {
                    let _ = write!(out, "<a href=\"{}\">", escape_href(&href));
                    self.render_inlines(content, out);
                    out.push_str("</a>");
                }
                None => {
                    out.push_str("<span class=\"xref\">");
                    self.render_inlines(content, out);
                    out.push_str("</span>");
                }
            },
            InlineKind::Image { url, alt } => {
                let _ = write!(out, "<img src=\"{}\" alt=\"{}\" />", escape_href(&self.image_src(url)), escape_text(alt));
            }
            InlineKind::MathInline(latex) => {
                let _ = write!(out, "<span class=\"math\">\\({}\\)</span>", escape_text(latex));
            }
            InlineKind::CiteRole(keys) => self.render_cite(keys, out),
            InlineKind::RefRole(_) | InlineKind::EqRole(_) => out.push_str("<span class=\"xref\">??</span>"),
        }
    }

    fn render_cite(&self, keys: &[String], out: &mut String) {
        let Some(map) = self.opts.citations else {
            let _ = write!(out, "<span class=\"cite\">{}</span>", escape_text(&keys.join(", ")));
            return;
        };
        out.push_str("<span class=\"cite\">(");
        for (i, key) in keys.iter().enumerate() {
            if i > 0 {
                out.push_str("; ");
            }
            match (map.get(key), self.opts.references_page) {
                (Some(c), Some(page)) => {
                    let _ = write!(out, "<a href=\"{}#{}\">{}</a>", page, escape_text(&c.anchor), escape_text(&c.label));
                }
                (Some(c), None) => out.push_str(&escape_text(&c.label)),
                (None, _) => out.push_str("??"),
            }
        }
        out.push_str(")</span>");
    }
}

fn code_block(language: Option<&str>, source: &str, out: &mut String) {
    match language {
        Some(l) if !l.is_empty() => {
            let _ = write!(out, "<pre><code class=\"language-{}\">", escape_text(l));
        }
        _ => out.push_str("<pre><code>"),
    }
    out.push_str(&escape_text(source));
    if !source.is_empty() {
        out.push('\n');
    }
    out.push_str("</code></pre>\n");
}

fn title_case(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// `<ol class="references">` with one `<li>` per entry; `with_ids` puts the
/// `ref-<key>` anchors on the items.
pub fn render_reference_list(refs: &[Reference], with_ids: bool, out: &mut String) {
    out.push_str("<ol class=\"references\">\n");
    for r in refs {
        let escaped = Reference {
            key: escape_text(&r.key),
            anchor: r.anchor.clone(),
            authors: r.authors.as_deref().map(escape_text),
            year: escape_text(&r.year),
            title: r.title.as_deref().map(escape_text),
            venue: r.venue.as_deref().map(escape_text),
        };
        let body = escaped.render(|t| format!("<em>{t}</em>"));
        if with_ids {
            let _ = writeln!(out, "<li id=\"{}\">{body}</li>", escape_text(&r.anchor));
        } else {
            let _ = writeln!(out, "<li>{body}</li>");
        }
    }
    out.push_str("</ol>\n");
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_blocks;

    fn plain(md: &str) -> String {
        let (blocks, _) = parse_blocks(md, 1);
        let mut out = String::new();
        HtmlRenderer::plain().render_blocks(&blocks, false, &mut out);
        out
    }

    #[test]
    fn escapes() {
        assert_eq!(escape_text("a<b & \"c\""), "a&lt;b &amp; &quot;c&quot;");
        assert_eq!(escape_href("a b/ä?x=1&y"), "a%20b/%C3%A4?x=1&amp;y");
    }

    #[test]
    fn plain_paragraph() {
        assert_eq!(plain("*foo* `x<y`"), "<p><em>foo</em> <code>x&lt;y</code></p>\n");
    }

    #[test]
    fn plain_heading_has_no_id() {
        assert_eq!(plain("(x)=\n# Hi"), "<h1>Hi</h1>\n");
    }

    #[test]
    fn tight_and_loose_lists() {
        assert_eq!(plain("- a\n- b"), "<ul>\n<li>a\n</li>\n<li>b\n</li>\n</ul>\n");
        assert_eq!(plain("3. a\n\n4. b"), "<ol start=\"3\">\n<li>\n<p>a</p>\n</li>\n<li>\n<p>b</p>\n</li>\n</ol>\n");
    }

    #[test]
    fn math_passthrough() {
        assert_eq!(plain("$$ a<b $$"), "<div class=\"math-block\">\\[a&lt;b\\]</div>\n");
        assert_eq!(plain("$x$"), "<p><span class=\"math\">\\(x\\)</span></p>\n");
    }

    #[test]
    fn asset_paths() {
        assert_eq!(asset_path("img/a.png").as_deref(), Some("assets/img/a.png"));
        assert_eq!(asset_path("../x/./b.svg").as_deref(), Some("assets/x/b.svg"));
        assert_eq!(asset_path("https://e.org/a.png"), None);
        assert_eq!(asset_path("#top"), None);
    }

    #[test]
    fn slugs() {
        assert_eq!(slugify("Hello, *World* 2"), "hello-world-2");
        assert_eq!(slugify("!!!"), "section");
    }
}
