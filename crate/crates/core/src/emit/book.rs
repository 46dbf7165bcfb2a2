//! Static multi-page HTML site.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write;

use once_cell::sync::Lazy;
use regex::Regex;

use super::{heading_ids, labels_in, DEFAULT_MATH_URL};
use crate::ast::{plain_text, BlockKind, Document, InlineKind, SourceSpan, Target};
use crate::bibliography::CitationMap;
use crate::html::{asset_path, escape_href, escape_text, is_external, render_reference_list, HtmlOptions, HtmlRenderer, LinkMode};
use crate::xref::LabelTable;

pub const INDEX_PAGE: &str = "index.html";
pub const REFERENCES_PAGE: &str = "references.html";

const STYLE: &str = r#"body { margin: 0; font-family: Georgia, serif; line-height: 1.5; color: #222; }
.sidebar { position: fixed; top: 0; bottom: 0; left: 0; width: 16rem; overflow-y: auto; padding: 1rem; background: #f6f6f4; border-right: 1px solid #ddd; font-family: sans-serif; font-size: 0.9rem; }
.sidebar ul { list-style: none; padding-left: 0.8rem; }
.sidebar a { color: #234; text-decoration: none; }
.book-title { font-weight: bold; }
main { margin-left: 18rem; max-width: 46rem; padding: 1rem 2rem 4rem; }
pre { background: #f4f4f4; padding: 0.6rem; overflow-x: auto; }
figure { text-align: center; margin: 1.5rem 0; }
figure img { max-width: 100%; }
figcaption { font-size: 0.9rem; }
.math-block { position: relative; margin: 1rem 0; }
.eqno { position: absolute; right: 0; top: 50%; transform: translateY(-50%); }
.admonition { border-left: 4px solid #6a8; background: #f3f8f4; padding: 0.2rem 1rem; margin: 1rem 0; }
.admonition.warning, .admonition.danger, .admonition.caution, .admonition.error { border-color: #c64; background: #fbf3ef; }
.admonition-title { font-weight: bold; }
details.cell summary { cursor: pointer; color: #666; }
table { border-collapse: collapse; }
th, td { border: 1px solid #ccc; padding: 0.2rem 0.5rem; }
.references li { margin-bottom: 0.4rem; }
"#;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BookConfig {
    pub title: Option<String>,
    pub authors: Vec<String>,
    pub math_renderer_url: String,
}

impl Default for BookConfig {
    fn default() -> Self {
        BookConfig { title: None, authors: Vec::new(), math_renderer_url: DEFAULT_MATH_URL.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NavEntry {
    pub title: String,
    pub path: String,
    pub children: Vec<NavEntry>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SiteBundle {
    pub pages: Vec<(String, Vec<u8>)>,
    pub assets: Vec<(String, Vec<u8>)>,
    pub nav: Vec<NavEntry>,
}

impl SiteBundle {
    pub fn page(&self, path: &str) -> Option<&str> {
        self.pages.iter().find(|(p, _)| p == path).and_then(|(_, b)| std::str::from_utf8(b).ok())
    }
}

pub fn page_name(doc: &Document) -> String {
    format!("{}.html", doc.stem())
}

fn doc_title(doc: &Document) -> String {
    if let Some(t) = &doc.frontmatter.title {
        return t.clone();
    }
    doc.blocks()
        .find_map(|b| match &b.kind {
            BlockKind::Heading { level: 1, content, .. } => Some(plain_text(content)),
            _ => None,
        })
        .unwrap_or_else(|| doc.stem().to_string())
}

/// Asset output paths used by figures and images, mapped to the path as
/// written in the source and where it was written.
pub fn required_assets(docs: &[Document]) -> BTreeMap<String, (String, SourceSpan)> {
    let mut out = BTreeMap::new();
    for doc in docs {
        for b in doc.blocks() {
            b.walk(&mut |b| {
                if let BlockKind::Figure { target, .. } = &b.kind {
                    if let Some(p) = asset_path(target) {
                        out.entry(p).or_insert_with(|| (target.clone(), b.span));
                    }
                }
                for group in b.inline_groups() {
                    for inline in group {
                        inline.walk(&mut |i| {
                            if let InlineKind::Image { url, .. } = &i.kind {
                                if let Some(p) = asset_path(url) {
                                    out.entry(p).or_insert_with(|| (url.clone(), i.span));
                                }
                            }
                        });
                    }
                }
            });
        }
    }
    out
}

fn build_nav(docs: &[Document], labels: &LabelTable) -> Vec<NavEntry> {
    let mut nav = Vec::new();
    for doc in docs {
        let page = page_name(doc);
        let ids = heading_ids(doc);
        let mut children = Vec::new();
        for fragment in &doc.fragments {
            for b in &fragment.blocks {
                if let BlockKind::Heading { level: 1 | 2, content, .. } = &b.kind {
                    let number = labels.number_of(&doc.source_name, b).map(|n| format!("{n} ")).unwrap_or_default();
                    children.push(NavEntry {
                        title: format!("{number}{}", plain_text(content)),
                        path: format!("{page}#{}", ids[&b.span.start_line]),
                        children: Vec::new(),
                    });
                }
            }
        }
        nav.push(NavEntry { title: doc_title(doc), path: page, children });
    }
    nav.push(NavEntry { title: "References".into(), path: REFERENCES_PAGE.into(), children: Vec::new() });
    nav
}

fn render_nav(entries: &[NavEntry], out: &mut String) {
    out.push_str("<ul>\n");
    for e in entries {
        let _ = write!(out, "<li><a href=\"{}\">{}</a>", escape_href(&e.path), escape_text(&e.title));
        if !e.children.is_empty() {
            out.push('\n');
            render_nav(&e.children, out);
        }
        out.push_str("</li>\n");
    }
    out.push_str("</ul>\n");
}

fn page_shell(title: &str, book_title: &str, nav: &[NavEntry], config: &BookConfig, body: &str) -> String {
    let mut out = String::new();
    out.push_str("<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\" />\n");
    out.push_str("<meta name=\"viewport\" content=\"width=device-width, initial-scale=1\" />\n");
    if title == book_title {
        let _ = writeln!(out, "<title>{}</title>", escape_text(title));
    } else {
        let _ = writeln!(out, "<title>{} | {}</title>", escape_text(title), escape_text(book_title));
    }
    let _ = writeln!(out, "<style>\n{STYLE}</style>");
    let _ = writeln!(out, "<script id=\"MathJax-script\" async src=\"{}\"></script>", escape_href(&config.math_renderer_url));
    out.push_str("</head>\n<body>\n<nav class=\"sidebar\">\n");
    let _ = writeln!(out, "<p class=\"book-title\"><a href=\"{INDEX_PAGE}\">{}</a></p>", escape_text(book_title));
    render_nav(nav, &mut out);
    out.push_str("</nav>\n<main>\n<article>\n");
    out.push_str(body);
    out.push_str("</article>\n</main>\n</body>\n</html>\n");
    out
}

/// Everything one page needs besides its document.
pub struct PageContext<'a> {
    pub labels: &'a LabelTable,
    pub citations: &'a CitationMap,
    pub config: &'a BookConfig,
    pub nav: &'a [NavEntry],
    /// Labels defined anywhere in the book; links to others become text.
    pub available: &'a HashSet<String>,
    pub book_title: &'a str,
}

pub fn render_page(doc: &Document, ctx: &PageContext) -> String {
    let mut renderer = HtmlRenderer::new(HtmlOptions {
        target: Target::Book,
        labels: Some(ctx.labels),
        citations: Some(ctx.citations),
        references_page: Some(REFERENCES_PAGE),
        links: LinkMode::Pages { available: ctx.available },
        rewrite_assets: true,
        numbered: true,
    });
    renderer.set_source(&doc.source_name, heading_ids(doc));
    let mut body = String::new();
    for fragment in &doc.fragments {
        renderer.render_fragment(fragment, &mut body);
    }
    page_shell(&doc_title(doc), ctx.book_title, ctx.nav, ctx.config, &body)
}

/// Builds every page in memory. `assets` maps output paths (as returned by
/// [`required_assets`]) to file contents; missing ones are left out.
pub fn build_site(
    docs: &[Document],
    labels: &LabelTable,
    citations: &CitationMap,
    config: &BookConfig,
    assets: &BTreeMap<String, Vec<u8>>,
) -> SiteBundle {
    let book_title = config
        .title
        .clone()
        .or_else(|| docs.first().and_then(|d| d.frontmatter.title.clone()))
        .unwrap_or_else(|| "Book".to_string());
    let authors = if config.authors.is_empty() {
        docs.first().map(|d| d.frontmatter.authors.clone()).unwrap_or_default()
    } else {
        config.authors.clone()
    };
    let nav = build_nav(docs, labels);
    let available = labels_in(docs);
    let ctx = PageContext { labels, citations, config, nav: &nav, available: &available, book_title: &book_title };

    let mut pages = Vec::new();
    let mut index = String::new();
    let _ = writeln!(index, "<h1 class=\"title\">{}</h1>", escape_text(&book_title));
    if !authors.is_empty() {
        let _ = writeln!(index, "<p class=\"authors\">{}</p>", escape_text(&authors.join(", ")));
    }
    index.push_str("<h2>Contents</h2>\n");
    render_nav(&nav, &mut index);
    pages.push((INDEX_PAGE.to_string(), page_shell(&book_title, &book_title, &nav, config, &index).into_bytes()));

    for doc in docs {
        pages.push((page_name(doc), render_page(doc, &ctx).into_bytes()));
    }

    let mut refs = String::from("<h1 id=\"references\">References</h1>\n");
    render_reference_list(&citations.references, true, &mut refs);
    pages.push((REFERENCES_PAGE.to_string(), page_shell("References", &book_title, &nav, config, &refs).into_bytes()));

    let needed = required_assets(docs);
    let assets = needed
        .keys()
        .filter_map(|p| assets.get(p).map(|bytes| (p.clone(), bytes.clone())))
        .collect();
    SiteBundle { pages, assets, nav }
}

static ATTR_RE: Lazy<Regex> = Lazy::new(|| Regex::new(r#"\s(href|id)="([^"]*)""#).unwrap());

fn unescape_attr(s: &str) -> String {
    let s = s.replace("&quot;", "\"").replace("&lt;", "<").replace("&gt;", ">").replace("&#x27;", "'").replace("&amp;", "&");
    let bytes = s.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' && i + 2 < bytes.len() && bytes[i + 1].is_ascii_hexdigit() && bytes[i + 2].is_ascii_hexdigit() {
            out.push(u8::from_str_radix(&s[i + 1..i + 3], 16).unwrap());
            i += 3;
            continue;
        }
        out.push(bytes[i]);
        i += 1;
    }
    String::from_utf8_lossy(&out).into_owned()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BrokenLink {
    pub page: String,
    pub href: String,
    pub line: u32,
}

/// Internal links in `pages` whose page or anchor does not exist.
/// `other_files` lists non-HTML paths that may be linked (assets).
pub fn audit_pages(pages: &[(String, Vec<u8>)], other_files: &[String]) -> Vec<BrokenLink> {
    let mut ids: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    let mut hrefs = Vec::new();
    for (path, bytes) in pages {
        let text = String::from_utf8_lossy(bytes);
        let set = ids.entry(path.as_str()).or_default();
        for c in ATTR_RE.captures_iter(&text) {
            let value = unescape_attr(&c[2]);
            if &c[1] == "id" {
                set.insert(value);
            } else {
                let line = text[..c.get(0).unwrap().start()].matches('\n').count() as u32 + 1;
                hrefs.push(BrokenLink { page: path.clone(), href: value, line });
            }
        }
    }
    hrefs
        .into_iter()
        .filter(|link| {
            let href = &link.href;
            if is_external(href) {
                return false;
            }
            let (page, anchor) = match href.split_once('#') {
                Some((p, a)) => (if p.is_empty() { link.page.as_str() } else { p }, Some(a)),
                None => (href.as_str(), None),
            };
            let ok = match (ids.get(page), anchor) {
                (Some(set), Some(a)) => a.is_empty() || set.contains(a),
                (Some(_), None) => true,
                (None, None) => other_files.iter().any(|f| f == page),
                (None, Some(_)) => false,
            };
            !ok
        })
        .collect()
}

pub fn audit_links(bundle: &SiteBundle) -> Vec<BrokenLink> {
    let files: Vec<String> = bundle.assets.iter().map(|(p, _)| p.clone()).collect();
    audit_pages(&bundle.pages, &files)
}
