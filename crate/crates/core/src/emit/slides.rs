//! reveal.js deck: partitioning fragments into slides, then HTML.

use std::collections::HashMap;
use std::fmt::Write;
use std::ops::Range;

use crate::ast::{Block, BlockKind, Document, Fragment, SlideType, Target};
use crate::bibliography::CitationMap;
use crate::diagnostic::{DiagCode, Diagnostic};
use crate::html::{escape_href, escape_text, HtmlOptions, HtmlRenderer, LinkMode};
use crate::xref::LabelTable;

pub const DEFAULT_RUNTIME_URL: &str = "https://cdn.jsdelivr.net/npm/reveal.js@5.1.0";
pub const DEFAULT_THEME: &str = "white";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Slide {
    pub blocks: Vec<Block>,
    /// Source file of each entry of `blocks`.
    pub origins: Vec<String>,
    pub subslides: Vec<Slide>,
    /// Ranges of `blocks` revealed one step at a time.
    pub fragments_revealed: Vec<Range<usize>>,
    pub notes: Vec<Block>,
    pub note_origins: Vec<String>,
}

impl Slide {
    fn push(&mut self, fragment: &Fragment, source: &str, revealed: bool) {
        let start = self.blocks.len();
        self.blocks.extend(with_fragment_tags(fragment));
        self.origins.resize(self.blocks.len(), source.to_string());
        if revealed && self.blocks.len() > start {
            self.fragments_revealed.push(start..self.blocks.len());
        }
    }

    fn push_notes(&mut self, fragment: &Fragment, source: &str) {
        self.notes.extend(with_fragment_tags(fragment));
        self.note_origins.resize(self.notes.len(), source.to_string());
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty() && self.subslides.is_empty() && self.notes.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SlideDeck {
    pub title: Option<String>,
    pub authors: Vec<String>,
    /// Holds frontmatter plus any content before the first slide start.
    pub title_slide: Option<Slide>,
    pub slides: Vec<Slide>,
}

impl SlideDeck {
    /// Number of top-level `<section>` elements the deck renders to.
    pub fn top_level_count(&self) -> usize {
        self.slides.len() + usize::from(self.title_slide.is_some())
    }
}

/// Copies the fragment's blocks, folding fragment tags into code-cell tags
/// so visibility can be decided per block after partitioning.
fn with_fragment_tags(fragment: &Fragment) -> Vec<Block> {
    let mut blocks = fragment.blocks.clone();
    if !fragment.tags.is_empty() {
        for b in &mut blocks {
            b.walk_mut(&mut |b| {
                if let BlockKind::CodeCell { tags, .. } = &mut b.kind {
                    *tags = fragment.tags.union(tags);
                }
            });
        }
    }
    blocks
}

/// Slide type a fragment acts as: its explicit type, or `slide` when it has
/// a top-level H1/H2 heading.
pub fn effective_slide_type(fragment: &Fragment) -> Option<SlideType> {
    fragment.slide_type.or_else(|| {
        fragment
            .blocks
            .iter()
            .any(|b| matches!(b.kind, BlockKind::Heading { level: 1 | 2, .. }))
            .then_some(SlideType::Slide)
    })
}

fn current<'s>(slides: &'s mut [Slide], pre: &'s mut Slide) -> &'s mut Slide {
    match slides.last_mut() {
        Some(top) if top.subslides.is_empty() => top,
        Some(top) => top.subslides.last_mut().unwrap(),
        None => pre,
    }
}

pub fn partition_slides(doc: &Document) -> (SlideDeck, Vec<Diagnostic>) {
    partition_documents(std::slice::from_ref(doc), None, &[])
}

/// Partitions several documents into one deck, in order. `title` and
/// `authors` override the first document's frontmatter.
pub fn partition_documents(docs: &[Document], title: Option<&str>, authors: &[String]) -> (SlideDeck, Vec<Diagnostic>) {
    let mut diags = Vec::new();
    let mut pre = Slide::default();
    let mut slides: Vec<Slide> = Vec::new();
    let first_fm = docs.first().map(|d| &d.frontmatter);
    let title = title.map(str::to_string).or_else(|| first_fm.and_then(|f| f.title.clone()));
    let authors = if authors.is_empty() { first_fm.map(|f| f.authors.clone()).unwrap_or_default() } else { authors.to_vec() };

    for doc in docs {
        let source = doc.source_name.as_str();
        for fragment in &doc.fragments {
            match effective_slide_type(fragment) {
                Some(SlideType::Skip) => {}
                Some(SlideType::Slide) => {
                    let mut s = Slide::default();
                    s.push(fragment, source, false);
                    slides.push(s);
                }
                Some(SlideType::Subslide) => {
                    let mut s = Slide::default();
                    s.push(fragment, source, false);
                    match slides.last_mut() {
                        Some(top) => top.subslides.push(s),
                        None => {
                            diags.push(
                                Diagnostic::warning(
                                    DiagCode::SubslideBeforeSlide,
                                    fragment.span,
                                    "subslide before any slide; treated as a slide",
                                )
                                .in_file(source),
                            );
                            slides.push(s);
                        }
                    }
                }
                kind => {
                    let target = current(&mut slides, &mut pre);
                    match kind {
                        Some(SlideType::Fragment) => target.push(fragment, source, true),
                        Some(SlideType::Notes) => target.push_notes(fragment, source),
                        _ => target.push(fragment, source, false),
                    }
                }
            }
        }
    }

    let title_slide = (title.is_some() || !pre.is_empty() || slides.is_empty()).then_some(pre);
    (SlideDeck { title, authors, title_slide, slides }, diags)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlidesConfig {
    pub runtime_base_url: String,
    pub theme: String,
    pub math_renderer_url: String,
}

impl Default for SlidesConfig {
    fn default() -> Self {
        SlidesConfig {
            runtime_base_url: DEFAULT_RUNTIME_URL.into(),
            theme: DEFAULT_THEME.into(),
            math_renderer_url: crate::emit::DEFAULT_MATH_URL.into(),
        }
    }
}

pub struct DeckContext<'a> {
    pub labels: &'a LabelTable,
    pub citations: &'a CitationMap,
    pub config: &'a SlidesConfig,
}

pub fn render_deck(deck: &SlideDeck, ctx: &DeckContext) -> String {
    let mut available = std::collections::HashSet::new();
    let mut collect = |blocks: &[Block]| {
        for b in blocks {
            b.walk(&mut |b| {
                if let Some(l) = b.label() {
                    available.insert(l.to_string());
                }
            });
        }
    };
    let mut stack: Vec<&Slide> = deck.title_slide.iter().chain(deck.slides.iter()).collect();
    while let Some(s) = stack.pop() {
        collect(&s.blocks);
        collect(&s.notes);
        stack.extend(s.subslides.iter());
    }

    let mut renderer = HtmlRenderer::new(HtmlOptions {
        target: Target::Slides,
        labels: Some(ctx.labels),
        citations: Some(ctx.citations),
        references_page: None,
        links: LinkMode::SingleFile { available: &available },
        rewrite_assets: true,
        numbered: true,
    });

    let base = ctx.config.runtime_base_url.trim_end_matches('/');
    let title = deck.title.clone().unwrap_or_else(|| "Slides".to_string());
    let mut out = String::new();
    out.push_str("<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n");
    out.push_str("<meta name=\"viewport\" content=\"width=device-width, initial-scale=1\">\n");
    let _ = writeln!(out, "<title>{}</title>", escape_text(&title));
    let _ = writeln!(out, "<link rel=\"stylesheet\" href=\"{}\">", escape_href(&format!("{base}/dist/reveal.css")));
    let _ = writeln!(
        out,
        "<link rel=\"stylesheet\" href=\"{}\">",
        escape_href(&format!("{base}/dist/theme/{}.css", ctx.config.theme))
    );
    out.push_str("<style>\n.reveal .eqno { float: right; }\n.reveal .cite, .reveal .xref { white-space: nowrap; }\n.reveal figcaption { font-size: 0.6em; }\n</style>\n");
    out.push_str("</head>\n<body>\n<div class=\"reveal\">\n<div class=\"slides\">\n");

    if let Some(ts) = &deck.title_slide {
        out.push_str("<section class=\"title-slide\">\n");
        if let Some(t) = &deck.title {
            let _ = writeln!(out, "<h1 class=\"title\">{}</h1>", escape_text(t));
        }
        if !deck.authors.is_empty() {
            let _ = writeln!(out, "<p class=\"authors\">{}</p>", escape_text(&deck.authors.join(", ")));
        }
        render_slide_body(&mut renderer, ts, &mut out);
        out.push_str("</section>\n");
    }
    for slide in &deck.slides {
        if slide.subslides.is_empty() {
            out.push_str("<section>\n");
            render_slide_body(&mut renderer, slide, &mut out);
            out.push_str("</section>\n");
        } else {
            out.push_str("<section>\n<section>\n");
            render_slide_body(&mut renderer, slide, &mut out);
            out.push_str("</section>\n");
            for sub in &slide.subslides {
                out.push_str("<section>\n");
                render_slide_body(&mut renderer, sub, &mut out);
                out.push_str("</section>\n");
            }
            out.push_str("</section>\n");
        }
    }

    out.push_str("</div>\n</div>\n");
    for script in ["dist/reveal.js", "plugin/notes/notes.js", "plugin/math/math.js"] {
        let _ = writeln!(out, "<script src=\"{}\"></script>", escape_href(&format!("{base}/{script}")));
    }
    let math_url = serde_json::to_string(&ctx.config.math_renderer_url).unwrap_or_default();
    let _ = writeln!(
        out,
        "<script>\nReveal.initialize({{ hash: true, mathjax3: {{ mathjax: {} }}, plugins: [RevealNotes, RevealMath.MathJax3] }});\n</script>",
        math_url.replace("</", "<\\/")
    );
    out.push_str("</body>\n</html>\n");
    out
}

fn render_slide_body(renderer: &mut HtmlRenderer, slide: &Slide, out: &mut String) {
    let mut i = 0;
    while i < slide.blocks.len() {
        match slide.fragments_revealed.iter().find(|r| r.start == i) {
            Some(r) => {
                out.push_str("<div class=\"fragment\">\n");
                for j in r.clone() {
                    render_one(renderer, &slide.blocks[j], &slide.origins[j], out);
                }
                out.push_str("</div>\n");
                i = r.end;
            }
            None => {
                render_one(renderer, &slide.blocks[i], &slide.origins[i], out);
                i += 1;
            }
        }
    }
    if !slide.notes.is_empty() {
        out.push_str("<aside class=\"notes\">\n");
        for (b, origin) in slide.notes.iter().zip(&slide.note_origins) {
            render_one(renderer, b, origin, out);
        }
        out.push_str("</aside>\n");
    }
}

fn render_one(renderer: &mut HtmlRenderer, block: &Block, source: &str, out: &mut String) {
    renderer.set_source(source, HashMap::new());
    renderer.render_block(block, false, out);
}
