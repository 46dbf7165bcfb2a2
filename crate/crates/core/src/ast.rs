//! Document object model shared by the parser, filters, resolvers and emitters.
//!
//! A [`Document`] is a frontmatter header plus an ordered list of
//! [`Fragment`]s. A fragment is the run of blocks between two `+++` cell
//! breaks; it is the unit that carries tags (per-target inclusion and
//! visibility) and a slide placement.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use once_cell::sync::Lazy;
use regex::Regex;

use crate::diagnostic::{DiagCode, Diagnostic};

/// Inclusive range of 1-based source lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SourceSpan {
    pub start_line: u32,
    pub end_line: u32,
}

impl SourceSpan {
    pub fn new(start_line: u32, end_line: u32) -> Self {
        debug_assert!(start_line >= 1 && start_line <= end_line);
        SourceSpan { start_line, end_line }
    }

    pub fn line(line: u32) -> Self {
        SourceSpan::new(line, line)
    }

    pub fn to(self, other: SourceSpan) -> SourceSpan {
        SourceSpan::new(self.start_line.min(other.start_line), self.end_line.max(other.end_line))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Target {
    Book,
    Notebook,
    Slides,
}

impl Target {
    pub const ALL: [Target; 3] = [Target::Book, Target::Notebook, Target::Slides];

    pub fn as_str(self) -> &'static str {
        match self {
            Target::Book => "book",
            Target::Notebook => "notebook",
            Target::Slides => "slides",
        }
    }

    /// The `skip-*` tag that removes a fragment from this target.
    pub fn skip_tag(self) -> &'static str {
        match self {
            Target::Book => SKIP_BOOK,
            Target::Notebook => SKIP_NOTEBOOK,
            Target::Slides => SKIP_SLIDES,
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Target {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "book" => Ok(Target::Book),
            "notebook" => Ok(Target::Notebook),
            "slides" => Ok(Target::Slides),
            other => Err(format!("unknown target `{other}` (expected book, notebook or slides)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SlideType {
    Slide,
    Subslide,
    Fragment,
    Notes,
    Skip,
}

impl SlideType {
    pub fn as_str(self) -> &'static str {
        match self {
            SlideType::Slide => "slide",
            SlideType::Subslide => "subslide",
            SlideType::Fragment => "fragment",
            SlideType::Notes => "notes",
            SlideType::Skip => "skip",
        }
    }
}

impl FromStr for SlideType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "slide" => Ok(SlideType::Slide),
            "subslide" => Ok(SlideType::Subslide),
            "fragment" => Ok(SlideType::Fragment),
            "notes" => Ok(SlideType::Notes),
            "skip" => Ok(SlideType::Skip),
            other => Err(format!("unknown slide type `{other}`")),
        }
    }
}

pub const SKIP_BOOK: &str = "skip-book";
pub const SKIP_NOTEBOOK: &str = "skip-notebook";
pub const SKIP_SLIDES: &str = "skip-slides";
pub const HIDE_INPUT: &str = "hide-input";
pub const HIDE_OUTPUT: &str = "hide-output";

/// The reserved tag vocabulary. Anything else must start with `x-`.
pub const RESERVED_TAGS: [&str; 5] = [SKIP_BOOK, SKIP_NOTEBOOK, SKIP_SLIDES, HIDE_INPUT, HIDE_OUTPUT];

pub const USER_TAG_PREFIX: &str = "x-";

/// A validated set of tags. Iterates in sorted order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash)]
pub struct TagSet(BTreeSet<String>);

impl TagSet {
    pub fn new() -> Self {
        TagSet::default()
    }

    pub fn contains(&self, tag: &str) -> bool {
        self.0.contains(tag)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn union(&self, other: &TagSet) -> TagSet {
        TagSet(self.0.union(&other.0).cloned().collect())
    }

    /// Textual form: the tags as a list of strings.
    pub fn to_vec(&self) -> Vec<String> {
        self.0.iter().cloned().collect()
    }

    pub fn is_valid_tag(tag: &str) -> bool {
        RESERVED_TAGS.contains(&tag) || (tag.starts_with(USER_TAG_PREFIX) && tag.len() > USER_TAG_PREFIX.len())
    }

    /// Inserts without validation. Used by the parser after
    /// [`validate_tagset`] and by tests.
    pub(crate) fn insert_unchecked(&mut self, tag: &str) {
        self.0.insert(tag.to_string());
    }
}

/// Builds a [`TagSet`] from raw strings. Every recognized tag is kept once;
/// each unknown tag and each duplicate produces one warning. The caller
/// escalates `unknown-tag` under strict mode.
pub fn validate_tagset<S: AsRef<str>>(raw: &[S], span: SourceSpan) -> (TagSet, Vec<Diagnostic>) {
    let mut set = TagSet::new();
    let mut diags = Vec::new();
    let mut seen = BTreeSet::new();
    for tag in raw {
        let tag = tag.as_ref();
        if !seen.insert(tag.to_string()) {
            diags.push(Diagnostic::warning(DiagCode::DuplicateTag, span, format!("duplicate tag `{tag}`")));
            continue;
        }
        if TagSet::is_valid_tag(tag) {
            set.insert_unchecked(tag);
        } else {
            diags.push(Diagnostic::warning(
                DiagCode::UnknownTag,
                span,
                format!("unknown tag `{tag}` (reserved tags: {}; user tags must start with `x-`)", RESERVED_TAGS.join(", ")),
            ));
        }
    }
    (set, diags)
}

static LABEL_RE: Lazy<Regex> = Lazy::new(|| Regex::new(r"^[a-zA-Z0-9_-]+$").unwrap());

pub fn is_valid_label(label: &str) -> bool {
    LABEL_RE.is_match(label)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FrontMatter {
    pub title: Option<String>,
    pub authors: Vec<String>,
    /// Every other key, verbatim. Nested values are kept as opaque text.
    pub extra: BTreeMap<String, String>,
}

impl FrontMatter {
    pub fn is_empty(&self) -> bool {
        self.title.is_none() && self.authors.is_empty() && self.extra.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub source_name: String,
    pub frontmatter: FrontMatter,
    pub fragments: Vec<Fragment>,
}

impl Document {
    /// File stem of `source_name`, used for per-file output names.
    pub fn stem(&self) -> &str {
        let name = self.source_name.rsplit(['/', '\\']).next().unwrap_or(&self.source_name);
        match name.rfind('.') {
            Some(i) if i > 0 => &name[..i],
            _ => name,
        }
    }

    pub fn blocks(&self) -> impl Iterator<Item = &Block> {
        self.fragments.iter().flat_map(|f| f.blocks.iter())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fragment {
    pub blocks: Vec<Block>,
    pub tags: TagSet,
    pub slide_type: Option<SlideType>,
    pub span: SourceSpan,
}

impl Fragment {
    pub fn is_skipped_for(&self, target: Target) -> bool {
        self.tags.contains(target.skip_tag())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub kind: BlockKind,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BlockKind {
    Heading {
        level: u8,
        content: Vec<Inline>,
        label: Option<String>,
    },
    Paragraph(Vec<Inline>),
    CodeCell {
        language: String,
        source: String,
        tags: TagSet,
        options: BTreeMap<String, String>,
    },
    CodeBlock {
        language: Option<String>,
        source: String,
    },
    MathBlock {
        latex: String,
        label: Option<String>,
    },
    Figure {
        target: String,
        alt: String,
        label: Option<String>,
        caption: Vec<Inline>,
    },
    Admonition {
        kind: String,
        title: Option<Vec<Inline>>,
        body: Vec<Block>,
    },
    Bibliography,
    List {
        /// Start number for ordered lists.
        start: Option<u64>,
        tight: bool,
        items: Vec<Vec<Block>>,
    },
    BlockQuote(Vec<Block>),
    Table {
        header: Vec<Vec<Inline>>,
        rows: Vec<Vec<Vec<Inline>>>,
    },
    ThematicBreak,
}

impl Block {
    pub fn new(kind: BlockKind, span: SourceSpan) -> Self {
        Block { kind, span }
    }

    pub fn label(&self) -> Option<&str> {
        match &self.kind {
            BlockKind::Heading { label, .. } | BlockKind::MathBlock { label, .. } | BlockKind::Figure { label, .. } => {
                label.as_deref()
            }
            _ => None,
        }
    }

    pub fn is_code_cell(&self) -> bool {
        matches!(self.kind, BlockKind::CodeCell { .. })
    }

    /// Direct child blocks (admonition bodies, quotes, list items).
    pub fn children(&self) -> Vec<&Block> {
        match &self.kind {
            BlockKind::Admonition { body, .. } | BlockKind::BlockQuote(body) => body.iter().collect(),
            BlockKind::List { items, .. } => items.iter().flatten().collect(),
            _ => Vec::new(),
        }
    }

    /// Inline sequences held directly by this block.
    pub fn inline_groups(&self) -> Vec<&Vec<Inline>> {
        match &self.kind {
            BlockKind::Heading { content, .. } | BlockKind::Paragraph(content) => vec![content],
            BlockKind::Figure { caption, .. } => vec![caption],
            BlockKind::Admonition { title: Some(t), .. } => vec![t],
            BlockKind::Table { header, rows } => header.iter().chain(rows.iter().flatten()).collect(),
            _ => Vec::new(),
        }
    }

    pub fn inline_groups_mut(&mut self) -> Vec<&mut Vec<Inline>> {
        match &mut self.kind {
            BlockKind::Heading { content, .. } | BlockKind::Paragraph(content) => vec![content],
            BlockKind::Figure { caption, .. } => vec![caption],
            BlockKind::Admonition { title: Some(t), .. } => vec![t],
            BlockKind::Table { header, rows } => header.iter_mut().chain(rows.iter_mut().flatten()).collect(),
            _ => Vec::new(),
        }
    }

    pub fn children_mut(&mut self) -> Vec<&mut Block> {
        match &mut self.kind {
            BlockKind::Admonition { body, .. } | BlockKind::BlockQuote(body) => body.iter_mut().collect(),
            BlockKind::List { items, .. } => items.iter_mut().flatten().collect(),
            _ => Vec::new(),
        }
    }

    /// Pre-order walk over this block and all nested blocks.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Block)) {
        f(self);
        for child in self.children() {
            child.walk(f);
        }
    }

    pub fn walk_mut(&mut self, f: &mut impl FnMut(&mut Block)) {
        f(self);
        for child in self.children_mut() {
            child.walk_mut(f);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Inline {
    pub kind: InlineKind,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InlineKind {
    Text(String),
    Emph(Vec<Inline>),
    Strong(Vec<Inline>),
    CodeSpan(String),
    Link { url: String, content: Vec<Inline> },
    Image { url: String, alt: String },
    MathInline(String),
    CiteRole(Vec<String>),
    RefRole(String),
    EqRole(String),
}

impl Inline {
    pub fn new(kind: InlineKind, span: SourceSpan) -> Self {
        Inline { kind, span }
    }

    pub fn text(text: impl Into<String>, span: SourceSpan) -> Self {
        Inline::new(InlineKind::Text(text.into()), span)
    }

    pub fn children(&self) -> Option<&Vec<Inline>> {
        match &self.kind {
            InlineKind::Emph(c) | InlineKind::Strong(c) | InlineKind::Link { content: c, .. } => Some(c),
            _ => None,
        }
    }

    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Inline)) {
        f(self);
        if let Some(children) = self.children() {
            for c in children {
                c.walk(f);
            }
        }
    }
}

/// Concatenated text content of a run of inlines, without markup.
pub fn plain_text(inlines: &[Inline]) -> String {
    let mut out = String::new();
    for inline in inlines {
        match &inline.kind {
            InlineKind::Text(t) | InlineKind::CodeSpan(t) | InlineKind::MathInline(t) => out.push_str(t),
            InlineKind::Emph(c) | InlineKind::Strong(c) | InlineKind::Link { content: c, .. } => {
                out.push_str(&plain_text(c))
            }
            InlineKind::Image { alt, .. } => out.push_str(alt),
            InlineKind::CiteRole(keys) => out.push_str(&keys.join(", ")),
            InlineKind::RefRole(l) | InlineKind::EqRole(l) => out.push_str(l),
        }
    }
    out
}

/// Walks every inline of every block in the document, including nested ones.
pub fn for_each_inline<'a>(blocks: impl IntoIterator<Item = &'a Block>, f: &mut impl FnMut(&'a Inline)) {
    for block in blocks {
        block.walk(&mut |b| {
            for group in b.inline_groups() {
                for inline in group {
                    inline.walk(f);
                }
            }
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn span() -> SourceSpan {
        SourceSpan::line(1)
    }

    #[test]
    fn reserved_tag_accepted() {
        let (set, diags) = validate_tagset(&["skip-slides"], span());
        assert_eq!(set.to_vec(), vec!["skip-slides"]);
        assert!(diags.is_empty());
    }

    #[test]
    fn empty_tag_list() {
        let (set, diags) = validate_tagset::<&str>(&[], span());
        assert!(set.is_empty());
        assert!(diags.is_empty());
    }

    #[test]
    fn duplicate_and_unknown_warn() {
        let (set, diags) = validate_tagset(&["skip-slides", "skip-slides", "banana"], span());
        assert_eq!(set.to_vec(), vec!["skip-slides"]);
        assert_eq!(diags.len(), 2);
        assert_eq!(diags[0].code, DiagCode::DuplicateTag);
        assert_eq!(diags[1].code, DiagCode::UnknownTag);
        assert!(diags.iter().all(|d| !d.is_error()));
    }

    #[test]
    fn user_tags_need_suffix() {
        assert!(TagSet::is_valid_tag("x-draft"));
        assert!(!TagSet::is_valid_tag("x-"));
        assert!(!TagSet::is_valid_tag("skip-book "));
    }

    #[test]
    fn labels() {
        assert!(is_valid_label("sec-x_1"));
        assert!(!is_valid_label("sec x"));
        assert!(!is_valid_label(""));
        assert!(!is_valid_label("a:b"));
    }

    #[test]
    fn document_stem() {
        let doc = Document { source_name: "chapters/intro.md".into(), frontmatter: FrontMatter::default(), fragments: vec![] };
        assert_eq!(doc.stem(), "intro");
    }

    #[test]
    fn target_round_trip() {
        for t in Target::ALL {
            assert_eq!(t.as_str().parse::<Target>().unwrap(), t);
        }
        assert!("poster".parse::<Target>().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn tag_strategy() -> impl Strategy<Value = String> {
            prop_oneof![
                proptest::sample::select(RESERVED_TAGS.to_vec()).prop_map(String::from),
                "x-[a-z]{1,6}",
                "[a-z-]{1,8}",
            ]
        }

        proptest! {
            #[test]
            fn validate_is_idempotent(raw in proptest::collection::vec(tag_strategy(), 0..10)) {
                let (set, _) = validate_tagset(&raw, SourceSpan::line(1));
                let (again, diags) = validate_tagset(&set.to_vec(), SourceSpan::line(1));
                prop_assert_eq!(again, set);
                prop_assert!(diags.is_empty());
            }
        }
    }
}
