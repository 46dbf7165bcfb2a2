//! Numbering of sections, figures and equations, and resolution of
//! `{ref}`/`{eq}` roles into links.
//!
//! Numbers are assigned once over the unfiltered documents in build order,
//! so every target shows the same number for the same object.

use std::collections::{BTreeMap, HashMap};

use crate::ast::{plain_text, Block, BlockKind, Document, Inline, InlineKind, SourceSpan};
use crate::diagnostic::{DiagCode, Diagnostic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LabelKind {
    Section,
    Figure,
    Equation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelEntry {
    pub kind: LabelKind,
    /// Dotted number; empty for headings below level 2.
    pub number: String,
    pub anchor: String,
    /// Output stem of the document holding the label.
    pub page: String,
    /// Plain-text title (heading text or figure caption).
    pub title: String,
    pub source_name: String,
    pub span: SourceSpan,
}

impl LabelEntry {
    /// Link text for a `{ref}` to this entry.
    pub fn ref_text(&self) -> String {
        match self.kind {
            LabelKind::Section => self.title.clone(),
            LabelKind::Figure => format!("Figure {}", self.number),
            LabelKind::Equation => format!("Equation ({})", self.number),
        }
    }
}

/// Identifies a numbered block independently of filtering.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockKey {
    pub source_name: String,
    pub line: u32,
    pub kind: LabelKind,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelTable {
    pub labels: BTreeMap<String, LabelEntry>,
    numbers: HashMap<BlockKey, String>,
}

impl LabelTable {
    pub fn get(&self, label: &str) -> Option<&LabelEntry> {
        self.labels.get(label)
    }

    /// Number assigned to a heading, figure or labeled equation, looked up
    /// by where it sits in the source.
    pub fn number_of(&self, source_name: &str, block: &Block) -> Option<&str> {
        let kind = match block.kind {
            BlockKind::Heading { .. } => LabelKind::Section,
            BlockKind::Figure { .. } => LabelKind::Figure,
            BlockKind::MathBlock { .. } => LabelKind::Equation,
            _ => return None,
        };
        let key = BlockKey { source_name: source_name.to_string(), line: block.span.start_line, kind };
        self.numbers.get(&key).map(String::as_str).filter(|n| !n.is_empty())
    }

    /// Href for a label as seen from `from_page`.
    pub fn href(&self, label: &str, from_page: &str) -> Option<String> {
        let entry = self.get(label)?;
        Some(if entry.page == from_page { format!("#{}", entry.anchor) } else { format!("{}.html#{}", entry.page, entry.anchor) })
    }
}

/// Numbers H1 as `1, 2, ...` and H2 as `x.y`; figures and labeled
/// equations globally `1..n`. Duplicate labels keep the first definition.
pub fn collect_labels(docs: &[Document]) -> (LabelTable, Vec<Diagnostic>) {
    let mut table = LabelTable::default();
    let mut diags = Vec::new();
    let (mut h1, mut h2, mut figures, mut equations) = (0u32, 0u32, 0u32, 0u32);

    for doc in docs {
        let page = doc.stem().to_string();
        let mut register = |table: &mut LabelTable, block: &Block, kind: LabelKind, number: String, title: String| {
            let key = BlockKey { source_name: doc.source_name.clone(), line: block.span.start_line, kind };
            table.numbers.insert(key, number.clone());
            let Some(label) = block.label() else { return };
            if let Some(first) = table.labels.get(label) {
                diags.push(
                    Diagnostic::error(
                        DiagCode::DuplicateLabel,
                        block.span,
                        format!("label `{label}` already defined at {}:{}", first.source_name, first.span.start_line),
                    )
                    .in_file(&doc.source_name),
                );
                return;
            }
            table.labels.insert(
                label.to_string(),
                LabelEntry {
                    kind,
                    number,
                    anchor: label.to_string(),
                    page: page.clone(),
                    title,
                    source_name: doc.source_name.clone(),
                    span: block.span,
                },
            );
        };

        for fragment in &doc.fragments {
            for top in &fragment.blocks {
                top.walk(&mut |block| match &block.kind {
                    BlockKind::Heading { level, content, .. } => {
                        let top_level = std::ptr::eq(block, top);
                        let number = match (top_level, level) {
                            (true, 1) => {
                                h1 += 1;
                                h2 = 0;
                                h1.to_string()
                            }
                            (true, 2) => {
                                h2 += 1;
                                format!("{h1}.{h2}")
                            }
                            _ => String::new(),
                        };
                        register(&mut table, block, LabelKind::Section, number, plain_text(content));
                    }
                    BlockKind::Figure { caption, .. } => {
                        figures += 1;
                        register(&mut table, block, LabelKind::Figure, figures.to_string(), plain_text(caption));
                    }
                    BlockKind::MathBlock { label: Some(_), latex } => {
                        equations += 1;
                        register(&mut table, block, LabelKind::Equation, equations.to_string(), latex.clone());
                    }
                    _ => {}
                });
            }
        }
    }
    (table, diags)
}

/// Rewrites `{ref}` and `{eq}` roles into links. Unknown labels become the
/// literal text `??` and a `dangling-reference` error.
pub fn resolve_references(doc: &Document, table: &LabelTable) -> (Document, Vec<Diagnostic>) {
    let mut out = doc.clone();
    let mut diags = Vec::new();
    let page = doc.stem().to_string();
    for fragment in &mut out.fragments {
        for block in &mut fragment.blocks {
            block.walk_mut(&mut |b| {
                for group in b.inline_groups_mut() {
                    rewrite(group, &mut |inline| resolve_one(inline, table, &page, &mut diags));
                }
            });
        }
    }
    for d in &mut diags {
        if d.file.is_empty() {
            d.file = doc.source_name.clone();
        }
    }
    (out, diags)
}

fn rewrite(inlines: &mut [Inline], f: &mut impl FnMut(&mut Inline)) {
    for inline in inlines {
        f(inline);
        match &mut inline.kind {
            InlineKind::Emph(c) | InlineKind::Strong(c) | InlineKind::Link { content: c, .. } => rewrite(c, f),
            _ => {}
        }
    }
}

fn resolve_one(inline: &mut Inline, table: &LabelTable, page: &str, diags: &mut Vec<Diagnostic>) {
    let (label, is_eq) = match &inline.kind {
        InlineKind::RefRole(l) => (l.clone(), false),
        InlineKind::EqRole(l) => (l.clone(), true),
        _ => return,
    };
    let span = inline.span;
    let Some(entry) = table.get(&label) else {
        diags.push(Diagnostic::error(DiagCode::DanglingReference, span, format!("reference to undefined label `{label}`")));
        inline.kind = InlineKind::Text("??".into());
        return;
    };
    let text = if is_eq {
        if entry.kind == LabelKind::Equation {
            format!("({})", entry.number)
        } else {
            diags.push(Diagnostic::warning(
                DiagCode::ReferenceKind,
                span,
                format!("`{{eq}}` role points at `{label}`, which is not an equation"),
            ));
            entry.ref_text()
        }
    } else {
        entry.ref_text()
    };
    let url = table.href(&label, page).unwrap();
    inline.kind = InlineKind::Link { url, content: vec![Inline::text(text, span)] };
}
