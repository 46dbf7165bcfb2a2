//! Output emitters for the three targets.

pub mod book;
pub mod notebook;
pub mod slides;

use std::collections::{HashMap, HashSet};

use crate::ast::{plain_text, BlockKind, Document};
use crate::html::slugify;

pub const DEFAULT_MATH_URL: &str = "https://cdn.jsdelivr.net/npm/mathjax@3/es5/tex-chtml.js";

/// Every label defined by a block of the given documents.
pub fn labels_in<'a>(docs: impl IntoIterator<Item = &'a Document>) -> HashSet<String> {
    let mut out = HashSet::new();
    for doc in docs {
        for b in doc.blocks() {
            b.walk(&mut |b| {
                if let Some(l) = b.label() {
                    out.insert(l.to_string());
                }
            });
        }
    }
    out
}

/// Anchor ids for the headings of one page, keyed by source line. Labeled
/// headings use the label; others get a slug unique on the page.
pub fn heading_ids(doc: &Document) -> HashMap<u32, String> {
    let mut used = labels_in([doc]);
    let mut ids = HashMap::new();
    for b in doc.blocks() {
        b.walk(&mut |b| {
            if let BlockKind::Heading { content, label, .. } = &b.kind {
                let id = match label {
                    Some(l) => l.clone(),
                    None => {
                        let base = slugify(&plain_text(content));
                        let mut id = base.clone();
                        let mut n = 1;
                        while !used.insert(id.clone()) {
                            id = format!("{base}-{n}");
                            n += 1;
                        }
                        id
                    }
                };
                ids.insert(b.span.start_line, id);
            }
        });
    }
    ids
}
