//! Per-target inclusion and visibility.
//!
//! Everything is included by default; a fragment tagged `skip-<target>` is
//! removed from that target only. `hide-*` tags never remove content here;
//! emitters interpret them.

use crate::ast::{Document, TagSet, Target, HIDE_INPUT, HIDE_OUTPUT};

pub fn filter_for_target(doc: &Document, target: Target) -> Document {
    Document {
        source_name: doc.source_name.clone(),
        frontmatter: doc.frontmatter.clone(),
        fragments: doc.fragments.iter().filter(|f| !f.is_skipped_for(target)).cloned().collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Visibility {
    Shown,
    InputHidden,
    OutputHidden,
}

/// How a code cell with `tags` (fragment tags ∪ cell tags) is presented.
/// Notebooks always show the cell and carry the tags as metadata instead.
pub fn visibility(tags: &TagSet, target: Target) -> Visibility {
    match target {
        Target::Notebook => Visibility::Shown,
        Target::Book | Target::Slides => {
            if tags.contains(HIDE_INPUT) {
                Visibility::InputHidden
            } else if tags.contains(HIDE_OUTPUT) {
                Visibility::OutputHidden
            } else {
                Visibility::Shown
            }
        }
    }
}

/// Fragments that no target keeps.
pub fn dead_fragments(doc: &Document) -> impl Iterator<Item = &crate::ast::Fragment> {
    doc.fragments.iter().filter(|f| Target::ALL.iter().all(|t| f.is_skipped_for(*t)))
}
