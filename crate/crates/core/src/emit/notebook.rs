//! ipynb (nbformat 4.5) output, one notebook per source file.

use std::collections::HashSet;

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::ast::{BlockKind, Document, SlideType};
use crate::markdown::MarkdownContext;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernelSpec {
    pub name: String,
    pub language: String,
    pub display_name: String,
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec { name: "python3".into(), language: "python".into(), display_name: "Python 3".into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellType {
    Markdown,
    Code,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    pub cell_type: CellType,
    pub id: String,
    /// Lines, each ending in `\n` except possibly the last.
    pub source: Vec<String>,
    pub tags: Vec<String>,
    pub slide_type: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Notebook {
    pub cells: Vec<Cell>,
    pub kernel: KernelSpec,
    pub title: Option<String>,
}

impl Notebook {
    pub const NBFORMAT: u32 = 4;
    pub const NBFORMAT_MINOR: u32 = 5;
}

/// Splits text into ipynb source lines.
pub fn source_lines(text: &str) -> Vec<String> {
    text.split_inclusive('\n').map(str::to_string).collect()
}

/// Ids are the first 8 hex digits of sha256(index, source), with a numeric
/// suffix on the rare collision.
fn assign_ids(cells: &mut [Cell]) {
    let mut seen = HashSet::new();
    for (i, cell) in cells.iter_mut().enumerate() {
        let mut h = Sha256::new();
        h.update(i.to_string().as_bytes());
        h.update([0]);
        h.update(cell.source.concat().as_bytes());
        let digest = h.finalize();
        let base: String = digest.iter().take(4).map(|b| format!("{b:02x}")).collect();
        let mut id = base.clone();
        let mut n = 1;
        while !seen.insert(id.clone()) {
            id = format!("{base}-{n}");
            n += 1;
        }
        cell.id = id;
    }
}

fn slide_type_meta(t: Option<SlideType>) -> Option<String> {
    t.map(|t| t.as_str().to_string())
}

/// One markdown cell per fragment holding all its prose blocks, placed where
/// the first prose block sits, and one code cell per top-level code cell.
/// The fragment's slide type goes on its first cell; a later cell of the same
/// fragment gets `-` when the type is `slide` or `subslide`.
pub fn to_notebook(doc: &Document, md: &MarkdownContext, kernel: &KernelSpec) -> Notebook {
    let mut cells = Vec::new();
    for fragment in &doc.fragments {
        let prose: Vec<_> = fragment.blocks.iter().filter(|b| !b.is_code_cell()).cloned().collect();
        let markdown = md.blocks(&prose);
        let mut markdown_done = markdown.trim().is_empty();
        let mut first = true;
        let slide_type = |first: &mut bool| -> Option<String> {
            let t = if *first {
                slide_type_meta(fragment.slide_type)
            } else {
                match fragment.slide_type {
                    Some(SlideType::Slide | SlideType::Subslide) => Some("-".into()),
                    other => slide_type_meta(other),
                }
            };
            *first = false;
            t
        };
        for block in &fragment.blocks {
            match &block.kind {
                BlockKind::CodeCell { source, tags, .. } => cells.push(Cell {
                    cell_type: CellType::Code,
                    id: String::new(),
                    source: source_lines(source),
                    tags: fragment.tags.union(tags).to_vec(),
                    slide_type: slide_type(&mut first),
                }),
                _ if !markdown_done => {
                    markdown_done = true;
                    cells.push(Cell {
                        cell_type: CellType::Markdown,
                        id: String::new(),
                        source: source_lines(&markdown),
                        tags: fragment.tags.to_vec(),
                        slide_type: slide_type(&mut first),
                    });
                }
                _ => {}
            }
        }
    }
    assign_ids(&mut cells);
    Notebook { cells, kernel: kernel.clone(), title: doc.frontmatter.title.clone() }
}

fn cell_json(cell: &Cell) -> Value {
    let mut metadata = Map::new();
    if let Some(t) = &cell.slide_type {
        metadata.insert("slideshow".into(), json!({ "slide_type": t }));
    }
    if !cell.tags.is_empty() {
        metadata.insert("tags".into(), json!(cell.tags));
    }
    match cell.cell_type {
        CellType::Markdown => json!({
            "cell_type": "markdown",
            "id": cell.id,
            "metadata": metadata,
            "source": cell.source,
        }),
        CellType::Code => json!({
            "cell_type": "code",
            "execution_count": null,
            "id": cell.id,
            "metadata": metadata,
            "outputs": [],
            "source": cell.source,
        }),
    }
}

pub fn notebook_json(nb: &Notebook) -> Value {
    let mut metadata = Map::new();
    metadata.insert(
        "kernelspec".into(),
        json!({ "display_name": nb.kernel.display_name, "language": nb.kernel.language, "name": nb.kernel.name }),
    );
    metadata.insert("language_info".into(), json!({ "name": nb.kernel.language }));
    if let Some(t) = &nb.title {
        metadata.insert("title".into(), json!(t));
    }
    json!({
        "cells": nb.cells.iter().map(cell_json).collect::<Vec<_>>(),
        "metadata": metadata,
        "nbformat": Notebook::NBFORMAT,
        "nbformat_minor": Notebook::NBFORMAT_MINOR,
    })
}

/// Sorted keys, one-space indent, trailing newline.
pub fn serialize_notebook(nb: &Notebook) -> Vec<u8> {
    let value = notebook_json(nb);
    let mut out = Vec::new();
    let formatter = serde_json::ser::PrettyFormatter::with_indent(b" ");
    let mut ser = serde_json::Serializer::with_formatter(&mut out, formatter);
    serde::Serialize::serialize(&value, &mut ser).expect("serializing a JSON value cannot fail");
    out.push(b'\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_source;

    fn nb(src: &str) -> Notebook {
        let (doc, _) = parse_source(src, "p.md");
        to_notebook(&doc, &MarkdownContext::default(), &KernelSpec::default())
    }

    #[test]
    fn paragraph_then_code() {
        let n = nb("Hello.\n\n```{code-cell} python\nx = 1\ny = 2\n```\n");
        assert_eq!(n.cells.len(), 2);
        assert_eq!(n.cells[0].cell_type, CellType::Markdown);
        assert_eq!(n.cells[0].source, vec!["Hello."]);
        assert_eq!(n.cells[1].source, vec!["x = 1\n", "y = 2"]);
        assert_ne!(n.cells[0].id, n.cells[1].id);
    }

    #[test]
    fn tags_are_unioned() {
        let n = nb("+++ {\"tags\": [\"x-a\"], \"slideshow\": {\"slide_type\": \"slide\"}}\n```{code-cell} python\n:tags: [hide-input]\nx\n```\ntext\n```{code-cell} python\ny\n```\n");
        assert_eq!(n.cells.len(), 3);
        assert_eq!(n.cells[0].tags, vec!["hide-input", "x-a"]);
        assert_eq!(n.cells[0].slide_type.as_deref(), Some("slide"));
        assert_eq!(n.cells[1].cell_type, CellType::Markdown);
        assert_eq!(n.cells[1].slide_type.as_deref(), Some("-"));
        assert_eq!(n.cells[2].tags, vec!["x-a"]);
    }

    #[test]
    fn empty_notebook_shape() {
        let text = String::from_utf8(serialize_notebook(&nb(""))).unwrap();
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["cells"], json!([]));
        assert_eq!(v["nbformat"], 4);
        assert_eq!(v["nbformat_minor"], 5);
        assert!(text.ends_with("}\n"));
        assert!(text.starts_with("{\n \"cells\": []"));
    }

    #[test]
    fn serialization_is_stable() {
        let n = nb("a\n+++\n```{code-cell} python\nx\n```");
        assert_eq!(serialize_notebook(&n), serialize_notebook(&n));
    }
}
