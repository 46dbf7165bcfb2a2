//! Source text to [`Document`].
//!
//! The pipeline is `parse_frontmatter` → `split_cells` → `parse_blocks` per
//! fragment. Parsing never aborts: every stage recovers and reports
//! diagnostics, so a best-effort document is always produced.

mod blocks;
mod cells;
mod directive;
mod frontmatter;
mod inlines;

pub use blocks::parse_blocks;
pub use cells::{split_cells, RawFragment};
pub use directive::parse_directive;
pub use frontmatter::{parse_frontmatter, FrontMatterSplit};
pub use inlines::parse_inlines;

use serde_json::Value;

use crate::ast::{validate_tagset, Document, Fragment, SlideType, SourceSpan, TagSet};
use crate::diagnostic::{dedup, DiagCode, Diagnostic};

/// Parses a whole source file. Equal inputs yield equal outputs.
pub fn parse_source(text: &str, source_name: &str) -> (Document, Vec<Diagnostic>) {
    let text = normalize_newlines(text);
    let split = parse_frontmatter(&text);
    let mut diags = split.diagnostics;
    let (raw, cell_diags) = split_cells(split.body, split.body_first_line);
    diags.extend(cell_diags);

    let mut fragments = Vec::with_capacity(raw.len());
    for rf in raw {
        let (tags, slide_type) = match &rf.tags_json {
            Some(json) => {
                let break_line = SourceSpan::line(rf.span.start_line.saturating_sub(1).max(1));
                let (tags, slide, d) = decode_cell_metadata(json, break_line);
                diags.extend(d);
                (tags, slide)
            }
            None => (TagSet::new(), None),
        };
        let (blocks, d) = parse_blocks(&rf.text, rf.span.start_line);
        diags.extend(d);
        if blocks.is_empty() {
            continue;
        }
        fragments.push(Fragment { blocks, tags, slide_type, span: rf.span });
    }

    for d in &mut diags {
        if d.file.is_empty() {
            d.file = source_name.to_string();
        }
    }
    dedup(&mut diags);
    let doc = Document { source_name: source_name.to_string(), frontmatter: split.frontmatter, fragments };
    (doc, diags)
}

pub fn normalize_newlines(text: &str) -> String {
    if text.contains('\r') {
        text.replace("\r\n", "\n").replace('\r', "\n")
    } else {
        text.to_string()
    }
}

/// Decodes the JSON object on a `+++` break line: `tags` (list of strings)
/// and the slide placement under `slide`, `slide_type` or
/// `slideshow.slide_type`.
pub fn decode_cell_metadata(json: &str, span: SourceSpan) -> (TagSet, Option<SlideType>, Vec<Diagnostic>) {
    let mut diags = Vec::new();
    let bad = |msg: String| Diagnostic::error(DiagCode::BadCellMetadata, span, msg);
    let value: Value = match serde_json::from_str(json) {
        Ok(v) => v,
        Err(e) => return (TagSet::new(), None, vec![bad(format!("cell metadata is not valid JSON: {e}"))]),
    };
    let Value::Object(map) = value else {
        return (TagSet::new(), None, vec![bad("cell metadata must be a JSON object".into())]);
    };
    let mut tags = TagSet::new();
    if let Some(raw) = map.get("tags") {
        match raw.as_array().map(|a| a.iter().map(|v| v.as_str().map(String::from)).collect::<Option<Vec<_>>>()) {
            Some(Some(list)) => {
                let (set, d) = validate_tagset(&list, span);
                tags = set;
                diags.extend(d);
            }
            _ => diags.push(bad("`tags` must be a list of strings".into())),
        }
    }
    let slide_value = map
        .get("slide")
        .or_else(|| map.get("slide_type"))
        .or_else(|| map.get("slideshow").and_then(|s| s.get("slide_type")));
    let slide_type = match slide_value {
        None => None,
        Some(Value::String(s)) if s == "-" => None,
        Some(Value::String(s)) => match s.parse::<SlideType>() {
            Ok(t) => Some(t),
            Err(e) => {
                diags.push(bad(e));
                None
            }
        },
        Some(_) => {
            diags.push(bad("slide type must be a string".into()));
            None
        }
    };
    (tags, slide_type, diags)
}
