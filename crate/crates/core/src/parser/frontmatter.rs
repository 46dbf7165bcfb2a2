use once_cell::sync::Lazy;
use regex::Regex;

use crate::ast::{FrontMatter, SourceSpan};
use crate::diagnostic::{DiagCode, Diagnostic};

#[derive(Debug, Clone, PartialEq)]
pub struct FrontMatterSplit<'a> {
    pub frontmatter: FrontMatter,
    /// Text after the closing `---` line.
    pub body: &'a str,
    /// 1-based line number of the first line of `body` in the original file.
    pub body_first_line: u32,
    pub diagnostics: Vec<Diagnostic>,
}

static KEY_RE: Lazy<Regex> = Lazy::new(|| Regex::new(r"^([A-Za-z_][A-Za-z0-9_.-]*)[ \t]*:(?:[ \t]+(.*?))?[ \t]*$").unwrap());

fn is_delimiter(line: &str) -> bool {
    line.trim_end() == "---"
}

/// Splits a leading `---` block off the file and reads it as a flat map.
pub fn parse_frontmatter(text: &str) -> FrontMatterSplit<'_> {
    let no_header = FrontMatterSplit {
        frontmatter: FrontMatter::default(),
        body: text,
        body_first_line: 1,
        diagnostics: Vec::new(),
    };
    let mut lines = text.split_inclusive('\n');
    match lines.next() {
        Some(first) if is_delimiter(first) => {}
        _ => return no_header,
    }
    let mut offset = text.find('\n').map(|i| i + 1).unwrap_or(text.len());
    let mut header = Vec::new();
    let mut closed = false;
    for line in lines {
        offset += line.len();
        if is_delimiter(line) {
            closed = true;
            break;
        }
        header.push(line.trim_end_matches('\n'));
    }
    if !closed {
        return FrontMatterSplit {
            diagnostics: vec![Diagnostic::error(
                DiagCode::BadFrontmatter,
                SourceSpan::line(1),
                "frontmatter opened with `---` is never closed",
            )],
            ..no_header
        };
    }
    let body_first_line = header.len() as u32 + 3;
    let (frontmatter, diagnostics) = match parse_map(&header) {
        Ok(fm) => (fm, Vec::new()),
        Err(d) => (FrontMatter::default(), vec![d]),
    };
    FrontMatterSplit { frontmatter, body: &text[offset..], body_first_line, diagnostics }
}

fn parse_map(lines: &[&str]) -> Result<FrontMatter, Diagnostic> {
    let mut fm = FrontMatter::default();
    let mut seen = std::collections::BTreeSet::new();
    let mut current: Option<String> = None;
    for (i, line) in lines.iter().enumerate() {
        let line_no = i as u32 + 2;
        let bad = |msg: String| Diagnostic::error(DiagCode::BadFrontmatter, SourceSpan::line(line_no), msg);
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        if line.starts_with([' ', '\t', '-']) {
            let Some(key) = &current else {
                return Err(bad(format!("unexpected continuation line `{}`", line.trim())));
            };
            let trimmed = line.trim();
            if is_author_key(key) {
                match trimmed.strip_prefix('-') {
                    Some(item) => fm.authors.push(unquote(item.trim())),
                    None => return Err(bad(format!("expected `- name` under `{key}`"))),
                }
            } else {
                let entry = fm.extra.entry(key.clone()).or_default();
                if !entry.is_empty() {
                    entry.push('\n');
                }
                entry.push_str(line);
            }
            continue;
        }
        let caps = KEY_RE
            .captures(line)
            .ok_or_else(|| bad(format!("expected `key: value`, found `{line}`")))?;
        let key = caps[1].to_string();
        if !seen.insert(key.clone()) {
            return Err(bad(format!("duplicate key `{key}`")));
        }
        let value = caps.get(2).map(|m| m.as_str()).unwrap_or("");
        current = Some(key.clone());
        if value.is_empty() {
            if !is_author_key(&key) && key != "title" {
                fm.extra.insert(key, String::new());
            }
            continue;
        }
        if key == "title" {
            fm.title = Some(unquote(value));
        } else if is_author_key(&key) {
            fm.authors.extend(parse_list(value));
        } else {
            fm.extra.insert(key, unquote(value));
        }
    }
    Ok(fm)
}

fn is_author_key(key: &str) -> bool {
    key == "authors" || key == "author"
}

fn parse_list(value: &str) -> Vec<String> {
    match value.strip_prefix('[').and_then(|v| v.strip_suffix(']')) {
        Some(inner) => inner
            .split(',')
            .map(|s| unquote(s.trim()))
            .filter(|s| !s.is_empty())
            .collect(),
        None => vec![unquote(value)],
    }
}

pub(crate) fn unquote(value: &str) -> String {
    let v = value.trim();
    for q in ['"', '\''] {
        if v.len() >= 2 && v.starts_with(q) && v.ends_with(q) {
            let inner = &v[1..v.len() - 1];
            return if q == '"' { inner.replace("\\\"", "\"") } else { inner.replace("''", "'") };
        }
    }
    v.to_string()
}
