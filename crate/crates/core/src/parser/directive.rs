use std::collections::BTreeMap;

use once_cell::sync::Lazy;
use regex::Regex;

use super::blocks::{to_lines, BlockParser, Line};
use super::frontmatter::unquote;
use super::inlines::parse_inlines;
use crate::ast::{is_valid_label, validate_tagset, Block, BlockKind, SourceSpan, TagSet};
use crate::diagnostic::{DiagCode, Diagnostic};

static OPTION_RE: Lazy<Regex> = Lazy::new(|| Regex::new(r"^:([A-Za-z][\w-]*):(?:\s+(.*?))?\s*$").unwrap());

pub const ADMONITIONS: [&str; 11] =
    ["note", "warning", "admonition", "tip", "hint", "important", "caution", "attention", "danger", "error", "seealso"];

/// Builds the block for a fenced directive ```` ```{name} argument ````.
/// `body` holds the raw lines between the fences, starting at file line
/// `first_body_line`; `span` covers the whole directive including fences.
pub fn parse_directive(
    name: &str,
    argument: &str,
    body: &str,
    first_body_line: u32,
    span: SourceSpan,
) -> (Block, Vec<Diagnostic>) {
    parse_directive_lines(name, argument, &to_lines(body, first_body_line), span)
}

pub(crate) fn parse_directive_lines(name: &str, argument: &str, body: &[Line], span: SourceSpan) -> (Block, Vec<Diagnostic>) {
    let mut diags = Vec::new();
    let mut options = BTreeMap::new();
    let mut option_lines = BTreeMap::new();
    let mut k = 0;
    while k < body.len() {
        match OPTION_RE.captures(body[k].text.trim()) {
            Some(c) => {
                let value = c.get(2).map_or("", |m| m.as_str()).to_string();
                option_lines.insert(c[1].to_string(), body[k].no);
                options.insert(c[1].to_string(), value);
                k += 1;
            }
            None => break,
        }
    }
    let content = &body[k..];
    let content_text = || {
        let text: Vec<&str> = content.iter().map(|l| l.text.as_str()).collect();
        text.join("\n").trim_matches('\n').to_string()
    };
    let first_content_line = content.iter().find(|l| !l.is_blank()).map_or(span.start_line, |l| l.no);
    let option_span = |key: &str| option_lines.get(key).map_or(span, |&n| SourceSpan::line(n));
    let label_option = |key: &str, diags: &mut Vec<Diagnostic>| -> Option<String> {
        let label = options.get(key)?.trim().to_string();
        if is_valid_label(&label) {
            Some(label)
        } else {
            diags.push(Diagnostic::warning(
                DiagCode::BadLabel,
                option_span(key),
                format!("label `{label}` must match [a-zA-Z0-9_-]+"),
            ));
            None
        }
    };
    let missing_arg = |what: &str| {
        Diagnostic::error(DiagCode::MissingArgument, span, format!("`{{{name}}}` directive requires {what}"))
    };
    let raw_body = || body.iter().map(|l| l.text.as_str()).collect::<Vec<_>>().join("\n");

    let kind = match name {
        "math" => {
            let label = label_option("label", &mut diags);
            BlockKind::MathBlock { latex: content_text(), label }
        }
        "figure" => {
            if argument.is_empty() {
                diags.push(missing_arg("an image path"));
                BlockKind::CodeBlock { language: Some(name.to_string()), source: raw_body() }
            } else {
                let label = label_option("name", &mut diags);
                let alt = options.get("alt").cloned().unwrap_or_default();
                let (caption, d) = parse_inlines(content_text().trim(), first_content_line);
                diags.extend(d);
                BlockKind::Figure { target: argument.to_string(), alt, label, caption }
            }
        }
        "code-cell" => {
            if argument.is_empty() {
                diags.push(missing_arg("a language argument"));
                BlockKind::CodeBlock { language: None, source: raw_body() }
            } else {
                let tags = match options.remove("tags") {
                    Some(raw) => {
                        let (set, d) = validate_tagset(&parse_tag_list(&raw), option_span("tags"));
                        diags.extend(d);
                        set
                    }
                    None => TagSet::new(),
                };
                let source = content_text();
                BlockKind::CodeCell { language: argument.to_string(), source, tags, options }
            }
        }
        "code" | "code-block" | "sourcecode" => BlockKind::CodeBlock {
            language: (!argument.is_empty()).then(|| argument.to_string()),
            source: content_text(),
        },
        "bibliography" => BlockKind::Bibliography,
        _ if ADMONITIONS.contains(&name) => {
            if name == "admonition" && argument.is_empty() {
                diags.push(missing_arg("a title"));
            }
            let title = if argument.is_empty() {
                None
            } else {
                let (t, d) = parse_inlines(argument, span.start_line);
                diags.extend(d);
                Some(t)
            };
            let mut parser = BlockParser::default();
            let inner = parser.parse(content);
            diags.extend(parser.diags);
            BlockKind::Admonition { kind: name.to_string(), title, body: inner }
        }
        _ => {
            diags.push(Diagnostic::warning(
                DiagCode::UnknownDirective,
                span,
                format!("unknown directive `{{{name}}}`; body kept as a code block"),
            ));
            BlockKind::CodeBlock { language: Some(name.to_string()), source: raw_body() }
        }
    };
    (Block::new(kind, span), diags)
}

/// Reads `[a, b]`, `["a", "b"]` or `a, b` into a list of tags.
pub(crate) fn parse_tag_list(raw: &str) -> Vec<String> {
    let t = raw.trim();
    let inner = t.strip_prefix('[').and_then(|x| x.strip_suffix(']')).unwrap_or(t);
    inner.split(',').map(|s| unquote(s.trim())).filter(|s| !s.is_empty()).collect()
}
