//! Serializes blocks back to plain markdown, as used in notebook cells.
//! Citations become author-year text, internal links become their text,
//! and figures get their "Figure N: " caption prefix.

use crate::ast::{Block, BlockKind, Inline, InlineKind};
use crate::bibliography::CitationMap;
use crate::html::{asset_path, is_external};
use crate::xref::LabelTable;

#[derive(Debug, Clone, Copy, Default)]
pub struct MarkdownContext<'a> {
    pub source_name: &'a str,
    pub labels: Option<&'a LabelTable>,
    pub citations: Option<&'a CitationMap>,
    /// Point local figure and image paths at `assets/...`.
    pub rewrite_assets: bool,
}

impl MarkdownContext<'_> {
    pub fn blocks(&self, blocks: &[Block]) -> String {
        let parts: Vec<String> = blocks.iter().map(|b| self.block(b)).collect();
        parts.join("\n\n")
    }

    pub fn block(&self, block: &Block) -> String {
        match &block.kind {
            BlockKind::Heading { level, content, .. } => {
                format!("{} {}", "#".repeat(*level as usize), self.inlines(content))
            }
            BlockKind::Paragraph(content) => self.inlines(content),
            BlockKind::CodeBlock { language, source } => fenced(language.as_deref().unwrap_or(""), source),
            BlockKind::CodeCell { language, source, .. } => fenced(language, source),
            BlockKind::MathBlock { latex, .. } => format!("$$\n{latex}\n$$"),
            BlockKind::Figure { target, alt, caption, .. } => {
                let number = self.labels.and_then(|t| t.number_of(self.source_name, block));
                let caption = self.inlines(caption);
                let caption = match number {
                    Some(n) if caption.is_empty() => format!("Figure {n}"),
                    Some(n) => format!("Figure {n}: {caption}"),
                    None => caption,
                };
                let image = format!("![{}]({})", escape(alt, false), self.asset(target));
                if caption.is_empty() {
                    image
                } else {
                    format!("{image}\n\n{caption}")
                }
            }
            BlockKind::Admonition { kind, title, body } => {
                let title = match title {
                    Some(t) => self.inlines(t),
                    None => {
                        let mut c = kind.chars();
                        c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
                    }
                };
                let mut text = format!("**{title}**");
                if !body.is_empty() {
                    text.push_str("\n\n");
                    text.push_str(&self.blocks(body));
                }
                prefix_lines(&text, "> ", "> ")
            }
            BlockKind::Bibliography => match self.citations {
                Some(c) if !c.references.is_empty() => {
                    let items: Vec<String> =
                        c.references.iter().map(|r| format!("- {}", r.render(|t| format!("*{}*", escape(t, false))))).collect();
                    items.join("\n")
                }
                _ => String::new(),
            },
            BlockKind::List { start, tight, items } => {
                let sep = if *tight { "\n" } else { "\n\n" };
                let rendered: Vec<String> = items
                    .iter()
                    .enumerate()
                    .map(|(i, item)| {
                        let marker = match start {
                            Some(n) => format!("{}. ", n + i as u64),
                            None => "- ".to_string(),
                        };
                        let indent = " ".repeat(marker.len());
                        let body = if *tight {
                            let parts: Vec<String> = item.iter().map(|b| self.block(b)).collect();
                            parts.join("\n")
                        } else {
                            self.blocks(item)
                        };
                        prefix_lines(&body, &marker, &indent)
                    })
                    .collect();
                rendered.join(sep)
            }
            BlockKind::BlockQuote(body) => prefix_lines(&self.blocks(body), "> ", "> "),
            BlockKind::Table { header, rows } => {
                let row = |cells: &[Vec<Inline>]| {
                    let cells: Vec<String> = cells.iter().map(|c| self.inlines(c).replace('|', "\\|")).collect();
                    format!("| {} |", cells.join(" | "))
                };
                let mut lines = vec![row(header), format!("|{}", " --- |".repeat(header.len()))];
                lines.extend(rows.iter().map(|r| row(r)));
                lines.join("\n")
            }
            BlockKind::ThematicBreak => "***".to_string(),
        }
    }

    fn asset(&self, url: &str) -> String {
        match asset_path(url) {
            Some(p) if self.rewrite_assets => p,
            _ => url.to_string(),
        }
    }

    pub fn inlines(&self, inlines: &[Inline]) -> String {
        let mut out = String::new();
        for inline in inlines {
            self.inline(inline, &mut out);
        }
        out
    }

    fn inline(&self, inline: &Inline, out: &mut String) {
        match &inline.kind {
            InlineKind::Text(t) => {
                for (i, line) in t.split('\n').enumerate() {
                    if i > 0 {
                        out.push('\n');
                    }
                    out.push_str(&escape(line, out.is_empty() || out.ends_with('\n')));
                }
            }
            InlineKind::Emph(c) => {
                out.push('*');
                out.push_str(&self.inlines(c));
                out.push('*');
            }
            InlineKind::Strong(c) => {
                out.push_str("**");
                out.push_str(&self.inlines(c));
                out.push_str("**");
            }
            InlineKind::CodeSpan(code) => out.push_str(&code_span(code)),
            InlineKind::Link { url, content } => {
                if is_internal(url) {
                    out.push_str(&self.inlines(content));
                } else {
                    out.push_str(&format!("[{}]({})", self.inlines(content), url));
                }
            }
            InlineKind::Image { url, alt } => out.push_str(&format!("![{}]({})", escape(alt, false), self.asset(url))),
            InlineKind::MathInline(latex) => out.push_str(&format!("${latex}$")),
            InlineKind::CiteRole(keys) => match self.citations {
                Some(c) => out.push_str(&escape(&c.inline_text(keys), false)),
                None => out.push_str(&escape(&keys.join(", "), false)),
            },
            InlineKind::RefRole(_) | InlineKind::EqRole(_) => out.push_str("??"),
        }
    }
}

/// Links to another page of the build or to an anchor on this one.
fn is_internal(url: &str) -> bool {
    if is_external(url) {
        return false;
    }
    match url.split_once('#') {
        Some((page, _)) => page.is_empty() || (page.ends_with(".html") && !page.contains('/')),
        None => false,
    }
}

fn escape(text: &str, line_start: bool) -> String {
    let mut out = String::with_capacity(text.len());
    for (i, c) in text.char_indices() {
        let block_start = line_start && i == 0 && matches!(c, '#' | '>' | '-' | '+' | '=' | '|');
        if block_start || matches!(c, '\\' | '*' | '_' | '`' | '[' | ']' | '$' | '<' | '{' | '}') {
            out.push('\\');
        }
        out.push(c);
    }
    if line_start {
        // "12. " or "3) " would start a list
        let digits = out.chars().take_while(char::is_ascii_digit).count();
        if digits > 0 && matches!(out[digits..].chars().next(), Some('.' | ')')) {
            out.insert(digits, '\\');
        }
    }
    out
}

fn code_span(code: &str) -> String {
    let longest = longest_run(code, '`');
    let ticks = "`".repeat(longest + 1);
    if code.starts_with('`') || code.ends_with('`') || (code.starts_with(' ') && code.ends_with(' ') && !code.trim().is_empty())
    {
        format!("{ticks} {code} {ticks}")
    } else {
        format!("{ticks}{code}{ticks}")
    }
}

fn fenced(language: &str, source: &str) -> String {
    let fence = "`".repeat(3.max(longest_run(source, '`') + 1));
    format!("{fence}{language}\n{source}\n{fence}")
}

fn longest_run(s: &str, ch: char) -> usize {
    let (mut best, mut cur) = (0, 0);
    for c in s.chars() {
        if c == ch {
            cur += 1;
            best = best.max(cur);
        } else {
            cur = 0;
        }
    }
    best
}

fn prefix_lines(text: &str, first: &str, rest: &str) -> String {
    let mut out = String::new();
    for (i, line) in text.split('\n').enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let p = if i == 0 { first } else { rest };
        if line.is_empty() {
            out.push_str(p.trim_end());
        } else {
            out.push_str(p);
            out.push_str(line);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_blocks;

    fn roundtrip(md: &str) -> String {
        let (blocks, _) = parse_blocks(md, 1);
        MarkdownContext::default().blocks(&blocks)
    }

    #[test]
    fn simple_constructs() {
        assert_eq!(roundtrip("# Title"), "# Title");
        assert_eq!(roundtrip("a *b* **c** `d`"), "a *b* **c** `d`");
        assert_eq!(roundtrip("$$\nx^2\n$$"), "$$\nx^2\n$$");
        assert_eq!(roundtrip("- a\n- b"), "- a\n- b");
        assert_eq!(roundtrip("> q"), "> q");
    }

    #[test]
    fn reparse_is_stable() {
        let src = "# H\n\nSome *emph* and [a link](https://x.org) with \\*stars\\*.\n\n1. one\n2. two\n\n```python\nx = 1\n```\n\n> quoted\n> text";
        let once = roundtrip(src);
        assert_eq!(roundtrip(&once), once);
        let (a, _) = parse_blocks(src, 1);
        let (b, _) = parse_blocks(&once, 1);
        let strip = |bs: &[Block]| bs.iter().map(|b| format!("{:?}", std::mem::discriminant(&b.kind))).collect::<Vec<_>>();
        assert_eq!(strip(&a), strip(&b));
    }

    #[test]
    fn escapes_line_start() {
        assert_eq!(escape("# not", true), "\\# not");
        assert_eq!(escape("1. x", true), "1\\. x");
        assert_eq!(escape("a # b", false), "a # b");
    }

    #[test]
    fn internal_links_flatten() {
        let (blocks, _) = parse_blocks("[Figure 1](#fig) and [Sec](other.html#s) and [web](https://e.org/#x)", 1);
        assert_eq!(MarkdownContext::default().blocks(&blocks), "Figure 1 and Sec and [web](https://e.org/#x)");
    }

    #[test]
    fn code_span_with_ticks() {
        assert_eq!(code_span("a`b"), "``a`b``");
        assert_eq!(code_span("`x"), "`` `x ``");
    }
}
