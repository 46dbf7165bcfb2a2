//! Block structure: headings, fences and directives, math, tables, quotes,
//! lists, thematic breaks and paragraphs.

use once_cell::sync::Lazy;
use regex::Regex;

use super::cells::{body_lines, fence_closes, fence_open};
use super::directive::parse_directive_lines;
use super::inlines::parse_inlines;
use crate::ast::{is_valid_label, Block, BlockKind, Inline, SourceSpan};
use crate::diagnostic::{DiagCode, Diagnostic};

/// A source line with its 1-based file line number. Container markers
/// (`>`, list indentation) are already stripped from `text`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Line {
    pub no: u32,
    pub text: String,
}

impl Line {
    pub fn is_blank(&self) -> bool {
        self.text.trim().is_empty()
    }

    fn indent(&self) -> usize {
        indent_of(&self.text)
    }
}

fn indent_of(text: &str) -> usize {
    text.len() - text.trim_start_matches(' ').len()
}

pub(crate) fn to_lines(text: &str, first_line: u32) -> Vec<Line> {
    body_lines(text)
        .into_iter()
        .enumerate()
        .map(|(i, l)| Line { no: first_line + i as u32, text: expand_leading_tabs(l) })
        .collect()
}

fn expand_leading_tabs(line: &str) -> String {
    if !line.starts_with([' ', '\t']) || !line.contains('\t') {
        return line.to_string();
    }
    let mut out = String::with_capacity(line.len() + 8);
    let mut col = 0;
    let mut rest = line;
    while let Some(c) = rest.chars().next() {
        match c {
            ' ' => {
                out.push(' ');
                col += 1;
            }
            '\t' => {
                let n = 4 - col % 4;
                out.extend(std::iter::repeat_n(' ', n));
                col += n;
            }
            _ => break,
        }
        rest = &rest[1..];
    }
    out.push_str(rest);
    out
}

/// Parses one fragment's body. `first_line` is the file line of the first
/// line of `text`.
pub fn parse_blocks(text: &str, first_line: u32) -> (Vec<Block>, Vec<Diagnostic>) {
    let mut parser = BlockParser::default();
    let blocks = parser.parse(&to_lines(text, first_line));
    (blocks, parser.diags)
}

static LABEL_TARGET_RE: Lazy<Regex> = Lazy::new(|| Regex::new(r"^\(([^()\s]*)\)=\s*$").unwrap());
static ATX_RE: Lazy<Regex> = Lazy::new(|| Regex::new(r"^(#{1,6})(?:[ \t]+(.*?))?[ \t]*$").unwrap());
static ATX_CLOSE_RE: Lazy<Regex> = Lazy::new(|| Regex::new(r"(?:^|[ \t]+)#+[ \t]*$").unwrap());
static DIRECTIVE_RE: Lazy<Regex> = Lazy::new(|| Regex::new(r"^\{([A-Za-z][\w-]*)\}\s*(.*)$").unwrap());
static TABLE_SEP_RE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"^\|?\s*:?-+:?\s*(\|\s*:?-+:?\s*)*\|?\s*$").unwrap());
static MATH_LABEL_RE: Lazy<Regex> = Lazy::new(|| Regex::new(r"^\s*\(([^()\s]+)\)\s*$").unwrap());

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct ListMarker {
    bullet: Option<char>,
    start: Option<u64>,
    delim: char,
    content_offset: usize,
    empty: bool,
}

impl ListMarker {
    fn same_list(&self, other: &ListMarker) -> bool {
        self.bullet == other.bullet && self.start.is_some() == other.start.is_some() && self.delim == other.delim
    }
}

fn list_marker(text: &str) -> Option<ListMarker> {
    let indent = indent_of(text);
    if indent > 3 {
        return None;
    }
    let rest = &text[indent..];
    let (bullet, start, delim, marker_len) = match rest.as_bytes().first()? {
        b @ (b'-' | b'+' | b'*') => (Some(*b as char), None, *b as char, 1),
        b'0'..=b'9' => {
            let digits = rest.bytes().take_while(u8::is_ascii_digit).count();
            if digits > 9 {
                return None;
            }
            let delim = *rest.as_bytes().get(digits)?;
            if delim != b'.' && delim != b')' {
                return None;
            }
            (None, Some(rest[..digits].parse().ok()?), delim as char, digits + 1)
        }
        _ => return None,
    };
    let after = &rest[marker_len..];
    if after.trim().is_empty() {
        return Some(ListMarker { bullet, start, delim, content_offset: indent + marker_len + 1, empty: true });
    }
    if !after.starts_with(' ') {
        return None;
    }
    let mut spaces = indent_of(after);
    if spaces >= 5 {
        spaces = 1;
    }
    Some(ListMarker { bullet, start, delim, content_offset: indent + marker_len + spaces, empty: false })
}

fn thematic_break(text: &str) -> bool {
    if indent_of(text) > 3 {
        return false;
    }
    let t = text.trim();
    let Some(c) = t.chars().next().filter(|c| matches!(c, '*' | '-' | '_')) else {
        return false;
    };
    t.chars().all(|x| x == c || x == ' ' || x == '\t') && t.chars().filter(|&x| x == c).count() >= 3
}

fn atx_heading(text: &str) -> Option<(u8, String)> {
    if indent_of(text) > 3 {
        return None;
    }
    let caps = ATX_RE.captures(text.trim_start())?;
    let level = caps[1].len() as u8;
    let raw = caps.get(2).map(|m| m.as_str()).unwrap_or("");
    let content = ATX_CLOSE_RE.replace(raw, "");
    Some((level, content.trim().to_string()))
}

/// Lines that end a paragraph without a blank line.
fn interrupts_paragraph(text: &str) -> bool {
    if indent_of(text) > 3 {
        return false;
    }
    let t = text.trim_start();
    if atx_heading(text).is_some()
        || fence_open(text).is_some()
        || t.starts_with("$$")
        || t.starts_with('>')
        || thematic_break(text)
        || LABEL_TARGET_RE.is_match(t)
    {
        return true;
    }
    match list_marker(text) {
        Some(m) => !m.empty && m.start.is_none_or(|s| s == 1),
        None => false,
    }
}

fn split_row(line: &str) -> Vec<String> {
    let mut t = line.trim();
    t = t.strip_prefix('|').unwrap_or(t);
    if t.ends_with('|') && !t.ends_with("\\|") {
        t = &t[..t.len() - 1];
    }
    let mut cells = Vec::new();
    let mut cur = String::new();
    let mut chars = t.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '\\' if chars.peek() == Some(&'|') => {
                cur.push('|');
                chars.next();
            }
            '|' => cells.push(std::mem::take(&mut cur).trim().to_string()),
            _ => cur.push(c),
        }
    }
    cells.push(cur.trim().to_string());
    cells
}

#[derive(Default)]
pub(crate) struct BlockParser {
    pub diags: Vec<Diagnostic>,
}

impl BlockParser {
    fn inlines(&mut self, text: &str, line: u32) -> Vec<Inline> {
        let (inl, diags) = parse_inlines(text, line);
        self.diags.extend(diags);
        inl
    }

    pub fn parse(&mut self, lines: &[Line]) -> Vec<Block> {
        let mut blocks = Vec::new();
        let mut pending: Option<(String, u32)> = None;
        let mut i = 0;
        while i < lines.len() {
            let line = &lines[i];
            if line.is_blank() {
                i += 1;
                continue;
            }
            let t = line.text.trim_start();
            if line.indent() <= 3 {
                if let Some(caps) = LABEL_TARGET_RE.captures(t) {
                    if let Some((old, no)) = pending.take() {
                        self.unattached(&old, no);
                    }
                    let label = caps[1].to_string();
                    if is_valid_label(&label) {
                        pending = Some((label, line.no));
                    } else {
                        self.diags.push(Diagnostic::warning(
                            DiagCode::BadLabel,
                            SourceSpan::line(line.no),
                            format!("label `{label}` must match [a-zA-Z0-9_-]+"),
                        ));
                    }
                    i += 1;
                    continue;
                }
            }
            let (mut block, next) = self.block_at(lines, i);
            i = next;
            if let Some((label, no)) = pending.take() {
                self.attach_label(&mut block, label, no);
            }
            blocks.push(block);
        }
        if let Some((label, no)) = pending {
            self.unattached(&label, no);
        }
        blocks
    }

    fn unattached(&mut self, label: &str, line: u32) {
        self.diags.push(Diagnostic::warning(
            DiagCode::UnattachedLabel,
            SourceSpan::line(line),
            format!("label `{label}` is not followed by a heading, figure or math block"),
        ));
    }

    fn attach_label(&mut self, block: &mut Block, label: String, line: u32) {
        match &mut block.kind {
            BlockKind::Heading { label: slot, .. }
            | BlockKind::MathBlock { label: slot, .. }
            | BlockKind::Figure { label: slot, .. }
                if slot.is_none() =>
            {
                *slot = Some(label)
            }
            _ => self.unattached(&label, line),
        }
    }

    /// Parses the block starting at non-blank line `i`; returns it and the
    /// index of the first unconsumed line.
    fn block_at(&mut self, lines: &[Line], i: usize) -> (Block, usize) {
        let line = &lines[i];
        if line.indent() <= 3 {
            let t = line.text.trim_start();
            if let Some((level, content)) = atx_heading(&line.text) {
                let content = self.inlines(&content, line.no);
                return (Block::new(BlockKind::Heading { level, content, label: None }, SourceSpan::line(line.no)), i + 1);
            }
            if fence_open(&line.text).is_some() {
                return self.fenced(lines, i);
            }
            if t.starts_with("$$") {
                return self.math(lines, i);
            }
            if let Some(r) = self.table(lines, i) {
                return r;
            }
            if t.starts_with('>') {
                return self.block_quote(lines, i);
            }
            if thematic_break(&line.text) {
                return (Block::new(BlockKind::ThematicBreak, SourceSpan::line(line.no)), i + 1);
            }
            if let Some(marker) = list_marker(&line.text) {
                return self.list(lines, i, marker);
            }
        }
        self.paragraph(lines, i)
    }

    fn paragraph(&mut self, lines: &[Line], i: usize) -> (Block, usize) {
        let mut j = i + 1;
        while j < lines.len() && !lines[j].is_blank() && !interrupts_paragraph(&lines[j].text) {
            j += 1;
        }
        let text = lines[i..j].iter().map(|l| l.text.trim()).collect::<Vec<_>>().join("\n");
        let content = self.inlines(&text, lines[i].no);
        (Block::new(BlockKind::Paragraph(content), SourceSpan::new(lines[i].no, lines[j - 1].no)), j)
    }

    fn fenced(&mut self, lines: &[Line], i: usize) -> (Block, usize) {
        let (fence, info) = fence_open(&lines[i].text).unwrap();
        let info = info.to_string();
        let mut j = i + 1;
        let mut closed = false;
        while j < lines.len() {
            if fence_closes(&lines[j].text, &fence) {
                closed = true;
                break;
            }
            j += 1;
        }
        let body: Vec<Line> = lines[i + 1..j]
            .iter()
            .map(|l| {
                let strip = l.indent().min(fence.indent);
                Line { no: l.no, text: l.text[strip..].to_string() }
            })
            .collect();
        let end_line = if closed { lines[j].no } else { lines[lines.len() - 1].no };
        let span = SourceSpan::new(lines[i].no, end_line);
        if !closed {
            self.diags.push(Diagnostic::error(
                DiagCode::UnclosedFence,
                SourceSpan::line(lines[i].no),
                "code fence is never closed; the rest of the file is treated as code",
            ));
        }
        let next = if closed { j + 1 } else { j };
        if let Some(caps) = DIRECTIVE_RE.captures(&info) {
            let (block, diags) = parse_directive_lines(&caps[1], caps[2].trim(), &body, span);
            self.diags.extend(diags);
            return (block, next);
        }
        let language = info.split_whitespace().next().map(unescape);
        let source = body.iter().map(|l| l.text.as_str()).collect::<Vec<_>>().join("\n");
        (Block::new(BlockKind::CodeBlock { language, source }, span), next)
    }

    fn math(&mut self, lines: &[Line], i: usize) -> (Block, usize) {
        let first = lines[i].text.trim()[2..].to_string();
        // `$$ ... $$` on one line
        if let Some(end) = first.find("$$") {
            let latex = first[..end].trim().to_string();
            let label = self.math_label(&first[end + 2..], lines[i].no);
            return (Block::new(BlockKind::MathBlock { latex, label }, SourceSpan::line(lines[i].no)), i + 1);
        }
        let mut parts = Vec::new();
        if !first.trim().is_empty() {
            parts.push(first.trim().to_string());
        }
        let mut j = i + 1;
        while j < lines.len() {
            let text = &lines[j].text;
            if let Some(end) = text.find("$$") {
                let before = text[..end].trim();
                if !before.is_empty() {
                    parts.push(before.to_string());
                }
                let label = self.math_label(&text[end + 2..], lines[j].no);
                let latex = parts.join("\n");
                return (Block::new(BlockKind::MathBlock { latex, label }, SourceSpan::new(lines[i].no, lines[j].no)), j + 1);
            }
            parts.push(text.trim_end().to_string());
            j += 1;
        }
        self.diags.push(Diagnostic::error(
            DiagCode::UnclosedFence,
            SourceSpan::line(lines[i].no),
            "`$$` math block is never closed",
        ));
        let span = SourceSpan::new(lines[i].no, lines[lines.len() - 1].no);
        (Block::new(BlockKind::MathBlock { latex: parts.join("\n").trim().to_string(), label: None }, span), lines.len())
    }

    fn math_label(&mut self, trailer: &str, line: u32) -> Option<String> {
        if trailer.trim().is_empty() {
            return None;
        }
        match MATH_LABEL_RE.captures(trailer) {
            Some(c) if is_valid_label(&c[1]) => Some(c[1].to_string()),
            _ => {
                self.diags.push(Diagnostic::warning(
                    DiagCode::BadLabel,
                    SourceSpan::line(line),
                    format!("unrecognized text after `$$`: `{}`", trailer.trim()),
                ));
                None
            }
        }
    }

    fn table(&mut self, lines: &[Line], i: usize) -> Option<(Block, usize)> {
        let head = &lines[i];
        let sep = lines.get(i + 1)?;
        if !head.text.contains('|') || !TABLE_SEP_RE.is_match(sep.text.trim()) || !sep.text.contains(['|', '-']) {
            return None;
        }
        let header_cells = split_row(&head.text);
        let width = split_row(&sep.text).len();
        if header_cells.len() != width {
            return None;
        }
        let header = header_cells.iter().map(|c| self.inlines(c, head.no)).collect();
        let mut rows = Vec::new();
        let mut j = i + 2;
        while j < lines.len() && !lines[j].is_blank() && lines[j].text.contains('|') && !interrupts_paragraph(&lines[j].text) {
            let mut cells = split_row(&lines[j].text);
            cells.resize(width, String::new());
            rows.push(cells.iter().map(|c| self.inlines(c, lines[j].no)).collect());
            j += 1;
        }
        Some((Block::new(BlockKind::Table { header, rows }, SourceSpan::new(head.no, lines[j - 1].no)), j))
    }

    fn block_quote(&mut self, lines: &[Line], i: usize) -> (Block, usize) {
        let mut inner = Vec::new();
        let mut j = i;
        while j < lines.len() {
            let line = &lines[j];
            let t = line.text.trim_start();
            if line.indent() <= 3 && t.starts_with('>') {
                let rest = &t[1..];
                let rest = rest.strip_prefix(' ').unwrap_or(rest);
                inner.push(Line { no: line.no, text: rest.to_string() });
            } else if !line.is_blank()
                && inner.last().is_some_and(|l: &Line| !l.is_blank())
                && !interrupts_paragraph(&line.text)
            {
                inner.push(Line { no: line.no, text: t.to_string() });
            } else {
                break;
            }
            j += 1;
        }
        let body = self.parse(&inner);
        (Block::new(BlockKind::BlockQuote(body), SourceSpan::new(lines[i].no, lines[j - 1].no)), j)
    }

    fn list(&mut self, lines: &[Line], i: usize, first: ListMarker) -> (Block, usize) {
        let mut items = Vec::new();
        let mut loose = false;
        let mut marker = first;
        let first_no = lines[i].no;
        let mut i = i;
        let mut last_line = lines[i].no;
        loop {
            let head = &lines[i];
            let content = head.text.get(marker.content_offset..).unwrap_or("").to_string();
            let mut item = vec![Line { no: head.no, text: content }];
            let mut j = i + 1;
            while j < lines.len() {
                let l = &lines[j];
                if l.is_blank() {
                    item.push(Line { no: l.no, text: String::new() });
                } else if l.indent() >= marker.content_offset {
                    item.push(Line { no: l.no, text: l.text[marker.content_offset..].to_string() });
                } else if item.last().is_some_and(|x| !x.is_blank())
                    && !interrupts_paragraph(&l.text)
                    && list_marker(&l.text).is_none()
                {
                    item.push(Line { no: l.no, text: l.text.trim_start().to_string() });
                } else {
                    break;
                }
                j += 1;
            }
            let mut trailing_blank = false;
            while item.len() > 1 && item.last().is_some_and(Line::is_blank) {
                item.pop();
                trailing_blank = true;
            }
            last_line = item.last().map_or(last_line, |l| l.no);
            let blocks = self.parse(&item);
            if blocks.windows(2).any(|w| w[1].span.start_line > w[0].span.end_line + 1) {
                loose = true;
            }
            items.push(blocks);
            match lines.get(j).and_then(|l| list_marker(&l.text).filter(|_| !thematic_break(&l.text))) {
                Some(next) if next.same_list(&marker) => {
                    loose |= trailing_blank;
                    marker = next;
                    i = j;
                }
                _ => {
                    let span = SourceSpan::new(first_no, last_line);
                    return (Block::new(BlockKind::List { start: first.start, tight: !loose, items }, span), j);
                }
            }
        }
    }
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '\\' && chars.peek().is_some_and(|n| n.is_ascii_punctuation()) {
            out.push(chars.next().unwrap());
        } else {
            out.push(c);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::InlineKind;

    fn parse(text: &str) -> Vec<Block> {
        parse_blocks(text, 1).0
    }

    fn texts(inl: &[Inline]) -> String {
        crate::ast::plain_text(inl)
    }

    #[test]
    fn atx_heading_block() {
        let b = parse("# Hello");
        assert_eq!(b.len(), 1);
        match &b[0].kind {
            BlockKind::Heading { level, content, label } => {
                assert_eq!(*level, 1);
                assert_eq!(content[0].kind, InlineKind::Text("Hello".into()));
                assert!(label.is_none());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn emphasis_paragraph() {
        let b = parse("*foo bar*");
        match &b[0].kind {
            BlockKind::Paragraph(inl) => {
                assert_eq!(inl.len(), 1);
                assert!(matches!(&inl[0].kind, InlineKind::Emph(c) if texts(c) == "foo bar"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn label_attaches_to_heading() {
        let b = parse("(sec-x)=\n# X");
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].label(), Some("sec-x"));
        assert_eq!(b[0].span, SourceSpan::line(2));
    }

    #[test]
    fn label_before_paragraph_warns() {
        let (b, d) = parse_blocks("(lbl)=\ntext", 1);
        assert_eq!(b.len(), 1);
        assert_eq!(d[0].code, DiagCode::UnattachedLabel);
    }

    #[test]
    fn code_block_and_directive() {
        let b = parse("```python\nx = 1\n```\n\n```{math}\n:label: eq1\nE=mc^2\n```");
        assert_eq!(b[0].kind, BlockKind::CodeBlock { language: Some("python".into()), source: "x = 1".into() });
        assert_eq!(b[1].kind, BlockKind::MathBlock { latex: "E=mc^2".into(), label: Some("eq1".into()) });
        assert_eq!(b[1].span, SourceSpan::new(5, 8));
    }

    #[test]
    fn dollar_math_forms() {
        let b = parse("$$ a+b $$ (eq-a)\n\n$$\nx\ny\n$$");
        assert_eq!(b[0].kind, BlockKind::MathBlock { latex: "a+b".into(), label: Some("eq-a".into()) });
        assert_eq!(b[1].kind, BlockKind::MathBlock { latex: "x\ny".into(), label: None });
    }

    #[test]
    fn pipe_table() {
        let b = parse("| a | b |\n|---|:-:|\n| 1 | 2 |\n| 3 |");
        match &b[0].kind {
            BlockKind::Table { header, rows } => {
                assert_eq!(header.len(), 2);
                assert_eq!(rows.len(), 2);
                assert!(rows[1][1].is_empty());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn table_requires_separator() {
        let b = parse("| a | b |\n| 1 | 2 |");
        assert!(matches!(b[0].kind, BlockKind::Paragraph(_)));
    }

    #[test]
    fn lists_tight_and_loose() {
        let b = parse("- a\n- b\n\n1. x\n\n2. y");
        assert_eq!(b.len(), 2, "{b:?}");
        assert!(matches!(&b[0].kind, BlockKind::List { start: None, tight: true, items } if items.len() == 2));
        assert!(matches!(&b[1].kind, BlockKind::List { start: Some(1), tight: false, items } if items.len() == 2));
    }

    #[test]
    fn nested_list() {
        let b = parse("- a\n  - b\n  - c\n- d");
        match &b[0].kind {
            BlockKind::List { items, tight, .. } => {
                assert!(tight);
                assert_eq!(items.len(), 2);
                assert!(matches!(&items[0][1].kind, BlockKind::List { items, .. } if items.len() == 2));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn block_quote_with_lazy_line() {
        let b = parse("> a\nb\n\nc");
        assert_eq!(b.len(), 2);
        match &b[0].kind {
            BlockKind::BlockQuote(inner) => assert!(matches!(&inner[0].kind, BlockKind::Paragraph(p) if texts(p) == "a\nb")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn thematic_breaks() {
        assert!(thematic_break("***"));
        assert!(thematic_break(" - - -"));
        assert!(!thematic_break("--"));
        assert!(!thematic_break("**a"));
        assert!(matches!(parse("* * *")[0].kind, BlockKind::ThematicBreak));
    }

    #[test]
    fn heading_closing_sequence() {
        assert_eq!(atx_heading("## foo ##"), Some((2, "foo".into())));
        assert_eq!(atx_heading("#5 bolt"), None);
        assert_eq!(atx_heading("#"), Some((1, String::new())));
    }

    #[test]
    fn unclosed_fence_reports() {
        let (b, d) = parse_blocks("```\ncode", 3);
        assert_eq!(d[0].code, DiagCode::UnclosedFence);
        assert_eq!(d[0].span.start_line, 3);
        assert!(matches!(&b[0].kind, BlockKind::CodeBlock { source, .. } if source == "code"));
    }

    #[test]
    fn paragraph_interrupted_by_heading() {
        let b = parse("text\n# H\nmore");
        assert_eq!(b.len(), 3);
        assert_eq!(b[2].span, SourceSpan::line(3));
    }
}
