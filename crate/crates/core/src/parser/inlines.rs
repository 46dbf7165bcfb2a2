//! Inline parsing: emphasis via the CommonMark delimiter-run algorithm,
//! code spans, links, images, `$` math and `{role}` constructs.

use once_cell::sync::Lazy;
use regex::Regex;

use crate::ast::{plain_text, Inline, InlineKind, SourceSpan};
use crate::diagnostic::{DiagCode, Diagnostic};

/// Parses paragraph, heading or caption text. `first_line` is the file line
/// of the first character of `text`.
pub fn parse_inlines(text: &str, first_line: u32) -> (Vec<Inline>, Vec<Diagnostic>) {
    let mut parser = InlineParser::new(text, first_line);
    let inlines = parser.parse_range(0, text.len());
    (inlines, parser.diags)
}

struct Delim {
    ch: char,
    count: usize,
    orig: usize,
    can_open: bool,
    can_close: bool,
    pos: usize,
}

enum Piece {
    Node(Inline),
    Delim(Delim),
}

static ROLE_RE: Lazy<Regex> = Lazy::new(|| Regex::new(r"^\{([A-Za-z][A-Za-z0-9_:-]*)\}`").unwrap());

struct InlineParser<'a> {
    src: &'a str,
    newlines: Vec<usize>,
    first_line: u32,
    diags: Vec<Diagnostic>,
}

fn is_special(c: char) -> bool {
    matches!(c, '\\' | '`' | '{' | '$' | '!' | '[' | '*' | '_' | '\n')
}

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation() || (!c.is_alphanumeric() && !c.is_whitespace() && !c.is_control())
}

impl<'a> InlineParser<'a> {
    fn new(src: &'a str, first_line: u32) -> Self {
        let newlines = src.match_indices('\n').map(|(i, _)| i).collect();
        InlineParser { src, newlines, first_line, diags: Vec::new() }
    }

    fn line_at(&self, pos: usize) -> u32 {
        self.first_line + self.newlines.partition_point(|&n| n < pos) as u32
    }

    fn span(&self, start: usize, end: usize) -> SourceSpan {
        let last = if end > start { end - 1 } else { start };
        SourceSpan::new(self.line_at(start), self.line_at(last))
    }

    fn push_text(&self, pieces: &mut Vec<Piece>, text: &str, start: usize, end: usize) {
        let span = self.span(start, end);
        if let Some(Piece::Node(Inline { kind: InlineKind::Text(t), span: s })) = pieces.last_mut() {
            t.push_str(text);
            *s = s.to(span);
            return;
        }
        pieces.push(Piece::Node(Inline::text(text, span)));
    }

    fn parse_range(&mut self, start: usize, end: usize) -> Vec<Inline> {
        let mut pieces = Vec::new();
        let mut pos = start;
        while pos < end {
            let c = self.src[pos..].chars().next().unwrap();
            match c {
                '\\' => {
                    let next = self.src[pos + 1..end].chars().next();
                    match next {
                        Some(n) if n.is_ascii_punctuation() => {
                            self.push_text(&mut pieces, &n.to_string(), pos, pos + 1 + n.len_utf8());
                            pos += 1 + n.len_utf8();
                        }
                        _ => {
                            self.push_text(&mut pieces, "\\", pos, pos + 1);
                            pos += 1;
                        }
                    }
                }
                '`' => pos = self.code_span(&mut pieces, pos, end),
                '{' => pos = self.role(&mut pieces, pos, end),
                '$' => pos = self.math(&mut pieces, pos, end),
                '!' if self.src[pos + 1..end].starts_with('[') => match self.link(pos + 1, end, true) {
                    Some((node, next)) => {
                        pieces.push(Piece::Node(node));
                        pos = next;
                    }
                    None => {
                        self.push_text(&mut pieces, "!", pos, pos + 1);
                        pos += 1;
                    }
                },
                '[' => match self.link(pos, end, false) {
                    Some((node, next)) => {
                        pieces.push(Piece::Node(node));
                        pos = next;
                    }
                    None => {
                        self.push_text(&mut pieces, "[", pos, pos + 1);
                        pos += 1;
                    }
                },
                '*' | '_' => pos = self.delim_run(&mut pieces, c, pos, end),
                '\n' => {
                    if let Some(Piece::Node(Inline { kind: InlineKind::Text(t), .. })) = pieces.last_mut() {
                        let trimmed = t.trim_end_matches(' ').len();
                        t.truncate(trimmed);
                    }
                    self.push_text(&mut pieces, "\n", pos, pos + 1);
                    pos += 1;
                    while pos < end && self.src.as_bytes()[pos] == b' ' {
                        pos += 1;
                    }
                }
                _ => {
                    let run_end = self.src[pos..end]
                        .char_indices()
                        .find(|&(i, ch)| i > 0 && is_special(ch))
                        .map(|(i, _)| pos + i)
                        .unwrap_or(end);
                    self.push_text(&mut pieces, &self.src[pos..run_end], pos, run_end);
                    pos = run_end;
                }
            }
        }
        self.process_emphasis(pieces)
    }

    fn backtick_run(&self, pos: usize, end: usize) -> usize {
        self.src[pos..end].bytes().take_while(|&b| b == b'`').count()
    }

    /// Finds a closing backtick run of exactly `n` starting the search at
    /// `from`. Returns its start offset.
    fn find_backtick_closer(&self, from: usize, end: usize, n: usize) -> Option<usize> {
        let bytes = self.src.as_bytes();
        let mut i = from;
        while i < end {
            if bytes[i] == b'`' {
                let run = self.backtick_run(i, end);
                if run == n {
                    return Some(i);
                }
                i += run;
            } else {
                i += 1;
            }
        }
        None
    }

    fn code_span(&mut self, pieces: &mut Vec<Piece>, pos: usize, end: usize) -> usize {
        let n = self.backtick_run(pos, end);
        match self.find_backtick_closer(pos + n, end, n) {
            Some(close) => {
                let content = normalize_code(&self.src[pos + n..close]);
                pieces.push(Piece::Node(Inline::new(InlineKind::CodeSpan(content), self.span(pos, close + n))));
                close + n
            }
            None => {
                self.push_text(pieces, &self.src[pos..pos + n], pos, pos + n);
                pos + n
            }
        }
    }

    fn role(&mut self, pieces: &mut Vec<Piece>, pos: usize, end: usize) -> usize {
        let literal = |this: &mut Self, pieces: &mut Vec<Piece>| {
            this.push_text(pieces, "{", pos, pos + 1);
            pos + 1
        };
        let Some(caps) = ROLE_RE.captures(&self.src[pos..end]) else {
            return literal(self, pieces);
        };
        let name = caps[1].to_string();
        let tick = pos + caps[0].len() - 1;
        let n = self.backtick_run(tick, end);
        let Some(close) = self.find_backtick_closer(tick + n, end, n) else {
            return literal(self, pieces);
        };
        let next = close + n;
        let span = self.span(pos, next);
        let content = self.src[tick + n..close].trim();
        if content.is_empty() {
            self.diags.push(Diagnostic::warning(DiagCode::EmptyRole, span, format!("empty `{{{name}}}` role")));
            self.push_text(pieces, &self.src[pos..next], pos, next);
            return next;
        }
        let kind = match name.as_str() {
            "cite" | "cite:p" | "cite:t" => {
                let keys: Vec<String> =
                    content.split(',').map(|k| k.trim().to_string()).filter(|k| !k.is_empty()).collect();
                if keys.is_empty() {
                    self.diags.push(Diagnostic::warning(DiagCode::EmptyRole, span, "citation role has no keys"));
                    self.push_text(pieces, &self.src[pos..next], pos, next);
                    return next;
                }
                InlineKind::CiteRole(keys)
            }
            "ref" | "numref" => InlineKind::RefRole(content.to_string()),
            "eq" => InlineKind::EqRole(content.to_string()),
            "math" => InlineKind::MathInline(content.to_string()),
            _ => {
                self.diags.push(Diagnostic::warning(DiagCode::UnknownRole, span, format!("unknown role `{{{name}}}`")));
                InlineKind::CodeSpan(content.to_string())
            }
        };
        pieces.push(Piece::Node(Inline::new(kind, span)));
        next
    }

    fn math(&mut self, pieces: &mut Vec<Piece>, pos: usize, end: usize) -> usize {
        let bytes = self.src.as_bytes();
        let opens = matches!(self.src[pos + 1..end].chars().next(), Some(c) if !c.is_whitespace() && c != '$');
        if opens {
            let mut i = pos + 1;
            while i < end {
                match bytes[i] {
                    b'\\' => i += 2,
                    b'$' => {
                        let before = self.src[..i].chars().last().unwrap();
                        let after = self.src[i + 1..end].chars().next();
                        if i > pos + 1 && !before.is_whitespace() && !after.is_some_and(|c| c.is_ascii_digit()) {
                            let latex = self.src[pos + 1..i].to_string();
                            pieces.push(Piece::Node(Inline::new(InlineKind::MathInline(latex), self.span(pos, i + 1))));
                            return i + 1;
                        }
                        i += 1;
                    }
                    _ => i += 1,
                }
            }
        }
        self.push_text(pieces, "$", pos, pos + 1);
        pos + 1
    }

    /// Bracket matching that skips escapes and code spans.
    fn matching_bracket(&self, open: usize, end: usize) -> Option<usize> {
        let bytes = self.src.as_bytes();
        let mut depth = 0usize;
        let mut i = open;
        while i < end {
            match bytes[i] {
                b'\\' => i += 2,
                b'`' => {
                    let n = self.backtick_run(i, end);
                    i = match self.find_backtick_closer(i + n, end, n) {
                        Some(c) => c + n,
                        None => i + n,
                    };
                }
                b'[' => {
                    depth += 1;
                    i += 1;
                }
                b']' => {
                    depth -= 1;
                    if depth == 0 {
                        return Some(i);
                    }
                    i += 1;
                }
                _ => i += 1,
            }
        }
        None
    }

    /// Parses `(destination "optional title")` starting at `open` (the `(`).
    fn destination(&self, open: usize, end: usize) -> Option<(String, usize)> {
        let s = &self.src[open..end];
        let bytes = s.as_bytes();
        if bytes.first() != Some(&b'(') {
            return None;
        }
        let mut i = 1;
        let skip_ws = |i: &mut usize| {
            let mut newlines = 0;
            while *i < bytes.len() && matches!(bytes[*i], b' ' | b'\t' | b'\n') {
                if bytes[*i] == b'\n' {
                    newlines += 1;
                }
                *i += 1;
            }
            newlines <= 1
        };
        if !skip_ws(&mut i) {
            return None;
        }
        let mut url = String::new();
        if bytes.get(i) == Some(&b'<') {
            i += 1;
            loop {
                match bytes.get(i)? {
                    b'>' => {
                        i += 1;
                        break;
                    }
                    b'\n' | b'<' => return None,
                    b'\\' if bytes.get(i + 1).is_some_and(|b| b.is_ascii_punctuation()) => {
                        url.push(bytes[i + 1] as char);
                        i += 2;
                    }
                    _ => {
                        let ch = s[i..].chars().next()?;
                        url.push(ch);
                        i += ch.len_utf8();
                    }
                }
            }
        } else {
            let mut depth = 0i32;
            while i < bytes.len() {
                let b = bytes[i];
                if b == b'\\' && bytes.get(i + 1).is_some_and(|b| b.is_ascii_punctuation()) {
                    url.push(bytes[i + 1] as char);
                    i += 2;
                    continue;
                }
                if b.is_ascii_whitespace() || b.is_ascii_control() {
                    break;
                }
                if b == b'(' {
                    depth += 1;
                } else if b == b')' {
                    if depth == 0 {
                        break;
                    }
                    depth -= 1;
                }
                let ch = s[i..].chars().next()?;
                url.push(ch);
                i += ch.len_utf8();
            }
            if depth != 0 {
                return None;
            }
        }
        let before_title = i;
        if !skip_ws(&mut i) {
            return None;
        }
        if i > before_title {
            if let Some(&q) = bytes.get(i) {
                let close = match q {
                    b'"' => Some(b'"'),
                    b'\'' => Some(b'\''),
                    b'(' => Some(b')'),
                    _ => None,
                };
                if let Some(close) = close {
                    i += 1;
                    while i < bytes.len() && bytes[i] != close {
                        i += if bytes[i] == b'\\' { 2 } else { 1 };
                    }
                    if i >= bytes.len() {
                        return None;
                    }
                    i += 1;
                    if !skip_ws(&mut i) {
                        return None;
                    }
                }
            }
        }
        (bytes.get(i) == Some(&b')')).then(|| (url, open + i + 1))
    }

    fn link(&mut self, open: usize, end: usize, image: bool) -> Option<(Inline, usize)> {
        let close = self.matching_bracket(open, end)?;
        let (url, next) = self.destination(close + 1, end)?;
        let saved = self.diags.len();
        let inner = self.parse_range(open + 1, close);
        let start = if image { open - 1 } else { open };
        let span = self.span(start, next);
        if image {
            return Some((Inline::new(InlineKind::Image { url, alt: plain_text(&inner) }, span), next));
        }
        let mut nested = false;
        for i in &inner {
            i.walk(&mut |x| nested |= matches!(x.kind, InlineKind::Link { .. }));
        }
        if nested {
            // Links may not contain links; the outer brackets stay literal.
            self.diags.truncate(saved);
            return None;
        }
        Some((Inline::new(InlineKind::Link { url, content: inner }, span), next))
    }

    fn delim_run(&mut self, pieces: &mut Vec<Piece>, ch: char, pos: usize, end: usize) -> usize {
        let count = self.src[pos..end].chars().take_while(|&c| c == ch).count();
        let after = pos + count;
        let prev = self.src[..pos].chars().last();
        let next = self.src[after..].chars().next();
        let prev_ws = prev.is_none_or(char::is_whitespace);
        let next_ws = next.is_none_or(char::is_whitespace);
        let prev_punct = prev.is_some_and(is_punct);
        let next_punct = next.is_some_and(is_punct);
        let left = !next_ws && (!next_punct || prev_ws || prev_punct);
        let right = !prev_ws && (!prev_punct || next_ws || next_punct);
        let (can_open, can_close) = if ch == '*' {
            (left, right)
        } else {
            (left && (!right || prev_punct), right && (!left || next_punct))
        };
        pieces.push(Piece::Delim(Delim { ch, count, orig: count, can_open, can_close, pos }));
        after
    }

    fn process_emphasis(&self, mut pieces: Vec<Piece>) -> Vec<Inline> {
        let mut closer_idx = 0;
        while closer_idx < pieces.len() {
            let (c_ch, c_orig, c_open) = match &pieces[closer_idx] {
                Piece::Delim(d) if d.can_close && d.count > 0 => (d.ch, d.orig, d.can_open),
                _ => {
                    closer_idx += 1;
                    continue;
                }
            };
            let opener_idx = (0..closer_idx).rev().find(|&j| match &pieces[j] {
                Piece::Delim(o) if o.ch == c_ch && o.can_open && o.count > 0 => {
                    let both = o.can_close || c_open;
                    let sum3 = (o.orig + c_orig) % 3 == 0;
                    !(both && sum3 && !(o.orig % 3 == 0 && c_orig % 3 == 0))
                }
                _ => false,
            });
            let Some(j) = opener_idx else {
                closer_idx += 1;
                continue;
            };
            let (o_count, o_pos) = match &pieces[j] {
                Piece::Delim(o) => (o.count, o.pos),
                _ => unreachable!(),
            };
            let (c_count, c_pos) = match &pieces[closer_idx] {
                Piece::Delim(c) => (c.count, c.pos),
                _ => unreachable!(),
            };
            let used = if o_count >= 2 && c_count >= 2 { 2 } else { 1 };
            let inner: Vec<Piece> = pieces.drain(j + 1..closer_idx).collect();
            let inner = self.finish(inner);
            let span = self.span(o_pos + o_count - used, c_pos + used);
            let node = if used == 2 { InlineKind::Strong(inner) } else { InlineKind::Emph(inner) };
            pieces.insert(j + 1, Piece::Node(Inline::new(node, span)));
            let mut closer = j + 2;
            if let Piece::Delim(o) = &mut pieces[j] {
                o.count -= used;
                if o.count == 0 {
                    pieces.remove(j);
                    closer -= 1;
                }
            }
            if let Piece::Delim(c) = &mut pieces[closer] {
                c.count -= used;
                c.pos += used;
                if c.count == 0 {
                    pieces.remove(closer);
                }
            }
            closer_idx = closer;
        }
        self.finish(pieces)
    }

    /// Turns leftover delimiters into text and merges adjacent text nodes.
    fn finish(&self, pieces: Vec<Piece>) -> Vec<Inline> {
        let mut out: Vec<Inline> = Vec::with_capacity(pieces.len());
        for piece in pieces {
            let node = match piece {
                Piece::Node(n) => n,
                Piece::Delim(d) => {
                    if d.count == 0 {
                        continue;
                    }
                    Inline::text(d.ch.to_string().repeat(d.count), self.span(d.pos, d.pos + d.count))
                }
            };
            if let (Some(Inline { kind: InlineKind::Text(prev), span }), InlineKind::Text(t)) = (out.last_mut(), &node.kind) {
                prev.push_str(t);
                *span = span.to(node.span);
                continue;
            }
            out.push(node);
        }
        out
    }
}

fn normalize_code(raw: &str) -> String {
    let s = raw.replace('\n', " ");
    if s.len() >= 2 && s.starts_with(' ') && s.ends_with(' ') && !s.chars().all(|c| c == ' ') {
        s[1..s.len() - 1].to_string()
    } else {
        s
    }
}
