//! BibTeX databases, author–year citations and the sorted reference list.

use std::collections::{BTreeMap, BTreeSet};

use crate::ast::{for_each_inline, Document, InlineKind, SourceSpan};
use crate::diagnostic::{DiagCode, Diagnostic};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BibEntry {
    pub key: String,
    /// Lowercased entry type (`book`, `article`, ...).
    pub entry_type: String,
    /// Lowercased field names to values with the outer delimiters removed.
    pub fields: BTreeMap<String, String>,
    /// Database file the entry came from.
    pub file: String,
    pub span: SourceSpan,
}

impl BibEntry {
    pub fn field(&self, name: &str) -> Option<&str> {
        self.fields.get(name).map(String::as_str).filter(|v| !v.trim().is_empty())
    }

    pub fn authors(&self) -> Vec<Name> {
        self.field("author").map(split_names).unwrap_or_default()
    }

    pub fn year(&self) -> String {
        self.field("year").map(|y| strip_latex(y).trim().to_string()).unwrap_or_else(|| "n.d.".to_string())
    }

    pub fn anchor(&self) -> String {
        format!("ref-{}", self.key)
    }

    /// Family name used for citation text and sorting; the key when there is
    /// no author.
    pub fn sort_family(&self) -> String {
        self.authors().first().map(|n| n.family.clone()).unwrap_or_else(|| self.key.clone())
    }
}

/// A personal name split into family and given parts, braces removed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Name {
    pub family: String,
    pub given: String,
}

impl Name {
    pub fn display(&self) -> String {
        if self.given.is_empty() {
            self.family.clone()
        } else {
            format!("{} {}", self.given, self.family)
        }
    }
}

/// Splits a BibTeX name list on top-level ` and `.
pub fn split_names(field: &str) -> Vec<Name> {
    let mut names = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    let bytes = field.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'{' => depth += 1,
            b'}' => depth -= 1,
            c if depth == 0 && c.is_ascii_whitespace() => {
                let rest = &field[i..];
                let trimmed = rest.trim_start();
                let lead = rest.len() - trimmed.len();
                if trimmed.len() > 3
                    && trimmed[..3].eq_ignore_ascii_case("and")
                    && trimmed.as_bytes()[3].is_ascii_whitespace()
                {
                    names.push(parse_name(&field[start..i]));
                    i += lead + 3;
                    start = i;
                    continue;
                }
            }
            _ => {}
        }
        i += 1;
    }
    names.push(parse_name(&field[start..]));
    names.retain(|n| !n.family.is_empty());
    names
}

/// `Family, Given` or `Given Family` (family = last top-level token).
pub fn parse_name(raw: &str) -> Name {
    let raw = raw.trim();
    let parts = split_top_level(raw, |c| c == ',');
    if parts.len() > 1 {
        return Name {
            family: strip_latex(parts[0].trim()),
            given: strip_latex(parts[parts.len() - 1].trim()),
        };
    }
    let tokens = split_top_level(raw, |c| c.is_whitespace());
    let tokens: Vec<&str> = tokens.into_iter().filter(|t| !t.is_empty()).collect();
    match tokens.split_last() {
        Some((last, rest)) => Name { family: strip_latex(last), given: strip_latex(&rest.join(" ")) },
        None => Name { family: String::new(), given: String::new() },
    }
}

fn split_top_level(s: &str, is_sep: impl Fn(char) -> bool) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '{' => depth += 1,
            '}' => depth -= 1,
            c if depth == 0 && is_sep(c) => {
                out.push(&s[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

/// Combining mark for a one-character accent command such as `\'`.
fn accent_mark(cmd: char) -> Option<char> {
    Some(match cmd {
        '\'' => '\u{301}',
        '`' => '\u{300}',
        '^' => '\u{302}',
        '"' => '\u{308}',
        '~' => '\u{303}',
        '=' => '\u{304}',
        '.' => '\u{307}',
        'c' => '\u{327}',
        'v' => '\u{30C}',
        'u' => '\u{306}',
        'H' => '\u{30B}',
        _ => return None,
    })
}

fn compose(base: char, mark: char) -> String {
    const TABLE: &[(char, char, char)] = &[
        ('a', '\u{301}', 'á'), ('e', '\u{301}', 'é'), ('i', '\u{301}', 'í'), ('o', '\u{301}', 'ó'), ('u', '\u{301}', 'ú'),
        ('y', '\u{301}', 'ý'), ('E', '\u{301}', 'É'), ('A', '\u{301}', 'Á'), ('O', '\u{301}', 'Ó'),
        ('a', '\u{300}', 'à'), ('e', '\u{300}', 'è'), ('i', '\u{300}', 'ì'), ('o', '\u{300}', 'ò'), ('u', '\u{300}', 'ù'),
        ('a', '\u{302}', 'â'), ('e', '\u{302}', 'ê'), ('i', '\u{302}', 'î'), ('o', '\u{302}', 'ô'), ('u', '\u{302}', 'û'),
        ('a', '\u{308}', 'ä'), ('e', '\u{308}', 'ë'), ('i', '\u{308}', 'ï'), ('o', '\u{308}', 'ö'), ('u', '\u{308}', 'ü'),
        ('A', '\u{308}', 'Ä'), ('O', '\u{308}', 'Ö'), ('U', '\u{308}', 'Ü'),
        ('n', '\u{303}', 'ñ'), ('a', '\u{303}', 'ã'), ('o', '\u{303}', 'õ'), ('N', '\u{303}', 'Ñ'),
        ('c', '\u{327}', 'ç'), ('C', '\u{327}', 'Ç'),
        ('s', '\u{30C}', 'š'), ('c', '\u{30C}', 'č'), ('z', '\u{30C}', 'ž'), ('r', '\u{30C}', 'ř'),
        ('S', '\u{30C}', 'Š'), ('C', '\u{30C}', 'Č'), ('Z', '\u{30C}', 'Ž'),
    ];
    match TABLE.iter().find(|(b, m, _)| *b == base && *m == mark) {
        Some((_, _, c)) => c.to_string(),
        None => format!("{base}{mark}"),
    }
}

/// Removes grouping braces and decodes the common escapes and accent
/// commands for display.
pub fn strip_latex(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let chars: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        i += 1;
        match c {
            '{' | '}' => {}
            '\\' if i < chars.len() => {
                let next = chars[i];
                if matches!(next, '&' | '%' | '_' | '$' | '#' | '{' | '}') {
                    out.push(next);
                    i += 1;
                    continue;
                }
                // \'e, \'{e}, \c{c}; letter commands need a brace or space
                let letter_cmd = next.is_ascii_alphabetic();
                if let Some(mark) = accent_mark(next) {
                    let mut j = i + 1;
                    if letter_cmd && j < chars.len() && chars[j] == ' ' {
                        j += 1;
                    }
                    let braced = j < chars.len() && chars[j] == '{';
                    if braced {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_alphabetic() && (!letter_cmd || braced || chars[i + 1] == ' ') {
                        out.push_str(&compose(chars[j], mark));
                        i = j + 1;
                        if braced && i < chars.len() && chars[i] == '}' {
                            i += 1;
                        }
                        continue;
                    }
                }
                let word: String = chars[i..].iter().take_while(|c| c.is_ascii_alphabetic()).collect();
                let named = match word.as_str() {
                    "ss" => Some("ß"),
                    "o" => Some("ø"),
                    "O" => Some("Ø"),
                    "aa" => Some("å"),
                    "AA" => Some("Å"),
                    "ae" => Some("æ"),
                    "AE" => Some("Æ"),
                    "l" => Some("ł"),
                    "L" => Some("Ł"),
                    "i" => Some("ı"),
                    _ => None,
                };
                match named {
                    Some(t) => {
                        out.push_str(t);
                        i += word.chars().count();
                        if i < chars.len() && chars[i] == ' ' {
                            i += 1;
                        }
                    }
                    None => out.push(c),
                }
            }
            '~' => out.push(' '),
            _ => out.push(c),
        }
    }
    out.replace("---", "\u{2014}").replace("--", "\u{2013}")
}

fn line_of(text: &str, pos: usize) -> u32 {
    text[..pos].matches('\n').count() as u32 + 1
}

/// Parses a BibTeX database. Unknown entry types are accepted; `@comment`,
/// `@preamble` and `@string` are skipped with a warning.
pub fn parse_bibtex(text: &str, file: &str) -> (Vec<BibEntry>, Vec<Diagnostic>) {
    let mut entries: Vec<BibEntry> = Vec::new();
    let mut diags = Vec::new();
    let mut keys = BTreeSet::new();
    let bytes = text.as_bytes();
    let mut pos = 0;
    while let Some(off) = text[pos..].find('@') {
        let at = pos + off;
        let line = line_of(text, at);
        let span = SourceSpan::line(line);
        let type_len = text[at + 1..].bytes().take_while(|b| b.is_ascii_alphanumeric() || *b == b'_').count();
        let entry_type = text[at + 1..at + 1 + type_len].to_ascii_lowercase();
        let mut open = at + 1 + type_len;
        while open < bytes.len() && bytes[open].is_ascii_whitespace() {
            open += 1;
        }
        if entry_type.is_empty() || open >= bytes.len() || !matches!(bytes[open], b'{' | b'(') {
            diags.push(Diagnostic::error(DiagCode::BibSyntax, span, "expected `@type{` at entry start").in_file(file));
            pos = at + 1;
            continue;
        }
        let Some(close) = matching_close(text, open) else {
            diags.push(
                Diagnostic::error(DiagCode::UnbalancedBraces, span, "unbalanced braces; entry skipped").in_file(file),
            );
            pos = next_entry_start(text, at + 1);
            continue;
        };
        pos = close + 1;
        match entry_type.as_str() {
            "comment" | "preamble" => {
                diags.push(Diagnostic::warning(DiagCode::IgnoredEntry, span, format!("`@{entry_type}` ignored")).in_file(file));
                continue;
            }
            "string" => {
                diags.push(
                    Diagnostic::warning(DiagCode::IgnoredEntry, span, "`@string` macros are not supported; ignored")
                        .in_file(file),
                );
                continue;
            }
            _ => {}
        }
        let end_line = line_of(text, close);
        match parse_entry_body(&text[open + 1..close]) {
            Ok((key, fields)) => {
                let span = SourceSpan::new(line, end_line);
                if !keys.insert(key.clone()) {
                    diags.push(
                        Diagnostic::error(DiagCode::DuplicateKey, span, format!("duplicate key `{key}`; entry skipped"))
                            .in_file(file),
                    );
                    continue;
                }
                entries.push(BibEntry { key, entry_type, fields, file: file.to_string(), span });
            }
            Err(msg) => diags.push(Diagnostic::error(DiagCode::BibSyntax, span, msg).in_file(file)),
        }
    }
    (entries, diags)
}

fn next_entry_start(text: &str, from: usize) -> usize {
    text[from..].find("\n@").map(|i| from + i + 1).unwrap_or(text.len())
}

/// Index of the delimiter closing the one at `open` (`{` or `(`).
fn matching_close(text: &str, open: usize) -> Option<usize> {
    let bytes = text.as_bytes();
    let paren = bytes[open] == b'(';
    let mut depth = 0i32;
    for (i, &b) in bytes.iter().enumerate().skip(open) {
        match b {
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if !paren && depth == 0 {
                    return Some(i);
                }
                if depth < 0 {
                    return None;
                }
            }
            b'(' if paren && i == open => {}
            b')' if paren && depth == 0 => return Some(i),
            b'@' if depth == 0 && !paren => return None,
            _ => {}
        }
    }
    None
}

fn parse_entry_body(body: &str) -> Result<(String, BTreeMap<String, String>), String> {
    let (key, mut rest) = match body.find(',') {
        Some(i) => (body[..i].trim(), &body[i + 1..]),
        None => (body.trim(), ""),
    };
    if key.is_empty() || key.contains(char::is_whitespace) || key.contains('=') {
        return Err(format!("invalid citation key `{key}`"));
    }
    let mut fields = BTreeMap::new();
    loop {
        rest = rest.trim_start_matches(|c: char| c.is_whitespace() || c == ',');
        if rest.is_empty() {
            break;
        }
        let name_len = rest
            .find(|c: char| !(c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | ':' | '.')))
            .unwrap_or(rest.len());
        if name_len == 0 {
            return Err(format!("expected a field name in entry `{key}`"));
        }
        let name = rest[..name_len].to_ascii_lowercase();
        rest = rest[name_len..].trim_start();
        rest = rest.strip_prefix('=').ok_or_else(|| format!("expected `=` after field `{name}`"))?;
        let (value, after) = parse_value(rest).map_err(|e| format!("field `{name}`: {e}"))?;
        fields.entry(name).or_insert(value);
        rest = after;
    }
    Ok((key.to_string(), fields))
}

/// Parses `{...}`, `"..."` or a bare token, with `#` concatenation.
fn parse_value(input: &str) -> Result<(String, &str), String> {
    let mut out = String::new();
    let mut rest = input;
    loop {
        rest = rest.trim_start();
        let first = rest.chars().next().ok_or("missing value")?;
        let (part, after) = match first {
            '{' => {
                let close = matching_close(rest, 0).ok_or("unbalanced braces")?;
                (&rest[1..close], &rest[close + 1..])
            }
            '"' => {
                let mut depth = 0;
                let mut end = None;
                for (i, c) in rest.char_indices().skip(1) {
                    match c {
                        '{' => depth += 1,
                        '}' => depth -= 1,
                        '"' if depth == 0 => {
                            end = Some(i);
                            break;
                        }
                        _ => {}
                    }
                }
                let end = end.ok_or("unterminated quoted value")?;
                (&rest[1..end], &rest[end + 1..])
            }
            _ => {
                let len = rest.find(|c: char| c == ',' || c == '#' || c.is_whitespace()).unwrap_or(rest.len());
                if len == 0 {
                    return Err("missing value".into());
                }
                (&rest[..len], &rest[len..])
            }
        };
        out.push_str(part);
        rest = after.trim_start();
        match rest.strip_prefix('#') {
            Some(r) => rest = r,
            None => return Ok((out, rest)),
        }
    }
}

/// `Flach, 1994` / `One and Two, 2020` / `One et al., 2020`, without
/// parentheses. Falls back to the key when there is no author.
pub fn citation_label(entry: &BibEntry) -> (String, Option<Diagnostic>) {
    let authors = entry.authors();
    let year = entry.year();
    let who = match authors.len() {
        0 => {
            let warn = Diagnostic::warning(
                DiagCode::MissingAuthor,
                entry.span,
                format!("entry `{}` has no author; citing by key", entry.key),
            )
            .in_file(&entry.file);
            return (format!("{}, {year}", entry.key), Some(warn));
        }
        1 => authors[0].family.clone(),
        2 => format!("{} and {}", authors[0].family, authors[1].family),
        _ => format!("{} et al.", authors[0].family),
    };
    (format!("{who}, {year}"), None)
}

/// Author–year inline form, e.g. `(Flach, 1994)`.
pub fn format_citation(entry: &BibEntry) -> (String, Option<Diagnostic>) {
    let (label, diag) = citation_label(entry);
    (format!("({label})"), diag)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Citation {
    /// Text inside the parentheses, e.g. `Flach, 1994`.
    pub label: String,
    pub anchor: String,
}

/// One entry of the reference list, split into display parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reference {
    pub key: String,
    pub anchor: String,
    pub authors: Option<String>,
    pub year: String,
    pub title: Option<String>,
    pub venue: Option<String>,
}

impl Reference {
    fn from_entry(entry: &BibEntry) -> Self {
        let names: Vec<String> = entry.authors().iter().map(Name::display).collect();
        let authors = match names.len() {
            0 => None,
            1 => Some(names[0].clone()),
            2 => Some(format!("{} and {}", names[0], names[1])),
            n => Some(format!("{}, and {}", names[..n - 1].join(", "), names[n - 1])),
        };
        let venue = entry
            .field("journal")
            .map(strip_latex)
            .or_else(|| entry.field("booktitle").map(|b| format!("In {}", strip_latex(b))))
            .or_else(|| entry.field("publisher").map(strip_latex))
            .or_else(|| entry.field("howpublished").map(strip_latex))
            .or_else(|| entry.field("school").map(strip_latex))
            .or_else(|| entry.field("institution").map(strip_latex));
        Reference {
            key: entry.key.clone(),
            anchor: entry.anchor(),
            authors,
            year: entry.year(),
            title: entry.field("title").map(strip_latex),
            venue,
        }
    }

    /// `Authors (Year). Title. Venue.` with the title wrapped by `emph`.
    pub fn render(&self, emph: impl Fn(&str) -> String) -> String {
        let mut out = String::new();
        match &self.authors {
            Some(a) => out.push_str(&format!("{a} ({}).", self.year)),
            None => out.push_str(&format!("{} ({}).", self.key, self.year)),
        }
        if let Some(t) = &self.title {
            out.push(' ');
            out.push_str(&emph(t.trim_end_matches('.')));
            out.push('.');
        }
        if let Some(v) = &self.venue {
            out.push(' ');
            out.push_str(v.trim_end_matches('.'));
            out.push('.');
        }
        out
    }

    pub fn to_plain(&self) -> String {
        self.render(|t| t.to_string())
    }
}

/// Resolved citations for a build: every cited key with its inline text,
/// and the reference list sorted by (first-author family, year, key).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CitationMap {
    pub entries: BTreeMap<String, Citation>,
    pub references: Vec<Reference>,
}

impl CitationMap {
    pub fn get(&self, key: &str) -> Option<&Citation> {
        self.entries.get(key)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Inline text for a group of keys: `(Flach, 1994; Kluyver et al., 2016)`.
    /// Unknown keys render as `??`.
    pub fn inline_text(&self, keys: &[String]) -> String {
        let parts: Vec<String> =
            keys.iter().map(|k| self.get(k).map_or_else(|| "??".to_string(), |c| c.label.clone())).collect();
        format!("({})", parts.join("; "))
    }
}

/// Ordering key for the reference list.
pub fn reference_order(entry: &BibEntry) -> (String, String, String) {
    (entry.sort_family().to_lowercase(), entry.year(), entry.key.clone())
}

/// Collects every cited key across `docs`. Keys missing from `entries` are
/// reported as `dangling-citation` errors at the citing span.
pub fn resolve_citations(docs: &[Document], entries: &[BibEntry]) -> (CitationMap, Vec<Diagnostic>) {
    let by_key: BTreeMap<&str, &BibEntry> = entries.iter().map(|e| (e.key.as_str(), e)).collect();
    let mut diags = Vec::new();
    let mut cited: BTreeMap<&str, &BibEntry> = BTreeMap::new();
    for doc in docs {
        for_each_inline(doc.blocks(), &mut |inline| {
            if let InlineKind::CiteRole(keys) = &inline.kind {
                for key in keys {
                    match by_key.get(key.as_str()) {
                        Some(e) => {
                            cited.insert(e.key.as_str(), e);
                        }
                        None => diags.push(
                            Diagnostic::error(
                                DiagCode::DanglingCitation,
                                inline.span,
                                format!("citation key `{key}` is not in any bibliography"),
                            )
                            .in_file(&doc.source_name),
                        ),
                    }
                }
            }
        });
    }
    let mut map = CitationMap::default();
    for entry in cited.values() {
        let (label, warn) = citation_label(entry);
        diags.extend(warn);
        map.entries.insert(entry.key.clone(), Citation { label, anchor: entry.anchor() });
    }
    let mut sorted: Vec<&&BibEntry> = cited.values().collect();
    sorted.sort_by_key(|e| reference_order(e));
    map.references = sorted.into_iter().map(|e| Reference::from_entry(e)).collect();
    (map, diags)
}

/// Entries that no document cites.
pub fn uncited<'a>(entries: &'a [BibEntry], map: &CitationMap) -> Vec<&'a BibEntry> {
    entries.iter().filter(|e| map.get(&e.key).is_none()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_source;

    fn entry(author: Option<&str>, year: Option<&str>) -> BibEntry {
        let mut fields = BTreeMap::new();
        if let Some(a) = author {
            fields.insert("author".into(), a.into());
        }
        if let Some(y) = year {
            fields.insert("year".into(), y.into());
        }
        BibEntry { key: "k".into(), entry_type: "book".into(), fields, file: "r.bib".into(), span: SourceSpan::line(1) }
    }

    #[test]
    fn accents() {
        assert_eq!(strip_latex(r"P{\'e}rez"), "Pérez");
        assert_eq!(strip_latex(r#"G\"{o}del"#), "Gödel");
        assert_eq!(strip_latex(r"Fran\c{c}ois"), "François");
        assert_eq!(strip_latex(r"Stra\ss e"), "Straße");
        assert_eq!(strip_latex(r"{\o}ystein"), "øystein");
        assert_eq!(strip_latex(r"Ho\v{s}ek"), "Hošek");
        assert_eq!(strip_latex(r"\'{E}mile"), "Émile");
    }

    #[test]
    fn single_entry() {
        let (e, d) = parse_bibtex("@book{k, author={A B}, year={1990}, title={T}}", "r.bib");
        assert!(d.is_empty());
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].key, "k");
        assert_eq!(e[0].fields["author"], "A B");
        assert_eq!(e[0].fields["year"], "1990");
    }

    #[test]
    fn duplicate_key_skips_second() {
        let (e, d) = parse_bibtex("@book{k, title={One}}\n@misc{k, title={Two}}", "r.bib");
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].fields["title"], "One");
        assert_eq!(d[0].code, DiagCode::DuplicateKey);
        assert_eq!(d[0].span.start_line, 2);
    }

    #[test]
    fn inner_braces_kept() {
        // Outer braces delimit the value; the inner group {GOOD} is part of
        // the value and survives verbatim.
        let (e, _) = parse_bibtex("@article{k, title = {The {GOOD} Title}}", "r.bib");
        assert_eq!(e[0].fields["title"], "The {GOOD} Title");
    }

    #[test]
    fn quoted_and_bare_values() {
        let (e, d) = parse_bibtex("@misc{k,\n  Title = \"Say {\"}hi{\"}\",\n  year = 2001,\n  month = jan # \"-\" # feb\n}", "r.bib");
        assert!(d.is_empty(), "{d:?}");
        assert_eq!(e[0].fields["title"], "Say {\"}hi{\"}");
        assert_eq!(e[0].fields["year"], "2001");
        assert_eq!(e[0].fields["month"], "jan-feb");
    }

    #[test]
    fn unbalanced_entry_skipped() {
        let (e, d) = parse_bibtex("@book{a, title={x}\n@book{b, title={y}}", "r.bib");
        assert_eq!(d[0].code, DiagCode::UnbalancedBraces);
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].key, "b");
    }

    #[test]
    fn ignored_entries_warn() {
        let (e, d) = parse_bibtex("@comment{hello}\n@string{x = \"y\"}\n@preamble{\"z\"}", "r.bib");
        assert!(e.is_empty());
        assert_eq!(d.len(), 3);
        assert!(d.iter().all(|x| x.code == DiagCode::IgnoredEntry && !x.is_error()));
    }

    #[test]
    fn citation_formats() {
        assert_eq!(format_citation(&entry(Some("Peter Flach"), Some("1994"))).0, "(Flach, 1994)");
        assert_eq!(format_citation(&entry(Some("Flach, Peter A."), Some("1994"))).0, "(Flach, 1994)");
        assert_eq!(format_citation(&entry(Some("A One and B Two"), Some("2020"))).0, "(One and Two, 2020)");
        // three authors: first family name plus "et al."
        assert_eq!(format_citation(&entry(Some("A One and B Two and C Three"), Some("2020"))).0, "(One et al., 2020)");
        assert_eq!(format_citation(&entry(Some("Peter Flach"), None)).0, "(Flach, n.d.)");
        let (text, warn) = format_citation(&entry(None, Some("2001")));
        assert_eq!(text, "(k, 2001)");
        assert_eq!(warn.unwrap().code, DiagCode::MissingAuthor);
    }

    #[test]
    fn braced_family_name() {
        let names = split_names("{van Rossum}, Guido AND Fred L. {Drake Jr.}");
        assert_eq!(names[0].family, "van Rossum");
        assert_eq!(names[0].given, "Guido");
        assert_eq!(names[1].family, "Drake Jr.");
        assert_eq!(names[1].given, "Fred L.");
    }

    #[test]
    fn resolve_and_sort() {
        let bib = "@book{b, author={Ann Smith}, year={2001}}\n@book{a, author={Ann Smith}, year={1999}}\n@book{z, author={Zed}, year={1990}}";
        let (entries, _) = parse_bibtex(bib, "r.bib");
        let (doc, _) = parse_source("{cite}`b` then {cite}`a`", "p.md");
        let (map, d) = resolve_citations(&[doc], &entries);
        assert!(d.is_empty());
        assert_eq!(map.len(), 2);
        let keys: Vec<&str> = map.references.iter().map(|r| r.key.as_str()).collect();
        assert_eq!(keys, vec!["a", "b"]);
        assert_eq!(uncited(&entries, &map).len(), 1);
    }

    #[test]
    fn dangling_citation() {
        let (entries, _) = parse_bibtex("@book{k, author={A B}, year={1}}", "r.bib");
        let (doc, _) = parse_source("x\n\n{cite}`k,z`", "p.md");
        let (map, d) = resolve_citations(&[doc], &entries);
        assert_eq!(map.len(), 1);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, DiagCode::DanglingCitation);
        assert_eq!(d[0].to_string(), "p.md:3: error[dangling-citation]: citation key `z` is not in any bibliography");
    }

    #[test]
    fn reference_rendering() {
        let (e, _) = parse_bibtex(
            "@book{flach1994simply, author={Peter Flach}, title={Simply Logical: Intelligent Reasoning by Example}, publisher={John Wiley \\& Sons}, year={1994}}",
            "r.bib",
        );
        let r = Reference::from_entry(&e[0]);
        assert_eq!(r.to_plain(), "Peter Flach (1994). Simply Logical: Intelligent Reasoning by Example. John Wiley & Sons.");
    }
}
