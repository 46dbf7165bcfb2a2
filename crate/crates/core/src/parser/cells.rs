use crate::ast::SourceSpan;
use crate::diagnostic::{DiagCode, Diagnostic};

/// One `+++`-delimited slice of the body, before block parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawFragment {
    pub text: String,
    /// JSON object carried by the break line that opened this fragment.
    pub tags_json: Option<String>,
    pub span: SourceSpan,
}

/// An open code fence: ```` ``` ```` or `~~~`, at least three long.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Fence {
    pub ch: char,
    pub len: usize,
    pub indent: usize,
}

/// Recognizes an opening fence line. Returns the fence and its info string.
pub(crate) fn fence_open(line: &str) -> Option<(Fence, &str)> {
    let indent = line.len() - line.trim_start_matches(' ').len();
    if indent > 3 {
        return None;
    }
    let rest = &line[indent..];
    let ch = rest.chars().next().filter(|c| *c == '`' || *c == '~')?;
    let len = rest.chars().take_while(|c| *c == ch).count();
    if len < 3 {
        return None;
    }
    let info = rest[len..].trim();
    if ch == '`' && info.contains('`') {
        return None;
    }
    Some((Fence { ch, len, indent }, info))
}

pub(crate) fn fence_closes(line: &str, fence: &Fence) -> bool {
    let indent = line.len() - line.trim_start_matches(' ').len();
    if indent > 3 {
        return false;
    }
    let rest = &line[indent..];
    let len = rest.chars().take_while(|c| *c == fence.ch).count();
    len >= fence.len && rest[len..].trim().is_empty()
}

/// Returns `Some(metadata)` when `line` is a cell break; the metadata is
/// empty when the break carries no JSON.
pub(crate) fn cell_break(line: &str) -> Option<&str> {
    let rest = line.strip_prefix("+++")?;
    if rest.is_empty() || rest.starts_with([' ', '\t']) {
        Some(rest.trim())
    } else {
        None
    }
}

/// Splits a frontmatter-free body on `+++` lines outside fenced code.
/// `first_line` is the file line number of the first line of `text`.
pub fn split_cells(text: &str, first_line: u32) -> (Vec<RawFragment>, Vec<Diagnostic>) {
    let mut fragments = Vec::new();
    let mut diags = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    let mut current_start = first_line;
    let mut current_meta: Option<String> = None;
    let mut open: Option<(Fence, u32)> = None;

    let lines: Vec<&str> = body_lines(text);
    let flush = |lines: &mut Vec<&str>, start: u32, meta: Option<String>, out: &mut Vec<RawFragment>| {
        if lines.iter().any(|l| !l.trim().is_empty()) {
            let end = start + lines.len() as u32 - 1;
            out.push(RawFragment { text: lines.join("\n"), tags_json: meta, span: SourceSpan::new(start, end) });
        }
        lines.clear();
    };

    for (i, line) in lines.iter().enumerate() {
        let line_no = first_line + i as u32;
        if let Some((fence, _)) = &open {
            if fence_closes(line, fence) {
                open = None;
            }
            current.push(line);
            continue;
        }
        if let Some((fence, _)) = fence_open(line) {
            open = Some((fence, line_no));
            current.push(line);
            continue;
        }
        if let Some(meta) = cell_break(line) {
            flush(&mut current, current_start, current_meta.take(), &mut fragments);
            current_start = line_no + 1;
            current_meta = (!meta.is_empty()).then(|| meta.to_string());
            continue;
        }
        current.push(line);
    }
    if let Some((_, line_no)) = open {
        diags.push(Diagnostic::error(
            DiagCode::UnclosedFence,
            SourceSpan::line(line_no),
            "code fence is never closed; the rest of the file is treated as code",
        ));
    }
    flush(&mut current, current_start, current_meta, &mut fragments);
    (fragments, diags)
}

/// Lines of `text` without their terminators; a trailing newline does not
/// produce an extra empty line.
pub(crate) fn body_lines(text: &str) -> Vec<&str> {
    let mut lines: Vec<&str> = text.split('\n').collect();
    if lines.last() == Some(&"") {
        lines.pop();
    }
    lines
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_fragment() {
        let (frags, diags) = split_cells("a", 1);
        assert_eq!(frags.len(), 1);
        assert_eq!(frags[0].text, "a");
        assert_eq!(frags[0].tags_json, None);
        assert!(diags.is_empty());
    }

    #[test]
    fn break_with_metadata() {
        let (frags, _) = split_cells("a\n\n+++ {\"tags\": [\"skip-slides\"]}\n\nb", 1);
        assert_eq!(frags.len(), 2);
        assert_eq!(frags[0].span, SourceSpan::new(1, 2));
        assert_eq!(frags[1].tags_json.as_deref(), Some("{\"tags\": [\"skip-slides\"]}"));
        assert_eq!(frags[1].span, SourceSpan::new(4, 5));
        assert_eq!(frags[1].text.trim(), "b");
    }

    #[test]
    fn break_inside_fence_ignored() {
        let (frags, diags) = split_cells("```\n+++\n```\nc", 1);
        assert_eq!(frags.len(), 1);
        assert!(diags.is_empty());
    }

    #[test]
    fn empty_segments_dropped() {
        let (frags, _) = split_cells("+++\n\n+++\nx\n+++\n", 1);
        assert_eq!(frags.len(), 1);
        assert_eq!(frags[0].span, SourceSpan::line(4));
    }

    #[test]
    fn unclosed_fence_swallows_breaks() {
        let (frags, diags) = split_cells("a\n````python\n+++\nb", 10);
        assert_eq!(frags.len(), 1);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, DiagCode::UnclosedFence);
        assert_eq!(diags[0].span.start_line, 11);
    }

    #[test]
    fn longer_fence_needs_longer_close() {
        let (frags, _) = split_cells("````\n```\n+++\n````\n+++\nz", 1);
        assert_eq!(frags.len(), 2);
    }

    #[test]
    fn plus_prefix_not_a_break() {
        assert_eq!(cell_break("+++x"), None);
        assert_eq!(cell_break("+++"), Some(""));
        assert_eq!(cell_break("+++ {}"), Some("{}"));
    }
}
