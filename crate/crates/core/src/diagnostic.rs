//! Diagnostics reported by every stage of the pipeline.

use std::fmt;

use crate::ast::SourceSpan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Info,
    Warning,
    Error,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Info => "info",
            Severity::Warning => "warning",
            Severity::Error => "error",
        }
    }
}

/// Fixed registry of diagnostic codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DiagCode {
    BadFrontmatter,
    UnclosedFence,
    BadCellMetadata,
    UnknownTag,
    DuplicateTag,
    UnknownDirective,
    MissingArgument,
    BadLabel,
    UnattachedLabel,
    EmptyRole,
    UnknownRole,
    DuplicateKey,
    UnbalancedBraces,
    BibSyntax,
    IgnoredEntry,
    MissingAuthor,
    DanglingCitation,
    UncitedEntry,
    DuplicateLabel,
    DanglingReference,
    ReferenceKind,
    SubslideBeforeSlide,
    DeadContent,
    MissingAsset,
    BrokenLink,
    Io,
    BadConfig,
    MissingSources,
    UnknownTarget,
    DuplicatePage,
}

impl DiagCode {
    pub fn as_str(self) -> &'static str {
        use DiagCode::*;
        match self {
            BadFrontmatter => "bad-frontmatter",
            UnclosedFence => "unclosed-fence",
            BadCellMetadata => "bad-cell-metadata",
            UnknownTag => "unknown-tag",
            DuplicateTag => "duplicate-tag",
            UnknownDirective => "unknown-directive",
            MissingArgument => "missing-argument",
            BadLabel => "bad-label",
            UnattachedLabel => "unattached-label",
            EmptyRole => "empty-role",
            UnknownRole => "unknown-role",
            DuplicateKey => "duplicate-key",
            UnbalancedBraces => "unbalanced-braces",
            BibSyntax => "bib-syntax",
            IgnoredEntry => "ignored-entry",
            MissingAuthor => "missing-author",
            DanglingCitation => "dangling-citation",
            UncitedEntry => "uncited-entry",
            DuplicateLabel => "duplicate-label",
            DanglingReference => "dangling-reference",
            ReferenceKind => "reference-kind",
            SubslideBeforeSlide => "subslide-before-slide",
            DeadContent => "dead-content",
            MissingAsset => "missing-asset",
            BrokenLink => "broken-link",
            Io => "io-error",
            BadConfig => "bad-config",
            MissingSources => "missing-sources",
            UnknownTarget => "unknown-target",
            DuplicatePage => "duplicate-page",
        }
    }
}

impl fmt::Display for DiagCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: DiagCode,
    pub message: String,
    /// Source file the span refers to. Empty until a stage that knows the
    /// file name fills it in.
    pub file: String,
    pub span: SourceSpan,
}

impl Diagnostic {
    pub fn new(severity: Severity, code: DiagCode, span: SourceSpan, message: impl Into<String>) -> Self {
        Diagnostic { severity, code, message: message.into(), file: String::new(), span }
    }

    pub fn error(code: DiagCode, span: SourceSpan, message: impl Into<String>) -> Self {
        Self::new(Severity::Error, code, span, message)
    }

    pub fn warning(code: DiagCode, span: SourceSpan, message: impl Into<String>) -> Self {
        Self::new(Severity::Warning, code, span, message)
    }

    pub fn info(code: DiagCode, span: SourceSpan, message: impl Into<String>) -> Self {
        Self::new(Severity::Info, code, span, message)
    }

    pub fn in_file(mut self, file: impl Into<String>) -> Self {
        if self.file.is_empty() {
            self.file = file.into();
        }
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    /// `file:line: severity[code]: message`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: {}[{}]: {}",
            self.file,
            self.span.start_line,
            self.severity.as_str(),
            self.code,
            self.message
        )
    }
}

/// Removes exact duplicates while keeping first-seen order.
pub fn dedup(diags: &mut Vec<Diagnostic>) {
    let mut seen = std::collections::HashSet::new();
    diags.retain(|d| seen.insert(d.clone()));
}
