//! Build orchestration: parse everything, resolve, emit each target in
//! memory, and only then write the targets that came through clean.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use crate::ast::{Document, SourceSpan, Target};
use crate::bibliography::{parse_bibtex, resolve_citations, uncited, BibEntry, CitationMap};
use crate::config::Config;
use crate::diagnostic::{dedup, DiagCode, Diagnostic, Severity};
use crate::emit::book::{audit_pages, build_site, required_assets, REFERENCES_PAGE, INDEX_PAGE};
use crate::emit::notebook::{serialize_notebook, to_notebook};
use crate::emit::slides::{partition_documents, render_deck, DeckContext};
use crate::filter::{dead_fragments, filter_for_target};
use crate::markdown::MarkdownContext;
use crate::parser::parse_source;
use crate::xref::{collect_labels, resolve_references, LabelTable};

/// Everything derived from the sources before any target is emitted.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub docs: Vec<Document>,
    pub entries: Vec<BibEntry>,
    pub labels: LabelTable,
    pub citations: CitationMap,
    pub diagnostics: Vec<Diagnostic>,
}

impl Analysis {
    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(Diagnostic::is_error)
    }
}

fn io_error(file: &str, message: String) -> Diagnostic {
    Diagnostic::error(DiagCode::Io, SourceSpan::line(1), message).in_file(file)
}

pub fn analyze(config: &Config) -> Analysis {
    let mut diags = Vec::new();
    let mut docs = Vec::new();
    let mut stems: BTreeMap<String, String> = BTreeMap::new();
    for source in &config.sources {
        match fs::read_to_string(config.source_path(source)) {
            Ok(text) => {
                let (doc, d) = parse_source(&text, source);
                diags.extend(d);
                let stem = doc.stem().to_string();
                let reserved = [INDEX_PAGE, REFERENCES_PAGE].iter().any(|p| p.strip_suffix(".html") == Some(stem.as_str()));
                if reserved {
                    diags.push(
                        Diagnostic::error(DiagCode::DuplicatePage, SourceSpan::line(1), format!("`{stem}` is a reserved page name"))
                            .in_file(source),
                    );
                } else if let Some(first) = stems.insert(stem.clone(), source.clone()) {
                    diags.push(
                        Diagnostic::error(
                            DiagCode::DuplicatePage,
                            SourceSpan::line(1),
                            format!("output name `{stem}` is already used by `{first}`"),
                        )
                        .in_file(source),
                    );
                }
                docs.push(doc);
            }
            Err(e) => diags.push(io_error(source, format!("cannot read source: {e}"))),
        }
    }

    let mut entries: Vec<BibEntry> = Vec::new();
    let mut keys = HashSet::new();
    for bib in &config.bibliography {
        match fs::read_to_string(config.source_path(bib)) {
            Ok(text) => {
                let (found, d) = parse_bibtex(&text, bib);
                diags.extend(d);
                for e in found {
                    if keys.insert(e.key.clone()) {
                        entries.push(e);
                    } else {
                        diags.push(
                            Diagnostic::error(DiagCode::DuplicateKey, e.span, format!("duplicate key `{}`; entry skipped", e.key))
                                .in_file(bib),
                        );
                    }
                }
            }
            Err(e) => diags.push(io_error(bib, format!("cannot read bibliography: {e}"))),
        }
    }

    let (labels, d) = collect_labels(&docs);
    diags.extend(d);
    let (citations, d) = resolve_citations(&docs, &entries);
    diags.extend(d);
    Analysis { docs, entries, labels, citations, diagnostics: diags }
}

/// Files of one target, relative to its output directory.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TargetOutput {
    pub files: Vec<(String, Vec<u8>)>,
    pub diagnostics: Vec<Diagnostic>,
}

impl TargetOutput {
    pub fn file(&self, path: &str) -> Option<&[u8]> {
        self.files.iter().find(|(p, _)| p == path).map(|(_, b)| b.as_slice())
    }
}

/// Reads the figure and image files the documents use. Missing files are
/// reported once per output path.
fn load_assets(config: &Config, docs: &[Document], diags: &mut Vec<Diagnostic>) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for doc in docs {
        let dir = Path::new(&doc.source_name).parent().unwrap_or(Path::new(""));
        for (dest, (written, span)) in required_assets(std::slice::from_ref(doc)) {
            if out.contains_key(&dest) {
                continue;
            }
            match fs::read(config.source_path(&dir.join(&written).to_string_lossy())) {
                Ok(bytes) => {
                    out.insert(dest, bytes);
                }
                Err(_) => diags.push(
                    Diagnostic::warning(DiagCode::MissingAsset, span, format!("figure file `{written}` not found"))
                        .in_file(&doc.source_name),
                ),
            }
        }
    }
    out
}

fn link_warnings(prefix: &str, pages: &[(String, Vec<u8>)], files: &[String]) -> Vec<Diagnostic> {
    audit_pages(pages, files)
        .into_iter()
        .map(|b| {
            Diagnostic::warning(DiagCode::BrokenLink, SourceSpan::line(b.line), format!("link `{}` has no target", b.href))
                .in_file(format!("{prefix}/{}", b.page))
        })
        .collect()
}

pub fn emit_target(config: &Config, analysis: &Analysis, target: Target) -> TargetOutput {
    let mut diags = Vec::new();
    let docs: Vec<Document> = analysis
        .docs
        .iter()
        .map(|d| {
            let (resolved, rd) = resolve_references(&filter_for_target(d, target), &analysis.labels);
            diags.extend(rd);
            resolved
        })
        .collect();
    let assets = load_assets(config, &docs, &mut diags);
    let asset_files: Vec<(String, Vec<u8>)> = assets.iter().map(|(p, b)| (p.clone(), b.clone())).collect();
    let asset_names: Vec<String> = assets.keys().cloned().collect();

    let mut files = Vec::new();
    match target {
        Target::Book => {
            let site = build_site(&docs, &analysis.labels, &analysis.citations, &config.book(), &assets);
            diags.extend(link_warnings(target.as_str(), &site.pages, &asset_names));
            files.extend(site.pages);
            files.extend(site.assets);
        }
        Target::Notebook => {
            for doc in &docs {
                let md = MarkdownContext {
                    source_name: &doc.source_name,
                    labels: Some(&analysis.labels),
                    citations: Some(&analysis.citations),
                    rewrite_assets: true,
                };
                let nb = to_notebook(doc, &md, &config.kernel);
                files.push((format!("{}.ipynb", doc.stem()), serialize_notebook(&nb)));
            }
            files.extend(asset_files);
        }
        Target::Slides => {
            let (deck, d) = partition_documents(&docs, config.title.as_deref(), &config.authors);
            diags.extend(d);
            let html = render_deck(
                &deck,
                &DeckContext { labels: &analysis.labels, citations: &analysis.citations, config: &config.slides },
            );
            let pages = vec![("index.html".to_string(), html.into_bytes())];
            diags.extend(link_warnings(target.as_str(), &pages, &asset_names));
            files.extend(pages);
            files.extend(asset_files);
        }
    }
    TargetOutput { files, diagnostics: diags }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BuildOptions {
    /// Targets to build; empty means the config's list.
    pub targets: Vec<Target>,
    pub out_dir: Option<PathBuf>,
    pub strict: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BuildReport {
    /// Files written per target, as full paths.
    pub emitted: Vec<(Target, Vec<PathBuf>)>,
    pub diagnostics: Vec<Diagnostic>,
}

impl BuildReport {
    pub fn error_count(&self) -> usize {
        self.diagnostics.iter().filter(|d| d.is_error()).count()
    }

    pub fn exit_code(&self) -> i32 {
        if self.error_count() == 0 {
            0
        } else {
            1
        }
    }
}

fn promote(diags: &mut [Diagnostic], strict: bool) {
    if strict {
        for d in diags.iter_mut().filter(|d| d.severity == Severity::Warning) {
            d.severity = Severity::Error;
        }
    }
}

/// Writes `files` under `dir` by way of a sibling temp directory, so a
/// failed write leaves the previous tree in place.
fn write_tree(dir: &Path, files: &[(String, Vec<u8>)]) -> std::io::Result<Vec<PathBuf>> {
    let parent = dir.parent().unwrap_or(Path::new("."));
    let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = parent.join(format!(".{name}.tmp"));
    if tmp.exists() {
        fs::remove_dir_all(&tmp)?;
    }
    fs::create_dir_all(&tmp)?;
    let mut written = Vec::new();
    for (rel, bytes) in files {
        let path = tmp.join(rel);
        if let Some(p) = path.parent() {
            fs::create_dir_all(p)?;
        }
        fs::write(&path, bytes)?;
        written.push(dir.join(rel));
    }
    if dir.exists() {
        fs::remove_dir_all(dir)?;
    }
    fs::rename(&tmp, dir)?;
    Ok(written)
}

fn selected_targets(config: &Config, opts: &BuildOptions) -> Vec<Target> {
    let wanted = if opts.targets.is_empty() { &config.targets } else { &opts.targets };
    Target::ALL.into_iter().filter(|t| wanted.contains(t)).collect()
}

/// Emits every selected target in memory. Targets with errors are `None`.
fn emit_all(config: &Config, analysis: &Analysis, targets: &[Target], strict: bool, diags: &mut Vec<Diagnostic>) -> Vec<(Target, Option<TargetOutput>)> {
    targets
        .iter()
        .map(|&t| {
            let mut out = emit_target(config, analysis, t);
            promote(&mut out.diagnostics, strict);
            let failed = out.diagnostics.iter().any(Diagnostic::is_error);
            diags.append(&mut out.diagnostics);
            (t, (!failed).then_some(out))
        })
        .collect()
}

pub fn cmd_build(config: &Config, opts: &BuildOptions) -> BuildReport {
    let strict = opts.strict || config.strict;
    let mut config = config.clone();
    if let Some(out) = &opts.out_dir {
        config.out_dir = out.clone();
    }
    let mut report = BuildReport::default();
    let bad_out = config.check_out_dir("--out");
    if !bad_out.is_empty() {
        report.diagnostics = bad_out;
        return report;
    }

    let mut analysis = analyze(&config);
    promote(&mut analysis.diagnostics, strict);
    report.diagnostics.append(&mut analysis.diagnostics.clone());
    if analysis.has_errors() {
        dedup(&mut report.diagnostics);
        return report;
    }
    let targets = selected_targets(&config, opts);
    let outputs = emit_all(&config, &analysis, &targets, strict, &mut report.diagnostics);
    for (target, output) in outputs {
        let Some(output) = output else { continue };
        let dir = config.out_dir.join(target.as_str());
        match write_tree(&dir, &output.files) {
            Ok(paths) => report.emitted.push((target, paths)),
            Err(e) => report.diagnostics.push(io_error(&dir.display().to_string(), format!("cannot write output: {e}"))),
        }
    }
    dedup(&mut report.diagnostics);
    report
}

/// Full pipeline without writing, plus dead-content and uncited-entry
/// reports.
pub fn cmd_check(config: &Config, strict: bool) -> BuildReport {
    let strict = strict || config.strict;
    let mut report = BuildReport::default();
    let mut analysis = analyze(config);
    for doc in &analysis.docs {
        for f in dead_fragments(doc) {
            analysis.diagnostics.push(
                Diagnostic::warning(DiagCode::DeadContent, f.span, "fragment is skipped by every target")
                    .in_file(&doc.source_name),
            );
        }
    }
    for e in uncited(&analysis.entries, &analysis.citations) {
        analysis.diagnostics.push(
            Diagnostic::info(DiagCode::UncitedEntry, e.span, format!("entry `{}` is never cited", e.key)).in_file(&e.file),
        );
    }
    promote(&mut analysis.diagnostics, strict);
    report.diagnostics = analysis.diagnostics.clone();
    if !analysis.has_errors() {
        let targets = selected_targets(config, &BuildOptions::default());
        emit_all(config, &analysis, &targets, strict, &mut report.diagnostics);
    }
    dedup(&mut report.diagnostics);
    report
}
