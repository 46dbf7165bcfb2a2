//! Oracles and fixtures shared by the integration tests and the
//! acceptance runner.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use publish_core::ast::{for_each_inline, BlockKind, Document, InlineKind, Target};
use publish_core::bibliography::{parse_bibtex, resolve_citations};
use publish_core::config::{load_config, Config};
use publish_core::diagnostic::DiagCode;
use publish_core::emit::slides::{partition_slides, render_deck, DeckContext, SlidesConfig};
use publish_core::filter::filter_for_target;
use publish_core::html::HtmlRenderer;
use publish_core::parser::{parse_blocks, parse_source};
use publish_core::pipeline::{cmd_build, emit_target, Analysis, BuildOptions};
use publish_core::xref::collect_labels;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn sample_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../sample")
}

pub fn sample_config() -> Config {
    let (config, diags) = load_config(&sample_dir().join("publish.yml"));
    assert!(diags.is_empty(), "{diags:?}");
    config.expect("sample config loads")
}

/// Analysis of in-memory sources, as the pipeline would produce it.
pub fn analysis_of(sources: &[(&str, &str)], bib: &str) -> Analysis {
    let mut diagnostics = Vec::new();
    let mut docs = Vec::new();
    for (name, text) in sources {
        let (doc, d) = parse_source(text, name);
        diagnostics.extend(d);
        docs.push(doc);
    }
    let (entries, d) = parse_bibtex(bib, "refs.bib");
    diagnostics.extend(d);
    let (labels, d) = collect_labels(&docs);
    diagnostics.extend(d);
    let (citations, d) = resolve_citations(&docs, &entries);
    diagnostics.extend(d);
    Analysis { docs, entries, labels, citations, diagnostics }
}

// ---------------------------------------------------------------- HTML

/// Drops whitespace next to tags and collapses the rest. `&quot;` and a
/// bare `"` are the same character in text, so both spell it the same way.
pub fn normalize_html(html: &str) -> String {
    let html = html.replace("&quot;", "\"");
    let mut out = String::new();
    let mut pending_space = false;
    for c in html.chars() {
        if c.is_whitespace() {
            pending_space = true;
            continue;
        }
        if pending_space && !out.is_empty() && c != '<' && !out.ends_with('>') {
            out.push(' ');
        }
        pending_space = false;
        out.push(c);
    }
    out
}

pub fn commonmark_cases() -> Vec<String> {
    let text = std::fs::read_to_string(fixtures().join("commonmark.txt")).unwrap();
    let text = text.strip_suffix('\n').unwrap_or(&text);
    text.split("\n=====\n").map(str::to_string).collect()
}

pub fn reference_html(md: &str) -> String {
    let mut out = String::new();
    pulldown_cmark::html::push_html(&mut out, pulldown_cmark::Parser::new(md));
    out
}

pub fn our_html(md: &str) -> String {
    let (blocks, _) = parse_blocks(md, 1);
    let mut out = String::new();
    HtmlRenderer::plain().render_blocks(&blocks, false, &mut out);
    out
}

const VOID: [&str; 6] = ["meta", "link", "img", "hr", "br", "input"];

/// Checks that every element is closed in order. Contents of `<script>` and
/// `<style>` are skipped.
pub fn check_balanced(html: &str) -> Result<(), String> {
    let mut stack: Vec<String> = Vec::new();
    let mut rest = html;
    while let Some(open) = rest.find('<') {
        rest = &rest[open..];
        if rest.starts_with("<!") {
            let end = rest.find('>').ok_or("unterminated declaration")?;
            rest = &rest[end + 1..];
            continue;
        }
        let end = rest.find('>').ok_or("unterminated tag")?;
        let tag = &rest[1..end];
        rest = &rest[end + 1..];
        if let Some(name) = tag.strip_prefix('/') {
            match stack.pop() {
                Some(top) if top == name.trim() => {}
                other => return Err(format!("closing </{name}> but open is {other:?}")),
            }
            continue;
        }
        let name: String = tag.chars().take_while(|c| c.is_ascii_alphanumeric()).collect();
        if name.is_empty() {
            return Err(format!("bad tag <{tag}>"));
        }
        if tag.ends_with('/') || VOID.contains(&name.as_str()) {
            continue;
        }
        if name == "script" || name == "style" {
            let close = format!("</{name}>");
            let at = rest.find(&close).ok_or(format!("unclosed <{name}>"))?;
            rest = &rest[at + close.len()..];
            continue;
        }
        stack.push(name);
    }
    if stack.is_empty() {
        Ok(())
    } else {
        Err(format!("unclosed elements {stack:?}"))
    }
}

/// Inner HTML of each outermost `<section>` in `html`.
pub fn child_sections(html: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    let mut i = 0usize;
    while i < html.len() {
        if html[i..].starts_with("<section") {
            if depth == 0 {
                start = i + html[i..].find('>').unwrap() + 1;
            }
            depth += 1;
            i += 8;
        } else if html[i..].starts_with("</section>") {
            depth -= 1;
            if depth == 0 {
                out.push(html[start..i].to_string());
            }
            i += 10;
        } else {
            i += html[i..].chars().next().unwrap().len_utf8();
        }
    }
    out
}

/// Inner HTML of `<div class="slides">`.
pub fn slides_container(deck: &str) -> &str {
    let start = deck.find("<div class=\"slides\">").expect("slides container") + "<div class=\"slides\">".len();
    let end = deck.rfind("</div>\n</div>").expect("container end");
    &deck[start..end]
}

// ------------------------------------------------------------ notebooks

pub fn notebook_schema() -> Value {
    serde_json::from_str(&std::fs::read_to_string(fixtures().join("nbformat.v4.5.schema.json")).unwrap()).unwrap()
}

pub fn validate_notebook(schema: &Value, bytes: &[u8]) -> Result<(), Vec<String>> {
    let instance: Value = serde_json::from_slice(bytes).map_err(|e| vec![e.to_string()])?;
    let compiled = jsonschema::JSONSchema::options()
        .with_draft(jsonschema::Draft::Draft4)
        .compile(schema)
        .expect("schema compiles");
    let result = compiled.validate(&instance).map_err(|errs| errs.map(|e| format!("{} at {}", e, e.instance_path)).collect());
    result
}

/// Minimal ipynb reader: the source text of every code cell, in order.
pub fn read_code_cells(bytes: &[u8]) -> Vec<String> {
    let v: Value = serde_json::from_slice(bytes).expect("notebook is JSON");
    v["cells"]
        .as_array()
        .expect("cells array")
        .iter()
        .filter(|c| c["cell_type"] == "code")
        .map(|c| match &c["source"] {
            Value::String(s) => s.clone(),
            Value::Array(lines) => lines.iter().map(|l| l.as_str().unwrap()).collect(),
            other => panic!("bad source {other}"),
        })
        .collect()
}

/// Top-level code-cell sources of a document, in order.
pub fn code_cell_sources(doc: &Document) -> Vec<String> {
    doc.fragments
        .iter()
        .flat_map(|f| &f.blocks)
        .filter_map(|b| match &b.kind {
            BlockKind::CodeCell { source, .. } => Some(source.clone()),
            _ => None,
        })
        .collect()
}

// ----------------------------------------------------------------- fuzz

/// A generated document: its source and, per fragment, the sentinel word
/// written into it and the reserved tags it carries.
pub struct FuzzDoc {
    pub source: String,
    pub fragments: Vec<(String, Vec<&'static str>)>,
}

const TAGS: [&str; 5] = ["skip-book", "skip-notebook", "skip-slides", "hide-input", "hide-output"];
const SLIDE_TYPES: [Option<&str>; 6] = [None, None, Some("slide"), Some("subslide"), Some("fragment"), Some("notes")];

fn sentinel(doc: usize, frag: usize) -> String {
    format!("zqx{doc}k{frag}w")
}

pub fn fuzz_doc(rng: &mut ChaCha8Rng, index: usize) -> FuzzDoc {
    let mut source = String::new();
    let mut fragments = Vec::new();
    let n = rng.gen_range(1..8);
    for f in 0..n {
        let tags: Vec<&'static str> = TAGS.iter().copied().filter(|_| rng.gen_bool(0.3)).collect();
        let slide_type = *SLIDE_TYPES.choose(rng).unwrap();
        let mut meta = serde_json::Map::new();
        if !tags.is_empty() {
            meta.insert("tags".into(), serde_json::json!(tags));
        }
        if let Some(t) = slide_type {
            meta.insert("slideshow".into(), serde_json::json!({ "slide_type": t }));
        }
        if f > 0 || !meta.is_empty() {
            source.push_str(&format!("+++ {}\n", Value::Object(meta)));
        }
        let word = sentinel(index, f);
        let blocks = rng.gen_range(1..4);
        let sentinel_at = rng.gen_range(0..blocks);
        for b in 0..blocks {
            if b == sentinel_at {
                match rng.gen_range(0..4) {
                    0 => source.push_str(&format!("Plain text with {word} inside.\n\n")),
                    1 => source.push_str(&format!("Some *emphasis around {word}* here.\n\n")),
                    2 => source.push_str(&format!("- item one\n- item {word}\n\n")),
                    _ => source.push_str(&format!("> quoted {word} line\n\n")),
                }
                continue;
            }
            match rng.gen_range(0..5) {
                0 => source.push_str(&format!("{} Heading {b}\n\n", "#".repeat(rng.gen_range(1..4)))),
                1 => source.push_str("```{code-cell} python\nx = 1\nprint(x)\n```\n\n"),
                2 => source.push_str("$$ a^2 + b^2 $$\n\n"),
                3 => source.push_str("1. first\n2. second\n\n"),
                _ => source.push_str("Filler text with `code` and **bold**.\n\n"),
            }
        }
        fragments.push((word, tags));
    }
    FuzzDoc { source, fragments }
}

pub fn fuzz_corpus(count: usize, seed: u64) -> Vec<FuzzDoc> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|i| fuzz_doc(&mut rng, i)).collect()
}

/// All emitted text of one target for a single in-memory document.
pub fn emitted_text(analysis: &Analysis, target: Target) -> String {
    let config = Config::new(std::env::temp_dir(), analysis.docs.iter().map(|d| d.source_name.clone()).collect());
    let out = emit_target(&config, analysis, target);
    out.files.iter().map(|(_, b)| String::from_utf8_lossy(b).into_owned()).collect::<Vec<_>>().join("\n")
}

/// Sentinel violations over the corpus for `targets`, as readable strings.
pub fn filter_violations(corpus: &[FuzzDoc], targets: &[Target]) -> Vec<String> {
    let mut bad = Vec::new();
    for (i, doc) in corpus.iter().enumerate() {
        let analysis = analysis_of(&[(&format!("fuzz{i}.md"), &doc.source)], "");
        for &target in targets {
            let text = emitted_text(&analysis, target);
            for (word, tags) in &doc.fragments {
                let present = text.contains(word.as_str());
                let expected = !tags.contains(&target.skip_tag());
                if present != expected {
                    bad.push(format!("doc {i} target {target} sentinel {word}: present={present} tags={tags:?}"));
                }
            }
        }
    }
    bad
}

// ------------------------------------------------------------- criteria

pub type Outcome = Result<String, String>;

fn count_blocks(docs: &[Document], pred: impl Fn(&BlockKind) -> bool) -> usize {
    let mut n = 0;
    for d in docs {
        for b in d.blocks() {
            b.walk(&mut |b| {
                if pred(&b.kind) {
                    n += 1
                }
            });
        }
    }
    n
}

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

pub fn golden_dir() -> PathBuf {
    fixtures().join("golden")
}

/// Builds the sample twice and compares the trees with each other and with
/// the committed golden files. `UPDATE_GOLDEN=1` rewrites the goldens.
pub fn criterion_three_artifacts() -> Outcome {
    let config = sample_config();
    let analysis = publish_core::pipeline::analyze(&config);
    let docs = &analysis.docs;
    let fragments: usize = docs.iter().map(|d| d.fragments.len()).sum();
    let figures = count_blocks(docs, |k| matches!(k, BlockKind::Figure { .. }));
    let equations = count_blocks(docs, |k| matches!(k, BlockKind::MathBlock { label: Some(_), .. }));
    let cells = count_blocks(docs, |k| matches!(k, BlockKind::CodeCell { .. }));
    let mut citations = 0;
    for_each_inline(docs.iter().flat_map(|d| d.blocks()), &mut |i| {
        if let InlineKind::CiteRole(keys) = &i.kind {
            citations += keys.len();
        }
    });
    if fragments < 12 || figures < 2 || equations < 1 || cells < 3 || citations < 2 {
        return Err(format!(
            "sample too small: {fragments} fragments, {figures} figures, {equations} equations, {cells} cells, {citations} citations"
        ));
    }

    let mut trees = Vec::new();
    let mut slowest = 0f64;
    for _ in 0..2 {
        let out = tempfile::tempdir().map_err(|e| e.to_string())?;
        let started = Instant::now();
        let report = cmd_build(&config, &BuildOptions { out_dir: Some(out.path().to_path_buf()), ..Default::default() });
        slowest = slowest.max(started.elapsed().as_secs_f64());
        if report.exit_code() != 0 || !report.diagnostics.is_empty() {
            return Err(format!("build failed: {:?}", report.diagnostics));
        }
        for t in Target::ALL {
            if !out.path().join(t.as_str()).is_dir() {
                return Err(format!("missing output tree {t}"));
            }
        }
        trees.push(read_tree(out.path()));
    }
    if slowest >= 1.0 {
        return Err(format!("build took {slowest:.3}s"));
    }
    if trees[0] != trees[1] {
        return Err("two consecutive builds differ".into());
    }
    let golden = golden_dir();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        let _ = std::fs::remove_dir_all(&golden);
        for (rel, bytes) in &trees[0] {
            let p = golden.join(rel);
            std::fs::create_dir_all(p.parent().unwrap()).unwrap();
            std::fs::write(p, bytes).unwrap();
        }
    }
    let expected = read_tree(&golden);
    if expected != trees[0] {
        let differing: Vec<&String> = trees[0]
            .keys()
            .chain(expected.keys())
            .filter(|k| trees[0].get(*k) != expected.get(*k))
            .collect();
        return Err(format!("output differs from golden files: {differing:?}"));
    }
    Ok(format!(
        "{fragments} fragments, {figures} figures, {equations} equations, {cells} code cells, {citations} citations; {} files byte-identical to golden; slowest build {:.0} ms",
        trees[0].len(),
        slowest * 1000.0
    ))
}

/// Every notebook from the sample and from a fuzz corpus validates and
/// gives back its code-cell sources.
pub fn criterion_notebook_validity() -> Outcome {
    let schema = notebook_schema();
    let mut checked = 0;
    let mut cells = 0;
    let config = sample_config();
    let analysis = publish_core::pipeline::analyze(&config);
    let mut cases: Vec<(Analysis, String)> = vec![(analysis, "sample".into())];
    for (i, doc) in fuzz_corpus(200, 7).iter().enumerate() {
        cases.push((analysis_of(&[(&format!("fuzz{i}.md"), &doc.source)], ""), format!("fuzz {i}")));
    }
    for (analysis, name) in &cases {
        let out = emit_target(&config, analysis, Target::Notebook);
        for doc in &analysis.docs {
            let path = format!("{}.ipynb", doc.stem());
            let bytes = out.file(&path).ok_or(format!("{name}: no {path}"))?;
            validate_notebook(&schema, bytes).map_err(|e| format!("{name}: {e:?}"))?;
            let expected = code_cell_sources(&filter_for_target(doc, Target::Notebook));
            let got = read_code_cells(bytes);
            if got != expected {
                return Err(format!("{name}: code cells differ: {got:?} vs {expected:?}"));
            }
            checked += 1;
            cells += got.len();
        }
    }
    Ok(format!("{checked} notebooks valid against nbformat v4.5; {cells} code cells recovered exactly"))
}

pub fn criterion_filtering() -> Outcome {
    let corpus = fuzz_corpus(1000, 42);
    let checks: usize = corpus.iter().map(|d| d.fragments.len()).sum::<usize>() * 3;
    let bad = filter_violations(&corpus, &Target::ALL);
    if bad.is_empty() {
        Ok(format!("1000 documents, {checks} fragment/target checks, 0 violations"))
    } else {
        Err(format!("{} violations, first: {}", bad.len(), bad[0]))
    }
}

pub fn criterion_commonmark() -> Outcome {
    let cases = commonmark_cases();
    let failures: Vec<String> = cases
        .iter()
        .filter(|md| normalize_html(&our_html(md)) != normalize_html(&reference_html(md)))
        .map(|md| format!("{md:?}: ours {:?} reference {:?}", our_html(md), reference_html(md)))
        .collect();
    if cases.len() < 50 {
        return Err(format!("only {} curated cases", cases.len()));
    }
    if failures.is_empty() {
        Ok(format!("{}/{} curated examples match the reference", cases.len(), cases.len()))
    } else {
        Err(format!("{}/{} differ; first: {}", failures.len(), cases.len(), failures[0]))
    }
}

pub fn criterion_xref_integrity() -> Outcome {
    let config = sample_config();
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    let report = cmd_build(&config, &BuildOptions { out_dir: Some(out.path().to_path_buf()), ..Default::default() });
    if report.diagnostics.iter().any(|d| d.code == DiagCode::BrokenLink) || report.exit_code() != 0 {
        return Err(format!("sample build reported {:?}", report.diagnostics));
    }
    let mut pages = Vec::new();
    for target in ["book", "slides"] {
        let tree = read_tree(&out.path().join(target));
        let files: Vec<String> = tree.keys().filter(|k| !k.ends_with(".html")).cloned().collect();
        let html: Vec<(String, Vec<u8>)> = tree.into_iter().filter(|(k, _)| k.ends_with(".html")).collect();
        pages.push(html.len());
        let broken = publish_core::emit::book::audit_pages(&html, &files);
        if !broken.is_empty() {
            return Err(format!("{target}: dangling anchors {broken:?}"));
        }
    }

    let (config, _) = load_config(&fixtures().join("dangling/publish.yml"));
    let config = config.ok_or("dangling fixture config")?;
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    let report = cmd_build(&config, &BuildOptions { out_dir: Some(out.path().join("_build")), ..Default::default() });
    let diag = report
        .diagnostics
        .iter()
        .find(|d| d.code == DiagCode::DanglingReference)
        .ok_or("no dangling-reference diagnostic")?;
    if report.exit_code() != 1 || diag.file != "paper.md" || diag.span.start_line != 7 {
        return Err(format!("dangling fixture: exit {} with {diag}", report.exit_code()));
    }
    if out.path().join("_build").exists() {
        return Err("dangling fixture wrote output".into());
    }
    Ok(format!("0 dangling anchors over {} book and {} slide pages; dangling fixture fails with `{diag}`", pages[0], pages[1]))
}

pub fn criterion_slide_structure() -> Outcome {
    let text = std::fs::read_to_string(fixtures().join("deck.md")).unwrap();
    let (doc, diags) = parse_source(&text, "deck.md");
    if !diags.is_empty() {
        return Err(format!("{diags:?}"));
    }
    let (deck, _) = partition_slides(&doc);
    let analysis = analysis_of(&[("deck.md", &text)], "");
    let html = render_deck(
        &deck,
        &DeckContext { labels: &analysis.labels, citations: &analysis.citations, config: &SlidesConfig::default() },
    );
    check_balanced(&html)?;
    let top = child_sections(slides_container(&html));
    // hand-partitioned: slide 1 + notes, slide 2, slide 3 with one subslide
    let subs: Vec<usize> = top.iter().map(|s| child_sections(s).len()).collect();
    let notes: Vec<bool> = top.iter().map(|s| s.contains("<aside class=\"notes\">")).collect();
    if top.len() != 3 || subs != vec![0, 0, 2] || notes != vec![true, false, false] {
        return Err(format!("got {} top-level sections, nested {subs:?}, notes {notes:?}", top.len()));
    }
    let corpus = fuzz_corpus(1000, 42);
    let bad = filter_violations(&corpus, &[Target::Slides]);
    if !bad.is_empty() {
        return Err(format!("skip-slides sentinel leaked: {}", bad[0]));
    }
    Ok("3 top-level sections, slide 3 holds 1 subslide, notes on slide 1; 0 skip-slides leaks over 1000 fuzzed decks".into())
}

pub fn criterion_citations() -> Outcome {
    let dir = fixtures().join("citations");
    let bib = std::fs::read_to_string(dir.join("refs.bib")).unwrap();
    let text = std::fs::read_to_string(dir.join("doc.md")).unwrap();
    let oracle = std::fs::read_to_string(dir.join("expected.txt")).unwrap();
    let (inline_expected, refs_expected) = {
        let body = oracle.strip_prefix("# inline\n").ok_or("oracle header")?;
        let (a, b) = body.split_once("# references\n").ok_or("oracle sections")?;
        (a.lines().map(str::to_string).collect::<Vec<_>>(), b.lines().map(str::to_string).collect::<Vec<_>>())
    };
    let analysis = analysis_of(&[("doc.md", &text)], &bib);
    let errors: Vec<_> = analysis.diagnostics.iter().filter(|d| d.is_error()).collect();
    if !errors.is_empty() {
        return Err(format!("{errors:?}"));
    }
    let mut inline = Vec::new();
    for_each_inline(analysis.docs[0].blocks(), &mut |i| {
        if let InlineKind::CiteRole(keys) = &i.kind {
            inline.push(analysis.citations.inline_text(keys));
        }
    });
    if inline != inline_expected {
        return Err(format!("inline citations {inline:?}"));
    }
    let refs: Vec<String> = analysis.citations.references.iter().map(|r| r.to_plain()).collect();
    if refs != refs_expected {
        return Err(format!("reference list {refs:?}"));
    }
    let page = emitted_text(&analysis, Target::Book);
    if !page.contains(">Flach, 1994</a>)") {
        return Err("book page lacks the linked (Flach, 1994) citation".into());
    }
    Ok(format!("{} inline citations and {} sorted references match the oracle file", inline.len(), refs.len()))
}

pub type Criterion = (&'static str, fn() -> Outcome);

pub const CRITERIA: [Criterion; 7] = [
    ("1 three-artifact build", criterion_three_artifacts),
    ("2 notebook validity", criterion_notebook_validity),
    ("3 filtering semantics", criterion_filtering),
    ("4 commonmark conformance", criterion_commonmark),
    ("5 cross-reference integrity", criterion_xref_integrity),
    ("6 slide structure", criterion_slide_structure),
    ("7 citation correctness", criterion_citations),
];
