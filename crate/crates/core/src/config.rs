//! `publish.yml` loading.

use std::path::{Component, Path, PathBuf};

use serde_yaml::Value;

use crate::ast::{SourceSpan, Target};
use crate::diagnostic::{DiagCode, Diagnostic};
use crate::emit::book::BookConfig;
use crate::emit::notebook::KernelSpec;
use crate::emit::slides::SlidesConfig;
use crate::emit::DEFAULT_MATH_URL;

pub const DEFAULT_CONFIG: &str = "publish.yml";
pub const DEFAULT_OUT_DIR: &str = "_build";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    /// Directory relative paths are resolved against.
    pub root: PathBuf,
    pub title: Option<String>,
    pub authors: Vec<String>,
    /// As written in the config, relative to `root`.
    pub sources: Vec<String>,
    pub bibliography: Vec<String>,
    pub targets: Vec<Target>,
    pub out_dir: PathBuf,
    pub kernel: KernelSpec,
    pub slides: SlidesConfig,
    pub math_renderer_url: String,
    pub strict: bool,
}

impl Config {
    /// Config with defaults for the given sources, rooted at `root`.
    pub fn new(root: impl Into<PathBuf>, sources: Vec<String>) -> Self {
        let root = root.into();
        Config {
            out_dir: root.join(DEFAULT_OUT_DIR),
            root,
            title: None,
            authors: Vec::new(),
            sources,
            bibliography: Vec::new(),
            targets: Target::ALL.to_vec(),
            kernel: KernelSpec::default(),
            slides: SlidesConfig::default(),
            math_renderer_url: DEFAULT_MATH_URL.into(),
            strict: false,
        }
    }

    pub fn source_path(&self, source: &str) -> PathBuf {
        self.root.join(source)
    }

    pub fn book(&self) -> BookConfig {
        BookConfig { title: self.title.clone(), authors: self.authors.clone(), math_renderer_url: self.math_renderer_url.clone() }
    }

    /// Errors for an output directory that would contain a source file.
    pub fn check_out_dir(&self, file: &str) -> Vec<Diagnostic> {
        let out = normalize(&self.out_dir);
        self.sources
            .iter()
            .filter(|s| normalize(&self.source_path(s)).starts_with(&out))
            .map(|s| {
                Diagnostic::error(
                    DiagCode::BadConfig,
                    SourceSpan::line(1),
                    format!("out_dir `{}` contains source `{s}`", self.out_dir.display()),
                )
                .in_file(file)
            })
            .collect()
    }
}

/// Lexical normalization: makes the path absolute and folds `.`/`..`.
fn normalize(p: &Path) -> PathBuf {
    let abs = if p.is_absolute() { p.to_path_buf() } else { std::env::current_dir().unwrap_or_default().join(p) };
    let mut out = PathBuf::new();
    for c in abs.components() {
        match c {
            Component::ParentDir => {
                out.pop();
            }
            Component::CurDir => {}
            other => out.push(other),
        }
    }
    out
}

/// Reads and validates a config file. `None` means the config is unusable;
/// the diagnostics say why.
pub fn load_config(path: &Path) -> (Option<Config>, Vec<Diagnostic>) {
    let file = path.display().to_string();
    match std::fs::read_to_string(path) {
        Ok(text) => {
            let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
            parse_config(&text, &file, &root)
        }
        Err(e) => (None, vec![Diagnostic::error(DiagCode::Io, SourceSpan::line(1), format!("cannot read config: {e}")).in_file(&file)]),
    }
}

/// Line of the first `key:` in the text, for diagnostics.
fn key_line(text: &str, key: &str) -> u32 {
    let last = key.rsplit('.').next().unwrap_or(key);
    text.lines()
        .position(|l| {
            let t = l.trim_start().trim_start_matches("- ");
            t.starts_with(&format!("{key}:")) || t.starts_with(&format!("{last}:"))
        })
        .map_or(1, |i| i as u32 + 1)
}

fn flatten(value: &Value, prefix: &str, out: &mut Vec<(String, Value)>) {
    if let Value::Mapping(map) = value {
        for (k, v) in map {
            let key = match k {
                Value::String(s) => s.clone(),
                other => serde_yaml::to_string(other).unwrap_or_default().trim().to_string(),
            };
            let full = if prefix.is_empty() { key } else { format!("{prefix}.{key}") };
            if prefix.is_empty() && matches!(v, Value::Mapping(_)) {
                flatten(v, &full, out);
            } else {
                out.push((full, v.clone()));
            }
        }
    }
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

fn string_list(v: &Value) -> Option<Vec<String>> {
    match v {
        Value::Sequence(items) => items.iter().map(scalar).collect(),
        Value::Null => Some(Vec::new()),
        other => scalar(other).map(|s| vec![s]),
    }
}

pub fn parse_config(text: &str, file: &str, root: &Path) -> (Option<Config>, Vec<Diagnostic>) {
    let mut diags = Vec::new();
    let err = |line: u32, code: DiagCode, msg: String| Diagnostic::error(code, SourceSpan::line(line), msg).in_file(file);

    let value: Value = match serde_yaml::from_str(text) {
        Ok(v) => v,
        Err(e) => {
            let line = e.location().map_or(1, |l| l.line() as u32);
            return (None, vec![err(line, DiagCode::BadConfig, format!("invalid YAML: {e}"))]);
        }
    };
    if !matches!(value, Value::Mapping(_) | Value::Null) {
        return (None, vec![err(1, DiagCode::BadConfig, "config must be a mapping".into())]);
    }
    let mut entries = Vec::new();
    flatten(&value, "", &mut entries);

    let mut config = Config::new(root, Vec::new());
    let mut have_sources = false;
    for (key, v) in &entries {
        let line = key_line(text, key);
        let bad = |what: &str| err(line, DiagCode::BadConfig, format!("`{key}` must be {what}"));
        match key.as_str() {
            "title" => match scalar(v) {
                Some(s) => config.title = Some(s),
                None => diags.push(bad("a string")),
            },
            "authors" => match string_list(v) {
                Some(l) => config.authors = l,
                None => diags.push(bad("a list of strings")),
            },
            "sources" => match string_list(v) {
                Some(l) => {
                    have_sources = !l.is_empty();
                    config.sources = l;
                }
                None => diags.push(bad("a list of paths")),
            },
            "bibliography" => match string_list(v) {
                Some(l) => config.bibliography = l,
                None => diags.push(bad("a list of paths")),
            },
            "targets" => match string_list(v) {
                Some(l) => {
                    let mut targets = Vec::new();
                    for name in l {
                        match name.parse::<Target>() {
                            Ok(t) if !targets.contains(&t) => targets.push(t),
                            Ok(_) => {}
                            Err(_) => diags.push(err(
                                line,
                                DiagCode::UnknownTarget,
                                format!("unknown target `{name}`; expected book, notebook or slides"),
                            )),
                        }
                    }
                    config.targets = targets;
                }
                None => diags.push(bad("a list of target names")),
            },
            "out_dir" => match scalar(v) {
                Some(s) => config.out_dir = root.join(s),
                None => diags.push(bad("a path")),
            },
            "kernel.name" | "kernel.language" | "kernel.display_name" | "slides.runtime_base_url" | "slides.theme"
            | "math_renderer_url" => match scalar(v) {
                Some(s) => match key.as_str() {
                    "kernel.name" => config.kernel.name = s,
                    "kernel.language" => config.kernel.language = s,
                    "kernel.display_name" => config.kernel.display_name = s,
                    "slides.runtime_base_url" => config.slides.runtime_base_url = s,
                    "slides.theme" => config.slides.theme = s,
                    _ => {
                        config.slides.math_renderer_url = s.clone();
                        config.math_renderer_url = s;
                    }
                },
                None => diags.push(bad("a string")),
            },
            "strict" => match v {
                Value::Bool(b) => config.strict = *b,
                _ => diags.push(bad("true or false")),
            },
            _ => diags.push(
                Diagnostic::warning(DiagCode::BadConfig, SourceSpan::line(line), format!("unknown config key `{key}`"))
                    .in_file(file),
            ),
        }
    }
    // A kernel name without a display name shows the name.
    if entries.iter().any(|(k, _)| k == "kernel.name") && !entries.iter().any(|(k, _)| k == "kernel.display_name") {
        config.kernel.display_name = config.kernel.name.clone();
    }
    if !have_sources {
        diags.push(err(key_line(text, "sources"), DiagCode::MissingSources, "config lists no `sources`".into()));
    }
    if config.targets.is_empty() && !diags.iter().any(|d| d.code == DiagCode::UnknownTarget) {
        diags.push(err(key_line(text, "targets"), DiagCode::BadConfig, "`targets` is empty".into()));
    }
    diags.extend(config.check_out_dir(file));
    if diags.iter().any(Diagnostic::is_error) {
        (None, diags)
    } else {
        (Some(config), diags)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> (Option<Config>, Vec<Diagnostic>) {
        parse_config(text, "publish.yml", Path::new("/proj"))
    }

    #[test]
    fn minimal_defaults() {
        let (c, d) = parse("sources: [paper.md]\n");
        assert!(d.is_empty(), "{d:?}");
        let c = c.unwrap();
        assert_eq!(c.targets, Target::ALL.to_vec());
        assert_eq!(c.out_dir, Path::new("/proj/_build"));
        assert_eq!(c.kernel, KernelSpec::default());
    }

    #[test]
    fn nested_and_dotted_keys() {
        let (c, d) = parse("sources: a.md\nkernel:\n  name: ir\n  language: R\nslides:\n  theme: black\ntargets: [book]\n");
        assert!(d.is_empty(), "{d:?}");
        let c = c.unwrap();
        assert_eq!(c.kernel.name, "ir");
        assert_eq!(c.kernel.display_name, "ir");
        assert_eq!(c.kernel.language, "R");
        assert_eq!(c.slides.theme, "black");
        assert_eq!(c.targets, vec![Target::Book]);
    }

    #[test]
    fn unknown_target() {
        let (c, d) = parse("sources: [a.md]\ntargets: [poster]\n");
        assert!(c.is_none());
        assert_eq!(d[0].code, DiagCode::UnknownTarget);
        assert_eq!(d[0].span.start_line, 2);
    }

    #[test]
    fn missing_sources() {
        let (c, d) = parse("title: x\n");
        assert!(c.is_none());
        assert_eq!(d[0].code, DiagCode::MissingSources);
    }

    #[test]
    fn out_dir_must_not_contain_sources() {
        let (c, d) = parse("sources: [book/a.md]\nout_dir: book\n");
        assert!(c.is_none());
        assert_eq!(d[0].code, DiagCode::BadConfig);
    }

    #[test]
    fn bad_yaml_has_line() {
        let (_, d) = parse("sources: [a.md\ntitle: x\n");
        assert_eq!(d[0].code, DiagCode::BadConfig);
        assert!(d[0].span.start_line >= 1);
    }

    #[test]
    fn unknown_key_warns() {
        let (c, d) = parse("sources: [a.md]\ncolour: red\n");
        assert!(c.is_some());
        assert_eq!(d[0].span.start_line, 2);
        assert!(!d[0].is_error());
    }
}
