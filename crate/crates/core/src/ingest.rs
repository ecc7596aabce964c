//! Source collection, concatenation, and token-budget chunking.
//!
//! The scanner treats code as text: files are read verbatim, concatenated with
//! per-file delimiters for whole-corpus prompts, and split on line boundaries
//! when a file exceeds a model's window. Token counts everywhere in the crate
//! come from [`estimate_tokens`], a deterministic character-count heuristic.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use globset::{Glob, GlobSet, GlobSetBuilder};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use walkdir::WalkDir;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("corpus root not found or not a directory: {0}")]
    RootNotFound(PathBuf),
    #[error("no include patterns given")]
    NoPatterns,
    #[error("invalid include pattern {pattern:?}: {source}")]
    BadPattern {
        pattern: String,
        source: globset::Error,
    },
}

/// One source file, read verbatim.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SourceFile {
    /// Repository-relative path, forward slashes.
    pub path: String,
    pub content: String,
    pub byte_length: usize,
    pub line_count: usize,
}

impl SourceFile {
    pub fn new(path: impl Into<String>, content: impl Into<String>) -> Self {
        let content = content.into();
        SourceFile {
            path: path.into(),
            byte_length: content.len(),
            line_count: content.lines().count(),
            content,
        }
    }
}

/// A file the collector could not read; the scan continues without it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SkippedFile {
    pub path: String,
    pub reason: String,
}

/// An ordered collection of source files under one root.
///
/// Files are kept sorted lexicographically by path, so every downstream
/// report derived from a corpus is reproducible.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CodeCorpus {
    pub root: PathBuf,
    pub files: Vec<SourceFile>,
    pub total_bytes: usize,
    /// Unreadable files recorded during collection.
    pub skipped: Vec<SkippedFile>,
}

impl CodeCorpus {
    /// Builds a corpus from in-memory files (handy for tests and synthetic runs).
    /// Files are sorted by path; duplicate paths keep the first occurrence.
    pub fn from_files(root: impl Into<PathBuf>, files: Vec<SourceFile>) -> Self {
        let mut files = files;
        files.sort_by(|a, b| a.path.cmp(&b.path));
        files.dedup_by(|b, a| a.path == b.path);
        let total_bytes = files.iter().map(|f| f.byte_length).sum();
        CodeCorpus {
            root: root.into(),
            files,
            total_bytes,
            skipped: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    pub fn file(&self, path: &str) -> Option<&SourceFile> {
        self.files.iter().find(|f| f.path == path)
    }

    /// Finds a file by exact path or by `/`-boundary suffix match, the same
    /// rule ground-truth matching uses (reports name bare files like
    /// `EmailViewer.java`).
    pub fn file_by_suffix(&self, path: &str) -> Option<&SourceFile> {
        self.files.iter().find(|f| paths_match(&f.path, path))
    }

    /// Machine-readable manifest: path, byte_length, line_count per file.
    pub fn manifest(&self) -> CorpusManifest {
        CorpusManifest {
            root: self.root.display().to_string(),
            total_bytes: self.total_bytes,
            files: self
                .files
                .iter()
                .map(|f| ManifestEntry {
                    path: f.path.clone(),
                    byte_length: f.byte_length,
                    line_count: f.line_count,
                })
                .collect(),
            skipped: self.skipped.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub root: String,
    pub total_bytes: usize,
    pub files: Vec<ManifestEntry>,
    pub skipped: Vec<SkippedFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub byte_length: usize,
    pub line_count: usize,
}

/// A contiguous line range of one file, sized for a token budget.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CodeChunk {
    pub file_path: String,
    /// 1-based first line.
    pub start_line: usize,
    /// 1-based last line, inclusive.
    pub end_line: usize,
    pub content: String,
    pub token_estimate: usize,
}

/// True when two paths denote the same file under the `/`-boundary suffix
/// rule: equal, or one ends with `/` + the other.
pub fn paths_match(a: &str, b: &str) -> bool {
    a == b || a.ends_with(&format!("/{b}")) || b.ends_with(&format!("/{a}"))
}

/// Deterministic token estimate: `ceil(char_count / 4)`.
///
/// This is a heuristic, not a model tokenizer; real limits are enforced by the
/// provider layer through budget errors. It is monotone non-decreasing in text
/// length and `estimate(s + t) <= estimate(s) + estimate(t) + 1`.
pub fn estimate_tokens(text: &str) -> usize {
    estimate_tokens_for_chars(text.chars().count())
}

fn estimate_tokens_for_chars(chars: usize) -> usize {
    chars.div_ceil(4)
}

/// Walks `root` and collects every file matching any of `include_patterns`
/// (glob syntax; a pattern without `/` matches against the file name as well
/// as the relative path). Unreadable files are recorded in
/// [`CodeCorpus::skipped`] and the walk continues.
pub fn collect_sources(
    root: impl AsRef<Path>,
    include_patterns: &[String],
) -> Result<CodeCorpus, IngestError> {
    let root = root.as_ref();
    if !root.is_dir() {
        return Err(IngestError::RootNotFound(root.to_path_buf()));
    }
    if include_patterns.is_empty() {
        return Err(IngestError::NoPatterns);
    }
    let globs = build_globset(include_patterns)?;

    let mut files = Vec::new();
    let mut skipped = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = match entry {
            Ok(e) => e,
            Err(e) => {
                let path = e
                    .path()
                    .map(|p| relative_path(root, p))
                    .unwrap_or_else(|| "<unknown>".to_string());
                skipped.push(SkippedFile {
                    path,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = relative_path(root, entry.path());
        let name_match = entry
            .file_name()
            .to_str()
            .is_some_and(|n| globs.is_match(n));
        if !globs.is_match(&rel) && !name_match {
            continue;
        }
        match fs::read_to_string(entry.path()) {
            Ok(content) => files.push(SourceFile::new(rel, content)),
            Err(e) => skipped.push(SkippedFile {
                path: rel,
                reason: e.to_string(),
            }),
        }
    }

    // The walk is already name-sorted per directory, but nested paths need a
    // final global sort for the canonical order guarantee.
    files.sort_by(|a, b| a.path.cmp(&b.path));
    skipped.sort_by(|a, b| a.path.cmp(&b.path));
    let total_bytes = files.iter().map(|f| f.byte_length).sum();
    Ok(CodeCorpus {
        root: root.to_path_buf(),
        files,
        total_bytes,
        skipped,
    })
}

fn build_globset(patterns: &[String]) -> Result<GlobSet, IngestError> {
    let mut builder = GlobSetBuilder::new();
    for pattern in patterns {
        let glob = Glob::new(pattern).map_err(|source| IngestError::BadPattern {
            pattern: pattern.clone(),
            source,
        })?;
        builder.add(glob);
    }
    builder.build().map_err(|source| IngestError::BadPattern {
        pattern: patterns.join(", "),
        source,
    })
}

fn relative_path(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    let s = rel.to_string_lossy();
    if std::path::MAIN_SEPARATOR == '/' {
        s.into_owned()
    } else {
        s.replace(std::path::MAIN_SEPARATOR, "/")
    }
}

/// Joins corpus files into one blob, each file preceded by the delimiter
/// template with its `{path}` slot filled. The empty corpus yields empty text.
pub fn concatenate(corpus: &CodeCorpus, delimiter_template: &str) -> String {
    let mut out = String::with_capacity(corpus.total_bytes + corpus.files.len() * 32);
    for file in &corpus.files {
        out.push_str(&delimiter_template.replace("{path}", &file.path));
        out.push_str(&file.content);
    }
    out
}

/// Splits a file into chunks whose token estimates fit `token_budget`.
///
/// Splits happen on line boundaries only, so chunk contents concatenate back
/// to the original content byte-exactly (line terminators stay with their
/// lines). A single line that alone exceeds the budget becomes its own chunk.
///
/// # Panics
///
/// Panics if `token_budget` is zero.
pub fn chunk_file(file: &SourceFile, token_budget: usize) -> Vec<CodeChunk> {
    assert!(token_budget > 0, "token_budget must be positive");
    let mut chunks = Vec::new();
    let mut current = String::new();
    let mut current_chars = 0usize;
    let mut start_line = 1usize;
    let mut line_no = 0usize;

    for line in file.content.split_inclusive('\n') {
        line_no += 1;
        let line_chars = line.chars().count();
        if !current.is_empty()
            && estimate_tokens_for_chars(current_chars + line_chars) > token_budget
        {
            chunks.push(make_chunk(file, start_line, line_no - 1, &current, current_chars));
            current.clear();
            current_chars = 0;
            start_line = line_no;
        }
        current.push_str(line);
        current_chars += line_chars;
    }
    if !current.is_empty() {
        chunks.push(make_chunk(file, start_line, line_no, &current, current_chars));
    }
    chunks
}

fn make_chunk(
    file: &SourceFile,
    start_line: usize,
    end_line: usize,
    content: &str,
    chars: usize,
) -> CodeChunk {
    CodeChunk {
        file_path: file.path.clone(),
        start_line,
        end_line,
        content: content.to_string(),
        token_estimate: estimate_tokens_for_chars(chars),
    }
}

/// Recovers the set of paths a globset-filtered walk should produce; used by
/// tests as an independent oracle for [`collect_sources`].
pub fn walk_matching_paths(
    root: impl AsRef<Path>,
    include_patterns: &[String],
) -> Result<BTreeSet<String>, IngestError> {
    let root = root.as_ref();
    let globs = build_globset(include_patterns)?;
    let mut out = BTreeSet::new();
    collect_into(root, root, &globs, &mut out);
    Ok(out)
}

fn collect_into(root: &Path, dir: &Path, globs: &GlobSet, out: &mut BTreeSet<String>) {
    let entries = match fs::read_dir(dir) {
        Ok(e) => e,
        Err(_) => return,
    };
    for entry in entries.flatten() {
        let path = entry.path();
        if path.is_dir() {
            collect_into(root, &path, globs, out);
        } else if path.is_file() {
            let rel = relative_path(root, &path);
            let name_match = path
                .file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| globs.is_match(n));
            if globs.is_match(&rel) || name_match {
                out.insert(rel);
            }
        }
    }
}
