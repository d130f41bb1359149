//! Project-level context collection: same-directory IoU, path distance and
//! sliding-window retrieval.

mod repo;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::lexing::{Chunking, LanguageProfile};
use crate::similarity::ChunkSet;

use repo::parent_dir;
pub use repo::{
    file_role, normalize_path, RepoSnapshot, SourceFile, MAX_FILE_BYTES, REPO_META_FILE,
    UNKNOWN_LANGUAGE,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextChunk {
    pub path: String,
    /// 1-based, inclusive.
    pub start_line: usize,
    pub end_line: usize,
    pub text: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryDescriptor {
    pub path: String,
    pub cursor: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextBundle {
    pub strategy: String,
    pub query: QueryDescriptor,
    pub chunks: Vec<ContextChunk>,
}

impl ContextBundle {
    pub fn empty(path: &str, cursor: usize) -> Self {
        ContextBundle {
            strategy: "none".into(),
            query: QueryDescriptor {
                path: path.into(),
                cursor,
            },
            chunks: Vec::new(),
        }
    }

    fn sort_chunks(&mut self) {
        sort_chunks(&mut self.chunks);
    }
}

/// Non-increasing score, ties by `(path, start_line)`.
pub fn sort_chunks(chunks: &mut [ContextChunk]) {
    chunks.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.path.cmp(&b.path))
            .then_with(|| a.start_line.cmp(&b.start_line))
    });
}

/// The editor state a context request is made for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CursorQuery {
    pub path: String,
    /// Character offset of the caret in `file_text`.
    pub cursor: usize,
    /// The query file as the user sees it.
    pub file_text: String,
    /// `window` lines centred on the caret line.
    pub window_text: String,
}

impl CursorQuery {
    pub fn new(path: &str, file_text: &str, cursor: usize, window: usize) -> Result<Self> {
        let path = normalize_path(path)?;
        let total_chars = file_text.chars().count();
        if cursor > total_chars {
            return Err(Error::Invalid(format!(
                "cursor {cursor} is past the end of `{path}` ({total_chars} chars)"
            )));
        }
        let byte = file_text
            .char_indices()
            .nth(cursor)
            .map_or(file_text.len(), |(i, _)| i);
        let cursor_line = file_text[..byte].matches('\n').count();
        Ok(CursorQuery {
            window_text: centered_window(file_text, cursor_line, window.max(1)),
            path,
            cursor,
            file_text: file_text.to_string(),
        })
    }

    /// Query for a FIM example: the file without its middle, caret at the gap.
    pub fn for_example(example: &crate::fim::FimExample, window: usize) -> Result<Self> {
        let text = format!("{}{}", example.prefix, example.suffix);
        Self::new(&example.path, &text, example.prefix.chars().count(), window)
    }

    pub fn descriptor(&self) -> QueryDescriptor {
        QueryDescriptor {
            path: self.path.clone(),
            cursor: self.cursor,
        }
    }
}

fn centered_window(text: &str, line: usize, window: usize) -> String {
    let lines: Vec<&str> = text.split_inclusive('\n').collect();
    if lines.len() <= window {
        return text.to_string();
    }
    let line = line.min(lines.len() - 1);
    let start = line.saturating_sub(window / 2).min(lines.len() - window);
    lines[start..start + window].concat()
}

fn whole_file_chunk(file: &SourceFile, score: f64) -> ContextChunk {
    ContextChunk {
        path: file.path.clone(),
        start_line: 1,
        end_line: file.line_count().max(1),
        text: file.text.clone(),
        score,
    }
}

/// Siblings of the query file ranked by line IoU against it.
pub fn strategy_iou(
    repo: &RepoSnapshot,
    query: &CursorQuery,
    k: usize,
    exec: Execution,
) -> ContextBundle {
    let dir = parent_dir(&query.path);
    let query_lines = ChunkSet::lines(&query.file_text);
    let siblings: Vec<&SourceFile> = repo
        .files()
        .filter(|f| f.dir() == dir && f.path != query.path)
        .collect();
    let mut chunks: Vec<ContextChunk> = exec.map(&siblings, |file| {
        let score = ChunkSet::lines(&file.text).iou(&query_lines).value();
        whole_file_chunk(file, score)
    });
    sort_chunks(&mut chunks);
    chunks.truncate(k);
    ContextBundle {
        strategy: "iou".into(),
        query: query.descriptor(),
        chunks,
    }
}

fn dir_components(dir: &str) -> Vec<&str> {
    if dir.is_empty() {
        Vec::new()
    } else {
        dir.split('/').collect()
    }
}

/// Edges between the two files' directories in the directory tree.
pub fn path_distance(repo: &RepoSnapshot, from: &str, to: &str) -> Result<usize> {
    let a = repo.get(from)?;
    let b = repo.get(to)?;
    Ok(dir_distance(a.dir(), b.dir()))
}

pub(crate) fn dir_distance(a: &str, b: &str) -> usize {
    let a = dir_components(a);
    let b = dir_components(b);
    let common = a.iter().zip(&b).take_while(|(x, y)| x == y).count();
    a.len() + b.len() - 2 * common
}

/// Directory tree of a snapshot: child directories and files per directory.
struct DirTree<'a> {
    children: BTreeMap<&'a str, BTreeSet<&'a str>>,
    files: BTreeMap<&'a str, Vec<&'a str>>,
}

impl<'a> DirTree<'a> {
    fn new(repo: &'a RepoSnapshot) -> Self {
        let mut tree = DirTree {
            children: BTreeMap::new(),
            files: BTreeMap::new(),
        };
        tree.children.entry("").or_default();
        for file in repo.files() {
            let mut dir = file.dir();
            tree.files.entry(dir).or_default().push(&file.path);
            while !dir.is_empty() {
                let parent = parent_dir(dir);
                if !tree.children.entry(parent).or_default().insert(dir) {
                    break;
                }
                dir = parent;
            }
        }
        tree
    }

    fn neighbours(&self, dir: &'a str) -> impl Iterator<Item = &'a str> + '_ {
        let parent = (!dir.is_empty()).then(|| parent_dir(dir));
        parent
            .into_iter()
            .chain(self.children.get(dir).into_iter().flatten().copied())
    }
}

/// Files in breadth-first order over the directory tree, starting at the
/// query file's directory and walking both up and down. Files at the same
/// distance come out in lexicographic order.
pub fn strategy_path_distance(
    repo: &RepoSnapshot,
    query: &CursorQuery,
    max_files: usize,
) -> Vec<String> {
    let tree = DirTree::new(repo);
    let start = parent_dir(&query.path);
    let mut out = Vec::new();
    let mut seen: BTreeSet<&str> = BTreeSet::from([start]);
    let mut level: Vec<&str> = vec![start];
    let mut queue = VecDeque::new();
    while !level.is_empty() && out.len() < max_files {
        let mut files: Vec<&str> = level
            .iter()
            .flat_map(|d| tree.files.get(d).into_iter().flatten().copied())
            .filter(|p| *p != query.path)
            .collect();
        files.sort_unstable();
        for f in files {
            if out.len() == max_files {
                break;
            }
            out.push(f.to_string());
        }
        queue.extend(level.drain(..));
        while let Some(dir) = queue.pop_front() {
            for next in tree.neighbours(dir) {
                if seen.insert(next) {
                    level.push(next);
                }
            }
        }
    }
    out
}

/// Same as [`strategy_path_distance`] but as a bundle of whole files scored
/// `1 / (1 + distance)`.
pub fn path_distance_bundle(
    repo: &RepoSnapshot,
    query: &CursorQuery,
    max_files: usize,
) -> ContextBundle {
    let from = parent_dir(&query.path);
    let chunks = strategy_path_distance(repo, query, max_files)
        .iter()
        .filter_map(|p| repo.get(p).ok())
        .map(|f| whole_file_chunk(f, 1.0 / (1.0 + dir_distance(from, f.dir()) as f64)))
        .collect();
    let mut bundle = ContextBundle {
        strategy: "path".into(),
        query: query.descriptor(),
        chunks,
    };
    bundle.sort_chunks();
    bundle
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RagParams {
    pub window: usize,
    pub stride: usize,
    pub k: usize,
    pub max_files: usize,
}

impl Default for RagParams {
    fn default() -> Self {
        RagParams {
            window: 20,
            stride: 10,
            k: 16,
            max_files: 64,
        }
    }
}

impl RagParams {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 || self.stride == 0 || self.stride > self.window {
            return Err(Error::InvalidWindow {
                window: self.window,
                stride: self.stride,
            });
        }
        Ok(())
    }
}

/// A window of lines: `[start, end)` 0-based line indices plus byte range.
#[derive(Debug, Clone, Copy)]
struct LineWindow {
    start: usize,
    end: usize,
    bytes: (usize, usize),
}

/// Overlapping windows of `window` lines advancing by `stride`; the last
/// window reaches the end of the file.
fn sliding_windows(text: &str, window: usize, stride: usize) -> Vec<LineWindow> {
    let mut offsets = vec![0];
    offsets.extend(text.match_indices('\n').map(|(i, _)| i + 1));
    if *offsets.last().unwrap() != text.len() {
        offsets.push(text.len());
    }
    let lines = offsets.len() - 1;
    let mut out = Vec::new();
    let mut start = 0;
    while start < lines {
        let end = (start + window).min(lines);
        out.push(LineWindow {
            start,
            end,
            bytes: (offsets[start], offsets[end]),
        });
        if end == lines {
            break;
        }
        start += stride;
    }
    out
}

/// Sliding-window chunk candidates for RAG, query file excluded. Recent files
/// come first, then path-distance order.
pub fn rag_candidates(
    repo: &RepoSnapshot,
    query: &CursorQuery,
    max_files: usize,
    recent: &[String],
) -> Result<Vec<String>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for path in recent {
        let file = repo.get(path)?;
        if file.path != query.path && seen.insert(file.path.clone()) {
            out.push(file.path.clone());
        }
    }
    for path in strategy_path_distance(repo, query, max_files) {
        if seen.insert(path.clone()) {
            out.push(path);
        }
    }
    Ok(out)
}

/// Score every window of every candidate file by subword IoU against the
/// caret window, keep the global top `k`, and merge overlapping selections
/// from the same file (max score wins).
pub fn strategy_rag(
    repo: &RepoSnapshot,
    query: &CursorQuery,
    params: &RagParams,
    recent: &[String],
    profile: &LanguageProfile,
    exec: Execution,
) -> Result<ContextBundle> {
    params.validate()?;
    let candidates = rag_candidates(repo, query, params.max_files, recent)?;
    let query_set = ChunkSet::new(&query.window_text, Chunking::Subword, profile);

    let per_file: Vec<Vec<ContextChunk>> = exec.map(&candidates, |path| {
        let file = repo
            .get(path)
            .expect("candidate paths come from the snapshot");
        sliding_windows(&file.text, params.window, params.stride)
            .into_iter()
            .map(|w| {
                let text = &file.text[w.bytes.0..w.bytes.1];
                let score = ChunkSet::new(text, Chunking::Subword, profile)
                    .iou(&query_set)
                    .value();
                ContextChunk {
                    path: file.path.clone(),
                    start_line: w.start + 1,
                    end_line: w.end,
                    text: text.to_string(),
                    score,
                }
            })
            .collect()
    });
    let mut scored: Vec<ContextChunk> = per_file.into_iter().flatten().collect();
    sort_chunks(&mut scored);
    scored.truncate(params.k);

    let chunks = merge_overlapping(repo, scored);
    let mut bundle = ContextBundle {
        strategy: "rag".into(),
        query: query.descriptor(),
        chunks,
    };
    bundle.sort_chunks();
    Ok(bundle)
}

/// Merge chunks from the same file whose line ranges overlap.
pub fn merge_overlapping(repo: &RepoSnapshot, chunks: Vec<ContextChunk>) -> Vec<ContextChunk> {
    let mut by_file: BTreeMap<String, Vec<ContextChunk>> = BTreeMap::new();
    for c in chunks {
        by_file.entry(c.path.clone()).or_default().push(c);
    }
    let mut out = Vec::new();
    for (path, mut list) in by_file {
        list.sort_by_key(|c| (c.start_line, c.end_line));
        let mut merged: Vec<ContextChunk> = Vec::new();
        for c in list {
            match merged.last_mut() {
                Some(last) if c.start_line <= last.end_line => {
                    last.end_line = last.end_line.max(c.end_line);
                    last.score = last.score.max(c.score);
                }
                _ => merged.push(c),
            }
        }
        let file = repo.get(&path).expect("chunks come from the snapshot");
        for mut c in merged {
            c.text = line_range_text(&file.text, c.start_line, c.end_line).to_string();
            out.push(c);
        }
    }
    out
}

/// Text of 1-based inclusive lines `start..=end`, newlines included.
pub fn line_range_text(text: &str, start: usize, end: usize) -> &str {
    let mut offsets = vec![0];
    offsets.extend(text.match_indices('\n').map(|(i, _)| i + 1));
    if *offsets.last().unwrap() != text.len() {
        offsets.push(text.len());
    }
    let last = offsets.len() - 1;
    let a = offsets[(start.max(1) - 1).min(last)];
    let b = offsets[end.min(last)];
    &text[a..b]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    None,
    Iou,
    Path,
    #[default]
    Rag,
}

impl std::str::FromStr for StrategyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(StrategyKind::None),
            "iou" => Ok(StrategyKind::Iou),
            "path" => Ok(StrategyKind::Path),
            "rag" => Ok(StrategyKind::Rag),
            other => Err(Error::Invalid(format!(
                "unknown context strategy `{other}` (expected none, iou, path or rag)"
            ))),
        }
    }
}

/// Strategy choice and its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContextConfig {
    pub strategy: StrategyKind,
    pub k: usize,
    pub max_files: usize,
    /// Lines of the query file around the caret used as the RAG query.
    pub query_window: usize,
    /// Lines per retrieved window.
    pub chunk_window: usize,
    pub stride: usize,
}

impl Default for ContextConfig {
    fn default() -> Self {
        let rag = RagParams::default();
        ContextConfig {
            strategy: StrategyKind::Rag,
            k: rag.k,
            max_files: rag.max_files,
            query_window: rag.window,
            chunk_window: rag.window,
            stride: rag.stride,
        }
    }
}

impl ContextConfig {
    pub fn rag_params(&self) -> RagParams {
        RagParams {
            window: self.chunk_window,
            stride: self.stride,
            k: self.k,
            max_files: self.max_files,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.strategy == StrategyKind::Rag {
            self.rag_params().validate()?;
        }
        Ok(())
    }
}

/// Run the configured strategy for `query`.
pub fn collect(
    repo: &RepoSnapshot,
    query: &CursorQuery,
    config: &ContextConfig,
    recent: &[String],
    profile: &LanguageProfile,
    exec: Execution,
) -> Result<ContextBundle> {
    config.validate()?;
    Ok(match config.strategy {
        StrategyKind::None => ContextBundle::empty(&query.path, query.cursor),
        StrategyKind::Iou => strategy_iou(repo, query, config.k, exec),
        StrategyKind::Path => {
            let mut bundle = path_distance_bundle(repo, query, config.max_files);
            bundle.chunks.truncate(config.k);
            bundle
        }
        StrategyKind::Rag => {
            strategy_rag(repo, query, &config.rag_params(), recent, profile, exec)?
        }
    })
}
