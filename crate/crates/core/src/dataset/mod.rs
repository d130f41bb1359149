//! Benchmark construction: ingest repositories, split, filter, stratify,
//! deduplicate, attach context and persist.

mod dedup;
mod filter;
mod sample;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::context::{self, ContextBundle, ContextConfig, CursorQuery, RepoSnapshot};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fim::{split_scope_aware, BoundaryWeights, FimExample};
use crate::lexing::ProfileRegistry;

pub use dedup::{dedup_indices, dedup_leakage, DEFAULT_DEDUP_THRESHOLD};
pub use filter::{
    class_mass, heuristic_filter, judge_filter, AcceptAll, ClassMass, FilterThresholds,
    FilterVerdict, JudgeBackend, Reason, RejectAll, Scripted, ScriptedVerdict,
};
pub use sample::{allocate, stratified_sample};

pub const DATASET_FILE: &str = "dataset.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const UNKNOWN_STRATUM: &str = "unknown";

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JudgeConfig {
    #[default]
    AcceptAll,
    RejectAll,
    Scripted {
        path: PathBuf,
    },
}

impl JudgeConfig {
    pub fn backend(&self) -> Result<Box<dyn JudgeBackend>> {
        Ok(match self {
            JudgeConfig::AcceptAll => Box::new(AcceptAll),
            JudgeConfig::RejectAll => Box::new(RejectAll),
            JudgeConfig::Scripted { path } => Box::new(Scripted::load(path)?),
        })
    }
}

/// Bucket bounds for stratification. Metadata comes from the per-repo
/// metadata file (`topic`, `age_years`, `stars`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrataConfig {
    /// Accepted topics; anything else is `unknown`. Empty accepts all.
    pub topics: Vec<String>,
    pub age_buckets: Vec<f64>,
    pub star_buckets: Vec<f64>,
}

impl Default for StrataConfig {
    fn default() -> Self {
        StrataConfig {
            topics: Vec::new(),
            age_buckets: vec![1.0, 3.0, 5.0],
            star_buckets: vec![10.0, 100.0, 1000.0],
        }
    }
}

fn bucket(value: Option<&String>, bounds: &[f64]) -> String {
    let Some(v) = value.and_then(|s| s.trim().parse::<f64>().ok()) else {
        return UNKNOWN_STRATUM.into();
    };
    match bounds.iter().position(|&b| v < b) {
        Some(0) => format!("<{}", bounds[0]),
        Some(i) => format!("{}-{}", bounds[i - 1], bounds[i]),
        None if bounds.is_empty() => "all".into(),
        None => format!(">={}", bounds[bounds.len() - 1]),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StratumKey {
    pub topic: String,
    pub age: String,
    pub popularity: String,
    pub role: String,
    pub split: String,
}

impl StratumKey {
    pub fn of(example: &FimExample, strata: &StrataConfig) -> Self {
        let meta = &example.metadata;
        let topic = meta
            .get("topic")
            .filter(|t| strata.topics.is_empty() || strata.topics.contains(t))
            .cloned()
            .unwrap_or_else(|| UNKNOWN_STRATUM.into());
        StratumKey {
            topic,
            age: bucket(meta.get("age_years"), &strata.age_buckets),
            popularity: bucket(meta.get("stars"), &strata.star_buckets),
            role: meta
                .get("role")
                .cloned()
                .unwrap_or_else(|| UNKNOWN_STRATUM.into()),
            split: example.split_strategy.as_str().into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub repos: Vec<PathBuf>,
    /// Repositories the benchmark must not overlap with.
    pub reference_repos: Vec<PathBuf>,
    /// Restrict to these language ids; empty keeps every known language.
    pub languages: Vec<String>,
    pub examples_per_file: usize,
    /// Target size after sampling; `None` keeps every survivor.
    pub quota: Option<usize>,
    pub dedup_threshold: f64,
    pub thresholds: FilterThresholds,
    pub weights: BoundaryWeights,
    pub strata: StrataConfig,
    pub judge: JudgeConfig,
    pub context: ContextConfig,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            repos: Vec::new(),
            reference_repos: Vec::new(),
            languages: Vec::new(),
            examples_per_file: 1,
            quota: None,
            dedup_threshold: DEFAULT_DEDUP_THRESHOLD,
            thresholds: FilterThresholds::default(),
            weights: BoundaryWeights::default(),
            strata: StrataConfig::default(),
            judge: JudgeConfig::AcceptAll,
            context: ContextConfig::default(),
        }
    }
}

impl DatasetConfig {
    pub fn validate(&self, registry: &ProfileRegistry) -> Result<()> {
        if self.repos.is_empty() {
            return Err(Error::Config("dataset config names no repositories".into()));
        }
        if self.examples_per_file == 0 {
            return Err(Error::Config("examples_per_file must be at least 1".into()));
        }
        for lang in &self.languages {
            registry.get(lang)?;
        }
        self.weights.validate()?;
        self.context.validate()?;
        if !(self.dedup_threshold > 0.0 && self.dedup_threshold <= 1.0) {
            return Err(Error::Config(format!(
                "dedup_threshold {} outside (0, 1]",
                self.dedup_threshold
            )));
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }
}

/// Example counts after each pipeline stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StageCounts {
    /// Files read from the repositories.
    pub ingested: usize,
    /// Files in an accepted language.
    pub eligible: usize,
    pub split: usize,
    pub heuristic_filter: usize,
    pub judge_filter: usize,
    pub sampled: usize,
    pub deduplicated: usize,
}

impl fmt::Display for StageCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "ingested={} eligible={} split={} heuristic_filter={} judge_filter={} sampled={} deduplicated={}",
            self.ingested,
            self.eligible,
            self.split,
            self.heuristic_filter,
            self.judge_filter,
            self.sampled,
            self.deduplicated
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub id: String,
    pub example: FimExample,
    pub context: ContextBundle,
}

/// `repo:path:start-end`, with the middle's byte span.
pub fn example_id(example: &FimExample) -> String {
    let (a, b) = example.middle_span();
    format!("{}:{}:{a}-{b}", example.repo(), example.path)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepoProvenance {
    pub name: String,
    pub files: usize,
    /// SHA-256 over sorted paths and contents.
    pub digest: String,
    pub metadata: BTreeMap<String, String>,
}

impl RepoProvenance {
    pub fn of(repo: &RepoSnapshot) -> Self {
        let mut h = Sha256::new();
        for f in repo.files() {
            h.update(f.path.as_bytes());
            h.update([0]);
            h.update(f.text.as_bytes());
            h.update([0]);
        }
        RepoProvenance {
            name: repo.name.clone(),
            files: repo.len(),
            digest: hex::encode(h.finalize()),
            metadata: repo.metadata.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub counts: StageCounts,
    pub source_repos: Vec<RepoProvenance>,
    pub reference_repos: Vec<RepoProvenance>,
    pub config: DatasetConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkDataset {
    pub entries: Vec<DatasetEntry>,
    pub manifest: Manifest,
}

/// Seed for one draw on one file, derived from the run seed.
pub fn derive_seed(seed: u64, parts: &[&[u8]]) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

fn load_repos(paths: &[PathBuf], registry: &ProfileRegistry) -> Result<Vec<RepoSnapshot>> {
    let repos = paths
        .iter()
        .map(|p| RepoSnapshot::load(p, registry))
        .collect::<Result<Vec<_>>>()?;
    let mut names = BTreeSet::new();
    for r in &repos {
        if !names.insert(r.name.as_str()) {
            return Err(Error::Config(format!(
                "two repositories are named `{}`",
                r.name
            )));
        }
    }
    Ok(repos)
}

pub fn build(
    config: &DatasetConfig,
    registry: &ProfileRegistry,
    seed: u64,
    exec: Execution,
) -> Result<BenchmarkDataset> {
    config.validate(registry)?;
    let judge = config.judge.backend()?;
    let repos = load_repos(&config.repos, registry)?;
    let reference = load_repos(&config.reference_repos, registry)?;
    build_from(
        config,
        registry,
        &repos,
        &reference,
        judge.as_ref(),
        seed,
        exec,
    )
}

/// [`build`] over already loaded repositories with an explicit judge.
pub fn build_from(
    config: &DatasetConfig,
    registry: &ProfileRegistry,
    repos: &[RepoSnapshot],
    reference: &[RepoSnapshot],
    judge: &dyn JudgeBackend,
    seed: u64,
    exec: Execution,
) -> Result<BenchmarkDataset> {
    for lang in &config.languages {
        registry.get(lang)?;
    }
    let mut counts = StageCounts::default();
    let wanted = |lang: &str| {
        registry.get(lang).is_ok()
            && (config.languages.is_empty() || config.languages.iter().any(|l| l == lang))
    };
    let files: Vec<_> = repos.iter().flat_map(|r| r.files()).collect();
    counts.ingested = files.len();
    let files: Vec<_> = files.into_iter().filter(|f| wanted(&f.language)).collect();
    counts.eligible = files.len();

    // split and heuristic filter per file
    let per_file: Vec<(usize, Vec<FimExample>)> = exec.map(&files, |file| {
        let profile = registry
            .get(&file.language)
            .expect("eligible files have a profile");
        let repo = file.metadata.get("repo").map_or("", String::as_str);
        let mut seen = BTreeSet::new();
        let mut split = 0;
        let mut kept = Vec::new();
        for i in 0..config.examples_per_file {
            let s = derive_seed(
                seed,
                &[
                    b"split",
                    repo.as_bytes(),
                    file.path.as_bytes(),
                    &(i as u64).to_le_bytes(),
                ],
            );
            let Ok(ex) = split_scope_aware(file, profile, &config.weights, s) else {
                continue;
            };
            if !seen.insert(ex.middle_span()) {
                continue;
            }
            split += 1;
            if heuristic_filter(&ex, profile, &config.thresholds).keep {
                kept.push(ex);
            }
        }
        (split, kept)
    });
    counts.split = per_file.iter().map(|(n, _)| n).sum();
    let candidates: Vec<FimExample> = per_file.into_iter().flat_map(|(_, v)| v).collect();
    counts.heuristic_filter = candidates.len();

    let verdicts = exec.map(&candidates, |ex| judge_filter(&example_id(ex), ex, judge));
    let mut judged = Vec::with_capacity(candidates.len());
    for (ex, verdict) in candidates.into_iter().zip(verdicts) {
        if verdict?.keep {
            judged.push(ex);
        }
    }
    counts.judge_filter = judged.len();

    let quota = config.quota.map_or(judged.len(), |q| q.min(judged.len()));
    let sampled = stratified_sample(
        &judged,
        |ex| StratumKey::of(ex, &config.strata),
        quota,
        derive_seed(seed, &[b"sample"]),
    )?;
    counts.sampled = sampled.len();

    let unique = dedup_leakage(sampled, reference, config.dedup_threshold)?;
    counts.deduplicated = unique.len();
    if unique.is_empty() {
        return Err(Error::NoSurvivors(counts));
    }

    let by_name: BTreeMap<&str, &RepoSnapshot> =
        repos.iter().map(|r| (r.name.as_str(), r)).collect();
    let entries = exec.map(&unique, |ex| -> Result<DatasetEntry> {
        let repo = by_name[ex.repo()];
        let profile = registry.get(&ex.language)?;
        let query = CursorQuery::for_example(ex, config.context.query_window)?;
        // sequential inside: the outer map already spreads examples
        let bundle = context::collect(
            repo,
            &query,
            &config.context,
            &[],
            profile,
            Execution::Sequential,
        )?;
        Ok(DatasetEntry {
            id: example_id(ex),
            example: ex.clone(),
            context: bundle,
        })
    });
    let entries = entries.into_iter().collect::<Result<Vec<_>>>()?;

    Ok(BenchmarkDataset {
        entries,
        manifest: Manifest {
            tool_version: env!("CARGO_PKG_VERSION").into(),
            config_hash: config.hash(),
            seed,
            counts,
            source_repos: repos.iter().map(RepoProvenance::of).collect(),
            reference_repos: reference.iter().map(RepoProvenance::of).collect(),
            config: config.clone(),
        },
    })
}

impl BenchmarkDataset {
    /// Write `dataset.jsonl` and `manifest.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_entries(&dir.join(DATASET_FILE), &self.entries)?;
        let path = dir.join(MANIFEST_FILE);
        let mut json = serde_json::to_string_pretty(&self.manifest)?;
        json.push('\n');
        std::fs::write(&path, json).map_err(|e| Error::io(&path, e))
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let src = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: Manifest = serde_json::from_str(&src)?;
        if manifest.config.hash() != manifest.config_hash {
            return Err(Error::Invalid(format!(
                "{}: config hash does not match the recorded config",
                path.display()
            )));
        }
        Ok(BenchmarkDataset {
            entries: read_entries(&dir.join(DATASET_FILE))?,
            manifest,
        })
    }
}

pub fn write_entries(path: &Path, entries: &[DatasetEntry]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    for entry in entries {
        serde_json::to_writer(&mut out, entry)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Entries from a JSONL file; blank lines are skipped and ids must be unique.
pub fn read_entries(path: &Path) -> Result<Vec<DatasetEntry>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    let mut ids = BTreeSet::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: DatasetEntry = serde_json::from_str(&line)
            .map_err(|e| Error::Invalid(format!("{}:{}: {e}", path.display(), n + 1)))?;
        if !ids.insert(entry.id.clone()) {
            return Err(Error::Invalid(format!(
                "{}: duplicate example id `{}`",
                path.display(),
                entry.id
            )));
        }
        out.push(entry);
    }
    Ok(out)
}
