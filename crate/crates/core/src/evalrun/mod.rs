//! Evaluation driver: render, complete, score and persist per example.

mod backend;
mod report;

use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::DatasetEntry;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fim::{render_prompt, RenderedPrompt, SentinelSet};
use crate::lexing::{truncate_to_scope, ProfileRegistry};
use crate::metrics::{score, MetricConfig, MetricResult};

pub use backend::{
    BackendKind, CompletionBackend, CompletionParams, HttpBackend, HttpConfig, ReplayStore,
    WireFields,
};
pub use report::{report, LanguageSummary, MetricReport, AVERAGE};

/// Share of failed examples above which the run itself fails.
pub const MAX_FAILURE_RATE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub id: String,
    pub language: String,
    pub backend: String,
    /// SHA-256 of the prompt text sent.
    pub prompt_digest: String,
    pub prompt_tokens: usize,
    pub completion: Option<String>,
    pub latency_ms: f64,
    pub metrics: Option<MetricResult>,
    pub failed: bool,
    pub error: Option<String>,
}

pub fn digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Cut at the first stop sequence, then optionally at the end of the scope
/// the caret sits in.
pub fn postprocess(
    text: &str,
    line_prefix: &str,
    params: &CompletionParams,
    profile: Option<&crate::lexing::LanguageProfile>,
) -> String {
    let cut = params
        .stop
        .iter()
        .filter(|s| !s.is_empty())
        .filter_map(|s| text.find(s.as_str()))
        .min()
        .unwrap_or(text.len());
    let text = &text[..cut];
    match profile {
        Some(p) if params.scope_truncate => truncate_to_scope(text, line_prefix, p).to_string(),
        _ => text.to_string(),
    }
}

/// Completion for one rendered example, post-processed.
pub fn complete(
    backend: &CompletionBackend,
    entry: &DatasetEntry,
    prompt: &RenderedPrompt,
    params: &CompletionParams,
    registry: &ProfileRegistry,
) -> Result<String> {
    let raw = backend.raw(&entry.id, &entry.example.middle, &prompt.text, params)?;
    let line_prefix = entry.example.prefix.rsplit('\n').next().unwrap_or("");
    let profile = registry.get(&entry.example.language).ok();
    Ok(postprocess(&raw, line_prefix, params, profile))
}

pub struct EvalSettings<'a> {
    pub sentinels: &'a SentinelSet,
    pub budget: usize,
    pub params: &'a CompletionParams,
    pub metrics: &'a MetricConfig,
    pub registry: &'a ProfileRegistry,
    pub exec: Execution,
}

fn evaluate_one(
    entry: &DatasetEntry,
    backend: &CompletionBackend,
    s: &EvalSettings<'_>,
) -> EvalRecord {
    let mut record = EvalRecord {
        id: entry.id.clone(),
        language: entry.example.language.clone(),
        backend: backend.name(),
        prompt_digest: String::new(),
        prompt_tokens: 0,
        completion: None,
        latency_ms: 0.0,
        metrics: None,
        failed: true,
        error: None,
    };
    let prompt = match render_prompt(&entry.example, &entry.context, s.sentinels, s.budget) {
        Ok(p) => p,
        Err(e) => {
            record.error = Some(e.to_string());
            return record;
        }
    };
    record.prompt_digest = digest(&prompt.text);
    record.prompt_tokens = prompt.tokens;
    let started = Instant::now();
    let completion = complete(backend, entry, &prompt, s.params, s.registry);
    record.latency_ms = started.elapsed().as_secs_f64() * 1000.0;
    let outcome =
        completion.and_then(|c| score(&c, &entry.example.middle, s.metrics).map(|m| (c, m)));
    match outcome {
        Ok((c, m)) => {
            record.completion = Some(c);
            record.metrics = Some(m);
            record.failed = false;
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    record
}

/// Evaluate every entry. Failures are recorded per example; the run fails
/// only when more than half of the examples fail. Records come back sorted
/// by id.
pub fn run_eval(
    entries: &[DatasetEntry],
    backend: &CompletionBackend,
    settings: &EvalSettings<'_>,
) -> Result<Vec<EvalRecord>> {
    if entries.is_empty() {
        return Err(Error::EmptyInput("dataset"));
    }
    settings.metrics.validate()?;
    settings.sentinels.validate()?;
    let mut records = settings
        .exec
        .map(entries, |e| evaluate_one(e, backend, settings));
    records.sort_by(|a, b| a.id.cmp(&b.id));
    let failed = records.iter().filter(|r| r.failed).count();
    if failed as f64 > MAX_FAILURE_RATE * records.len() as f64 {
        return Err(Error::TooManyFailures {
            failed,
            total: records.len(),
        });
    }
    Ok(records)
}

pub fn write_records(path: &Path, records: &[EvalRecord]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_records(path: &Path) -> Result<Vec<EvalRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| Error::Invalid(format!("{}:{}: {e}", path.display(), n + 1)))?,
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::ContextBundle;
    use crate::fim::{Boundary, FimExample, SplitStrategy};
    use std::collections::BTreeMap;

    fn entry(id: &str, lang: &str, prefix: &str, middle: &str, suffix: &str) -> DatasetEntry {
        DatasetEntry {
            id: id.into(),
            example: FimExample {
                path: "a".into(),
                prefix: prefix.into(),
                middle: middle.into(),
                suffix: suffix.into(),
                boundary_start: Boundary::LineStart,
                boundary_end: Boundary::LineStart,
                split_strategy: SplitStrategy::ScopeAware,
                language: lang.into(),
                metadata: BTreeMap::new(),
            },
            context: ContextBundle::empty("a", prefix.chars().count()),
        }
    }

    fn run(entries: &[DatasetEntry], backend: &CompletionBackend) -> Result<Vec<EvalRecord>> {
        let sentinels = SentinelSet::default();
        let params = CompletionParams::default();
        let metrics = MetricConfig::default();
        let registry = ProfileRegistry::builtin();
        let settings = EvalSettings {
            sentinels: &sentinels,
            budget: 8192,
            params: &params,
            metrics: &metrics,
            registry: &registry,
            exec: Execution::Parallel,
        };
        run_eval(entries, backend, &settings)
    }

    fn fixture() -> Vec<DatasetEntry> {
        vec![
            entry(
                "b",
                "python",
                "def f():\n",
                "    x = 1\n    return x\n",
                "\n",
            ),
            entry("a", "rust", "fn f() {\n", "    let y = 2;\n    y\n", "}\n"),
            entry("c", "python", "x = ", "g(\n  a,\n  b)\n", ""),
        ]
    }

    #[test]
    fn echo_is_perfect_and_sorted() {
        let records = run(&fixture(), &CompletionBackend::OracleEcho).unwrap();
        assert_eq!(
            records.iter().map(|r| r.id.as_str()).collect::<Vec<_>>(),
            ["a", "b", "c"]
        );
        for r in &records {
            let m = r.metrics.unwrap();
            assert_eq!((m.em, m.kk, m.chrf_pp), (1, 1.0, 100.0));
            assert_eq!(r.prompt_digest.len(), 64);
        }
    }

    #[test]
    fn empty_and_truncate_oracles() {
        let records = run(&fixture(), &CompletionBackend::OracleEmpty).unwrap();
        assert!(records.iter().all(|r| r.metrics.unwrap().kk == 0.0));
        let records = run(&fixture(), &CompletionBackend::OracleTruncate(1)).unwrap();
        let kk: Vec<f64> = records.iter().map(|r| r.metrics.unwrap().kk).collect();
        assert_eq!(kk, vec![0.5, 0.5, 1.0 / 3.0]);
    }

    #[test]
    fn failures_are_recorded_then_fatal() {
        let store = ReplayStore(BTreeMap::from([
            ("a".to_string(), "    let y = 2;\n".to_string()),
            ("b".to_string(), "    x = 1\n".to_string()),
        ]));
        let records = run(&fixture(), &CompletionBackend::Replay(store.clone())).unwrap();
        let c = records.iter().find(|r| r.id == "c").unwrap();
        assert!(c.failed && c.metrics.is_none());
        assert!(c
            .error
            .as_deref()
            .unwrap()
            .contains("no replayed completion"));

        let empty = CompletionBackend::Replay(ReplayStore::default());
        assert!(matches!(
            run(&fixture(), &empty),
            Err(Error::TooManyFailures {
                failed: 3,
                total: 3
            })
        ));
        assert!(run(&[], &CompletionBackend::OracleEcho).is_err());

        let again = run(&fixture(), &CompletionBackend::Replay(store)).unwrap();
        let metrics = |rs: &[EvalRecord]| rs.iter().map(|r| r.metrics).collect::<Vec<_>>();
        assert_eq!(metrics(&records), metrics(&again));
    }

    #[test]
    fn postprocessing() {
        let p = CompletionParams {
            stop: vec!["\n\n".into(), "#".into()],
            ..Default::default()
        };
        assert_eq!(postprocess("a\nb # c\n\nd", "", &p, None), "a\nb ");
        let rust = crate::lexing::LanguageProfile::rust();
        let p = CompletionParams {
            scope_truncate: true,
            ..Default::default()
        };
        assert_eq!(
            postprocess("    y\n}\nfn g() {}\n", "", &p, Some(&rust)),
            "    y\n"
        );
    }

    #[test]
    fn records_roundtrip() {
        let records = run(&fixture(), &CompletionBackend::OracleEcho).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        write_records(&path, &records).unwrap();
        assert_eq!(read_records(&path).unwrap(), records);
    }
}
