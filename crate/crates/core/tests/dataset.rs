mod common;

use std::collections::BTreeMap;

use common::{fixtures, FIXTURE_SEED};
use fimkit::context::RepoSnapshot;
use fimkit::dataset::{
    self, build, build_from, heuristic_filter, AcceptAll, BenchmarkDataset, DatasetConfig,
    JudgeConfig, Reason, RejectAll, Scripted, ScriptedVerdict, StageCounts,
};
use fimkit::fim::split_scope_aware;
use fimkit::lexing::ProfileRegistry;
use fimkit::similarity::ChunkSet;
use fimkit::{Error, Execution};

fn config() -> DatasetConfig {
    DatasetConfig {
        repos: vec![fixtures().join("repo12")],
        reference_repos: vec![fixtures().join("reference")],
        ..Default::default()
    }
}

fn survivors(ds: &BenchmarkDataset) -> Vec<&str> {
    ds.entries.iter().map(|e| e.example.path.as_str()).collect()
}

/// Hand trace of the 12-file fixture:
/// README.txt has no profile (11 eligible); src/empty.py cannot be split (10);
/// src/Banner.java is one block comment and src/blob.py one string literal
/// (8 after the heuristic filter); src/util/parse_copy.py duplicates
/// src/core/parse.py and src/util/table.py sits verbatim in the reference
/// repository (6 after dedup).
#[test]
fn fixture_attrition_matches_hand_trace() {
    let reg = ProfileRegistry::builtin();
    let ds = build(&config(), &reg, FIXTURE_SEED, Execution::Parallel).unwrap();
    assert_eq!(
        ds.manifest.counts,
        StageCounts {
            ingested: 12,
            eligible: 11,
            split: 10,
            heuristic_filter: 8,
            judge_filter: 8,
            sampled: 8,
            deduplicated: 6,
        }
    );
    assert_eq!(
        survivors(&ds),
        [
            "src/core/Stack.java",
            "src/core/parse.py",
            "src/core/queue.go",
            "src/util/math.rs",
            "src/util/strings.js",
            "test/test_math.py",
        ]
    );

    // the reasons behind each drop, checked directly
    let repo = RepoSnapshot::load(&fixtures().join("repo12"), &reg).unwrap();
    let weights = Default::default();
    let verdict = |path: &str| {
        let f = repo.get(path).unwrap();
        let p = reg.get(&f.language).unwrap();
        heuristic_filter(
            &split_scope_aware(f, p, &weights, 1).unwrap(),
            p,
            &Default::default(),
        )
    };
    assert_eq!(
        verdict("src/Banner.java").reasons,
        vec![Reason::CommentDominated]
    );
    assert_eq!(
        verdict("src/blob.py").reasons,
        vec![Reason::LiteralDominated]
    );
    let empty = repo.get("src/empty.py").unwrap();
    assert!(split_scope_aware(empty, reg.get("python").unwrap(), &weights, 1).is_err());
    let lines = |p: &str| ChunkSet::lines(&repo.get(p).unwrap().text).len();
    assert_eq!(lines("src/util/parse_copy.py"), lines("src/core/parse.py"));
    let reference = RepoSnapshot::load(&fixtures().join("reference"), &reg).unwrap();
    assert_eq!(
        reference.get("lib/render.py").unwrap().text,
        repo.get("src/util/table.py").unwrap().text
    );
}

#[test]
fn stage_counts_never_increase() {
    let reg = ProfileRegistry::builtin();
    for seed in 0..20 {
        let c = build(&config(), &reg, seed, Execution::Sequential)
            .unwrap()
            .manifest
            .counts;
        let chain = [
            c.eligible,
            c.split,
            c.heuristic_filter,
            c.judge_filter,
            c.sampled,
            c.deduplicated,
        ];
        assert!(c.ingested >= c.eligible);
        assert!(chain.windows(2).all(|w| w[0] >= w[1]), "{c}");
    }
}

#[test]
fn builds_are_byte_identical() {
    let reg = ProfileRegistry::builtin();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    build(&config(), &reg, 5, Execution::Parallel)
        .unwrap()
        .write(a.path())
        .unwrap();
    build(&config(), &reg, 5, Execution::Sequential)
        .unwrap()
        .write(b.path())
        .unwrap();
    for file in [dataset::DATASET_FILE, dataset::MANIFEST_FILE] {
        assert_eq!(
            std::fs::read(a.path().join(file)).unwrap(),
            std::fs::read(b.path().join(file)).unwrap(),
            "{file}"
        );
    }
    let back = BenchmarkDataset::read(a.path()).unwrap();
    assert_eq!(back.manifest.config_hash, config().hash());
    assert_eq!(back.entries.len(), back.manifest.counts.deduplicated);
}

#[test]
fn ids_are_unique_and_spans_match() {
    let reg = ProfileRegistry::builtin();
    let cfg = DatasetConfig {
        examples_per_file: 4,
        reference_repos: Vec::new(),
        ..config()
    };
    let ds = build(&cfg, &reg, 2, Execution::Parallel).unwrap();
    let mut seen = std::collections::BTreeSet::new();
    for e in &ds.entries {
        assert!(seen.insert((
            e.example.repo().to_string(),
            e.example.path.clone(),
            e.example.middle_span()
        )));
        assert_eq!(e.id, dataset::example_id(&e.example));
        assert_eq!(e.context.query.path, e.example.path);
    }
}

#[test]
fn judges_and_survivor_errors() {
    let reg = ProfileRegistry::builtin();
    let repos = vec![RepoSnapshot::load(&fixtures().join("repo12"), &reg).unwrap()];
    let cfg = config();
    match build_from(&cfg, &reg, &repos, &[], &RejectAll, 1, Execution::Parallel) {
        Err(Error::NoSurvivors(c)) => {
            assert_eq!(c.judge_filter, 0);
            assert!(c.heuristic_filter > 0);
        }
        other => panic!("expected NoSurvivors, got {other:?}"),
    }

    let all = build_from(
        &cfg,
        &reg,
        &repos,
        &[],
        &AcceptAll,
        FIXTURE_SEED,
        Execution::Parallel,
    )
    .unwrap();
    let first = all.entries[0].id.clone();
    let second = all.entries[1].id.clone();
    let script = Scripted(BTreeMap::from([(first.clone(), ScriptedVerdict::Reject)]));
    let ds = build_from(
        &cfg,
        &reg,
        &repos,
        &[],
        &script,
        FIXTURE_SEED,
        Execution::Parallel,
    )
    .unwrap();
    assert!(ds.entries.iter().all(|e| e.id != first));
    assert_eq!(
        ds.manifest.counts.judge_filter,
        all.manifest.counts.judge_filter - 1
    );

    let failing = Scripted(BTreeMap::from([(second, ScriptedVerdict::Fail)]));
    assert!(matches!(
        build_from(
            &cfg,
            &reg,
            &repos,
            &[],
            &failing,
            FIXTURE_SEED,
            Execution::Parallel
        ),
        Err(Error::Judge(_))
    ));
}

#[test]
fn config_driven_judge_and_quota() {
    let reg = ProfileRegistry::builtin();
    let cfg = DatasetConfig {
        judge: JudgeConfig::RejectAll,
        ..config()
    };
    assert!(matches!(
        build(&cfg, &reg, 1, Execution::Parallel),
        Err(Error::NoSurvivors(_))
    ));
    let cfg = DatasetConfig {
        quota: Some(3),
        reference_repos: Vec::new(),
        ..config()
    };
    let ds = build(&cfg, &reg, FIXTURE_SEED, Execution::Parallel).unwrap();
    assert_eq!(ds.manifest.counts.sampled, 3);
    let cfg = DatasetConfig {
        languages: vec!["cobol".into()],
        ..config()
    };
    let err = build(&cfg, &reg, 1, Execution::Parallel).unwrap_err();
    assert!(matches!(&err, Error::UnknownLanguage(l) if l == "cobol"));
    let cfg = DatasetConfig {
        languages: vec!["python".into()],
        reference_repos: Vec::new(),
        ..config()
    };
    let ds = build(&cfg, &reg, FIXTURE_SEED, Execution::Parallel).unwrap();
    assert!(ds.entries.iter().all(|e| e.example.language == "python"));
}
