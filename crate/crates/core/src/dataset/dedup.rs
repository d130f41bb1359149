use std::collections::{BTreeSet, HashMap};

use crate::context::RepoSnapshot;
use crate::error::{Error, Result};
use crate::fim::FimExample;
use crate::similarity::ChunkSet;

pub const DEFAULT_DEDUP_THRESHOLD: f64 = 0.7;

fn check_threshold(threshold: f64) -> Result<()> {
    if threshold > 0.0 && threshold <= 1.0 {
        Ok(())
    } else {
        Err(Error::Invalid(format!(
            "dedup threshold {threshold} outside (0, 1]"
        )))
    }
}

/// Indices of items to keep. An item goes if its repo or path occurs in the
/// reference set, if its source file reaches `threshold` line IoU with a
/// reference file, or if it nearly duplicates an earlier kept item from a
/// different file.
pub fn dedup_indices<T>(
    items: &[T],
    example_of: impl Fn(&T) -> &FimExample,
    reference: &[RepoSnapshot],
    threshold: f64,
) -> Result<Vec<usize>> {
    check_threshold(threshold)?;
    let ref_names: BTreeSet<&str> = reference.iter().map(|r| r.name.as_str()).collect();
    let ref_sets: Vec<ChunkSet<'_>> = reference
        .iter()
        .flat_map(|r| r.files())
        .map(|f| ChunkSet::lines(&f.text))
        .collect();

    let sources: Vec<String> = items.iter().map(|t| example_of(t).source_text()).collect();
    let mut file_sets: HashMap<(&str, &str), ChunkSet<'_>> = HashMap::new();
    for (t, src) in items.iter().zip(&sources) {
        let ex = example_of(t);
        file_sets
            .entry((ex.repo(), ex.path.as_str()))
            .or_insert_with(|| ChunkSet::lines(src));
    }

    let mut kept = Vec::new();
    let mut kept_files: Vec<(&str, &str)> = Vec::new();
    for (i, t) in items.iter().enumerate() {
        let ex = example_of(t);
        let file = (ex.repo(), ex.path.as_str());
        if ref_names.contains(ex.repo()) || reference.iter().any(|r| r.contains(&ex.path)) {
            continue;
        }
        let set = &file_sets[&file];
        if ref_sets.iter().any(|r| set.iou(r).value() >= threshold) {
            continue;
        }
        let duplicate = kept_files
            .iter()
            .any(|other| *other != file && set.iou(&file_sets[other]).value() >= threshold);
        if duplicate {
            continue;
        }
        if !kept_files.contains(&file) {
            kept_files.push(file);
        }
        kept.push(i);
    }
    Ok(kept)
}

pub fn dedup_leakage(
    examples: Vec<FimExample>,
    reference: &[RepoSnapshot],
    threshold: f64,
) -> Result<Vec<FimExample>> {
    let keep = dedup_indices(&examples, |e| e, reference, threshold)?;
    let keep: BTreeSet<usize> = keep.into_iter().collect();
    Ok(examples
        .into_iter()
        .enumerate()
        .filter(|(i, _)| keep.contains(i))
        .map(|(_, e)| e)
        .collect())
}
