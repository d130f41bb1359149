use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maps a real-valued metric score to an ordinal bin: the number of
/// thresholds at or below the score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Binning {
    pub thresholds: Vec<f64>,
}

impl Binning {
    pub fn new(mut thresholds: Vec<f64>) -> Self {
        thresholds.sort_by(f64::total_cmp);
        Binning { thresholds }
    }

    pub fn bin(&self, score: f64) -> u32 {
        self.thresholds.iter().filter(|&&t| t <= score).count() as u32
    }
}

/// Cohen's kappa between two label vectors.
pub fn cohen_kappa(a: &[u32], b: &[u32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Invalid(format!(
            "label vectors differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::Invalid("kappa needs at least two items".into()));
    }
    // counts stay integral so the result is a single rounded division
    let n = a.len() as u64;
    let mut margin_a: BTreeMap<u32, u64> = BTreeMap::new();
    let mut margin_b: BTreeMap<u32, u64> = BTreeMap::new();
    let mut agree = 0u64;
    for (&x, &y) in a.iter().zip(b) {
        *margin_a.entry(x).or_default() += 1;
        *margin_b.entry(y).or_default() += 1;
        agree += u64::from(x == y);
    }
    let chance: u64 = margin_a
        .iter()
        .map(|(k, ca)| ca * margin_b.get(k).copied().unwrap_or(0))
        .sum();
    if chance == n * n {
        // a single shared category on both sides
        return Ok(if agree == n { 1.0 } else { 0.0 });
    }
    let num = (n * agree) as f64 - chance as f64;
    Ok(num / (n * n - chance) as f64)
}

/// Agreement between binned metric scores and ordinal human labels.
pub fn kappa_agreement(
    metric_scores: &[f64],
    human_labels: &[u32],
    binning: &Binning,
) -> Result<f64> {
    let binned: Vec<u32> = metric_scores.iter().map(|&s| binning.bin(s)).collect();
    cohen_kappa(&binned, human_labels)
}
