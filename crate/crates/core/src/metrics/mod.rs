//! Completion scoring: exact match, chrF++, KK score, line statistics, and
//! telemetry and agreement aggregates.

mod chrf;
mod kappa;
mod telemetry;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::similarity::normalized_levenshtein_similarity;

pub use chrf::{chrf_pp, BETA, CHAR_ORDER, WORD_ORDER};
pub use kappa::{cohen_kappa, kappa_agreement, Binning};
pub use telemetry::{
    acceptance_rate, read_events, rocc, summarize, validate as validate_events, EventKind,
    TelemetryEvent, TelemetrySummary,
};

pub const DEFAULT_TAU: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KkDenominator {
    Completion,
    #[default]
    Max,
}

impl std::str::FromStr for KkDenominator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "completion" => Ok(KkDenominator::Completion),
            "max" => Ok(KkDenominator::Max),
            other => Err(Error::Invalid(format!(
                "unknown KK denominator `{other}` (expected completion or max)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricConfig {
    pub kk_tau: f64,
    pub kk_denominator: KkDenominator,
    pub normalize_em: bool,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            kk_tau: DEFAULT_TAU,
            kk_denominator: KkDenominator::Max,
            normalize_em: true,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        check_tau(self.kk_tau)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricResult {
    pub em: u8,
    pub chrf_pp: f64,
    pub kk: f64,
    pub completion_lines: usize,
    pub ground_truth_lines: usize,
}

/// Drops trailing whitespace on each line and blank lines at either end.
pub fn normalize(text: &str) -> String {
    let lines: Vec<&str> = text.lines().map(str::trim_end).collect();
    let start = lines
        .iter()
        .position(|l| !l.is_empty())
        .unwrap_or(lines.len());
    let end = lines
        .iter()
        .rposition(|l| !l.is_empty())
        .map_or(start, |i| i + 1);
    lines[start..end].join("\n")
}

pub fn exact_match(completion: &str, truth: &str, normalized: bool) -> u8 {
    let equal = if normalized {
        normalize(completion) == normalize(truth)
    } else {
        completion == truth
    };
    u8::from(equal)
}

/// Non-blank lines with trailing whitespace removed.
pub fn content_lines(text: &str) -> Vec<&str> {
    text.lines()
        .map(str::trim_end)
        .filter(|l| !l.trim().is_empty())
        .collect()
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidTau(tau))
    }
}

/// Length of the leading run of completion lines that each resemble some
/// truth line, over the chosen line count.
pub fn kk_score(
    completion: &str,
    truth: &str,
    tau: f64,
    denominator: KkDenominator,
) -> Result<f64> {
    check_tau(tau)?;
    let got = content_lines(completion);
    let want = content_lines(truth);
    match (got.is_empty(), want.is_empty()) {
        (true, true) => return Ok(1.0),
        (true, false) | (false, true) => return Ok(0.0),
        _ => {}
    }
    let matched = got
        .iter()
        .take_while(|line| {
            want.iter()
                .any(|t| normalized_levenshtein_similarity(line, t).value() >= tau)
        })
        .count();
    let denom = match denominator {
        KkDenominator::Completion => got.len(),
        KkDenominator::Max => got.len().max(want.len()),
    };
    Ok(matched as f64 / denom as f64)
}

pub fn score(completion: &str, truth: &str, config: &MetricConfig) -> Result<MetricResult> {
    let kk = kk_score(completion, truth, config.kk_tau, config.kk_denominator)?;
    let em = exact_match(completion, truth, config.normalize_em);
    let (chrf_c, chrf_t) = if config.normalize_em {
        (normalize(completion), normalize(truth))
    } else {
        (completion.to_string(), truth.to_string())
    };
    Ok(MetricResult {
        em,
        chrf_pp: chrf_pp(&chrf_c, &chrf_t),
        kk,
        completion_lines: content_lines(completion).len(),
        ground_truth_lines: content_lines(truth).len(),
    })
}

/// Mean completion and ground-truth line counts.
pub fn mean_lines(results: &[MetricResult]) -> Result<(f64, f64)> {
    if results.is_empty() {
        return Err(Error::EmptyInput("metric results"));
    }
    let n = results.len() as f64;
    let c: usize = results.iter().map(|r| r.completion_lines).sum();
    let t: usize = results.iter().map(|r| r.ground_truth_lines).sum();
    Ok((c as f64 / n, t as f64 / n))
}
