use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EvalRecord;
use crate::error::{Error, Result};
use crate::metrics::{mean_lines, MetricResult};

pub const AVERAGE: &str = "Average";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageSummary {
    pub language: String,
    pub examples: usize,
    pub em: f64,
    pub chrf_pp: f64,
    pub kk: f64,
    pub mean_completion_lines: f64,
    pub mean_truth_lines: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub languages: Vec<LanguageSummary>,
    /// Unweighted mean over languages.
    pub average: LanguageSummary,
    pub failed: usize,
}

fn summarize(language: &str, results: &[MetricResult]) -> Result<LanguageSummary> {
    let n = results.len() as f64;
    let (c, t) = mean_lines(results)?;
    Ok(LanguageSummary {
        language: language.into(),
        examples: results.len(),
        em: results.iter().map(|r| f64::from(r.em)).sum::<f64>() / n,
        chrf_pp: results.iter().map(|r| r.chrf_pp).sum::<f64>() / n,
        kk: results.iter().map(|r| r.kk).sum::<f64>() / n,
        mean_completion_lines: c,
        mean_truth_lines: t,
    })
}

/// Per-language means over successful records plus their unweighted average.
pub fn report(records: &[EvalRecord]) -> Result<MetricReport> {
    if records.is_empty() {
        return Err(Error::EmptyInput("records"));
    }
    let mut groups: BTreeMap<&str, Vec<MetricResult>> = BTreeMap::new();
    for r in records {
        if let (false, Some(m)) = (r.failed, r.metrics) {
            groups.entry(r.language.as_str()).or_default().push(m);
        }
    }
    if groups.is_empty() {
        return Err(Error::EmptyInput("successful records"));
    }
    let languages = groups
        .iter()
        .map(|(lang, results)| summarize(lang, results))
        .collect::<Result<Vec<_>>>()?;
    let k = languages.len() as f64;
    let mean = |f: fn(&LanguageSummary) -> f64| languages.iter().map(f).sum::<f64>() / k;
    let average = LanguageSummary {
        language: AVERAGE.into(),
        examples: languages.iter().map(|l| l.examples).sum(),
        em: mean(|l| l.em),
        chrf_pp: mean(|l| l.chrf_pp),
        kk: mean(|l| l.kk),
        mean_completion_lines: mean(|l| l.mean_completion_lines),
        mean_truth_lines: mean(|l| l.mean_truth_lines),
    };
    Ok(MetricReport {
        languages,
        average,
        failed: records.iter().filter(|r| r.failed).count(),
    })
}

impl MetricReport {
    /// Metrics as rows, languages as columns, average last.
    pub fn to_table(&self) -> String {
        let columns: Vec<&LanguageSummary> = self.languages.iter().chain([&self.average]).collect();
        type Cell = fn(&LanguageSummary) -> String;
        let rows: [(&str, Cell); 6] = [
            ("examples", |l| l.examples.to_string()),
            ("EM", |l| format!("{:.3}", l.em)),
            ("chrF++", |l| format!("{:.2}", l.chrf_pp)),
            ("KK", |l| format!("{:.3}", l.kk)),
            ("completion lines", |l| {
                format!("{:.2}", l.mean_completion_lines)
            }),
            ("truth lines", |l| format!("{:.2}", l.mean_truth_lines)),
        ];
        let mut grid: Vec<Vec<String>> = vec![std::iter::once("metric".to_string())
            .chain(columns.iter().map(|l| l.language.clone()))
            .collect()];
        for (name, cell) in rows {
            grid.push(
                std::iter::once(name.to_string())
                    .chain(columns.iter().map(|l| cell(l)))
                    .collect(),
            );
        }
        let widths: Vec<usize> = (0..grid[0].len())
            .map(|c| {
                grid.iter()
                    .map(|row| row[c].chars().count())
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut out = String::new();
        for (i, row) in grid.iter().enumerate() {
            let line: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(c, v)| {
                    if c == 0 {
                        format!("{v:<w$}", w = widths[c])
                    } else {
                        format!("{v:>w$}", w = widths[c])
                    }
                })
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
            if i == 0 {
                let rule: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
                out.push_str(&"-".repeat(rule));
                out.push('\n');
            }
        }
        if self.failed > 0 {
            out.push_str(&format!("failed examples excluded: {}\n", self.failed));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, lang: &str, em: u8, kk: f64, lines: (usize, usize)) -> EvalRecord {
        EvalRecord {
            id: id.into(),
            language: lang.into(),
            backend: "replay".into(),
            prompt_digest: String::new(),
            prompt_tokens: 0,
            completion: Some(String::new()),
            latency_ms: 0.0,
            metrics: Some(MetricResult {
                em,
                chrf_pp: kk * 100.0,
                kk,
                completion_lines: lines.0,
                ground_truth_lines: lines.1,
            }),
            failed: false,
            error: None,
        }
    }

    #[test]
    fn single_record() {
        let r = report(&[record("a", "python", 1, 1.0, (4, 4))]).unwrap();
        assert_eq!(r.languages.len(), 1);
        let l = &r.languages[0];
        assert_eq!(
            (l.em, l.kk, l.chrf_pp, l.mean_completion_lines),
            (1.0, 1.0, 100.0, 4.0)
        );
        assert_eq!(r.average.kk, 1.0);
    }

    #[test]
    fn average_is_unweighted() {
        let records = [
            record("a", "python", 1, 1.0, (2, 4)),
            record("b", "python", 0, 0.5, (4, 4)),
            record("c", "python", 0, 0.0, (0, 4)),
            record("d", "java", 0, 0.2, (1, 1)),
        ];
        let r = report(&records).unwrap();
        let java = &r.languages[0];
        let python = &r.languages[1];
        assert_eq!(java.language, "java");
        assert!((python.kk - 0.5).abs() < 1e-12);
        assert!((r.average.kk - (0.5 + 0.2) / 2.0).abs() < 1e-12);
        assert!((r.average.em - (1.0 / 3.0) / 2.0).abs() < 1e-12);
        assert_eq!(r.average.examples, 4);
        let table = r.to_table();
        assert!(table.lines().next().unwrap().ends_with("Average"));
        assert!(table.contains("KK"));
    }

    #[test]
    fn empty_and_failed() {
        assert!(report(&[]).is_err());
        let mut bad = record("a", "python", 1, 1.0, (1, 1));
        bad.failed = true;
        bad.metrics = None;
        assert!(report(std::slice::from_ref(&bad)).is_err());
        let r = report(&[bad, record("b", "go", 1, 1.0, (1, 1))]).unwrap();
        assert_eq!(r.failed, 1);
        assert!(r.to_table().contains("failed examples excluded: 1"));
    }
}
