//! Set-overlap and edit-distance kernels.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::lexing::{chunks, Chunking, LanguageProfile};

/// Jaccard similarity in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IoUScore(f64);

impl IoUScore {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// `1 - levenshtein / max_len`, in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NormalizedEditSimilarity(f64);

impl NormalizedEditSimilarity {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// A deduplicated chunk set, precomputed once and compared many times.
#[derive(Debug, Clone, Default)]
pub struct ChunkSet<'a>(HashSet<&'a str>);

impl<'a> ChunkSet<'a> {
    pub fn new(text: &'a str, chunking: Chunking, profile: &LanguageProfile) -> Self {
        ChunkSet(chunks(text, chunking, profile).into_iter().collect())
    }

    pub fn lines(text: &'a str) -> Self {
        ChunkSet(text.lines().collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Empty against empty scores 0.
    pub fn iou(&self, other: &ChunkSet<'_>) -> IoUScore {
        let (small, large) = if self.0.len() <= other.0.len() {
            (&self.0, &other.0)
        } else {
            (&other.0, &self.0)
        };
        let inter = small.iter().filter(|c| large.contains(*c)).count();
        let union = self.0.len() + other.0.len() - inter;
        if union == 0 {
            IoUScore(0.0)
        } else {
            IoUScore(inter as f64 / union as f64)
        }
    }
}

pub fn iou(x: &str, y: &str, chunking: Chunking, profile: &LanguageProfile) -> IoUScore {
    ChunkSet::new(x, chunking, profile).iou(&ChunkSet::new(y, chunking, profile))
}

/// Unit-cost Levenshtein distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let (a, b) = if a.len() < b.len() { (b, a) } else { (a, b) };
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let above = row[j + 1];
            row[j + 1] = if ca == cb {
                diag
            } else {
                1 + diag.min(above).min(row[j])
            };
            diag = above;
        }
    }
    row[b.len()]
}

pub fn normalized_levenshtein_similarity(a: &str, b: &str) -> NormalizedEditSimilarity {
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return NormalizedEditSimilarity(1.0);
    }
    NormalizedEditSimilarity(1.0 - levenshtein(a, b) as f64 / longest as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line_iou(x: &str, y: &str) -> f64 {
        iou(x, y, Chunking::Line, &LanguageProfile::python()).value()
    }

    #[test]
    fn iou_examples() {
        assert_eq!(line_iou("a\nb", "a\nb"), 1.0);
        assert_eq!(line_iou("a\nb\nc", "b\nc\nd"), 0.5);
        assert_eq!(line_iou("a", "b"), 0.0);
        assert_eq!(line_iou("", ""), 0.0);
        assert_eq!(line_iou("a\na\nb", "a\nb"), 1.0);
    }

    #[test]
    fn levenshtein_examples() {
        assert_eq!(normalized_levenshtein_similarity("abc", "abc").value(), 1.0);
        let kitten = normalized_levenshtein_similarity("kitten", "sitting").value();
        assert!((kitten - (1.0 - 3.0 / 7.0)).abs() < 1e-12);
        assert_eq!(normalized_levenshtein_similarity("", "abc").value(), 0.0);
        assert_eq!(normalized_levenshtein_similarity("", "").value(), 1.0);
        assert_eq!(levenshtein("naïve", "naive"), 1);
    }

    #[test]
    fn appended_char_is_not_identity() {
        for s in ["a", "ab", "return x"] {
            let longer = format!("{s}!");
            assert!(normalized_levenshtein_similarity(s, &longer).value() < 1.0);
        }
    }

    proptest! {
        #[test]
        fn edit_triangle(a in "[a-c]{0,8}", b in "[a-c]{0,8}", c in "[a-c]{0,8}") {
            prop_assert!(levenshtein(&a, &c) <= levenshtein(&a, &b) + levenshtein(&b, &c));
        }

        #[test]
        fn similarity_is_one_iff_equal(a in "[ab]{0,6}", b in "[ab]{0,6}") {
            let s = normalized_levenshtein_similarity(&a, &b).value();
            prop_assert!((0.0..=1.0).contains(&s));
            prop_assert_eq!(s == 1.0, a == b);
        }
    }
}
