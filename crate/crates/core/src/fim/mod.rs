//! Prefix/middle/suffix splitting.
//!
//! Two splitters: a uniform random one and a scope-aware one that places the
//! middle on syntactic boundaries with a 700 character cap.

mod prompt;

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::context::SourceFile;
use crate::error::{Error, Result};
use crate::lexing::{block_spans, classify, is_ident_char, LanguageProfile, TokenClass};

pub use prompt::{render_prompt, RenderedPrompt, SentinelSet};

/// Maximum middle length for scope-aware splits, in characters.
pub const MAX_MIDDLE_CHARS: usize = 700;

/// Attempts before giving up on a scope-aware split.
pub const MAX_SPLIT_ATTEMPTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    BlockBoundary,
    LineStart,
    LineMiddle,
    TokenMiddle,
}

impl Boundary {
    pub const ALL: [Boundary; 4] = [
        Boundary::BlockBoundary,
        Boundary::LineStart,
        Boundary::LineMiddle,
        Boundary::TokenMiddle,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Boundary::BlockBoundary => "block_boundary",
            Boundary::LineStart => "line_start",
            Boundary::LineMiddle => "line_middle",
            Boundary::TokenMiddle => "token_middle",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitStrategy {
    Random,
    ScopeAware,
}

impl SplitStrategy {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitStrategy::Random => "random",
            SplitStrategy::ScopeAware => "scope_aware",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FimExample {
    pub path: String,
    pub prefix: String,
    pub middle: String,
    pub suffix: String,
    pub boundary_start: Boundary,
    pub boundary_end: Boundary,
    pub split_strategy: SplitStrategy,
    pub language: String,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

impl FimExample {
    pub fn source_text(&self) -> String {
        format!("{}{}{}", self.prefix, self.middle, self.suffix)
    }

    /// Byte range of the middle within the source file.
    pub fn middle_span(&self) -> (usize, usize) {
        let start = self.prefix.len();
        (start, start + self.middle.len())
    }

    pub fn repo(&self) -> &str {
        self.metadata.get("repo").map_or("", String::as_str)
    }

    fn from_cuts(
        file: &SourceFile,
        start: usize,
        end: usize,
        boundaries: (Boundary, Boundary),
        split_strategy: SplitStrategy,
    ) -> Self {
        FimExample {
            path: file.path.clone(),
            prefix: file.text[..start].to_string(),
            middle: file.text[start..end].to_string(),
            suffix: file.text[end..].to_string(),
            boundary_start: boundaries.0,
            boundary_end: boundaries.1,
            split_strategy,
            language: file.language.clone(),
            metadata: file.metadata.clone(),
        }
    }
}

/// Relative weights of the boundary types when choosing split points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundaryWeights {
    pub block_boundary: f64,
    pub line_start: f64,
    pub line_middle: f64,
    pub token_middle: f64,
}

impl Default for BoundaryWeights {
    fn default() -> Self {
        BoundaryWeights {
            block_boundary: 0.5,
            line_start: 0.3,
            line_middle: 0.15,
            token_middle: 0.05,
        }
    }
}

impl BoundaryWeights {
    pub fn only(boundary: Boundary) -> Self {
        let mut w = [0.0; 4];
        w[boundary.index()] = 1.0;
        Self::from_array(w)
    }

    fn from_array(w: [f64; 4]) -> Self {
        BoundaryWeights {
            block_boundary: w[0],
            line_start: w[1],
            line_middle: w[2],
            token_middle: w[3],
        }
    }

    fn as_array(&self) -> [f64; 4] {
        [
            self.block_boundary,
            self.line_start,
            self.line_middle,
            self.token_middle,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.as_array();
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) || w.iter().sum::<f64>() <= 0.0 {
            return Err(Error::Config(format!("invalid boundary weights {w:?}")));
        }
        Ok(())
    }

    /// Pick a boundary type among those with candidates, or `None`.
    fn choose(&self, available: [bool; 4], rng: &mut impl Rng) -> Option<Boundary> {
        let w = self.as_array();
        let masked: Vec<f64> = (0..4)
            .map(|i| if available[i] { w[i] } else { 0.0 })
            .collect();
        let dist = WeightedIndex::new(&masked).ok()?;
        Some(Boundary::ALL[dist.sample(rng)])
    }
}

/// Deterministic RNG for a seed.
pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Byte offsets of every char boundary, including `text.len()`.
fn char_bounds(text: &str) -> Vec<usize> {
    text.char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(text.len()))
        .collect()
}

fn is_line_start(text: &str, offset: usize) -> bool {
    offset == 0 || text[..offset].ends_with('\n')
}

fn is_token_middle(text: &str, offset: usize) -> bool {
    let before = text[..offset].chars().next_back();
    let after = text[offset..].chars().next();
    matches!((before, after), (Some(b), Some(a)) if is_ident_char(b) && is_ident_char(a))
}

/// Boundary type of an arbitrary offset, from characters alone.
pub fn classify_offset(text: &str, offset: usize) -> Boundary {
    if is_line_start(text, offset) {
        Boundary::LineStart
    } else if is_token_middle(text, offset) {
        Boundary::TokenMiddle
    } else {
        Boundary::LineMiddle
    }
}

/// Split at two distinct uniformly drawn character positions.
pub fn split_random(file: &SourceFile, seed: u64) -> Result<FimExample> {
    let bounds = char_bounds(&file.text);
    let chars = bounds.len() - 1;
    if chars == 0 {
        return Err(Error::EmptyFile(file.path.clone()));
    }
    let (a, b) = random_cuts(chars, &mut rng_for(seed));
    let (start, end) = (bounds[a], bounds[b]);
    let boundaries = (
        classify_offset(&file.text, start),
        classify_offset(&file.text, end),
    );
    Ok(FimExample::from_cuts(
        file,
        start,
        end,
        boundaries,
        SplitStrategy::Random,
    ))
}

/// Two distinct sorted positions in `0..=chars`.
pub(crate) fn random_cuts(chars: usize, rng: &mut impl Rng) -> (usize, usize) {
    let i = rng.random_range(0..=chars);
    let mut j = rng.random_range(0..chars);
    if j >= i {
        j += 1;
    }
    (i.min(j), i.max(j))
}

/// Candidate split offsets per boundary type.
#[derive(Debug, Clone, Default)]
pub struct SplitCandidates {
    pub starts: [Vec<usize>; 4],
    pub ends: [Vec<usize>; 4],
    /// `(open, close)` of every complete block.
    pub blocks: Vec<(usize, usize)>,
}

impl SplitCandidates {
    pub fn enumerate(text: &str, profile: &LanguageProfile) -> Self {
        let mut c = SplitCandidates::default();
        let bb = Boundary::BlockBoundary.index();
        let ls = Boundary::LineStart.index();
        let lm = Boundary::LineMiddle.index();
        let tm = Boundary::TokenMiddle.index();

        for block in block_spans(text, profile) {
            if block.close > block.open {
                c.blocks.push((block.open, block.close));
                c.starts[bb].push(block.open);
                c.ends[bb].push(block.close);
            }
        }

        c.starts[ls].push(0);
        for (i, _) in text.match_indices('\n') {
            if i + 1 < text.len() {
                c.starts[ls].push(i + 1);
            }
            c.ends[ls].push(i + 1);
        }

        for token in classify(text, profile) {
            let edge = token.start;
            if edge > 0 && !is_line_start(text, edge) {
                c.starts[lm].push(edge);
                c.ends[lm].push(edge);
            }
            if matches!(token.class, TokenClass::Code | TokenClass::NumericLiteral) {
                for (i, _) in token.text(text).char_indices().skip(1) {
                    let offset = token.start + i;
                    let kind = if is_token_middle(text, offset) {
                        tm
                    } else {
                        lm
                    };
                    c.starts[kind].push(offset);
                    c.ends[kind].push(offset);
                }
            }
        }
        if !text.is_empty() && !is_line_start(text, text.len()) {
            c.ends[lm].push(text.len());
        }

        for list in c.starts.iter_mut().chain(c.ends.iter_mut()) {
            list.sort_unstable();
            list.dedup();
        }
        // a start at the very end can never have a non-empty middle
        for list in c.starts.iter_mut() {
            list.retain(|&o| o < text.len());
        }
        c
    }
}

/// Scope-aware split: start and end are drawn from syntactic boundaries with
/// `weights`, and the middle is kept within [`MAX_MIDDLE_CHARS`].
///
/// When both ends are block boundaries, the end is the close of the block
/// the start opens, so the middle is exactly one block body.
pub fn split_scope_aware(
    file: &SourceFile,
    profile: &LanguageProfile,
    weights: &BoundaryWeights,
    seed: u64,
) -> Result<FimExample> {
    if file.text.is_empty() {
        return Err(Error::EmptyFile(file.path.clone()));
    }
    weights.validate()?;
    let text = &file.text;
    let candidates = SplitCandidates::enumerate(text, profile);
    let bounds = char_bounds(text);
    let mut rng = rng_for(seed);

    let start_available = candidates.starts.each_ref().map(|v| !v.is_empty());
    for _ in 0..MAX_SPLIT_ATTEMPTS {
        let Some(start_kind) = weights.choose(start_available, &mut rng) else {
            break;
        };
        let starts = &candidates.starts[start_kind.index()];
        let start = starts[rng.random_range(0..starts.len())];

        let start_char = bounds.partition_point(|&b| b < start);
        let limit = bounds[(start_char + MAX_MIDDLE_CHARS).min(bounds.len() - 1)];
        let in_range = |list: &Vec<usize>| -> Vec<usize> {
            let lo = list.partition_point(|&o| o <= start);
            let hi = list.partition_point(|&o| o <= limit);
            list[lo..hi].to_vec()
        };
        let mut ends: [Vec<usize>; 4] = candidates.ends.each_ref().map(in_range);
        if start_kind == Boundary::BlockBoundary {
            ends[Boundary::BlockBoundary.index()] = candidates
                .blocks
                .iter()
                .filter(|(open, close)| *open == start && *close <= limit)
                .map(|(_, close)| *close)
                .collect();
        }

        let end_available = ends.each_ref().map(|v| !v.is_empty());
        let Some(end_kind) = weights.choose(end_available, &mut rng) else {
            continue;
        };
        let pool = &ends[end_kind.index()];
        let end = pool[rng.random_range(0..pool.len())];
        return Ok(FimExample::from_cuts(
            file,
            start,
            end,
            (start_kind, end_kind),
            SplitStrategy::ScopeAware,
        ));
    }
    Err(Error::NoSplitCandidate(file.path.clone()))
}

/// Check that the declared boundary types hold for the cut positions.
pub fn boundaries_hold(example: &FimExample, profile: &LanguageProfile) -> bool {
    let text = example.source_text();
    let (start, end) = example.middle_span();
    let blocks = block_spans(&text, profile);
    let holds = |offset: usize, boundary: Boundary, is_start: bool| match boundary {
        Boundary::BlockBoundary => blocks.iter().any(|b| {
            if is_start {
                b.open == offset
            } else {
                b.close == offset
            }
        }),
        Boundary::LineStart => is_line_start(&text, offset),
        Boundary::LineMiddle => !is_line_start(&text, offset),
        Boundary::TokenMiddle => is_token_middle(&text, offset),
    };
    holds(start, example.boundary_start, true) && holds(end, example.boundary_end, false)
}
