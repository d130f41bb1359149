use std::path::Path;

use serde::{Deserialize, Serialize};

use super::FimExample;
use crate::context::ContextBundle;
use crate::error::{Error, Result};
use crate::lexing::count_tokens;

/// Marker strings of the S-P-M prompt layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SentinelSet {
    pub suffix: String,
    pub prefix: String,
    pub middle: String,
    /// Precedes each context chunk, followed by its path and a newline.
    pub file_separator: String,
}

impl Default for SentinelSet {
    fn default() -> Self {
        SentinelSet {
            suffix: "<|fim_suffix|>".into(),
            prefix: "<|fim_prefix|>".into(),
            middle: "<|fim_middle|>".into(),
            file_separator: "<|file_sep|>".into(),
        }
    }
}

impl SentinelSet {
    /// Load from a JSON or TOML file; omitted markers keep their defaults.
    pub fn load(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let set: SentinelSet = if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&src)?
        } else {
            serde_json::from_str(&src)?
        };
        set.validate()?;
        Ok(set)
    }

    fn markers(&self) -> [&str; 4] {
        [
            &self.suffix,
            &self.prefix,
            &self.middle,
            &self.file_separator,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let markers = self.markers();
        for (i, m) in markers.iter().enumerate() {
            if m.is_empty() {
                return Err(Error::InvalidSentinels("empty marker".into()));
            }
            if markers[..i].contains(m) {
                return Err(Error::InvalidSentinels(format!("marker `{m}` repeated")));
            }
        }
        Ok(())
    }

    fn check_absent(&self, what: &str, text: &str) -> Result<()> {
        match self.markers().into_iter().find(|m| text.contains(m)) {
            Some(m) => Err(Error::InvalidSentinels(format!(
                "marker `{m}` occurs in {what}"
            ))),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub text: String,
    pub tokens: usize,
    pub budget: usize,
    /// Leading context chunks that made it into the prompt.
    pub context_chunks: usize,
    /// Characters of the prefix kept, counted back from the caret.
    pub prefix_chars: usize,
    /// Characters of the suffix kept, counted forward from the caret.
    pub suffix_chars: usize,
}

fn context_section(path: &str, text: &str, sentinels: &SentinelSet) -> String {
    let mut s = format!("{}{}\n{}", sentinels.file_separator, path, text);
    if !s.ends_with('\n') {
        s.push('\n');
    }
    s
}

/// Largest `n` in `0..=max` with `fits(n)`, for a monotone predicate holding at 0.
fn largest_fitting(max: usize, fits: impl Fn(usize) -> bool) -> usize {
    let (mut lo, mut hi) = (0, max);
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    lo
}

fn head_chars(s: &str, n: usize) -> &str {
    s.char_indices().nth(n).map_or(s, |(i, _)| &s[..i])
}

fn tail_chars(s: &str, n: usize) -> &str {
    let total = s.chars().count();
    if n >= total {
        return s;
    }
    s.char_indices().nth(total - n).map_or("", |(i, _)| &s[i..])
}

/// Render `[context][suffix marker][suffix][prefix marker][prefix][middle marker]`
/// within `budget` tokens.
///
/// Under budget pressure whole context chunks go first, lowest score first,
/// then the suffix is cut from its far end, then the prefix from its far
/// start. Each part is costed separately; the token count of the joined
/// prompt never exceeds the sum of its parts.
pub fn render_prompt(
    example: &FimExample,
    context: &ContextBundle,
    sentinels: &SentinelSet,
    budget: usize,
) -> Result<RenderedPrompt> {
    sentinels.validate()?;
    sentinels.check_absent("prefix", &example.prefix)?;
    sentinels.check_absent("middle", &example.middle)?;
    sentinels.check_absent("suffix", &example.suffix)?;

    let fixed = count_tokens(&sentinels.suffix)
        + count_tokens(&sentinels.prefix)
        + count_tokens(&sentinels.middle);
    let required =
        fixed + usize::from(!example.suffix.is_empty()) + usize::from(!example.prefix.is_empty());
    if budget < required {
        return Err(Error::BudgetTooSmall { budget, required });
    }

    let prefix_total = example.prefix.chars().count();
    let suffix_total = example.suffix.chars().count();
    let full_cost = count_tokens(&example.prefix) + count_tokens(&example.suffix);

    let (suffix, prefix, sections) = if fixed + full_cost <= budget {
        let mut room = budget - fixed - full_cost;
        let mut sections = Vec::new();
        for chunk in &context.chunks {
            let section = context_section(&chunk.path, &chunk.text, sentinels);
            sentinels.check_absent("context", &section[sentinels.file_separator.len()..])?;
            let cost = count_tokens(&section);
            if cost > room {
                break;
            }
            room -= cost;
            sections.push(section);
        }
        (example.suffix.as_str(), example.prefix.as_str(), sections)
    } else {
        let prefix_cost = count_tokens(&example.prefix);
        let min_suffix = suffix_total.min(1);
        let min_prefix = prefix_total.min(1);
        let suffix_room = budget.saturating_sub(fixed + prefix_cost);
        let keep_suffix = largest_fitting(suffix_total, |n| {
            count_tokens(head_chars(&example.suffix, n)) <= suffix_room
        })
        .max(min_suffix);
        let suffix = head_chars(&example.suffix, keep_suffix);
        let prefix_room = budget - fixed - count_tokens(suffix);
        let keep_prefix = largest_fitting(prefix_total, |n| {
            count_tokens(tail_chars(&example.prefix, n)) <= prefix_room
        })
        .max(min_prefix);
        (suffix, tail_chars(&example.prefix, keep_prefix), Vec::new())
    };

    let mut text = sections.concat();
    text.push_str(&sentinels.suffix);
    text.push_str(suffix);
    text.push_str(&sentinels.prefix);
    text.push_str(prefix);
    text.push_str(&sentinels.middle);
    let tokens = count_tokens(&text);
    debug_assert!(tokens <= budget);
    Ok(RenderedPrompt {
        text,
        tokens,
        budget,
        context_chunks: sections.len(),
        prefix_chars: prefix.chars().count(),
        suffix_chars: suffix.chars().count(),
    })
}
