use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fim::FimExample;
use crate::lexing::{classify, LanguageProfile, TokenClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Reason {
    CommentDominated,
    LiteralDominated,
    WhitespaceDominated,
    JudgeRejected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterVerdict {
    pub keep: bool,
    pub reasons: Vec<Reason>,
}

impl FilterVerdict {
    pub fn from_reasons(reasons: Vec<Reason>) -> Self {
        FilterVerdict {
            keep: reasons.is_empty(),
            reasons,
        }
    }
}

/// Maximum share of middle characters per token class; a share strictly
/// above the limit rejects the example.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterThresholds {
    pub comment: f64,
    pub literal: f64,
    pub whitespace: f64,
}

impl Default for FilterThresholds {
    fn default() -> Self {
        FilterThresholds {
            comment: 0.5,
            literal: 0.5,
            whitespace: 0.5,
        }
    }
}

/// Character share of comments, literals (string and numeric) and
/// whitespace in the middle.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClassMass {
    pub comment: f64,
    pub literal: f64,
    pub whitespace: f64,
}

/// Tokens are classified over the whole file so that a middle cut inside a
/// comment or literal still counts as one.
pub fn class_mass(example: &FimExample, profile: &LanguageProfile) -> ClassMass {
    let text = example.source_text();
    let (lo, hi) = example.middle_span();
    let total = example.middle.chars().count();
    if total == 0 {
        return ClassMass::default();
    }
    let (mut comment, mut literal, mut whitespace) = (0usize, 0usize, 0usize);
    for token in classify(&text, profile) {
        let (a, b) = (token.start.max(lo), token.end.min(hi));
        if a >= b {
            continue;
        }
        let n = text[a..b].chars().count();
        match token.class {
            TokenClass::Comment => comment += n,
            TokenClass::StringLiteral | TokenClass::NumericLiteral => literal += n,
            TokenClass::Whitespace => whitespace += n,
            TokenClass::Code => {}
        }
    }
    let t = total as f64;
    ClassMass {
        comment: comment as f64 / t,
        literal: literal as f64 / t,
        whitespace: whitespace as f64 / t,
    }
}

pub fn heuristic_filter(
    example: &FimExample,
    profile: &LanguageProfile,
    thresholds: &FilterThresholds,
) -> FilterVerdict {
    if example.middle.is_empty() {
        return FilterVerdict::from_reasons(vec![Reason::WhitespaceDominated]);
    }
    let mass = class_mass(example, profile);
    let mut reasons = Vec::new();
    if mass.comment > thresholds.comment {
        reasons.push(Reason::CommentDominated);
    }
    if mass.literal > thresholds.literal {
        reasons.push(Reason::LiteralDominated);
    }
    if mass.whitespace > thresholds.whitespace {
        reasons.push(Reason::WhitespaceDominated);
    }
    FilterVerdict::from_reasons(reasons)
}

/// Quality judge for candidate examples. `Ok(false)` is a rejection; `Err`
/// is a transport failure.
pub trait JudgeBackend: Send + Sync {
    fn judge(&self, id: &str, example: &FimExample) -> Result<bool>;
}

pub struct AcceptAll;

impl JudgeBackend for AcceptAll {
    fn judge(&self, _: &str, _: &FimExample) -> Result<bool> {
        Ok(true)
    }
}

pub struct RejectAll;

impl JudgeBackend for RejectAll {
    fn judge(&self, _: &str, _: &FimExample) -> Result<bool> {
        Ok(false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScriptedVerdict {
    Accept,
    Reject,
    Fail,
}

/// Answers from a fixed table keyed by example id; unlisted ids are accepted.
#[derive(Debug, Clone, Default)]
pub struct Scripted(pub BTreeMap<String, ScriptedVerdict>);

impl Scripted {
    /// JSON object of `id -> "accept" | "reject" | "fail"`.
    pub fn load(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Scripted(serde_json::from_str(&src)?))
    }
}

impl JudgeBackend for Scripted {
    fn judge(&self, id: &str, _: &FimExample) -> Result<bool> {
        match self.0.get(id) {
            None | Some(ScriptedVerdict::Accept) => Ok(true),
            Some(ScriptedVerdict::Reject) => Ok(false),
            Some(ScriptedVerdict::Fail) => {
                Err(Error::Judge(format!("scripted failure for `{id}`")))
            }
        }
    }
}

pub fn judge_filter(
    id: &str,
    example: &FimExample,
    judge: &dyn JudgeBackend,
) -> Result<FilterVerdict> {
    Ok(if judge.judge(id, example)? {
        FilterVerdict::from_reasons(Vec::new())
    } else {
        FilterVerdict::from_reasons(vec![Reason::JudgeRejected])
    })
}
