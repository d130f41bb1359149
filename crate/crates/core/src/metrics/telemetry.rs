//! Offline aggregation of editor telemetry: ratio of completed code and
//! acceptance rate.

use std::collections::BTreeMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    Shown,
    Accepted,
    TypedChars { n: u64 },
    CompletedChars { n: u64 },
}

impl EventKind {
    /// Within one timestamp a suggestion is shown before it is accepted.
    fn rank(&self) -> u8 {
        match self {
            EventKind::Shown => 0,
            EventKind::Accepted => 1,
            EventKind::TypedChars { .. } => 2,
            EventKind::CompletedChars { .. } => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TelemetryEvent {
    #[serde(flatten)]
    pub kind: EventKind,
    pub timestamp: i64,
    pub session: String,
}

impl TelemetryEvent {
    pub fn new(kind: EventKind, timestamp: i64, session: &str) -> Self {
        TelemetryEvent {
            kind,
            timestamp,
            session: session.into(),
        }
    }
}

pub fn read_events(reader: impl BufRead) -> Result<Vec<TelemetryEvent>> {
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(format!("<events line {}>", n + 1), e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}

/// Every `Accepted` must follow an unconsumed `Shown` of the same session,
/// ordering events by timestamp.
pub fn validate(events: &[TelemetryEvent]) -> Result<()> {
    let mut sessions: BTreeMap<&str, Vec<&TelemetryEvent>> = BTreeMap::new();
    for e in events {
        sessions.entry(&e.session).or_default().push(e);
    }
    for (session, mut list) in sessions {
        list.sort_by_key(|e| (e.timestamp, e.kind.rank()));
        let mut pending = 0u64;
        for e in list {
            match e.kind {
                EventKind::Shown => pending += 1,
                EventKind::Accepted if pending == 0 => {
                    return Err(Error::Invalid(format!(
                        "accepted event at {} in session `{session}` has no preceding shown event",
                        e.timestamp
                    )));
                }
                EventKind::Accepted => pending -= 1,
                _ => {}
            }
        }
    }
    Ok(())
}

/// Completed characters over all written characters; 0 with no characters.
pub fn rocc(events: &[TelemetryEvent]) -> f64 {
    let (mut completed, mut typed) = (0u64, 0u64);
    for e in events {
        match e.kind {
            EventKind::CompletedChars { n } => completed += n,
            EventKind::TypedChars { n } => typed += n,
            _ => {}
        }
    }
    let total = completed + typed;
    if total == 0 {
        0.0
    } else {
        completed as f64 / total as f64
    }
}

/// Accepted over shown; 0 with nothing shown. Fails on an accept without a
/// matching show.
pub fn acceptance_rate(events: &[TelemetryEvent]) -> Result<f64> {
    validate(events)?;
    let shown = events.iter().filter(|e| e.kind == EventKind::Shown).count();
    let accepted = events
        .iter()
        .filter(|e| e.kind == EventKind::Accepted)
        .count();
    Ok(if shown == 0 {
        0.0
    } else {
        accepted as f64 / shown as f64
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetrySummary {
    pub events: usize,
    pub sessions: usize,
    pub rocc: f64,
    pub acceptance_rate: f64,
}

pub fn summarize(events: &[TelemetryEvent]) -> Result<TelemetrySummary> {
    let sessions = events
        .iter()
        .map(|e| e.session.as_str())
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    Ok(TelemetrySummary {
        events: events.len(),
        sessions,
        rocc: rocc(events),
        acceptance_rate: acceptance_rate(events)?,
    })
}
