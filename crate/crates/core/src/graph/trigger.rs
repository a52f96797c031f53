//! Natural-language edge criteria grounded into one of three interactions.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriggerKind {
    TalkTo,
    PickUp,
    Defeat,
}

impl fmt::Display for TriggerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TriggerKind::TalkTo => "talk to",
            TriggerKind::PickUp => "pick up",
            TriggerKind::Defeat => "defeat",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trigger {
    pub kind: TriggerKind,
    pub target: String,
    pub raw_text: String,
}

impl Trigger {
    /// A trigger whose raw text is the canonical phrasing, e.g. `defeat the warden`.
    pub fn canonical(kind: TriggerKind, target: impl Into<String>) -> Self {
        let target = target.into();
        let raw_text = match kind {
            TriggerKind::TalkTo => format!("talk to {target}"),
            TriggerKind::PickUp => format!("pick up the {target}"),
            TriggerKind::Defeat => format!("defeat the {target}"),
        };
        Self {
            kind,
            target,
            raw_text,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("cannot map criteria to an interaction: {raw_text:?}")]
pub struct TriggerError {
    pub raw_text: String,
}

const SYNONYMS: &[(TriggerKind, &[&str])] = &[
    (
        TriggerKind::TalkTo,
        &[
            "talk to",
            "talk with",
            "talks to",
            "speak to",
            "speak with",
            "speaks to",
            "converse with",
            "chat with",
            "ask",
            "talk",
            "speak",
        ],
    ),
    (
        TriggerKind::PickUp,
        &[
            "pick up", "picks up", "take", "takes", "collect", "collects", "grab", "retrieve",
            "obtain", "acquire",
        ],
    ),
    (
        TriggerKind::Defeat,
        &[
            "defeat", "defeats", "kill", "kills", "slay", "slays", "vanquish", "beat",
        ],
    ),
];

const TERMINATORS: &[&str] = &[
    ",",
    ".",
    ";",
    "!",
    "?",
    "(",
    " and then ",
    " in order ",
    " so that ",
    " before ",
    " after ",
    " to unlock",
    " to open",
    " to learn",
    " to gain",
];

const NAME_MARKERS: &[&str] = &[" named ", " called "];

const ARTICLES: &[&str] = &["the ", "a ", "an "];

fn is_boundary(text: &str, at: usize) -> bool {
    text[at..]
        .chars()
        .next()
        .is_none_or(|c| !c.is_alphanumeric())
}

fn is_boundary_before(text: &str, at: usize) -> bool {
    text[..at]
        .chars()
        .next_back()
        .is_none_or(|c| !c.is_alphanumeric())
}

/// Earliest keyword occurrence; longest phrase wins at the same position.
fn find_keyword(lower: &str) -> Option<(TriggerKind, usize, usize)> {
    let mut best: Option<(TriggerKind, usize, usize)> = None;
    for (kind, phrases) in SYNONYMS {
        for phrase in *phrases {
            for (pos, _) in lower.match_indices(phrase) {
                let end = pos + phrase.len();
                if !is_boundary_before(lower, pos) || !is_boundary(lower, end) {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((_, bpos, bend)) => pos < bpos || (pos == bpos && end > bend),
                };
                if better {
                    best = Some((*kind, pos, end));
                }
                break;
            }
        }
    }
    best
}

/// Maps criteria such as "defeat the bandit chief" onto a [`Trigger`].
///
/// Matching is keyword-first over a small synonym table. Text that matches
/// no interaction, or leaves no target, is an error rather than a guess.
pub fn parse_trigger(text: &str) -> Result<Trigger, TriggerError> {
    let err = || TriggerError {
        raw_text: text.to_string(),
    };
    // ASCII lowercasing keeps byte offsets aligned with `text`.
    let lower = text.to_ascii_lowercase();
    let (kind, _, end) = find_keyword(&lower).ok_or_else(err)?;

    let mut start = end;
    let mut stop = text.len();
    for t in TERMINATORS {
        if let Some(p) = lower[start..].find(t) {
            stop = stop.min(start + p);
        }
    }
    for marker in NAME_MARKERS {
        if let Some(p) = lower[start..stop].rfind(marker) {
            start = start + p + marker.len();
        }
    }
    let mut target = text[start..stop].trim();
    loop {
        let l = target.to_ascii_lowercase();
        match ARTICLES.iter().find(|a| l.starts_with(*a)) {
            Some(a) => target = target[a.len()..].trim_start(),
            None => break,
        }
    }
    let target = target.trim_matches(|c: char| c == '"' || c == '\'' || c.is_whitespace());
    let bare_article = ARTICLES
        .iter()
        .any(|a| a.trim_end().eq_ignore_ascii_case(target));
    if target.is_empty() || bare_article {
        return Err(err());
    }
    Ok(Trigger {
        kind,
        target: target.to_string(),
        raw_text: text.to_string(),
    })
}
