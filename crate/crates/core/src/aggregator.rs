//! Consensus pseudo-captioning: coverage-driven view selection and attribute
//! voting over an object's caption histogram, plus a most-frequent-caption
//! baseline.
//!
//! Views only decide which observations are deemed informative; they never
//! add votes. Votes come from the histogram alone.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::memory::ObjectEntry;
use crate::oracle::{caption_tokens, AttributeSet, TokenKind, Vocabulary};
use crate::world::{angle_diff, AgentPose, Cell};

/// One observation of an object: where it was seen from and which of its
/// footprint cells were visible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewRecord {
    pub step: u32,
    pub pose: AgentPose,
    /// Direction from the object's center to the agent, degrees.
    pub bearing_deg: f64,
    pub covered_cells: BTreeSet<Cell>,
}

/// Smallest angular distance from `bearing` to any already picked view.
fn separation(bearing: f64, picked: &[&ViewRecord]) -> f64 {
    picked
        .iter()
        .map(|p| angle_diff(bearing, p.bearing_deg).abs())
        .fold(f64::INFINITY, f64::min)
}

/// Greedy max-coverage selection of up to `budget` views. Each pick adds the
/// most not-yet-covered cells; ties go to the view farthest (in bearing) from
/// those already picked, then to the earlier step. Picking continues past
/// zero gain, so redundant views come last.
pub fn select_informative_views(records: &[ViewRecord], budget: usize) -> Vec<ViewRecord> {
    let mut covered: BTreeSet<Cell> = BTreeSet::new();
    let mut picked: Vec<&ViewRecord> = Vec::new();
    let mut left: Vec<&ViewRecord> = records.iter().collect();
    while picked.len() < budget && !left.is_empty() {
        let mut best = 0;
        let mut best_key = (0usize, f64::NEG_INFINITY);
        for (i, r) in left.iter().enumerate() {
            let gain = r.covered_cells.difference(&covered).count();
            let sep = if picked.is_empty() { 0.0 } else { separation(r.bearing_deg, &picked) };
            let better = i == 0
                || gain > best_key.0
                || (gain == best_key.0 && sep > best_key.1)
                || (gain == best_key.0 && sep == best_key.1 && r.step < left[best].step);
            if better {
                best = i;
                best_key = (gain, sep);
            }
        }
        let r = left.remove(best);
        covered.extend(r.covered_cells.iter().copied());
        picked.push(r);
    }
    picked.into_iter().cloned().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoCaption {
    /// Empty when no caption named a category.
    pub text: String,
    pub attributes: Option<AttributeSet>,
    /// Frequency-weighted votes for every category and modifier token seen.
    pub supporting_frequencies: BTreeMap<String, u32>,
    /// Total observations voting.
    pub total_votes: u32,
    /// Steps of the views chosen as informative, in pick order.
    pub selected_steps: Vec<u32>,
}

/// Frequency-weighted attribute vote over the histogram. The category is the
/// plurality winner (ties to vocabulary order), modifiers need a vote share
/// of at least `vote_threshold` and are rendered in vocabulary order. Context
/// tokens never vote.
pub fn consensus_caption(entry: &ObjectEntry, vocab: &Vocabulary, vote_threshold: f64) -> PseudoCaption {
    let mut votes: BTreeMap<String, u32> = BTreeMap::new();
    let mut total = 0u32;
    for c in &entry.captions {
        total += c.count;
        let mut seen = BTreeSet::new();
        for tok in caption_tokens(&c.text) {
            if matches!(vocab.kind_of(&tok), Some(TokenKind::Category | TokenKind::Modifier)) && seen.insert(tok.clone()) {
                *votes.entry(tok).or_default() += c.count;
            }
        }
    }
    let rank = |t: &str| vocab.position(t).unwrap_or(usize::MAX);
    let category = votes
        .iter()
        .filter(|(t, _)| vocab.kind_of(t) == Some(TokenKind::Category))
        .max_by(|a, b| a.1.cmp(b.1).then(rank(b.0).cmp(&rank(a.0))))
        .map(|(t, _)| t.clone());
    let mut modifiers: Vec<String> = votes
        .iter()
        .filter(|(t, v)| {
            vocab.kind_of(t) == Some(TokenKind::Modifier) && total > 0 && **v as f64 / total as f64 >= vote_threshold
        })
        .map(|(t, _)| t.clone())
        .collect();
    modifiers.sort_by_key(|m| rank(m));
    let attributes = category.map(|c| AttributeSet::new(c, modifiers));
    PseudoCaption {
        text: attributes.as_ref().map(AttributeSet::render).unwrap_or_default(),
        attributes,
        supporting_frequencies: votes,
        total_votes: total,
        selected_steps: Vec::new(),
    }
}

/// View selection followed by consensus voting.
pub fn pseudo_caption(
    entry: &ObjectEntry,
    views: &[ViewRecord],
    budget: usize,
    vocab: &Vocabulary,
    vote_threshold: f64,
) -> PseudoCaption {
    let mut out = consensus_caption(entry, vocab, vote_threshold);
    out.selected_steps = select_informative_views(views, budget).iter().map(|v| v.step).collect();
    out
}

/// Most frequent caption, ties to the first seen. `None` on an empty histogram.
pub fn frequency_baseline(entry: &ObjectEntry) -> Option<&str> {
    let mut best: Option<&crate::memory::CaptionCount> = None;
    for c in &entry.captions {
        if best.map_or(true, |b| c.count > b.count) {
            best = Some(c);
        }
    }
    best.map(|c| c.text.as_str())
}
