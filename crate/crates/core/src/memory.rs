//! Episodic object memory: one persistent entry per committed object with a
//! refined position estimate and a caption histogram, serialized into the
//! structured scene block the agent conditions on.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oracle::Caption;
use crate::world::{Detection, Point3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PersistentId(pub u32);

impl std::fmt::Display for PersistentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// First ID handed out by a fresh memory.
pub const DEFAULT_BASE_ID: u32 = 1;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MemoryError {
    #[error("unknown persistent id {0}")]
    UnknownId(PersistentId),
    #[error("duplicate persistent id {0}")]
    DuplicateId(PersistentId),
    #[error("entry {0} has an empty caption history")]
    EmptyHistory(PersistentId),
    #[error("entry {0} has a caption with count 0")]
    ZeroCount(PersistentId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptionCount {
    pub text: String,
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectEntry {
    pub id: PersistentId,
    pub position: Point3,
    /// Distinct captions in first-seen order with their occurrence counts.
    pub captions: Vec<CaptionCount>,
    pub observation_count: u32,
}

impl ObjectEntry {
    /// Number of distinct captions (L).
    pub fn distinct_captions(&self) -> usize {
        self.captions.len()
    }

    pub fn count_of(&self, text: &str) -> u32 {
        self.captions
            .iter()
            .find(|c| c.text == text)
            .map_or(0, |c| c.count)
    }

    fn record_caption(&mut self, text: &str) {
        match self.captions.iter_mut().find(|c| c.text == text) {
            Some(c) => c.count += 1,
            None => self.captions.push(CaptionCount {
                text: text.to_string(),
                count: 1,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodicMemory {
    entries: Vec<ObjectEntry>,
    next_id: u32,
}

impl Default for EpisodicMemory {
    fn default() -> Self {
        Self::new()
    }
}

impl EpisodicMemory {
    pub fn new() -> Self {
        Self::with_base_id(DEFAULT_BASE_ID)
    }

    pub fn with_base_id(base: u32) -> Self {
        Self {
            entries: Vec::new(),
            next_id: base,
        }
    }

    /// Rebuilds a memory from entries, checking ID uniqueness and histogram
    /// counts. `observation_count` is taken as the histogram total.
    pub fn from_entries(mut entries: Vec<ObjectEntry>) -> Result<Self, MemoryError> {
        let mut seen = std::collections::HashSet::new();
        for e in &mut entries {
            if !seen.insert(e.id) {
                return Err(MemoryError::DuplicateId(e.id));
            }
            if e.captions.is_empty() {
                return Err(MemoryError::EmptyHistory(e.id));
            }
            if e.captions.iter().any(|c| c.count == 0) {
                return Err(MemoryError::ZeroCount(e.id));
            }
            e.observation_count = e.captions.iter().map(|c| c.count).sum();
        }
        let next_id = entries
            .iter()
            .map(|e| e.id.0 + 1)
            .max()
            .unwrap_or(DEFAULT_BASE_ID)
            .max(DEFAULT_BASE_ID);
        Ok(Self { entries, next_id })
    }

    pub fn entries(&self) -> &[ObjectEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn next_id(&self) -> PersistentId {
        PersistentId(self.next_id)
    }

    pub fn get(&self, id: PersistentId) -> Option<&ObjectEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn contains(&self, id: PersistentId) -> bool {
        self.get(id).is_some()
    }

    /// Total number of distinct captions over all entries.
    pub fn distinct_caption_total(&self) -> usize {
        self.entries.iter().map(ObjectEntry::distinct_captions).sum()
    }

    pub fn insert_new(&mut self, detection: &Detection, caption: &Caption) -> PersistentId {
        let id = PersistentId(self.next_id);
        self.next_id += 1;
        self.entries.push(ObjectEntry {
            id,
            position: detection.world_position,
            captions: vec![CaptionCount {
                text: caption.text.clone(),
                count: 1,
            }],
            observation_count: 1,
        });
        id
    }

    /// Folds a new observation into an entry: running-mean position and
    /// histogram increment (or first-seen append).
    pub fn update_entry(
        &mut self,
        id: PersistentId,
        detection: &Detection,
        caption: &Caption,
    ) -> Result<(), MemoryError> {
        let e = self
            .entries
            .iter_mut()
            .find(|e| e.id == id)
            .ok_or(MemoryError::UnknownId(id))?;
        e.observation_count += 1;
        let n = e.observation_count as f64;
        let p = detection.world_position;
        e.position.x += (p.x - e.position.x) / n;
        e.position.y += (p.y - e.position.y) / n;
        e.position.z += (p.z - e.position.z) / n;
        e.record_caption(&caption.text);
        Ok(())
    }

    /// Copy with every position replaced by its discretized value.
    pub fn discretized(&self) -> Self {
        let mut out = self.clone();
        for e in &mut out.entries {
            e.position = discretize_position(e.position).to_point();
        }
        out
    }
}

/// Position in hundredths of a meter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DiscretePosition(pub [i64; 3]);

impl DiscretePosition {
    pub fn to_point(self) -> Point3 {
        let [x, y, z] = self.0;
        Point3::new(x as f64 / 100.0, y as f64 / 100.0, z as f64 / 100.0)
    }
}

impl std::fmt::Display for DiscretePosition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let [x, y, z] = self.0;
        write!(f, "[{}, {}, {}]", format_centi(x), format_centi(y), format_centi(z))
    }
}

pub(crate) fn format_centi(v: i64) -> String {
    let sign = if v < 0 { "-" } else { "" };
    let a = v.unsigned_abs();
    format!("{sign}{}.{:02}", a / 100, a % 100)
}

/// Rounds a finite value half away from zero at two decimals, working on its
/// shortest round-trip decimal representation (so `1.005` becomes `1.01`).
fn round_centi(v: f64) -> i64 {
    assert!(v.is_finite(), "position must be finite");
    let s = format!("{}", v.abs());
    let (int, frac) = s.split_once('.').unwrap_or((&s, ""));
    let digit = |i: usize| frac.as_bytes().get(i).map_or(0, |b| (b - b'0') as i64);
    let whole: i64 = int.parse().unwrap_or(i64::MAX / 100);
    let mut centi = whole.saturating_mul(100).saturating_add(digit(0) * 10 + digit(1));
    if digit(2) >= 5 {
        centi = centi.saturating_add(1);
    }
    if v < 0.0 {
        -centi
    } else {
        centi
    }
}

pub fn discretize_position(p: Point3) -> DiscretePosition {
    DiscretePosition([round_centi(p.x), round_centi(p.y), round_centi(p.z)])
}

pub const SCENE_START: &str = "[SCENE-START]";
pub const SCENE_END: &str = "[SCENE-END]";
pub const OBJ_ID: &str = "[OBJ-ID]";
pub const CAPTION_HISTORY: &str = "[CAPTION-HISTORY]";
pub const POSITION: &str = "[POSITION]";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SerializeOptions {
    /// Keep only the most frequent captions of each entry (first-seen order
    /// preserved). `None` serializes full histories.
    pub max_captions_per_entry: Option<usize>,
}

pub fn serialize(memory: &EpisodicMemory) -> String {
    serialize_with(memory, SerializeOptions::default())
}

/// Scene block: `[SCENE-START]`, one block per entry separated by a blank
/// line, `[SCENE-END]`. No trailing newline.
pub fn serialize_with(memory: &EpisodicMemory, opts: SerializeOptions) -> String {
    let mut out = String::from(SCENE_START);
    out.push('\n');
    for (i, e) in memory.entries().iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "{OBJ_ID} {}", e.id);
        let _ = writeln!(out, "{CAPTION_HISTORY}");
        for c in kept_captions(e, opts) {
            let _ = writeln!(out, "  {}: \"{}\"", c.count, c.text);
        }
        let _ = writeln!(out, "{POSITION} {}", discretize_position(e.position));
    }
    out.push_str(SCENE_END);
    out
}

fn kept_captions(e: &ObjectEntry, opts: SerializeOptions) -> Vec<&CaptionCount> {
    match opts.max_captions_per_entry {
        Some(k) if k < e.captions.len() => {
            let mut idx: Vec<usize> = (0..e.captions.len()).collect();
            idx.sort_by(|a, b| e.captions[*b].count.cmp(&e.captions[*a].count).then(a.cmp(b)));
            idx.truncate(k);
            idx.sort_unstable();
            idx.into_iter().map(|i| &e.captions[i]).collect()
        }
        _ => e.captions.iter().collect(),
    }
}

/// Token count under a fixed rule: split on whitespace; a bracketed
/// upper-case special token (`[OBJ-ID]`) is one token; otherwise every
/// maximal alphanumeric run is one token and every other character is its own.
pub fn token_count(text: &str) -> usize {
    text.split_whitespace().map(chunk_tokens).sum()
}

fn chunk_tokens(chunk: &str) -> usize {
    let b = chunk.as_bytes();
    let mut i = 0;
    let mut n = 0;
    while i < b.len() {
        if b[i] == b'[' {
            if let Some(len) = special_token_len(&b[i..]) {
                i += len;
                n += 1;
                continue;
            }
        }
        if b[i].is_ascii_alphanumeric() || b[i] == b'_' {
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
        } else {
            // Step over one full UTF-8 character.
            i += 1;
            while i < b.len() && (b[i] & 0xC0) == 0x80 {
                i += 1;
            }
        }
        n += 1;
    }
    n
}

fn special_token_len(b: &[u8]) -> Option<usize> {
    let close = b.iter().position(|c| *c == b']')?;
    let inner = &b[1..close];
    (!inner.is_empty()
        && inner.iter().any(|c| c.is_ascii_uppercase())
        && inner
            .iter()
            .all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || *c == b'-' || *c == b'_'))
    .then_some(close + 1)
}
