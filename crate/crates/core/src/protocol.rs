//! Prompt serializer and strict parser for the structured model turn.
//!
//! Output grammar (one item per line, trailing whitespace ignored, a single
//! final newline allowed):
//!
//! ```text
//! output  = match* caption* action
//! match   = "[MATCH]" ws uint ws ":" ws ( uint | "NEW_ID" )
//! caption = "[CAPTION]" " " '"' text '"'
//! action  = "[ACTION]" ws ( "move_forward" | "turn_left" | "turn_right" | "stop" )
//! ```
//!
//! Captions align positionally with matches. See `docs/protocol.md` for the
//! prompt and scene-block grammar.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::memory::{
    self, CaptionCount, DiscretePosition, EpisodicMemory, ObjectEntry, PersistentId, CAPTION_HISTORY, OBJ_ID,
    POSITION, SCENE_END, SCENE_START,
};
use crate::world::{Action, Observation};

pub const NEW_ID: &str = "NEW_ID";
pub const MATCH: &str = "[MATCH]";
pub const CAPTION: &str = "[CAPTION]";
pub const ACTION: &str = "[ACTION]";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchTarget {
    Existing(PersistentId),
    NewId,
}

impl std::fmt::Display for MatchTarget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MatchTarget::Existing(id) => write!(f, "{id}"),
            MatchTarget::NewId => f.write_str(NEW_ID),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MatchDecision {
    pub transient_id: u32,
    pub target: MatchTarget,
}

impl MatchDecision {
    pub fn new(transient_id: u32, target: MatchTarget) -> Self {
        Self { transient_id, target }
    }
}

/// One parsed model turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuredOutput {
    pub matches: Vec<MatchDecision>,
    pub captions: Vec<String>,
    pub action: Action,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("output is not valid UTF-8")]
    InvalidUtf8,
    #[error("no [ACTION] line")]
    MissingAction,
    #[error("line {line}: second [ACTION] line")]
    DuplicateAction { line: usize },
    #[error("line {line}: transient id {id} matched twice")]
    DuplicateTransientId { line: usize, id: u32 },
    #[error("line {line}: {token:?} is not a non-negative integer")]
    InvalidInteger { line: usize, token: String },
    #[error("line {line}: unknown action {name:?}")]
    UnknownAction { line: usize, name: String },
    #[error("{captions} captions for {matches} matches")]
    CaptionCountMismatch { matches: usize, captions: usize },
    #[error("line {line}: malformed [MATCH] line")]
    MalformedMatch { line: usize },
    #[error("line {line}: malformed [CAPTION] line")]
    MalformedCaption { line: usize },
    #[error("line {line}: malformed [ACTION] line")]
    MalformedAction { line: usize },
    #[error("line {line}: unexpected line")]
    UnexpectedLine { line: usize },
    #[error("line {line}: content after [ACTION]")]
    TrailingContent { line: usize },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RenderError {
    #[error("{captions} captions for {matches} matches")]
    CaptionCountMismatch { matches: usize, captions: usize },
    #[error("transient id {0} matched twice")]
    DuplicateTransientId(u32),
    #[error("caption {0} is empty or spans lines")]
    InvalidCaption(usize),
}

fn valid_caption_text(t: &str) -> bool {
    !t.is_empty() && !t.contains(['\n', '\r'])
}

/// Canonical rendering: match lines, caption lines, then the action line,
/// joined by newlines with no trailing newline.
pub fn render_output(out: &StructuredOutput) -> Result<String, RenderError> {
    if out.matches.len() != out.captions.len() {
        return Err(RenderError::CaptionCountMismatch {
            matches: out.matches.len(),
            captions: out.captions.len(),
        });
    }
    let mut seen = HashSet::new();
    let mut lines = Vec::with_capacity(out.matches.len() * 2 + 1);
    for m in &out.matches {
        if !seen.insert(m.transient_id) {
            return Err(RenderError::DuplicateTransientId(m.transient_id));
        }
        lines.push(format!("{MATCH} {} : {}", m.transient_id, m.target));
    }
    for (i, c) in out.captions.iter().enumerate() {
        if !valid_caption_text(c) {
            return Err(RenderError::InvalidCaption(i));
        }
        lines.push(format!("{CAPTION} \"{c}\""));
    }
    lines.push(format!("{ACTION} {}", out.action));
    Ok(lines.join("\n"))
}

pub fn parse_output_bytes(bytes: &[u8]) -> Result<StructuredOutput, ParseError> {
    let text = std::str::from_utf8(bytes).map_err(|_| ParseError::InvalidUtf8)?;
    parse_output(text)
}

#[derive(PartialEq, PartialOrd)]
enum Section {
    Matches,
    Captions,
    Done,
}

/// Strict parser: every line must be a match, caption or action line in that
/// section order. The first offending line determines the error.
pub fn parse_output(text: &str) -> Result<StructuredOutput, ParseError> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    let mut matches = Vec::new();
    let mut captions = Vec::new();
    let mut action = None;
    let mut seen = HashSet::new();
    let mut section = Section::Matches;

    for (i, raw) in body.split('\n').enumerate() {
        let line = i + 1;
        let l = raw.trim_end();
        let head = l.split_whitespace().next().unwrap_or("");
        if section == Section::Done {
            return Err(if head == ACTION {
                ParseError::DuplicateAction { line }
            } else {
                ParseError::TrailingContent { line }
            });
        }
        match head {
            MATCH if section == Section::Matches => {
                let m = parse_match_line(l, line)?;
                if !seen.insert(m.transient_id) {
                    return Err(ParseError::DuplicateTransientId {
                        line,
                        id: m.transient_id,
                    });
                }
                matches.push(m);
            }
            CAPTION if section <= Section::Captions => {
                section = Section::Captions;
                let text = l
                    .strip_prefix("[CAPTION] \"")
                    .and_then(|r| r.strip_suffix('"'))
                    .filter(|t| !t.is_empty())
                    .ok_or(ParseError::MalformedCaption { line })?;
                captions.push(text.to_string());
            }
            ACTION => {
                let parts: Vec<&str> = l.split_whitespace().collect();
                if parts.len() != 2 {
                    return Err(ParseError::MalformedAction { line });
                }
                action = Some(Action::from_name(parts[1]).ok_or_else(|| ParseError::UnknownAction {
                    line,
                    name: parts[1].to_string(),
                })?);
                section = Section::Done;
            }
            _ => return Err(ParseError::UnexpectedLine { line }),
        }
    }
    let action = action.ok_or(ParseError::MissingAction)?;
    if matches.len() != captions.len() {
        return Err(ParseError::CaptionCountMismatch {
            matches: matches.len(),
            captions: captions.len(),
        });
    }
    Ok(StructuredOutput {
        matches,
        captions,
        action,
    })
}

fn parse_uint(token: &str, line: usize) -> Result<u32, ParseError> {
    if token.is_empty() || !token.bytes().all(|b| b.is_ascii_digit()) {
        return Err(ParseError::InvalidInteger {
            line,
            token: token.to_string(),
        });
    }
    token.parse().map_err(|_| ParseError::InvalidInteger {
        line,
        token: token.to_string(),
    })
}

fn parse_match_line(l: &str, line: usize) -> Result<MatchDecision, ParseError> {
    let parts: Vec<&str> = l.split_whitespace().collect();
    if parts.len() != 4 || parts[2] != ":" {
        return Err(ParseError::MalformedMatch { line });
    }
    let transient_id = parse_uint(parts[1], line)?;
    let target = if parts[3] == NEW_ID {
        MatchTarget::NewId
    } else {
        MatchTarget::Existing(PersistentId(parse_uint(parts[3], line)?))
    };
    Ok(MatchDecision { transient_id, target })
}

/// Instruction header placed before the frame IDs.
pub const DEFAULT_PROMPT_HEADER: &str = "[TASK-START]
Your task is object linking and action prediction.

You are given:
 - A MEMORY of previously seen objects, each with a fixed OBJ-ID.
 - A FRAME with current objects, each having a temporary OBJ-ID
   (a random ID drawn over the image).

For each object in the FRAME, decide whether it corresponds
to one MEMORY object.
If it matches, output:
  [MATCH] <frame_random_id> : <memory_obj_id>
If it is a new object, output:
  [MATCH] <frame_random_id> : NEW_ID

After matching all objects, predict the action to take:
  [ACTION] [ACTION]
Available actions are:
  move_forward, stop, turn_left, turn_right

Below are the FRAME objects and their random IDs:";

/// Prompt pieces: instruction header, frame transient IDs, scene block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptDocument {
    pub header: String,
    pub frame_ids: Vec<u32>,
    pub memory_block: String,
}

impl PromptDocument {
    pub fn new(header: &str, frame_ids: Vec<u32>, memory: &EpisodicMemory) -> Self {
        Self {
            header: header.to_string(),
            frame_ids,
            memory_block: memory::serialize(memory),
        }
    }

    /// Header, an indented comma-separated ID line (empty for an empty
    /// frame), a blank line, then the scene block.
    pub fn render(&self) -> String {
        let ids = if self.frame_ids.is_empty() {
            String::new()
        } else {
            let list: Vec<String> = self.frame_ids.iter().map(u32::to_string).collect();
            format!("  {}", list.join(", "))
        };
        format!("{}\n{}\n\n{}", self.header, ids, self.memory_block)
    }
}

pub fn format_prompt(memory: &EpisodicMemory, observation: &Observation, header: &str) -> String {
    PromptDocument::new(header, observation.transient_ids(), memory).render()
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PromptParseError {
    #[error("prompt does not start with the expected header")]
    HeaderMismatch,
    #[error("malformed frame ID line")]
    MalformedFrameIds,
    #[error("missing blank line before the scene block")]
    MissingSeparator,
    #[error(transparent)]
    Memory(#[from] MemoryParseError),
}

/// Inverse of [`PromptDocument::render`] for a known header.
pub fn parse_prompt(text: &str, header: &str) -> Result<(Vec<u32>, EpisodicMemory), PromptParseError> {
    let rest = text
        .strip_prefix(header)
        .and_then(|r| r.strip_prefix('\n'))
        .ok_or(PromptParseError::HeaderMismatch)?;
    let (id_line, rest) = rest.split_once('\n').ok_or(PromptParseError::MalformedFrameIds)?;
    let frame_ids = if id_line.is_empty() {
        Vec::new()
    } else {
        id_line
            .strip_prefix("  ")
            .ok_or(PromptParseError::MalformedFrameIds)?
            .split(", ")
            .map(|t| parse_uint(t, 0).map_err(|_| PromptParseError::MalformedFrameIds))
            .collect::<Result<_, _>>()?
    };
    let block = rest.strip_prefix('\n').ok_or(PromptParseError::MissingSeparator)?;
    Ok((frame_ids, parse_memory(block)?))
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MemoryParseError {
    #[error("scene block must start with [SCENE-START]")]
    MissingSceneStart,
    #[error("scene block must end with [SCENE-END]")]
    MissingSceneEnd,
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("line {line}: duplicate [OBJ-ID] {id}")]
    DuplicateObjectId { line: usize, id: u32 },
    #[error("line {line}: caption count must be at least 1")]
    InvalidCount { line: usize },
    #[error("line {line}: empty caption history")]
    EmptyHistory { line: usize },
}

fn malformed(line: usize, msg: &str) -> MemoryParseError {
    MemoryParseError::Malformed {
        line,
        msg: msg.to_string(),
    }
}

/// Canonical centi-number: `-?(0|[1-9][0-9]*)\.[0-9]{2}`, no negative zero.
fn parse_centi(s: &str) -> Option<i64> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.')?;
    let digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
    if !digits(int) || frac.len() != 2 || !digits(frac) || (int.len() > 1 && int.starts_with('0')) {
        return None;
    }
    let v = int.parse::<i64>().ok()?.checked_mul(100)?.checked_add(frac.parse::<i64>().ok()?)?;
    if neg && v == 0 {
        return None;
    }
    Some(if neg { -v } else { v })
}

fn parse_position(l: &str, line: usize) -> Result<DiscretePosition, MemoryParseError> {
    let inner = l
        .strip_prefix("[POSITION] [")
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| malformed(line, "expected `[POSITION] [x, y, z]`"))?;
    let vals: Vec<i64> = inner
        .split(", ")
        .map(parse_centi)
        .collect::<Option<_>>()
        .ok_or_else(|| malformed(line, "position components must have two decimals"))?;
    let [x, y, z]: [i64; 3] = vals
        .try_into()
        .map_err(|_| malformed(line, "position needs three components"))?;
    Ok(DiscretePosition([x, y, z]))
}

/// Parses a canonical scene block. Positions come back discretized and
/// `observation_count` is the histogram total.
pub fn parse_memory(text: &str) -> Result<EpisodicMemory, MemoryParseError> {
    let lines: Vec<&str> = text.split('\n').collect();
    if lines.first() != Some(&SCENE_START) {
        return Err(MemoryParseError::MissingSceneStart);
    }
    if lines.len() < 2 || lines.last() != Some(&SCENE_END) {
        return Err(MemoryParseError::MissingSceneEnd);
    }
    let body = &lines[1..lines.len() - 1];
    let mut entries: Vec<ObjectEntry> = Vec::new();
    let mut ids = HashSet::new();
    let mut i = 0;
    while i < body.len() {
        let line_no = |k: usize| k + 2;
        if !entries.is_empty() {
            if !body[i].is_empty() {
                return Err(malformed(line_no(i), "expected blank line between objects"));
            }
            i += 1;
        }
        let id_line = body.get(i).ok_or_else(|| malformed(line_no(i), "expected [OBJ-ID]"))?;
        let id_text = id_line
            .strip_prefix(OBJ_ID)
            .and_then(|r| r.strip_prefix(' '))
            .ok_or_else(|| malformed(line_no(i), "expected `[OBJ-ID] <id>`"))?;
        let id = parse_uint(id_text, line_no(i)).map_err(|_| malformed(line_no(i), "object id must be an integer"))?;
        if !ids.insert(id) {
            return Err(MemoryParseError::DuplicateObjectId { line: line_no(i), id });
        }
        i += 1;
        if body.get(i) != Some(&CAPTION_HISTORY) {
            return Err(malformed(line_no(i), "expected [CAPTION-HISTORY]"));
        }
        let history_line = line_no(i);
        i += 1;
        let mut captions = Vec::new();
        while let Some(l) = body.get(i).and_then(|l| l.strip_prefix("  ")) {
            let (count, rest) = l
                .split_once(": \"")
                .ok_or_else(|| malformed(line_no(i), "expected `  <count>: \"<caption>\"`"))?;
            let text = rest
                .strip_suffix('"')
                .filter(|t| !t.is_empty())
                .ok_or_else(|| malformed(line_no(i), "caption must be a non-empty quoted string"))?;
            let count = parse_uint(count, line_no(i)).map_err(|_| malformed(line_no(i), "count must be an integer"))?;
            if count == 0 {
                return Err(MemoryParseError::InvalidCount { line: line_no(i) });
            }
            captions.push(CaptionCount {
                text: text.to_string(),
                count,
            });
            i += 1;
        }
        if captions.is_empty() {
            return Err(MemoryParseError::EmptyHistory { line: history_line });
        }
        let pos_line = body.get(i).ok_or_else(|| malformed(line_no(i), "expected [POSITION]"))?;
        if !pos_line.starts_with(POSITION) {
            return Err(malformed(line_no(i), "expected [POSITION]"));
        }
        let position = parse_position(pos_line, line_no(i))?.to_point();
        i += 1;
        entries.push(ObjectEntry {
            id: PersistentId(id),
            position,
            observation_count: captions.iter().map(|c| c.count).sum(),
            captions,
        });
    }
    EpisodicMemory::from_entries(entries).map_err(|e| malformed(0, &e.to_string()))
}
