//! Line-delimited episode log: one header, one record per step, one footer.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::RunConfig;
use crate::aggregator::PseudoCaption;
use crate::association::{AssociationMode, AssociationRecord};
use crate::explorer::{PlanEvent, PolicyKind};
use crate::memory::{EpisodicMemory, PersistentId};
use crate::oracle::{AttributeSet, Vocabulary};
use crate::world::{Action, AgentPose, Detection, Point3, TrueObjectId};

pub const LOG_FORMAT: &str = "objmem-episode/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthObject {
    pub true_id: TrueObjectId,
    pub center: Point3,
    pub attributes: AttributeSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub format: String,
    pub config_hash: String,
    pub world_hash: String,
    pub world_seed: u64,
    pub policy_seed: u64,
    pub policy: PolicyKind,
    pub association: AssociationMode,
    /// Meters per cell of the episode's world.
    pub cell_size: f64,
    pub free_cells: usize,
    pub vocabulary: Vocabulary,
    pub ground_truth: Vec<GroundTruthObject>,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u32,
    /// Pose at observation time, before the action.
    pub pose: AgentPose,
    pub detections: Vec<Detection>,
    pub captions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt: Option<String>,
    pub prompt_tokens: usize,
    /// Rendered structured output for this step.
    pub output: String,
    pub committed: Vec<PersistentId>,
    pub associations: Vec<AssociationRecord>,
    pub action: Action,
    pub collided: bool,
    /// Memory token count after this step's update.
    pub tokens: usize,
    pub objects: usize,
    pub distinct_captions: usize,
    /// Explored free cells after the move.
    pub explored_cells: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<PlanEvent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    PolicyStop,
    EpisodeCap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoCaptionRecord {
    pub id: PersistentId,
    pub pseudo: PseudoCaption,
    pub baseline: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogFooter {
    pub steps: u32,
    pub stop_reason: StopReason,
    pub final_memory: EpisodicMemory,
    pub pseudo_captions: Vec<PseudoCaptionRecord>,
    pub report: super::EpisodeReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Record {
    Header(Box<LogHeader>),
    Step(Box<StepRecord>),
    Footer(Box<LogFooter>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub header: LogHeader,
    pub steps: Vec<StepRecord>,
    pub footer: LogFooter,
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line} (step {step}): {msg}")]
    Malformed { line: usize, step: usize, msg: String },
    #[error("log is empty or does not start with a header")]
    MissingHeader,
    #[error("unsupported log format {0:?}")]
    UnsupportedFormat(String),
    #[error("line {line}: unexpected {kind} record")]
    Unexpected { line: usize, kind: &'static str },
    #[error("step records not contiguous: expected step {expected}, found {found}")]
    NonContiguous { expected: u32, found: u32 },
    #[error("log has no footer after step {last_step}")]
    MissingFooter { last_step: u32 },
    #[error("footer reports {footer} steps but log has {records}")]
    StepCountMismatch { footer: u32, records: u32 },
    #[error("config hash {logged} does not match embedded config ({computed})")]
    ConfigHashMismatch { logged: String, computed: String },
}

impl EpisodeLog {
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let line = |r: &Record| serde_json::to_string(r).expect("log records serialize");
        writeln!(w, "{}", line(&Record::Header(Box::new(self.header.clone()))))?;
        for s in &self.steps {
            writeln!(w, "{}", line(&Record::Step(Box::new(s.clone()))))?;
        }
        writeln!(w, "{}", line(&Record::Footer(Box::new(self.footer.clone()))))?;
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }

    /// Parses and checks structure: header first, contiguous steps from 1,
    /// footer last and consistent, config hash matching the embedded config.
    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self, LogError> {
        let mut header = None;
        let mut steps: Vec<StepRecord> = Vec::new();
        let mut footer = None;
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let rec: Record = serde_json::from_str(&line).map_err(|e| LogError::Malformed {
                line: lineno,
                step: lineno.saturating_sub(1),
                msg: e.to_string(),
            })?;
            if footer.is_some() {
                return Err(LogError::Unexpected { line: lineno, kind: "trailing" });
            }
            match rec {
                Record::Header(h) => {
                    if header.is_some() || !steps.is_empty() {
                        return Err(LogError::Unexpected { line: lineno, kind: "header" });
                    }
                    if h.format != LOG_FORMAT {
                        return Err(LogError::UnsupportedFormat(h.format));
                    }
                    header = Some(*h);
                }
                Record::Step(s) => {
                    if header.is_none() {
                        return Err(LogError::MissingHeader);
                    }
                    let expected = steps.len() as u32 + 1;
                    if s.step != expected {
                        return Err(LogError::NonContiguous { expected, found: s.step });
                    }
                    steps.push(*s);
                }
                Record::Footer(f) => {
                    if header.is_none() {
                        return Err(LogError::MissingHeader);
                    }
                    footer = Some(*f);
                }
            }
        }
        let header = header.ok_or(LogError::MissingHeader)?;
        let footer = footer.ok_or(LogError::MissingFooter {
            last_step: steps.len() as u32,
        })?;
        if footer.steps != steps.len() as u32 {
            return Err(LogError::StepCountMismatch {
                footer: footer.steps,
                records: steps.len() as u32,
            });
        }
        let computed = header.config.hash();
        if computed != header.config_hash {
            return Err(LogError::ConfigHashMismatch {
                logged: header.config_hash.clone(),
                computed,
            });
        }
        Ok(Self { header, steps, footer })
    }

    pub fn read_path(path: &std::path::Path) -> Result<Self, LogError> {
        let f = std::fs::File::open(path)?;
        Self::read_jsonl(std::io::BufReader::new(f))
    }
}
