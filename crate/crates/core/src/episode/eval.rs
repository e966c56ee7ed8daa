//! Metric recomputation from an episode log alone.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::log::{EpisodeLog, LogHeader, PseudoCaptionRecord, StepRecord};
use crate::aggregator::{frequency_baseline, pseudo_caption, ViewRecord};
use crate::association::{apply_matches, evaluate_association, AssociationError, AssociationMode};
use crate::explorer::{object_disagreement, PolicyKind};
use crate::memory::{EpisodicMemory, PersistentId};
use crate::metrics::{attribute_f1, memory_consistency, memory_scalability, ScalabilityPoint};
use crate::oracle::{AttributeSet, Caption, Embedder};
use crate::protocol::{parse_output, MatchTarget, ParseError};
use crate::world::{Observation, TrueObjectId};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("step {step}: output does not parse: {source}")]
    Output { step: u32, source: ParseError },
    #[error("step {step}: decisions cannot be applied: {source}")]
    Replay { step: u32, source: AssociationError },
    #[error("step {step}: replayed ids {replayed:?} differ from logged {logged:?}")]
    CommitMismatch {
        step: u32,
        replayed: Vec<PersistentId>,
        logged: Vec<PersistentId>,
    },
    #[error("step {step}: logged memory token count {logged}, replay gives {replayed}")]
    TokenMismatch { step: u32, logged: usize, replayed: usize },
    #[error("footer {0} does not match the replayed episode")]
    FooterMismatch(&'static str),
}

/// One row of the evaluation report. Optional columns are empty when the
/// quantity is undefined for the episode (no detections, no objects, or a
/// series too short for the scalability fit).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeReport {
    pub policy: PolicyKind,
    pub association: AssociationMode,
    pub world_seed: u64,
    pub policy_seed: u64,
    pub steps: u32,
    pub stopped: bool,
    pub detections: usize,
    pub accuracy: Option<f64>,
    pub f1_match: Option<f64>,
    pub f1_new: Option<f64>,
    pub idsw: usize,
    pub frag: usize,
    pub objects: usize,
    pub mean_cs: Option<f64>,
    pub median_cs: Option<f64>,
    pub iqr_cs: Option<f64>,
    pub mean_disagreement: Option<f64>,
    pub pseudo_attr_f1: Option<f64>,
    pub baseline_attr_f1: Option<f64>,
    pub coverage: f64,
    pub final_tokens: usize,
    pub saturation_step: Option<u32>,
    pub corr_tokens_objects: Option<f64>,
    pub corr_tokens_suffix_steps: Option<f64>,
    pub scalability_pass: Option<bool>,
}

/// Everything derived by replaying the step records.
#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    pub memory: EpisodicMemory,
    pub pseudo_captions: Vec<PseudoCaptionRecord>,
    pub report: EpisodeReport,
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Rebuilds memory from the logged detections, captions and outputs, then
/// computes every metric.
pub fn replay(header: &LogHeader, steps: &[StepRecord], stopped: bool) -> Result<Replay, EvalError> {
    let cfg = &header.config;
    let embedder = Embedder::new(&header.vocabulary);
    let mut memory = EpisodicMemory::new();
    let mut views: BTreeMap<PersistentId, Vec<ViewRecord>> = BTreeMap::new();
    let mut records = Vec::new();
    for s in steps {
        let out = parse_output(&s.output).map_err(|source| EvalError::Output { step: s.step, source })?;
        let obs = Observation {
            step: s.step,
            detections: s.detections.clone(),
            agent_pose: s.pose,
        };
        let captions: Vec<Caption> = out
            .captions
            .iter()
            .map(|t| Caption {
                text: t.clone(),
                source_step: s.step,
                source_pose: s.pose,
            })
            .collect();
        let committed =
            apply_matches(&mut memory, &out.matches, &obs, &captions).map_err(|source| EvalError::Replay { step: s.step, source })?;
        if committed != s.committed {
            return Err(EvalError::CommitMismatch {
                step: s.step,
                replayed: committed,
                logged: s.committed.clone(),
            });
        }
        let tokens = crate::memory::token_count(&crate::memory::serialize(&memory));
        if tokens != s.tokens {
            return Err(EvalError::TokenMismatch {
                step: s.step,
                logged: s.tokens,
                replayed: tokens,
            });
        }
        let agent = s.pose.cell;
        for (det, pid) in s.detections.iter().zip(&committed) {
            let cs = header.cell_size;
            let (ax, ay) = ((agent.x as f64 + 0.5) * cs, (agent.y as f64 + 0.5) * cs);
            views.entry(*pid).or_default().push(ViewRecord {
                step: s.step,
                pose: s.pose,
                bearing_deg: (ay - det.world_position.y).atan2(ax - det.world_position.x).to_degrees(),
                covered_cells: det.footprint.iter().copied().collect(),
            });
        }
        records.extend(s.associations.iter().copied());
    }

    // Each persistent ID belongs to the object it was created for.
    let mut owner: HashMap<PersistentId, TrueObjectId> = HashMap::new();
    for r in &records {
        if r.decision.target == MatchTarget::NewId {
            owner.entry(r.predicted_persistent_id).or_insert(r.true_object_id);
        }
    }
    let truth: HashMap<TrueObjectId, &AttributeSet> = header.ground_truth.iter().map(|g| (g.true_id, &g.attributes)).collect();

    let mut pseudo_captions = Vec::new();
    let (mut pf1, mut bf1, mut dis) = (Vec::new(), Vec::new(), Vec::new());
    for e in memory.entries() {
        let pv = views.get(&e.id).map(Vec::as_slice).unwrap_or(&[]);
        let pseudo = pseudo_caption(e, pv, cfg.view_budget, &header.vocabulary, cfg.vote_threshold);
        let baseline = frequency_baseline(e).map(str::to_string);
        if let Some(t) = owner.get(&e.id).and_then(|id| truth.get(id)) {
            pf1.push(attribute_f1(pseudo.attributes.as_ref(), t).f1);
            let b = baseline.as_deref().and_then(|b| AttributeSet::parse(b, &header.vocabulary));
            bf1.push(attribute_f1(b.as_ref(), t).f1);
        }
        dis.push(object_disagreement(e, &embedder));
        pseudo_captions.push(PseudoCaptionRecord { id: e.id, pseudo, baseline });
    }

    let assoc = evaluate_association(&records).ok();
    let cons = memory_consistency(&memory, &embedder).ok();
    let series: Vec<ScalabilityPoint> = steps
        .iter()
        .map(|s| ScalabilityPoint {
            step: s.step,
            tokens: s.tokens,
            objects: s.objects,
            distinct_captions: s.distinct_captions,
            surrogate_cost: s.prompt_tokens,
        })
        .collect();
    let scal = memory_scalability(&series).ok();
    let last = steps.last();
    let report = EpisodeReport {
        policy: header.policy,
        association: header.association,
        world_seed: header.world_seed,
        policy_seed: header.policy_seed,
        steps: steps.len() as u32,
        stopped,
        detections: records.len(),
        accuracy: assoc.map(|a| a.accuracy),
        f1_match: assoc.map(|a| a.matched.f1),
        f1_new: assoc.map(|a| a.new.f1),
        idsw: assoc.map_or(0, |a| a.idsw),
        frag: assoc.map_or(0, |a| a.frag),
        objects: memory.len(),
        mean_cs: cons.as_ref().map(|c| c.mean),
        median_cs: cons.as_ref().map(|c| c.median),
        iqr_cs: cons.as_ref().map(|c| c.iqr),
        mean_disagreement: mean(&dis),
        pseudo_attr_f1: mean(&pf1),
        baseline_attr_f1: mean(&bf1),
        coverage: if header.free_cells == 0 {
            1.0
        } else {
            last.map_or(0, |s| s.explored_cells) as f64 / header.free_cells as f64
        },
        final_tokens: last.map_or(0, |s| s.tokens),
        saturation_step: scal.as_ref().map(|r| r.saturation_step),
        corr_tokens_objects: scal.as_ref().map(|r| r.corr_tokens_objects),
        corr_tokens_suffix_steps: scal.as_ref().map(|r| r.corr_tokens_suffix_steps),
        scalability_pass: scal.as_ref().map(|r| r.pass),
    };
    Ok(Replay {
        memory,
        pseudo_captions,
        report,
    })
}

/// Recomputes the report and checks it against the footer.
pub fn evaluate_log(log: &EpisodeLog) -> Result<EpisodeReport, EvalError> {
    let stopped = log.footer.stop_reason == super::StopReason::PolicyStop;
    let r = replay(&log.header, &log.steps, stopped)?;
    if r.memory != log.footer.final_memory {
        return Err(EvalError::FooterMismatch("final memory"));
    }
    if r.pseudo_captions != log.footer.pseudo_captions {
        return Err(EvalError::FooterMismatch("pseudo-captions"));
    }
    if r.report != log.footer.report {
        return Err(EvalError::FooterMismatch("report"));
    }
    Ok(r.report)
}

/// Writes report rows as CSV with a header line.
pub fn write_report_csv<W: std::io::Write>(rows: &[EpisodeReport], w: W) -> Result<(), csv::Error> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct SeriesRow {
    policy: PolicyKind,
    world_seed: u64,
    policy_seed: u64,
    step: u32,
    tokens: usize,
    objects: usize,
    distinct_captions: usize,
    prompt_tokens: usize,
    explored_cells: usize,
}

/// Per-step series for plotting: tokens, objects and coverage over time.
pub fn write_series_csv<W: std::io::Write>(logs: &[EpisodeLog], w: W) -> Result<(), csv::Error> {
    let mut wtr = csv::Writer::from_writer(w);
    for log in logs {
        for s in &log.steps {
            wtr.serialize(SeriesRow {
                policy: log.header.policy,
                world_seed: log.header.world_seed,
                policy_seed: log.header.policy_seed,
                step: s.step,
                tokens: s.tokens,
                objects: s.objects,
                distinct_captions: s.distinct_captions,
                prompt_tokens: s.prompt_tokens,
                explored_cells: s.explored_cells,
            })?;
        }
    }
    wtr.flush()?;
    Ok(())
}
