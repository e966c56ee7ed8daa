//! Data association (ground-truth oracle and a gated greedy heuristic), the
//! memory commit step, and identity metrics over association records.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::memory::{EpisodicMemory, MemoryError, PersistentId};
use crate::oracle::{cosine_similarity, Caption, Embedder};
use crate::world::{FrameTruth, Observation, TrueObjectId};

pub use crate::protocol::{MatchDecision, MatchTarget};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssociationConfig {
    /// Meters.
    pub distance_gate: f64,
    pub caption_similarity_gate: f64,
    pub weight_spatial: f64,
}

impl Default for AssociationConfig {
    fn default() -> Self {
        Self {
            distance_gate: 1.0,
            caption_similarity_gate: 0.3,
            weight_spatial: 0.6,
        }
    }
}

impl AssociationConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.distance_gate.is_finite() && self.distance_gate > 0.0) {
            return Err("distance_gate must be positive and finite".into());
        }
        if !(0.0..=1.0).contains(&self.caption_similarity_gate) {
            return Err("caption_similarity_gate must be in [0, 1]".into());
        }
        if !(0.0..=1.0).contains(&self.weight_spatial) {
            return Err("weight_spatial must be in [0, 1]".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssociationMode {
    #[default]
    Oracle,
    Heuristic,
}

/// Ground-truth binding of physical objects to the persistent ID they were
/// first committed under. Only the oracle associator reads it.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrueIdRegistry {
    bindings: BTreeMap<TrueObjectId, PersistentId>,
}

impl TrueIdRegistry {
    pub fn get(&self, id: TrueObjectId) -> Option<PersistentId> {
        self.bindings.get(&id).copied()
    }

    /// Binds on first commit; later commits of the same object are ignored.
    pub fn record_commit(&mut self, true_id: TrueObjectId, pid: PersistentId) {
        self.bindings.entry(true_id).or_insert(pid);
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }
}

pub fn associate_oracle(observation: &Observation, truth: &FrameTruth, registry: &TrueIdRegistry) -> Vec<MatchDecision> {
    observation
        .detections
        .iter()
        .zip(&truth.true_ids)
        .map(|(d, t)| {
            let target = registry.get(*t).map_or(MatchTarget::NewId, MatchTarget::Existing);
            MatchDecision::new(d.transient_id, target)
        })
        .collect()
}

/// Score of one detection/entry pair, or `None` when the pair fails either
/// gate.
pub fn pair_score(distance: f64, similarity: f64, cfg: &AssociationConfig) -> Option<f64> {
    if distance > cfg.distance_gate || similarity < cfg.caption_similarity_gate {
        return None;
    }
    let spatial = (1.0 - distance / cfg.distance_gate).max(0.0);
    Some(cfg.weight_spatial * spatial + (1.0 - cfg.weight_spatial) * similarity)
}

/// Greedy one-to-one assignment in descending score (ties: lower transient
/// ID, then lower persistent ID). Unassigned detections become NEW_ID.
pub fn associate_heuristic(
    observation: &Observation,
    captions: &[String],
    memory: &EpisodicMemory,
    embedder: &Embedder,
    cfg: &AssociationConfig,
) -> Vec<MatchDecision> {
    assert_eq!(observation.detections.len(), captions.len(), "one caption per detection");
    let entry_vecs: Vec<Vec<_>> = memory
        .entries()
        .iter()
        .map(|e| e.captions.iter().map(|c| embedder.embed(&c.text)).collect())
        .collect();
    let mut pairs = Vec::new();
    for (j, (det, cap)) in observation.detections.iter().zip(captions).enumerate() {
        let v = embedder.embed(cap);
        for (k, e) in memory.entries().iter().enumerate() {
            let d = det.world_position.distance(&e.position);
            let sim = entry_vecs[k]
                .iter()
                .map(|u| cosine_similarity(&v, u))
                .fold(f64::NEG_INFINITY, f64::max);
            if let Some(s) = pair_score(d, sim, cfg) {
                pairs.push((s, det.transient_id, e.id, j));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut assigned: Vec<Option<PersistentId>> = vec![None; captions.len()];
    let mut taken = HashSet::new();
    for (_, _, pid, j) in pairs {
        if assigned[j].is_none() && !taken.contains(&pid) {
            assigned[j] = Some(pid);
            taken.insert(pid);
        }
    }
    observation
        .detections
        .iter()
        .zip(assigned)
        .map(|(d, a)| MatchDecision::new(d.transient_id, a.map_or(MatchTarget::NewId, MatchTarget::Existing)))
        .collect()
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AssociationError {
    #[error("{decisions} decisions for {detections} detections")]
    CountMismatch { decisions: usize, detections: usize },
    #[error("decision {index} is for transient id {got}, detection has {expected}")]
    OrderMismatch { index: usize, expected: u32, got: u32 },
    #[error("persistent id {0} matched twice in one frame")]
    DuplicateTarget(PersistentId),
    #[error(transparent)]
    Memory(#[from] MemoryError),
}

/// Commits one frame's decisions. Returns the persistent ID each detection
/// ended up under (freshly allocated for NEW_ID). Nothing is written unless
/// every decision is valid.
pub fn apply_matches(
    memory: &mut EpisodicMemory,
    decisions: &[MatchDecision],
    observation: &Observation,
    captions: &[Caption],
) -> Result<Vec<PersistentId>, AssociationError> {
    let n = observation.detections.len();
    if decisions.len() != n || captions.len() != n {
        return Err(AssociationError::CountMismatch {
            decisions: decisions.len(),
            detections: n,
        });
    }
    let mut targets = HashSet::new();
    for (i, (dec, det)) in decisions.iter().zip(&observation.detections).enumerate() {
        if dec.transient_id != det.transient_id {
            return Err(AssociationError::OrderMismatch {
                index: i,
                expected: det.transient_id,
                got: dec.transient_id,
            });
        }
        if let MatchTarget::Existing(pid) = dec.target {
            if !memory.contains(pid) {
                return Err(MemoryError::UnknownId(pid).into());
            }
            if !targets.insert(pid) {
                return Err(AssociationError::DuplicateTarget(pid));
            }
        }
    }
    let mut committed = Vec::with_capacity(n);
    for ((dec, det), cap) in decisions.iter().zip(&observation.detections).zip(captions) {
        let pid = match dec.target {
            MatchTarget::NewId => memory.insert_new(det, cap),
            MatchTarget::Existing(pid) => {
                memory.update_entry(pid, det, cap)?;
                pid
            }
        };
        committed.push(pid);
    }
    Ok(committed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssociationRecord {
    pub step: u32,
    pub decision: MatchDecision,
    pub predicted_persistent_id: PersistentId,
    pub true_object_id: TrueObjectId,
}

pub fn make_records(
    step: u32,
    decisions: &[MatchDecision],
    committed: &[PersistentId],
    truth: &FrameTruth,
) -> Vec<AssociationRecord> {
    decisions
        .iter()
        .zip(committed)
        .zip(&truth.true_ids)
        .map(|((d, p), t)| AssociationRecord {
            step,
            decision: *d,
            predicted_persistent_id: *p,
            true_object_id: *t,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ClassScores {
    /// No predictions and nothing to predict scores a perfect 1.
    pub fn from_counts(tp: usize, predicted: usize, actual: usize) -> Self {
        if predicted == 0 && actual == 0 {
            return Self {
                precision: 1.0,
                recall: 1.0,
                f1: 1.0,
            };
        }
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let (p, r) = (ratio(tp, predicted), ratio(tp, actual));
        let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
        Self {
            precision: p,
            recall: r,
            f1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssociationMetrics {
    pub total: usize,
    pub accuracy: f64,
    pub matched: ClassScores,
    pub new: ClassScores,
    pub idsw: usize,
    pub frag: usize,
    pub correct_matches: usize,
    pub correct_news: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("no records to evaluate")]
    Empty,
}

/// Per-detection identity metrics. Records are folded in order. A persistent
/// ID is owned by the true object it was created for; a match is correct iff
/// its target is owned by the detection's true object, and NEW_ID is correct
/// iff that object owns no ID yet.
pub fn evaluate_association(records: &[AssociationRecord]) -> Result<AssociationMetrics, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut owner: HashMap<PersistentId, TrueObjectId> = HashMap::new();
    let mut bound: HashSet<TrueObjectId> = HashSet::new();
    let (mut idsw, mut frag, mut cm, mut cn) = (0, 0, 0, 0);
    let (mut pred_match, mut pred_new) = (0, 0);
    let (mut actual_match, mut actual_new) = (0, 0);
    for r in records {
        let known = bound.contains(&r.true_object_id);
        if known {
            actual_match += 1;
        } else {
            actual_new += 1;
        }
        match r.decision.target {
            MatchTarget::Existing(pid) => {
                pred_match += 1;
                if owner.get(&pid) == Some(&r.true_object_id) {
                    cm += 1;
                } else {
                    idsw += 1;
                }
            }
            MatchTarget::NewId => {
                pred_new += 1;
                if known {
                    frag += 1;
                } else {
                    cn += 1;
                }
                owner.entry(r.predicted_persistent_id).or_insert(r.true_object_id);
                bound.insert(r.true_object_id);
            }
        }
    }
    let total = records.len();
    Ok(AssociationMetrics {
        total,
        accuracy: (cm + cn) as f64 / total as f64,
        matched: ClassScores::from_counts(cm, pred_match, actual_match),
        new: ClassScores::from_counts(cn, pred_new, actual_new),
        idsw,
        frag,
        correct_matches: cm,
        correct_news: cn,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::Vocabulary;
    use crate::world::{AgentPose, Cell, Detection, Heading, Point3};

    fn obs(dets: &[(u32, f64, f64)]) -> Observation {
        Observation {
            step: 1,
            detections: dets
                .iter()
                .map(|(t, x, y)| Detection {
                    transient_id: *t,
                    world_position: Point3::new(*x, *y, 0.8),
                    footprint: vec![],
                })
                .collect(),
            agent_pose: AgentPose::new(Cell::new(0, 0), Heading::East),
        }
    }

    fn cap(t: &str) -> Caption {
        Caption {
            text: t.into(),
            source_step: 1,
            source_pose: AgentPose::new(Cell::new(0, 0), Heading::East),
        }
    }

    fn rec(step: u32, target: Option<u32>, pid: u32, true_id: u32) -> AssociationRecord {
        AssociationRecord {
            step,
            decision: MatchDecision::new(0, target.map_or(MatchTarget::NewId, |p| MatchTarget::Existing(PersistentId(p)))),
            predicted_persistent_id: PersistentId(pid),
            true_object_id: TrueObjectId(true_id),
        }
    }

    #[test]
    fn heuristic_matches_lone_entry() {
        let e = Embedder::new(&Vocabulary::indoor());
        let mut m = EpisodicMemory::new();
        let o = obs(&[(4, 1.0, 1.0)]);
        apply_matches(&mut m, &[MatchDecision::new(4, MatchTarget::NewId)], &o, &[cap("a red lamp")]).unwrap();
        let d = associate_heuristic(&o, &["a red lamp".into()], &m, &e, &AssociationConfig::default());
        assert_eq!(d[0].target, MatchTarget::Existing(PersistentId(1)));
        let far = obs(&[(4, 5.0, 5.0)]);
        let d = associate_heuristic(&far, &["a green toilet".into()], &m, &e, &AssociationConfig::default());
        assert_eq!(d[0].target, MatchTarget::NewId);
    }

    #[test]
    fn apply_rejects_unknown_and_duplicate_targets() {
        let mut m = EpisodicMemory::new();
        let o = obs(&[(1, 0., 0.), (2, 0., 0.)]);
        let caps = [cap("a"), cap("b")];
        let unknown = [
            MatchDecision::new(1, MatchTarget::Existing(PersistentId(9))),
            MatchDecision::new(2, MatchTarget::NewId),
        ];
        assert!(matches!(apply_matches(&mut m, &unknown, &o, &caps), Err(AssociationError::Memory(_))));
        assert!(m.is_empty(), "no partial commit");
        let news = [MatchDecision::new(1, MatchTarget::NewId), MatchDecision::new(2, MatchTarget::NewId)];
        assert_eq!(apply_matches(&mut m, &news, &o, &caps).unwrap().len(), 2);
        let dup = [
            MatchDecision::new(1, MatchTarget::Existing(PersistentId(1))),
            MatchDecision::new(2, MatchTarget::Existing(PersistentId(1))),
        ];
        assert_eq!(
            apply_matches(&mut m, &dup, &o, &caps),
            Err(AssociationError::DuplicateTarget(PersistentId(1)))
        );
        let both = [
            MatchDecision::new(1, MatchTarget::Existing(PersistentId(1))),
            MatchDecision::new(2, MatchTarget::Existing(PersistentId(2))),
        ];
        apply_matches(&mut m, &both, &o, &caps).unwrap();
        assert_eq!(m.len(), 2);
        assert!(m.entries().iter().all(|e| e.observation_count == 2));
    }

    #[test]
    fn six_record_tape() {
        // new, new, correct match, wrong entry, new on known, correct match
        let tape = [
            rec(1, None, 1, 10),
            rec(1, None, 2, 20),
            rec(2, Some(1), 1, 10),
            rec(3, Some(1), 1, 20),
            rec(4, None, 3, 10),
            rec(5, Some(2), 2, 20),
        ];
        let m = evaluate_association(&tape).unwrap();
        assert!((m.accuracy - 4.0 / 6.0).abs() < 1e-12);
        assert_eq!((m.idsw, m.frag), (1, 1));
        assert_eq!(m.idsw + m.frag + m.correct_matches + m.correct_news, m.total);
    }

    #[test]
    fn all_new_on_reobservations() {
        let tape = [rec(1, None, 1, 7), rec(2, None, 2, 7), rec(3, None, 3, 7)];
        let m = evaluate_association(&tape).unwrap();
        assert!((m.new.precision - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.frag, 2);
        assert_eq!(m.matched.f1, 0.0);
        assert_eq!(evaluate_association(&[]), Err(MetricsError::Empty));
    }

    #[test]
    fn score_gates() {
        let cfg = AssociationConfig::default();
        assert_eq!(pair_score(1.5, 1.0, &cfg), None);
        assert_eq!(pair_score(0.0, 0.1, &cfg), None);
        assert!((pair_score(0.5, 1.0, &cfg).unwrap() - (0.6 * 0.5 + 0.4)).abs() < 1e-12);
    }
}
