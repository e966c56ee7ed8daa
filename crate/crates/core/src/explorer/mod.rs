//! Disagreement-driven exploration and the baseline policies.

mod config;
mod disagreement;
mod policy;
mod stuck;
mod viewpoints;

pub use config::{ExplorationConfig, OverlapRule};
pub use disagreement::{build_disagreement_map, extract_targets, object_disagreement, DisagreementMap, TargetRegion};
pub use policy::{
    frontier_cells, navigate, DisagreementPolicy, FrontierPolicy, GoalKind, NavStep, PlanEvent, Policy, PolicyKind,
    PolicyView, RandomGoalPolicy, StopPolicy,
};
pub use stuck::{detect_stuck, recover, Recovery};
pub use viewpoints::{candidate_viewpoints, rank_viewpoints, Viewpoint, ViewpointSet};
