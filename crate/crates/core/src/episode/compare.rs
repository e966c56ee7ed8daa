//! Matched-seed policy comparison: every policy runs on the same worlds and
//! runtime seeds, then metrics are compared seed by seed.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::runner::{load_world, log_file_name, run_episode, RunError};
use super::{EpisodeReport, RunConfig};
use crate::explorer::PolicyKind;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicySummary {
    /// Position in the compared policy list; a policy may appear twice.
    pub slot: usize,
    pub policy: PolicyKind,
    pub episodes: usize,
    pub median_mean_cs: Option<f64>,
    pub median_mean_disagreement: Option<f64>,
    pub median_accuracy: Option<f64>,
    pub median_pseudo_attr_f1: Option<f64>,
    pub median_coverage: Option<f64>,
    pub median_steps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WinCount {
    pub metric: &'static str,
    pub slot: usize,
    pub policy: PolicyKind,
    pub opponent_slot: usize,
    pub opponent: PolicyKind,
    pub wins: usize,
    pub losses: usize,
    pub ties: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub policies: Vec<PolicyKind>,
    /// `rows[slot][episode]`, episodes in `RunConfig::episodes` order.
    pub rows: Vec<Vec<EpisodeReport>>,
    pub summary: Vec<PolicySummary>,
    pub wins: Vec<WinCount>,
}

/// Metrics compared per seed, and whether larger is better.
pub const COMPARED_METRICS: [(&str, bool); 4] = [
    ("mean_cs", true),
    ("mean_disagreement", false),
    ("pseudo_attr_f1", true),
    ("coverage", true),
];

fn metric(r: &EpisodeReport, name: &str) -> Option<f64> {
    match name {
        "mean_cs" => r.mean_cs,
        "mean_disagreement" => r.mean_disagreement,
        "pseudo_attr_f1" => r.pseudo_attr_f1,
        "coverage" => Some(r.coverage),
        "accuracy" => r.accuracy,
        "steps" => Some(r.steps as f64),
        _ => None,
    }
}

pub fn median(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let mut v: Vec<f64> = values.into_iter().collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    Some(crate::metrics::quantile(&v, 0.5))
}

impl Comparison {
    /// Seeds on which `slot` beats `opponent` on `metric`.
    pub fn wins(&self, metric: &str, slot: usize, opponent: usize) -> Option<&WinCount> {
        self.wins
            .iter()
            .find(|w| w.metric == metric && w.slot == slot && w.opponent_slot == opponent)
    }
}

/// A missing value never wins; two missing values tie.
fn count_wins(a: &[EpisodeReport], b: &[EpisodeReport], name: &str, higher: bool) -> (usize, usize, usize) {
    let (mut w, mut l, mut t) = (0, 0, 0);
    for (x, y) in a.iter().zip(b) {
        match (metric(x, name), metric(y, name)) {
            (Some(x), Some(y)) if x == y => t += 1,
            (Some(x), Some(y)) => {
                if (x > y) == higher {
                    w += 1
                } else {
                    l += 1
                }
            }
            (Some(_), None) => w += 1,
            (None, Some(_)) => l += 1,
            (None, None) => t += 1,
        }
    }
    (w, l, t)
}

/// Runs every policy on every configured episode in parallel. Logs are
/// written to `log_dir` when given.
pub fn compare_policies(cfg: &RunConfig, policies: &[PolicyKind], log_dir: Option<&Path>) -> Result<Comparison, RunError> {
    cfg.validate()?;
    let episodes = cfg.episodes();
    let worlds = episodes
        .par_iter()
        .map(|&(ws, _)| load_world(cfg, ws))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(dir) = log_dir {
        std::fs::create_dir_all(dir).map_err(|source| RunError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    let jobs: Vec<(usize, usize)> = (0..policies.len()).flat_map(|s| (0..episodes.len()).map(move |e| (s, e))).collect();
    let reports = jobs
        .par_iter()
        .map(|&(slot, e)| {
            let (ws, ps) = episodes[e];
            let out = run_episode(&worlds[e], cfg, policies[slot], ws, ps)?;
            if let Some(dir) = log_dir {
                let name = format!("slot{slot}-{}", log_file_name(policies[slot], ws, ps));
                let path = dir.join(name);
                std::fs::write(&path, out.log.to_jsonl()).map_err(|source| RunError::Io { path, source })?;
            }
            Ok(out.log.footer.report)
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    let rows: Vec<Vec<EpisodeReport>> = reports.chunks(episodes.len()).map(<[_]>::to_vec).collect();

    let summary = rows
        .iter()
        .enumerate()
        .map(|(slot, rs)| {
            let med = |name: &str| median(rs.iter().filter_map(|r| metric(r, name)));
            PolicySummary {
                slot,
                policy: policies[slot],
                episodes: rs.len(),
                median_mean_cs: med("mean_cs"),
                median_mean_disagreement: med("mean_disagreement"),
                median_accuracy: med("accuracy"),
                median_pseudo_attr_f1: med("pseudo_attr_f1"),
                median_coverage: med("coverage"),
                median_steps: med("steps"),
            }
        })
        .collect();

    let mut wins = Vec::new();
    for (name, higher) in COMPARED_METRICS {
        for a in 0..policies.len() {
            for b in 0..policies.len() {
                if a == b {
                    continue;
                }
                let (w, l, t) = count_wins(&rows[a], &rows[b], name, higher);
                wins.push(WinCount {
                    metric: name,
                    slot: a,
                    policy: policies[a],
                    opponent_slot: b,
                    opponent: policies[b],
                    wins: w,
                    losses: l,
                    ties: t,
                });
            }
        }
    }
    Ok(Comparison {
        policies: policies.to_vec(),
        rows,
        summary,
        wins,
    })
}

pub fn write_csv<T: Serialize, W: std::io::Write>(rows: &[T], w: W) -> Result<(), csv::Error> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}
