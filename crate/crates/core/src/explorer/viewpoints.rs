//! Candidate viewpoint generation around a target and their ranking.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ExplorationConfig, TargetRegion};
use crate::world::{distance_field, is_navigable, AgentPose, Cell, GridMap, Heading};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Viewpoint {
    pub cell: Cell,
    /// Facing the target centroid.
    pub heading: Heading,
    pub radius_m: f64,
    /// Position in generation order (radius-major), used as the last tiebreak.
    pub angular_index: usize,
    /// Normalized disagreement of the target this viewpoint serves.
    pub disagreement: f64,
    pub path_len: Option<u32>,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewpointSet {
    pub viewpoints: Vec<Viewpoint>,
    /// Number of positions tried before filtering.
    pub generated: usize,
    /// Fewer than `viewpoints_min` navigable candidates survived.
    pub degraded: bool,
}

/// Rings of `candidates_per_radius` equally spaced positions around the
/// target centroid. Candidates landing on the same cell keep the first
/// occurrence; survivors of the navigability filter are then subsampled to a
/// random count in `[viewpoints_min, viewpoints_max]`.
pub fn candidate_viewpoints<R: Rng + ?Sized>(
    map: &GridMap,
    target: &TargetRegion,
    cfg: &ExplorationConfig,
    rng: &mut R,
) -> ViewpointSet {
    let (cx, cy) = target.centroid_m(map);
    let mut generated = 0;
    let mut survivors: Vec<Viewpoint> = Vec::new();
    for &radius in &cfg.radii {
        for k in 0..cfg.candidates_per_radius {
            let theta = std::f64::consts::TAU * k as f64 / cfg.candidates_per_radius as f64;
            let (x, y) = (cx + radius * theta.cos(), cy + radius * theta.sin());
            let index = generated;
            generated += 1;
            let cell = map.cell_of(x, y);
            if survivors.iter().any(|v| v.cell == cell) || !is_navigable(map, cell, cfg.safety_margin) {
                continue;
            }
            let center = map.cell_center(cell, 0.0);
            survivors.push(Viewpoint {
                cell,
                heading: Heading::nearest(cx - center.x, cy - center.y),
                radius_m: radius,
                angular_index: index,
                disagreement: target.mean_disagreement,
                path_len: None,
                score: 0.0,
            });
        }
    }
    if survivors.len() < cfg.viewpoints_min {
        return ViewpointSet {
            viewpoints: survivors,
            generated,
            degraded: true,
        };
    }
    let want = rng.gen_range(cfg.viewpoints_min..=cfg.viewpoints_max).min(survivors.len());
    let mut picked = rand::seq::index::sample(rng, survivors.len(), want).into_vec();
    picked.sort_unstable();
    ViewpointSet {
        viewpoints: picked.into_iter().map(|i| survivors[i].clone()).collect(),
        generated,
        degraded: false,
    }
}

/// Scores `alpha * d_norm - (1 - alpha) * cost_norm` with path cost min-max
/// normalized over the batch; unreachable viewpoints are dropped. Sorted by
/// score, then shorter path, then lower angular index.
pub fn rank_viewpoints(viewpoints: &[Viewpoint], pose: AgentPose, cfg: &ExplorationConfig, map: &GridMap) -> Vec<Viewpoint> {
    let dist = distance_field(map, pose.cell);
    let mut out: Vec<Viewpoint> = viewpoints
        .iter()
        .filter_map(|v| {
            let d = map.index(v.cell).and_then(|i| dist[i])?;
            Some(Viewpoint {
                path_len: Some(d),
                ..v.clone()
            })
        })
        .collect();
    let (lo, hi) = out.iter().fold((u32::MAX, 0), |(lo, hi), v| {
        let d = v.path_len.unwrap();
        (lo.min(d), hi.max(d))
    });
    for v in &mut out {
        let cost = if hi > lo {
            (v.path_len.unwrap() - lo) as f64 / (hi - lo) as f64
        } else {
            0.0
        };
        v.score = cfg.alpha * v.disagreement - (1.0 - cfg.alpha) * cost;
    }
    out.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.path_len.cmp(&b.path_len))
            .then(a.angular_index.cmp(&b.angular_index))
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn region(map: &GridMap, cell: Cell) -> TargetRegion {
        let _ = map;
        TargetRegion {
            cells: vec![cell],
            centroid: (cell.x as f64, cell.y as f64),
            mean_disagreement: 1.0,
            area: 1,
        }
    }

    fn vp(cell: Cell, d: f64, idx: usize) -> Viewpoint {
        Viewpoint {
            cell,
            heading: Heading::East,
            radius_m: 1.0,
            angular_index: idx,
            disagreement: d,
            path_len: None,
            score: 0.0,
        }
    }

    #[test]
    fn open_world_count_in_range() {
        let map = GridMap::new(30, 30, 0.5);
        let t = region(&map, Cell::new(15, 15));
        let cfg = ExplorationConfig::default();
        for seed in 0..20 {
            let set = candidate_viewpoints(&map, &t, &cfg, &mut ChaCha8Rng::seed_from_u64(seed));
            assert_eq!(set.generated, 90);
            assert!(!set.degraded);
            assert!((5..=20).contains(&set.viewpoints.len()));
            for v in &set.viewpoints {
                assert!(is_navigable(&map, v.cell, cfg.safety_margin));
            }
        }
    }

    #[test]
    fn enclosed_target_has_no_survivors() {
        let map = GridMap::from_rows(
            &["#########", "#########", "#########", "#########", "####.####", "#########", "#########", "#########", "#########"],
            0.5,
        );
        let t = region(&map, Cell::new(4, 4));
        let set = candidate_viewpoints(&map, &t, &ExplorationConfig::default(), &mut ChaCha8Rng::seed_from_u64(1));
        assert!(set.viewpoints.is_empty());
        assert!(set.degraded);
    }

    #[test]
    fn alpha_boundaries_and_hand_example() {
        let map = GridMap::new(10, 1, 1.0);
        let pose = AgentPose::new(Cell::new(0, 0), Heading::East);
        let vps = [vp(Cell::new(9, 0), 1.0, 0), vp(Cell::new(1, 0), 0.5, 1), vp(Cell::new(5, 0), 0.8, 2)];
        let by = |alpha: f64| {
            let cfg = ExplorationConfig { alpha, ..ExplorationConfig::default() };
            rank_viewpoints(&vps, pose, &cfg, &map)
        };
        let near: Vec<i32> = by(0.0).iter().map(|v| v.cell.x).collect();
        assert_eq!(near, vec![1, 5, 9]);
        let hot: Vec<i32> = by(1.0).iter().map(|v| v.cell.x).collect();
        assert_eq!(hot, vec![9, 5, 1]);
        let two = [vps[0].clone(), vps[1].clone()];
        let cfg = ExplorationConfig { alpha: 0.7, ..ExplorationConfig::default() };
        let r = rank_viewpoints(&two, pose, &cfg, &map);
        assert!((r[0].score - 0.40).abs() < 1e-12 && (r[1].score - 0.35).abs() < 1e-12);
        assert_eq!(r[0].cell, Cell::new(9, 0));
    }

    #[test]
    fn unreachable_dropped() {
        let map = GridMap::from_rows(&["..#.."], 1.0);
        let pose = AgentPose::new(Cell::new(0, 0), Heading::East);
        let r = rank_viewpoints(&[vp(Cell::new(4, 0), 1.0, 0), vp(Cell::new(1, 0), 1.0, 1)], pose, &ExplorationConfig::default(), &map);
        assert_eq!(r.len(), 1);
    }
}
