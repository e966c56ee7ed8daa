//! Per-object caption disagreement, its projection onto the grid, and target
//! region extraction.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{ExplorationConfig, OverlapRule};
use crate::memory::{EpisodicMemory, ObjectEntry};
use crate::oracle::{cosine_similarity, Embedder};
use crate::world::{Cell, GridMap};

/// Mean of `1 - cos` over all unordered pairs of the count-weighted caption
/// multiset. Zero for fewer than two observations.
pub fn object_disagreement(entry: &ObjectEntry, embedder: &Embedder) -> f64 {
    let n: u64 = entry.captions.iter().map(|c| c.count as u64).sum();
    if n < 2 {
        return 0.0;
    }
    let vecs: Vec<_> = entry.captions.iter().map(|c| embedder.embed(&c.text)).collect();
    let mut sum = 0.0;
    for i in 0..vecs.len() {
        for j in i + 1..vecs.len() {
            let w = entry.captions[i].count as f64 * entry.captions[j].count as f64;
            sum += w * (1.0 - cosine_similarity(&vecs[i], &vecs[j]));
        }
    }
    sum / (n * (n - 1) / 2) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisagreementMap {
    width: u32,
    height: u32,
    scores: Vec<f64>,
    /// Entries whose position fell outside the grid.
    pub skipped: usize,
}

impl DisagreementMap {
    pub fn zeros(map: &GridMap) -> Self {
        Self {
            width: map.width(),
            height: map.height(),
            scores: vec![0.0; map.len()],
            skipped: 0,
        }
    }

    fn index(&self, c: Cell) -> Option<usize> {
        (c.x >= 0 && c.y >= 0 && (c.x as u32) < self.width && (c.y as u32) < self.height)
            .then(|| c.y as usize * self.width as usize + c.x as usize)
    }

    pub fn get(&self, c: Cell) -> f64 {
        self.index(c).map_or(0.0, |i| self.scores[i])
    }

    pub fn max(&self) -> f64 {
        self.scores.iter().copied().fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.scores.iter().all(|s| *s == 0.0)
    }

    pub fn nonzero_cells(&self) -> Vec<Cell> {
        let w = self.width as usize;
        (0..self.scores.len())
            .filter(|i| self.scores[*i] > 0.0)
            .map(|i| Cell::new((i % w) as i32, (i / w) as i32))
            .collect()
    }

    /// Writes `value` into every free cell whose center lies within
    /// `radius_m` of `(x, y)`.
    pub fn project(&mut self, map: &GridMap, x: f64, y: f64, radius_m: f64, value: f64, rule: OverlapRule) {
        let center = map.cell_of(x, y);
        if !map.in_bounds(center) {
            self.skipped += 1;
            return;
        }
        let cs = map.cell_size();
        let k = (radius_m / cs).ceil() as i32 + 1;
        for dy in -k..=k {
            for dx in -k..=k {
                let c = center.offset(dx, dy);
                if !map.is_free(c) {
                    continue;
                }
                let p = map.cell_center(c, 0.0);
                if (p.x - x).hypot(p.y - y) > radius_m + 1e-9 {
                    continue;
                }
                let i = self.index(c).unwrap();
                self.scores[i] = match rule {
                    OverlapRule::Max => self.scores[i].max(value),
                    OverlapRule::Sum => self.scores[i] + value,
                };
            }
        }
    }
}

/// Recomputes the map from scratch: each entry's disagreement over a disc
/// around its position estimate. Zero-disagreement entries write nothing.
pub fn build_disagreement_map(
    memory: &EpisodicMemory,
    map: &GridMap,
    embedder: &Embedder,
    cfg: &ExplorationConfig,
) -> DisagreementMap {
    let mut dm = DisagreementMap::zeros(map);
    for e in memory.entries() {
        let d = object_disagreement(e, embedder);
        if !map.in_bounds(map.cell_of(e.position.x, e.position.y)) {
            dm.skipped += 1;
            continue;
        }
        if d > 0.0 {
            dm.project(map, e.position.x, e.position.y, cfg.projection_radius, d, cfg.overlap);
        }
    }
    dm
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetRegion {
    pub cells: Vec<Cell>,
    /// Mean member cell coordinates, in cells.
    pub centroid: (f64, f64),
    /// Mean of the normalized map over the region.
    pub mean_disagreement: f64,
    pub area: usize,
}

impl TargetRegion {
    /// Centroid in world meters.
    pub fn centroid_m(&self, map: &GridMap) -> (f64, f64) {
        let cs = map.cell_size();
        ((self.centroid.0 + 0.5) * cs, (self.centroid.1 + 0.5) * cs)
    }
}

/// Max-normalizes, thresholds, labels 4-connected components, drops those
/// smaller than `area_min` and sorts by mean disagreement (descending,
/// stable in scan order).
pub fn extract_targets(dm: &DisagreementMap, cfg: &ExplorationConfig) -> Vec<TargetRegion> {
    let max = dm.max();
    if max <= 0.0 {
        return Vec::new();
    }
    let (w, h) = (dm.width as i32, dm.height as i32);
    let norm: Vec<f64> = dm.scores.iter().map(|s| s / max).collect();
    let keep: Vec<bool> = norm.iter().map(|v| *v > 0.0 && *v >= cfg.disagreement_threshold).collect();
    let mut label = vec![false; norm.len()];
    let mut regions = Vec::new();
    for start in 0..norm.len() {
        if !keep[start] || label[start] {
            continue;
        }
        label[start] = true;
        let mut cells = Vec::new();
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            let c = Cell::new(i as i32 % w, i as i32 / w);
            cells.push(c);
            for n in c.neighbors4() {
                if n.x < 0 || n.y < 0 || n.x >= w || n.y >= h {
                    continue;
                }
                let j = (n.y * w + n.x) as usize;
                if keep[j] && !label[j] {
                    label[j] = true;
                    queue.push_back(j);
                }
            }
        }
        if cells.len() < cfg.area_min {
            continue;
        }
        cells.sort();
        let n = cells.len() as f64;
        let cx = cells.iter().map(|c| c.x as f64).sum::<f64>() / n;
        let cy = cells.iter().map(|c| c.y as f64).sum::<f64>() / n;
        let mean = cells.iter().map(|c| norm[(c.y * w + c.x) as usize]).sum::<f64>() / n;
        regions.push(TargetRegion {
            area: cells.len(),
            cells,
            centroid: (cx, cy),
            mean_disagreement: mean,
        });
    }
    regions.sort_by(|a, b| b.mean_disagreement.total_cmp(&a.mean_disagreement));
    regions
}
