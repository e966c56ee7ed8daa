//! Stuck detection over a sliding window of positions and random local
//! recovery goals.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ExplorationConfig;
use crate::world::{is_navigable, shortest_path, AgentPose, Cell, GridMap};

/// True iff the last `stuck_window` positions all stay within
/// `displacement_eps` meters of the first of them. Shorter histories are
/// never stuck.
pub fn detect_stuck(history: &[Cell], cell_size: f64, cfg: &ExplorationConfig) -> bool {
    let w = cfg.stuck_window;
    if w == 0 || history.len() < w {
        return false;
    }
    let window = &history[history.len() - w..];
    let start = window[0];
    let max = window
        .iter()
        .map(|c| start.distance(*c) * cell_size)
        .fold(0.0, f64::max);
    max < cfg.displacement_eps
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Recovery {
    /// A reachable cell found on the given (1-based, cumulative) attempt.
    Goal { cell: Cell, attempt: u32 },
    Abandon { attempts: u32 },
}

/// Draws random offsets within `recovery_radius_cells` of the agent until one
/// lands on a free cell reachable from it, counting attempts from
/// `attempts_used`. Gives up once `recovery_attempts` draws have failed.
pub fn recover<R: Rng + ?Sized>(
    map: &GridMap,
    pose: AgentPose,
    cfg: &ExplorationConfig,
    attempts_used: u32,
    rng: &mut R,
) -> Recovery {
    let r = cfg.recovery_radius_cells;
    let k = r.floor() as i32;
    let offsets: Vec<(i32, i32)> = (-k..=k)
        .flat_map(|dy| (-k..=k).map(move |dx| (dx, dy)))
        .filter(|&(dx, dy)| (dx, dy) != (0, 0) && (dx as f64).hypot(dy as f64) <= r + 1e-9)
        .collect();
    let mut attempt = attempts_used;
    while attempt < cfg.recovery_attempts {
        attempt += 1;
        let &(dx, dy) = offsets.choose(rng).expect("recovery radius is at least one cell");
        let cell = pose.cell.offset(dx, dy);
        if is_navigable(map, cell, 0.0) && shortest_path(map, pose.cell, cell).is_some() {
            return Recovery::Goal { cell, attempt };
        }
    }
    Recovery::Abandon { attempts: attempt }
}
