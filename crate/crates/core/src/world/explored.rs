use serde::{Deserialize, Serialize};

use super::{visible_cells, AgentPose, Cell, FieldOfView, GridMap};

/// Cells seen so far in an episode, plus the agent marker and current view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExploredMap {
    width: u32,
    height: u32,
    explored: Vec<bool>,
    pub agent: Option<AgentPose>,
    pub current_view: Vec<Cell>,
}

impl ExploredMap {
    pub fn new(map: &GridMap) -> Self {
        Self {
            width: map.width(),
            height: map.height(),
            explored: vec![false; map.len()],
            agent: None,
            current_view: Vec::new(),
        }
    }

    fn index(&self, c: Cell) -> Option<usize> {
        (c.x >= 0 && c.y >= 0 && (c.x as u32) < self.width && (c.y as u32) < self.height)
            .then(|| c.y as usize * self.width as usize + c.x as usize)
    }

    pub fn is_explored(&self, c: Cell) -> bool {
        self.index(c).is_some_and(|i| self.explored[i])
    }

    pub fn mark(&mut self, c: Cell) {
        if let Some(i) = self.index(c) {
            self.explored[i] = true;
        }
    }

    pub fn explored_count(&self) -> usize {
        self.explored.iter().filter(|e| **e).count()
    }

    pub fn explored_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        let w = self.width as usize;
        self.explored
            .iter()
            .enumerate()
            .filter(|(_, e)| **e)
            .map(move |(i, _)| Cell::new((i % w) as i32, (i / w) as i32))
    }

    /// Explored cells that are free in `map`.
    pub fn explored_free_count(&self, map: &GridMap) -> usize {
        map.free_cells().filter(|c| self.is_explored(*c)).count()
    }

    /// Fraction of the grid's free cells that have been explored.
    pub fn free_coverage(&self, map: &GridMap) -> f64 {
        let free = map.free_cells().count();
        if free == 0 {
            return 1.0;
        }
        map.free_cells().filter(|c| self.is_explored(*c)).count() as f64 / free as f64
    }

    pub fn is_subset_of(&self, other: &ExploredMap) -> bool {
        self.explored
            .iter()
            .zip(&other.explored)
            .all(|(a, b)| !*a || *b)
    }
}

/// Marks every currently visible cell explored. Monotone and idempotent.
pub fn update_explored(explored: &mut ExploredMap, map: &GridMap, pose: AgentPose, fov: &FieldOfView) {
    let view = visible_cells(map, pose, fov);
    for c in &view {
        explored.mark(*c);
    }
    explored.agent = Some(pose);
    explored.current_view = view;
}
