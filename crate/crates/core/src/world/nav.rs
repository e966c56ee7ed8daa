//! Motion model, navigability and shortest paths on the 4-connected grid.

use std::collections::VecDeque;

use super::{Action, AgentPose, Cell, GridMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutcome {
    pub pose: AgentPose,
    pub collided: bool,
}

/// Applies one discrete action. Moving into an obstacle leaves the pose
/// unchanged and reports a collision.
pub fn step_agent(map: &GridMap, pose: AgentPose, action: Action) -> StepOutcome {
    match action {
        Action::MoveForward => {
            let (dx, dy) = pose.heading.delta();
            let target = pose.cell.offset(dx, dy);
            if map.is_free(target) {
                StepOutcome {
                    pose: AgentPose::new(target, pose.heading),
                    collided: false,
                }
            } else {
                StepOutcome {
                    pose,
                    collided: true,
                }
            }
        }
        Action::TurnLeft => StepOutcome {
            pose: AgentPose::new(pose.cell, pose.heading.left()),
            collided: false,
        },
        Action::TurnRight => StepOutcome {
            pose: AgentPose::new(pose.cell, pose.heading.right()),
            collided: false,
        },
        Action::Stop => StepOutcome {
            pose,
            collided: false,
        },
    }
}

/// Free cell with no obstacle (or grid edge) whose center lies within
/// `safety_margin` meters of this cell's center.
pub fn is_navigable(map: &GridMap, cell: Cell, safety_margin: f64) -> bool {
    if !map.is_free(cell) {
        return false;
    }
    let r = map.meters_to_cells(safety_margin.max(0.0));
    let k = r.floor() as i32;
    for dy in -k..=k {
        for dx in -k..=k {
            if (dx == 0 && dy == 0) || (dx as f64).hypot(dy as f64) > r + 1e-9 {
                continue;
            }
            if map.is_obstacle(cell.offset(dx, dy)) {
                return false;
            }
        }
    }
    true
}

/// Breadth-first step distances from `from` over free cells (indexed like the
/// grid); `None` marks unreachable cells.
pub fn distance_field(map: &GridMap, from: Cell) -> Vec<Option<u32>> {
    let mut dist = vec![None; map.len()];
    let Some(start) = map.index(from).filter(|_| map.is_free(from)) else {
        return dist;
    };
    dist[start] = Some(0);
    let mut queue = VecDeque::from([from]);
    while let Some(c) = queue.pop_front() {
        let d = dist[map.index(c).unwrap()].unwrap();
        for n in c.neighbors4() {
            if let Some(i) = map.index(n) {
                if dist[i].is_none() && map.is_free(n) {
                    dist[i] = Some(d + 1);
                    queue.push_back(n);
                }
            }
        }
    }
    dist
}

/// Minimal-length 4-connected free-cell path from `from` to `to`, both ends
/// included. `None` when `to` is blocked or unreachable.
pub fn shortest_path(map: &GridMap, from: Cell, to: Cell) -> Option<Vec<Cell>> {
    if !map.is_free(from) || !map.is_free(to) {
        return None;
    }
    let mut parent: Vec<Option<usize>> = vec![None; map.len()];
    let mut seen = vec![false; map.len()];
    let start = map.index(from)?;
    let goal = map.index(to)?;
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(i) = queue.pop_front() {
        if i == goal {
            break;
        }
        for n in map.cell_at(i).neighbors4() {
            if let Some(j) = map.index(n) {
                if !seen[j] && map.is_free(n) {
                    seen[j] = true;
                    parent[j] = Some(i);
                    queue.push_back(j);
                }
            }
        }
    }
    if !seen[goal] {
        return None;
    }
    let mut path = vec![to];
    let mut cur = goal;
    while let Some(p) = parent[cur] {
        path.push(map.cell_at(p));
        cur = p;
    }
    path.reverse();
    Some(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::Heading;

    #[test]
    fn move_into_obstacle_collides() {
        let map = GridMap::from_rows(&[".#"], 1.0);
        let pose = AgentPose::new(Cell::new(0, 0), Heading::East);
        let out = step_agent(&map, pose, Action::MoveForward);
        assert_eq!(out.pose, pose);
        assert!(out.collided);
        let out = step_agent(&map, AgentPose::new(Cell::new(0, 0), Heading::West), Action::MoveForward);
        assert!(out.collided, "grid edge blocks");
    }

    #[test]
    fn turns_cancel_and_stop_is_noop() {
        let map = GridMap::new(3, 3, 1.0);
        let pose = AgentPose::new(Cell::new(1, 1), Heading::North);
        let l = step_agent(&map, pose, Action::TurnLeft).pose;
        assert_eq!(step_agent(&map, l, Action::TurnRight).pose, pose);
        let mut p = pose;
        for _ in 0..4 {
            p = step_agent(&map, p, Action::TurnLeft).pose;
        }
        assert_eq!(p, pose);
        assert_eq!(step_agent(&map, pose, Action::Stop).pose, pose);
    }

    #[test]
    fn path_lengths() {
        let map = GridMap::from_rows(&["....."], 1.0);
        assert_eq!(shortest_path(&map, Cell::new(2, 0), Cell::new(2, 0)).unwrap().len(), 1);
        assert_eq!(shortest_path(&map, Cell::new(0, 0), Cell::new(4, 0)).unwrap().len(), 5);
        let walled = GridMap::from_rows(&["..#.."], 1.0);
        assert!(shortest_path(&walled, Cell::new(0, 0), Cell::new(4, 0)).is_none());
        assert!(shortest_path(&walled, Cell::new(0, 0), Cell::new(2, 0)).is_none());
    }

    #[test]
    fn navigability_margins() {
        let map = GridMap::from_rows(&["#......", ".......", ".......", ".......", "......."], 0.5);
        // Adjacent to the wall, margin 1.5 cells.
        assert!(!is_navigable(&map, Cell::new(1, 0), 0.75));
        // Open area, margin 1 cell.
        assert!(is_navigable(&map, Cell::new(3, 2), 0.5));
        for c in map.cells() {
            assert_eq!(is_navigable(&map, c, 0.0), map.is_free(c));
        }
    }
}
