//! Exploration policies. A policy sees the static occupancy grid, the
//! episodic memory, the explored map and its own pose; never the objects.

use std::collections::{HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    build_disagreement_map, candidate_viewpoints, detect_stuck, extract_targets, rank_viewpoints, recover,
    ExplorationConfig, Recovery, TargetRegion, Viewpoint,
};
use crate::memory::EpisodicMemory;
use crate::oracle::Embedder;
use crate::world::{distance_field, is_navigable, shortest_path, Action, AgentPose, Cell, ExploredMap, GridMap, Heading};

/// Everything a policy may look at when choosing the next action.
pub struct PolicyView<'a> {
    pub step: u32,
    pub pose: AgentPose,
    pub map: &'a GridMap,
    pub memory: &'a EpisodicMemory,
    pub explored: &'a ExploredMap,
    pub embedder: &'a Embedder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalKind {
    Viewpoint,
    Recovery,
    Frontier,
    Random,
}

/// Planner trace, drained by the episode runner into the log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum PlanEvent {
    WarmupEnd { step: u32 },
    Round { step: u32, targets: usize },
    Target { step: u32, centroid: (f64, f64), mean_disagreement: f64, ranked: Vec<Cell>, degraded: bool },
    Goal { step: u32, cell: Cell, heading: Option<Heading>, kind: GoalKind },
    Arrived { step: u32, cell: Cell },
    Unreachable { step: u32, cell: Cell },
    Stuck { step: u32 },
    Recovery { step: u32, outcome: Recovery },
    Stop { step: u32 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    #[default]
    Disagreement,
    Frontier,
    Random,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Disagreement => "disagreement",
            PolicyKind::Frontier => "frontier",
            PolicyKind::Random => "random",
        }
    }

    pub fn build(self, cfg: &ExplorationConfig, seed: u64) -> Box<dyn Policy> {
        match self {
            PolicyKind::Disagreement => Box::new(DisagreementPolicy::new(cfg.clone(), seed)),
            PolicyKind::Frontier => Box::new(FrontierPolicy::new()),
            PolicyKind::Random => Box::new(RandomGoalPolicy::new(cfg.random_goal_margin, seed)),
        }
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "disagreement" => Ok(PolicyKind::Disagreement),
            "frontier" => Ok(PolicyKind::Frontier),
            "random" => Ok(PolicyKind::Random),
            other => Err(format!("unknown policy {other:?}")),
        }
    }
}

pub trait Policy: Send {
    fn kind(&self) -> PolicyKind;
    fn next_action(&mut self, view: &PolicyView<'_>) -> Action;
    fn drain_events(&mut self) -> Vec<PlanEvent> {
        Vec::new()
    }
}

/// Always stops. Useful as a timing and logging baseline.
pub struct StopPolicy;

impl Policy for StopPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Frontier
    }

    fn next_action(&mut self, _: &PolicyView<'_>) -> Action {
        Action::Stop
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NavStep {
    Act(Action),
    Arrived,
    Unreachable,
}

fn turn_toward(from: Heading, to: Heading) -> Action {
    if from.turns_to(to).1 {
        Action::TurnLeft
    } else {
        Action::TurnRight
    }
}

/// One step along a shortest path to `goal`, then turns to `heading` if
/// given. Every forward move follows the planned free-cell path.
pub fn navigate(map: &GridMap, pose: AgentPose, goal: Cell, heading: Option<Heading>) -> NavStep {
    if pose.cell == goal {
        return match heading {
            Some(h) if h != pose.heading => NavStep::Act(turn_toward(pose.heading, h)),
            _ => NavStep::Arrived,
        };
    }
    let Some(path) = shortest_path(map, pose.cell, goal) else {
        return NavStep::Unreachable;
    };
    let next = path[1];
    let want = Heading::from_delta(next.x - pose.cell.x, next.y - pose.cell.y).expect("4-connected path");
    if want == pose.heading {
        NavStep::Act(Action::MoveForward)
    } else {
        NavStep::Act(turn_toward(pose.heading, want))
    }
}

/// First heading (in East, North, West, South order) from `c` toward a free
/// unexplored neighbor.
fn unexplored_direction(map: &GridMap, explored: &ExploredMap, c: Cell) -> Option<Heading> {
    Heading::ALL.into_iter().find(|h| {
        let (dx, dy) = h.delta();
        let n = c.offset(dx, dy);
        map.is_free(n) && !explored.is_explored(n)
    })
}

/// Explored free cells with at least one free unexplored 4-neighbor.
pub fn frontier_cells(map: &GridMap, explored: &ExploredMap) -> Vec<Cell> {
    map.free_cells()
        .filter(|c| explored.is_explored(*c) && unexplored_direction(map, explored, *c).is_some())
        .collect()
}

/// Nearest-frontier exploration: go to the closest frontier cell by path
/// length (ties by grid order), face the unexplored side, repeat. Stops once
/// no frontier remains.
#[derive(Debug, Default)]
pub struct FrontierPolicy {
    goal: Option<Cell>,
    dead: HashSet<Cell>,
    events: Vec<PlanEvent>,
}

impl FrontierPolicy {
    pub fn new() -> Self {
        Self::default()
    }

    fn nearest_frontier(&self, view: &PolicyView<'_>) -> Option<Cell> {
        let dist = distance_field(view.map, view.pose.cell);
        view.map
            .free_cells()
            .filter(|c| !self.dead.contains(c))
            .filter(|c| view.explored.is_explored(*c) && unexplored_direction(view.map, view.explored, *c).is_some())
            .filter_map(|c| dist[view.map.index(c).unwrap()].map(|d| (d, c)))
            .min_by_key(|(d, c)| (*d, c.y, c.x))
            .map(|(_, c)| c)
    }
}

impl Policy for FrontierPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Frontier
    }

    fn next_action(&mut self, view: &PolicyView<'_>) -> Action {
        for _ in 0..8 {
            let goal = match self.goal {
                Some(g) if unexplored_direction(view.map, view.explored, g).is_some() => g,
                _ => match self.nearest_frontier(view) {
                    Some(g) => {
                        self.goal = Some(g);
                        self.events.push(PlanEvent::Goal {
                            step: view.step,
                            cell: g,
                            heading: None,
                            kind: GoalKind::Frontier,
                        });
                        g
                    }
                    None => {
                        self.goal = None;
                        self.events.push(PlanEvent::Stop { step: view.step });
                        return Action::Stop;
                    }
                },
            };
            let face = unexplored_direction(view.map, view.explored, goal);
            match navigate(view.map, view.pose, goal, face) {
                NavStep::Act(a) => return a,
                NavStep::Arrived | NavStep::Unreachable => {
                    // Facing an unexplored neighbor always explores it, so
                    // this only guards against degenerate views.
                    self.dead.insert(goal);
                    self.goal = None;
                }
            }
        }
        Action::Stop
    }

    fn drain_events(&mut self) -> Vec<PlanEvent> {
        std::mem::take(&mut self.events)
    }
}

/// Uniformly random navigable goals, resampled on arrival.
pub struct RandomGoalPolicy {
    rng: ChaCha8Rng,
    margin: f64,
    candidates: Option<Vec<Cell>>,
    goal: Option<Cell>,
    events: Vec<PlanEvent>,
}

impl RandomGoalPolicy {
    pub fn new(margin: f64, seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            margin,
            candidates: None,
            goal: None,
            events: Vec::new(),
        }
    }
}

impl Policy for RandomGoalPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Random
    }

    fn next_action(&mut self, view: &PolicyView<'_>) -> Action {
        let margin = self.margin;
        let candidates = self.candidates.get_or_insert_with(|| {
            let reach = distance_field(view.map, view.pose.cell);
            view.map
                .free_cells()
                .filter(|c| is_navigable(view.map, *c, margin) && reach[view.map.index(*c).unwrap()].is_some())
                .collect()
        });
        if candidates.iter().all(|c| *c == view.pose.cell) {
            return Action::Stop;
        }
        for _ in 0..16 {
            let goal = match self.goal {
                Some(g) => g,
                None => {
                    let g = *candidates.choose(&mut self.rng).unwrap();
                    if g == view.pose.cell {
                        continue;
                    }
                    self.goal = Some(g);
                    self.events.push(PlanEvent::Goal {
                        step: view.step,
                        cell: g,
                        heading: None,
                        kind: GoalKind::Random,
                    });
                    g
                }
            };
            match navigate(view.map, view.pose, goal, None) {
                NavStep::Act(a) => return a,
                NavStep::Arrived | NavStep::Unreachable => self.goal = None,
            }
        }
        Action::TurnLeft
    }

    fn drain_events(&mut self) -> Vec<PlanEvent> {
        std::mem::take(&mut self.events)
    }
}

#[derive(Debug, Clone)]
struct Goal {
    cell: Cell,
    heading: Option<Heading>,
    viewpoint: Option<Viewpoint>,
}

#[derive(Debug, Clone)]
struct ActiveTarget {
    queue: VecDeque<Viewpoint>,
    attempts_used: u32,
}

/// Frontier warm-up, then rounds of: build the disagreement map from memory,
/// extract targets, and for each target in order visit its ranked
/// viewpoints. Stops when a round finds no target.
pub struct DisagreementPolicy {
    cfg: ExplorationConfig,
    rng: ChaCha8Rng,
    warmup: Option<FrontierPolicy>,
    warmup_taken: u32,
    pending: VecDeque<TargetRegion>,
    active: Option<ActiveTarget>,
    goal: Option<Goal>,
    history: Vec<Cell>,
    round_goals: Option<usize>,
    stopped: bool,
    events: Vec<PlanEvent>,
}

impl DisagreementPolicy {
    pub fn new(cfg: ExplorationConfig, seed: u64) -> Self {
        Self {
            warmup: (cfg.warmup_steps > 0).then(FrontierPolicy::new),
            cfg,
            rng: ChaCha8Rng::seed_from_u64(seed),
            warmup_taken: 0,
            pending: VecDeque::new(),
            active: None,
            goal: None,
            history: Vec::new(),
            round_goals: None,
            stopped: false,
            events: Vec::new(),
        }
    }

    fn set_goal(&mut self, view: &PolicyView<'_>, goal: Goal, kind: GoalKind) {
        self.events.push(PlanEvent::Goal {
            step: view.step,
            cell: goal.cell,
            heading: goal.heading,
            kind,
        });
        self.history = vec![view.pose.cell];
        self.goal = Some(goal);
    }

    fn stop(&mut self, step: u32) -> Action {
        self.stopped = true;
        self.events.push(PlanEvent::Stop { step });
        Action::Stop
    }

    /// Handles a stuck verdict: re-queue the interrupted viewpoint and try a
    /// local recovery goal, or abandon the target.
    fn on_stuck(&mut self, view: &PolicyView<'_>, goal: Goal) {
        self.events.push(PlanEvent::Stuck { step: view.step });
        self.goal = None;
        let Some(active) = self.active.as_mut() else {
            return;
        };
        if let Some(vp) = goal.viewpoint {
            active.queue.push_front(vp);
        }
        let outcome = recover(view.map, view.pose, &self.cfg, active.attempts_used, &mut self.rng);
        self.events.push(PlanEvent::Recovery {
            step: view.step,
            outcome,
        });
        match outcome {
            Recovery::Goal { cell, attempt } => {
                active.attempts_used = attempt;
                let g = Goal {
                    cell,
                    heading: None,
                    viewpoint: None,
                };
                self.set_goal(view, g, GoalKind::Recovery);
            }
            Recovery::Abandon { .. } => self.active = None,
        }
    }
}

impl Policy for DisagreementPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Disagreement
    }

    fn next_action(&mut self, view: &PolicyView<'_>) -> Action {
        if self.stopped {
            return Action::Stop;
        }
        if let Some(f) = self.warmup.as_mut() {
            if self.warmup_taken < self.cfg.warmup_steps {
                let a = f.next_action(view);
                let evs = f.drain_events();
                if a != Action::Stop {
                    self.events.extend(evs);
                    self.warmup_taken += 1;
                    return a;
                }
            }
            self.warmup = None;
            self.events.push(PlanEvent::WarmupEnd { step: view.step });
        }

        if self.goal.is_some() {
            self.history.push(view.pose.cell);
        }
        for _ in 0..256 {
            if let Some(goal) = self.goal.clone() {
                if detect_stuck(&self.history, view.map.cell_size(), &self.cfg) {
                    self.on_stuck(view, goal);
                    continue;
                }
                match navigate(view.map, view.pose, goal.cell, goal.heading) {
                    NavStep::Act(a) => return a,
                    NavStep::Arrived => {
                        self.events.push(PlanEvent::Arrived {
                            step: view.step,
                            cell: goal.cell,
                        });
                        self.goal = None;
                    }
                    NavStep::Unreachable => {
                        self.events.push(PlanEvent::Unreachable {
                            step: view.step,
                            cell: goal.cell,
                        });
                        self.goal = None;
                    }
                }
                continue;
            }
            if let Some(active) = self.active.as_mut() {
                if let Some(vp) = active.queue.pop_front() {
                    let g = Goal {
                        cell: vp.cell,
                        heading: Some(vp.heading),
                        viewpoint: Some(vp),
                    };
                    *self.round_goals.get_or_insert(0) += 1;
                    self.set_goal(view, g, GoalKind::Viewpoint);
                    continue;
                }
                self.active = None;
            }
            if let Some(target) = self.pending.pop_front() {
                let set = candidate_viewpoints(view.map, &target, &self.cfg, &mut self.rng);
                let ranked = rank_viewpoints(&set.viewpoints, view.pose, &self.cfg, view.map);
                self.events.push(PlanEvent::Target {
                    step: view.step,
                    centroid: target.centroid,
                    mean_disagreement: target.mean_disagreement,
                    ranked: ranked.iter().map(|v| v.cell).collect(),
                    degraded: set.degraded,
                });
                if !ranked.is_empty() {
                    self.active = Some(ActiveTarget {
                        queue: ranked.into(),
                        attempts_used: 0,
                    });
                }
                continue;
            }
            if self.round_goals == Some(0) {
                // The previous round could not produce a single goal.
                return self.stop(view.step);
            }
            let dm = build_disagreement_map(view.memory, view.map, view.embedder, &self.cfg);
            let targets = extract_targets(&dm, &self.cfg);
            self.events.push(PlanEvent::Round {
                step: view.step,
                targets: targets.len(),
            });
            if targets.is_empty() {
                return self.stop(view.step);
            }
            self.pending = targets.into();
            self.round_goals = Some(0);
        }
        self.stop(view.step)
    }

    fn drain_events(&mut self) -> Vec<PlanEvent> {
        std::mem::take(&mut self.events)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::Vocabulary;
    use crate::world::{step_agent, update_explored, FieldOfView};

    fn drive(policy: &mut dyn Policy, map: &GridMap, start: AgentPose, steps: u32) -> (Vec<AgentPose>, ExploredMap) {
        let memory = EpisodicMemory::new();
        let embedder = Embedder::new(&Vocabulary::indoor());
        let fov = FieldOfView::default();
        let mut explored = ExploredMap::new(map);
        update_explored(&mut explored, map, start, &fov);
        let mut pose = start;
        let mut trace = vec![pose];
        for step in 1..=steps {
            let view = PolicyView {
                step,
                pose,
                map,
                memory: &memory,
                explored: &explored,
                embedder: &embedder,
            };
            let a = policy.next_action(&view);
            if a == Action::Stop {
                break;
            }
            pose = step_agent(map, pose, a).pose;
            update_explored(&mut explored, map, pose, &fov);
            trace.push(pose);
        }
        (trace, explored)
    }

    #[test]
    fn navigate_turns_then_moves() {
        let map = GridMap::new(5, 5, 0.5);
        let pose = AgentPose::new(Cell::new(0, 0), Heading::West);
        assert!(matches!(navigate(&map, pose, Cell::new(3, 0), None), NavStep::Act(Action::TurnLeft)));
        let east = AgentPose::new(Cell::new(0, 0), Heading::East);
        assert_eq!(navigate(&map, east, Cell::new(3, 0), None), NavStep::Act(Action::MoveForward));
        assert_eq!(navigate(&map, east, Cell::new(0, 0), Some(Heading::South)), NavStep::Act(Action::TurnRight));
        assert_eq!(navigate(&map, east, Cell::new(0, 0), Some(Heading::East)), NavStep::Arrived);
    }

    #[test]
    fn frontier_stops_on_fully_explored_map() {
        let map = GridMap::new(12, 12, 0.5);
        let start = AgentPose::new(Cell::new(0, 0), Heading::North);
        let (trace, explored) = drive(&mut FrontierPolicy::new(), &map, start, 400);
        assert!(trace.len() < 400);
        assert_eq!(explored.free_coverage(&map), 1.0);
    }

    #[test]
    fn frontier_advances_along_corridor() {
        let map = GridMap::from_rows(&["#".repeat(40).as_str(), &".".repeat(40), &"#".repeat(40)], 0.5);
        let start = AgentPose::new(Cell::new(0, 1), Heading::West);
        let (trace, explored) = drive(&mut FrontierPolicy::new(), &map, start, 400);
        let xs: Vec<i32> = trace.iter().map(|p| p.cell.x).collect();
        assert!(xs.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(explored.free_coverage(&map), 1.0);
    }

    #[test]
    fn random_goals_are_deterministic_and_navigable() {
        let map = GridMap::from_rows(&["......", ".##...", "......", "...#..", "......"], 0.5);
        let start = AgentPose::new(Cell::new(0, 0), Heading::North);
        let run = || {
            let mut p = RandomGoalPolicy::new(0.0, 17);
            drive(&mut p, &map, start, 200);
            p.drain_events()
        };
        let a = run();
        assert_eq!(a, run());
        for e in a {
            if let PlanEvent::Goal { cell, .. } = e {
                assert!(map.is_free(cell));
            }
        }
    }

    #[test]
    fn empty_memory_stops_after_warmup() {
        let map = GridMap::new(6, 6, 0.5);
        let cfg = ExplorationConfig {
            warmup_steps: 0,
            ..ExplorationConfig::default()
        };
        let mut p = DisagreementPolicy::new(cfg, 1);
        let (trace, _) = drive(&mut p, &map, AgentPose::new(Cell::new(2, 2), Heading::East), 50);
        assert_eq!(trace.len(), 1);
        let ev = p.drain_events();
        assert!(matches!(ev.as_slice(), [PlanEvent::Round { targets: 0, .. }, PlanEvent::Stop { .. }]));
    }
}
