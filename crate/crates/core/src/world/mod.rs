//! Seeded 2D grid environment: occupancy, objects, agent pose, visibility,
//! detections with per-frame transient IDs, navigation and explored-area
//! bookkeeping.
//!
//! Geometry conventions: cell `(x, y)` covers `[x, x+1) × [y, y+1)` in cell
//! units; world coordinates are cell units scaled by `cell_size` meters. The
//! agent always stands on a cell center. Headings are multiples of 90°
//! counter-clockwise from +x.

mod explored;
mod format;
mod generate;
mod nav;
mod visibility;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oracle::{AttributeSet, Vocabulary};

pub use explored::{update_explored, ExploredMap};
pub use format::{parse_world, write_world, WorldFormatError, WORLD_FORMAT_HEADER};
pub use generate::{generate_world, ObjectPlacement, WorldSpec};
pub use nav::{distance_field, is_navigable, shortest_path, step_agent, StepOutcome};
pub use visibility::{
    line_of_sight, observe, traversed_cells, view_geometry, visible_cells, Detection, FieldOfView,
    FrameTruth, Observation, ObservedFrame,
};

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("invalid world spec: {0}")]
    InvalidSpec(String),
    #[error("world generation failed after {attempts} attempts: {reason}")]
    Unsatisfiable { attempts: u32, reason: String },
    #[error("invalid world: {0}")]
    Invalid(String),
}

/// Integer grid coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn offset(self, dx: i32, dy: i32) -> Self {
        Self::new(self.x + dx, self.y + dy)
    }

    pub fn neighbors4(self) -> [Cell; 4] {
        [
            self.offset(1, 0),
            self.offset(0, 1),
            self.offset(-1, 0),
            self.offset(0, -1),
        ]
    }

    /// Center-to-center distance in cell units.
    pub fn distance(self, other: Cell) -> f64 {
        let dx = (self.x - other.x) as f64;
        let dy = (self.y - other.y) as f64;
        dx.hypot(dy)
    }

    pub fn manhattan(self, other: Cell) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }
}

/// World coordinates in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn planar_distance(&self, other: &Point3) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        self.planar_distance(other).hypot(self.z - other.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Heading {
    East,
    North,
    West,
    South,
}

impl Heading {
    pub const ALL: [Heading; 4] = [Heading::East, Heading::North, Heading::West, Heading::South];

    fn index(self) -> usize {
        match self {
            Heading::East => 0,
            Heading::North => 1,
            Heading::West => 2,
            Heading::South => 3,
        }
    }

    pub fn left(self) -> Heading {
        Self::ALL[(self.index() + 1) % 4]
    }

    pub fn right(self) -> Heading {
        Self::ALL[(self.index() + 3) % 4]
    }

    pub fn degrees(self) -> f64 {
        self.index() as f64 * 90.0
    }

    pub fn delta(self) -> (i32, i32) {
        match self {
            Heading::East => (1, 0),
            Heading::North => (0, 1),
            Heading::West => (-1, 0),
            Heading::South => (0, -1),
        }
    }

    /// Heading whose step delta is `(dx, dy)`, for unit 4-connected moves.
    pub fn from_delta(dx: i32, dy: i32) -> Option<Heading> {
        Self::ALL.into_iter().find(|h| h.delta() == (dx, dy))
    }

    /// Closest heading to the direction `(dx, dy)`; ties resolve toward the
    /// lower heading index. Zero vector maps to East.
    pub fn nearest(dx: f64, dy: f64) -> Heading {
        if dx == 0.0 && dy == 0.0 {
            return Heading::East;
        }
        let ang = dy.atan2(dx).to_degrees();
        *Self::ALL
            .iter()
            .min_by(|a, b| {
                let da = angle_diff(ang, a.degrees()).abs();
                let db = angle_diff(ang, b.degrees()).abs();
                da.partial_cmp(&db).unwrap()
            })
            .unwrap()
    }

    /// Minimal number of single turns from `self` to `target` and whether the
    /// first one is a left turn.
    pub fn turns_to(self, target: Heading) -> (u32, bool) {
        match (target.index() + 4 - self.index()) % 4 {
            0 => (0, true),
            1 => (1, true),
            2 => (2, true),
            _ => (1, false),
        }
    }
}

/// Signed difference `a - b` wrapped to (-180, 180].
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let mut d = (a - b) % 360.0;
    if d <= -180.0 {
        d += 360.0;
    } else if d > 180.0 {
        d -= 360.0;
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    MoveForward,
    TurnLeft,
    TurnRight,
    Stop,
}

impl Action {
    pub const ALL: [Action; 4] = [
        Action::MoveForward,
        Action::Stop,
        Action::TurnLeft,
        Action::TurnRight,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Action::MoveForward => "move_forward",
            Action::TurnLeft => "turn_left",
            Action::TurnRight => "turn_right",
            Action::Stop => "stop",
        }
    }

    pub fn from_name(s: &str) -> Option<Action> {
        Self::ALL.into_iter().find(|a| a.name() == s)
    }
}

impl std::fmt::Display for Action {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AgentPose {
    pub cell: Cell,
    pub heading: Heading,
}

impl AgentPose {
    pub fn new(cell: Cell, heading: Heading) -> Self {
        Self { cell, heading }
    }
}

/// Static occupancy grid. Everything outside the grid counts as obstacle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMap {
    width: u32,
    height: u32,
    cell_size: f64,
    occupied: Vec<bool>,
}

impl GridMap {
    pub fn new(width: u32, height: u32, cell_size: f64) -> Self {
        assert!(width > 0 && height > 0, "grid must be non-empty");
        assert!(cell_size > 0.0 && cell_size.is_finite(), "cell size must be positive");
        Self {
            width,
            height,
            cell_size,
            occupied: vec![false; (width * height) as usize],
        }
    }

    /// Builds a grid from rows of `.` (free) and `#` (obstacle); row 0 is y = 0.
    pub fn from_rows(rows: &[&str], cell_size: f64) -> Self {
        let height = rows.len() as u32;
        let width = rows.first().map_or(0, |r| r.len()) as u32;
        let mut map = Self::new(width, height, cell_size);
        for (y, row) in rows.iter().enumerate() {
            assert_eq!(row.len() as u32, width, "ragged grid rows");
            for (x, ch) in row.chars().enumerate() {
                map.set_obstacle(Cell::new(x as i32, y as i32), ch == '#');
            }
        }
        map
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn len(&self) -> usize {
        self.occupied.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupied.is_empty()
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && (c.x as u32) < self.width && (c.y as u32) < self.height
    }

    pub fn index(&self, c: Cell) -> Option<usize> {
        self.in_bounds(c)
            .then(|| c.y as usize * self.width as usize + c.x as usize)
    }

    pub fn cell_at(&self, idx: usize) -> Cell {
        let w = self.width as usize;
        Cell::new((idx % w) as i32, (idx / w) as i32)
    }

    pub fn is_free(&self, c: Cell) -> bool {
        self.index(c).is_some_and(|i| !self.occupied[i])
    }

    pub fn is_obstacle(&self, c: Cell) -> bool {
        !self.is_free(c)
    }

    pub(crate) fn set_obstacle(&mut self, c: Cell, obstacle: bool) {
        if let Some(i) = self.index(c) {
            self.occupied[i] = obstacle;
        }
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.len()).map(|i| self.cell_at(i))
    }

    pub fn free_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.cells().filter(|c| self.is_free(*c))
    }

    pub fn obstacle_count(&self) -> usize {
        self.occupied.iter().filter(|o| **o).count()
    }

    /// World position (meters) of a cell center, at height `z`.
    pub fn cell_center(&self, c: Cell, z: f64) -> Point3 {
        Point3::new(
            (c.x as f64 + 0.5) * self.cell_size,
            (c.y as f64 + 0.5) * self.cell_size,
            z,
        )
    }

    /// Cell containing a world position (meters).
    pub fn cell_of(&self, x: f64, y: f64) -> Cell {
        Cell::new(
            (x / self.cell_size).floor() as i32,
            (y / self.cell_size).floor() as i32,
        )
    }

    pub fn meters_to_cells(&self, m: f64) -> f64 {
        m / self.cell_size
    }
}

/// Ground-truth object identifier; never exposed to policies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrueObjectId(pub u32);

impl std::fmt::Display for TrueObjectId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldObject {
    pub true_id: TrueObjectId,
    pub center: Point3,
    /// Planar radius in meters used for the object's footprint cells.
    pub footprint_radius: f64,
    pub attributes: AttributeSet,
}

impl WorldObject {
    /// Grid cells whose centers lie within the footprint radius.
    pub fn footprint_cells(&self, map: &GridMap) -> Vec<Cell> {
        let r = map.meters_to_cells(self.footprint_radius);
        let cx = self.center.x / map.cell_size();
        let cy = self.center.y / map.cell_size();
        let (x0, x1) = ((cx - r).floor() as i32 - 1, (cx + r).ceil() as i32 + 1);
        let (y0, y1) = ((cy - r).floor() as i32 - 1, (cy + r).ceil() as i32 + 1);
        let mut out = Vec::new();
        for y in y0..=y1 {
            for x in x0..=x1 {
                let c = Cell::new(x, y);
                let d = ((x as f64 + 0.5) - cx).hypot((y as f64 + 0.5) - cy);
                if map.in_bounds(c) && d <= r + 1e-9 {
                    out.push(c);
                }
            }
        }
        out
    }

    pub fn cell(&self, map: &GridMap) -> Cell {
        map.cell_of(self.center.x, self.center.y)
    }
}

/// A static scene: occupancy, objects, vocabulary and the agent start pose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridWorld {
    pub map: GridMap,
    pub objects: Vec<WorldObject>,
    pub vocabulary: Vocabulary,
    pub start: AgentPose,
    pub seed: u64,
}

impl GridWorld {
    /// Checks the structural invariants of a world.
    pub fn validate(&self) -> Result<(), WorldError> {
        if !self.map.is_free(self.start.cell) {
            return Err(WorldError::Invalid("start cell is not free".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for o in &self.objects {
            if !seen.insert(o.true_id) {
                return Err(WorldError::Invalid(format!("duplicate object id {}", o.true_id)));
            }
            if !self.map.is_free(o.cell(&self.map)) {
                return Err(WorldError::Invalid(format!(
                    "object {} is not on a free cell",
                    o.true_id
                )));
            }
            if o.attributes.modifiers.is_empty() && o.attributes.category.is_empty() {
                return Err(WorldError::Invalid(format!(
                    "object {} has no attributes",
                    o.true_id
                )));
            }
            if self.vocabulary.kind_of(&o.attributes.category)
                != Some(crate::oracle::TokenKind::Category)
            {
                return Err(WorldError::Invalid(format!(
                    "object {} category {:?} not in vocabulary",
                    o.true_id, o.attributes.category
                )));
            }
            for m in &o.attributes.modifiers {
                if self.vocabulary.kind_of(m) != Some(crate::oracle::TokenKind::Modifier) {
                    return Err(WorldError::Invalid(format!(
                        "object {} modifier {m:?} not in vocabulary",
                        o.true_id
                    )));
                }
            }
        }
        if self.objects.len() > 100 {
            return Err(WorldError::Invalid(
                "at most 100 objects fit the transient ID range".into(),
            ));
        }
        Ok(())
    }

    pub fn object(&self, id: TrueObjectId) -> Option<&WorldObject> {
        self.objects.iter().find(|o| o.true_id == id)
    }
}
