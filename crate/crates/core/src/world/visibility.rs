//! Field-of-view, line-of-sight and the per-step observation model.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{angle_diff, AgentPose, Cell, GridMap, GridWorld, Point3, TrueObjectId};
use crate::oracle::ViewGeometry;

/// Camera cone: full opening angle and range in cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldOfView {
    pub fov_deg: f64,
    pub range_cells: f64,
}

impl Default for FieldOfView {
    fn default() -> Self {
        Self {
            fov_deg: 90.0,
            range_cells: 8.0,
        }
    }
}

impl FieldOfView {
    pub fn max_range_m(&self, map: &GridMap) -> f64 {
        self.range_cells * map.cell_size()
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.fov_deg > 0.0 && self.fov_deg <= 360.0) {
            return Err("fov.fov_deg must be in (0, 360]".into());
        }
        if !(self.range_cells >= 0.0 && self.range_cells.is_finite()) {
            return Err("fov.range_cells must be finite and >= 0".into());
        }
        Ok(())
    }
}

const EPS: f64 = 1e-9;

/// Cells whose interior the segment between the centers of `from` and `to`
/// passes through, in traversal order, endpoints included. A segment passing
/// exactly through a grid corner steps diagonally and does not visit the two
/// cells it only touches.
pub fn traversed_cells(from: Cell, to: Cell) -> Vec<Cell> {
    let dx = to.x - from.x;
    let dy = to.y - from.y;
    let (nx, ny) = (dx.unsigned_abs() as i64, dy.unsigned_abs() as i64);
    let (sx, sy) = (dx.signum(), dy.signum());
    let mut p = from;
    let mut out = Vec::with_capacity((nx + ny + 1) as usize);
    out.push(p);
    let (mut ix, mut iy) = (0i64, 0i64);
    while ix < nx || iy < ny {
        // Compare the parameter of the next vertical vs horizontal boundary crossing.
        let decision = (1 + 2 * ix) * ny - (1 + 2 * iy) * nx;
        if decision == 0 {
            p = p.offset(sx, sy);
            ix += 1;
            iy += 1;
        } else if decision < 0 {
            p = p.offset(sx, 0);
            ix += 1;
        } else {
            p = p.offset(0, sy);
            iy += 1;
        }
        out.push(p);
    }
    out
}

/// True when no obstacle cell other than `to` itself blocks the view from
/// the center of `from` to the center of `to`.
pub fn line_of_sight(map: &GridMap, from: Cell, to: Cell) -> bool {
    let path = traversed_cells(from, to);
    path[..path.len() - 1].iter().all(|c| map.is_free(*c))
}

/// Distance and off-axis angle of `target` seen from `pose`, if it lies
/// inside the cone (range and angle only; no occlusion test).
pub fn view_geometry(
    map: &GridMap,
    pose: AgentPose,
    fov: &FieldOfView,
    target: Point3,
) -> Option<ViewGeometry> {
    let eye = map.cell_center(pose.cell, target.z);
    let max_range = fov.max_range_m(map);
    let distance = eye.planar_distance(&target);
    if distance > max_range + EPS {
        return None;
    }
    let angle_deg = if distance < EPS {
        0.0
    } else {
        let bearing = (target.y - eye.y).atan2(target.x - eye.x).to_degrees();
        angle_diff(bearing, pose.heading.degrees())
    };
    if angle_deg.abs() > fov.fov_deg / 2.0 + EPS {
        return None;
    }
    Some(ViewGeometry {
        distance,
        angle_deg,
        max_range,
        fov_deg: fov.fov_deg,
    })
}

/// All cells (free or obstacle) currently in view: inside the cone and with
/// an unobstructed line of sight to their center.
pub fn visible_cells(map: &GridMap, pose: AgentPose, fov: &FieldOfView) -> Vec<Cell> {
    let r = fov.range_cells.floor() as i32 + 1;
    let mut out = Vec::new();
    for y in pose.cell.y - r..=pose.cell.y + r {
        for x in pose.cell.x - r..=pose.cell.x + r {
            let c = Cell::new(x, y);
            if !map.in_bounds(c) {
                continue;
            }
            if view_geometry(map, pose, fov, map.cell_center(c, 0.0)).is_some()
                && line_of_sight(map, pose.cell, c)
            {
                out.push(c);
            }
        }
    }
    out
}

/// One detected object instance as seen by policies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    /// Per-frame random identifier, unique within the frame.
    pub transient_id: u32,
    /// Estimated world position (true center plus sensor noise).
    pub world_position: Point3,
    /// Visible footprint cells, standing in for an image-space box.
    pub footprint: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub step: u32,
    pub detections: Vec<Detection>,
    pub agent_pose: AgentPose,
}

impl Observation {
    pub fn transient_ids(&self) -> Vec<u32> {
        self.detections.iter().map(|d| d.transient_id).collect()
    }
}

/// Ground truth aligned with an observation's detections. Only the
/// environment side (captioner, oracle association, evaluation) sees this.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameTruth {
    pub true_ids: Vec<TrueObjectId>,
    pub views: Vec<ViewGeometry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservedFrame {
    pub observation: Observation,
    pub truth: FrameTruth,
}

/// Transient IDs are drawn without replacement from `0..TRANSIENT_ID_RANGE`.
pub const TRANSIENT_ID_RANGE: usize = 100;

/// Detects every object whose center is in range, inside the cone and in
/// line of sight. Detection order is shuffled each frame; positions get
/// uniform disc noise of radius `position_noise` meters.
pub fn observe<R: Rng + ?Sized>(
    world: &GridWorld,
    pose: AgentPose,
    fov: &FieldOfView,
    step: u32,
    position_noise: f64,
    rng: &mut R,
) -> ObservedFrame {
    let map = &world.map;
    let visible: HashSet<Cell> = visible_cells(map, pose, fov).into_iter().collect();

    let mut seen: Vec<(usize, ViewGeometry)> = Vec::new();
    for (i, obj) in world.objects.iter().enumerate() {
        let Some(view) = view_geometry(map, pose, fov, obj.center) else {
            continue;
        };
        if line_of_sight(map, pose.cell, obj.cell(map)) {
            seen.push((i, view));
        }
    }
    seen.shuffle(rng);

    let ids = rand::seq::index::sample(rng, TRANSIENT_ID_RANGE, seen.len().min(TRANSIENT_ID_RANGE));
    let mut detections = Vec::with_capacity(seen.len());
    let mut truth = FrameTruth {
        true_ids: Vec::with_capacity(seen.len()),
        views: Vec::with_capacity(seen.len()),
    };
    for ((i, view), tid) in seen.into_iter().zip(ids.iter()) {
        let obj = &world.objects[i];
        let mut pos = obj.center;
        if position_noise > 0.0 {
            let r = position_noise * rng.gen::<f64>().sqrt();
            let th = rng.gen::<f64>() * std::f64::consts::TAU;
            pos.x += r * th.cos();
            pos.y += r * th.sin();
        }
        let center_cell = obj.cell(map);
        let mut footprint: Vec<Cell> = obj
            .footprint_cells(map)
            .into_iter()
            .filter(|c| visible.contains(c) || *c == center_cell)
            .collect();
        if !footprint.contains(&center_cell) {
            footprint.push(center_cell);
        }
        footprint.sort();
        detections.push(Detection {
            transient_id: tid as u32,
            world_position: pos,
            footprint,
        });
        truth.true_ids.push(obj.true_id);
        truth.views.push(view);
    }
    ObservedFrame {
        observation: Observation {
            step,
            detections,
            agent_pose: pose,
        },
        truth,
    }
}
