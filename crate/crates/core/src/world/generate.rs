//! Seeded procedural world generation.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    distance_field, AgentPose, Cell, GridMap, GridWorld, Heading, TrueObjectId, WorldError,
    WorldObject,
};
use crate::oracle::{AttributeSet, Vocabulary};

const MAX_ATTEMPTS: u32 = 64;

/// How object centers are spread over the reachable free cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectPlacement {
    /// Uniformly random cells, pairwise center distance strictly above `min_separation` meters.
    Uniform { min_separation: f64 },
    /// Objects come in same-category pairs whose members are at most `spacing`
    /// meters apart; distinct pairs stay more than `min_separation` meters apart.
    Pairs { spacing: f64, min_separation: f64 },
}

impl Default for ObjectPlacement {
    fn default() -> Self {
        ObjectPlacement::Uniform {
            min_separation: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldSpec {
    pub width: u32,
    pub height: u32,
    /// Meters per cell.
    pub cell_size: f64,
    /// Target fraction of obstacle cells, in [0, 1).
    pub obstacle_density: f64,
    pub object_count: usize,
    /// Fixed synthetic height (z) of every object, meters.
    pub object_height: f64,
    /// Footprint radius range in meters, `[min, max]`.
    pub footprint_radius: [f64; 2],
    /// Number of ground-truth modifiers per object, `[min, max]`.
    pub modifiers_per_object: [usize; 2],
    pub placement: ObjectPlacement,
    pub vocabulary: Option<Vocabulary>,
}

impl Default for WorldSpec {
    fn default() -> Self {
        Self {
            width: 30,
            height: 30,
            cell_size: 0.5,
            obstacle_density: 0.12,
            object_count: 8,
            object_height: 0.8,
            footprint_radius: [0.25, 0.75],
            modifiers_per_object: [2, 3],
            placement: ObjectPlacement::default(),
            vocabulary: None,
        }
    }
}

impl WorldSpec {
    pub fn sized(width: u32, height: u32, obstacle_density: f64, object_count: usize) -> Self {
        Self {
            width,
            height,
            obstacle_density,
            object_count,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        let bad = |m: &str| Err(WorldError::InvalidSpec(m.to_string()));
        if self.width == 0 || self.height == 0 {
            return bad("width and height must be positive");
        }
        if !(self.cell_size > 0.0 && self.cell_size.is_finite()) {
            return bad("cell_size must be positive");
        }
        if !(0.0..1.0).contains(&self.obstacle_density) {
            return bad("obstacle_density must be in [0, 1)");
        }
        if self.object_count > super::visibility::TRANSIENT_ID_RANGE {
            return bad("object_count must not exceed the transient ID range (100)");
        }
        let [rmin, rmax] = self.footprint_radius;
        if !(rmin >= 0.0 && rmin <= rmax && rmax.is_finite()) {
            return bad("footprint_radius must satisfy 0 <= min <= max");
        }
        let [kmin, kmax] = self.modifiers_per_object;
        if kmin == 0 || kmin > kmax {
            return bad("modifiers_per_object must satisfy 1 <= min <= max");
        }
        let vocab = self.vocabulary.clone().unwrap_or_else(Vocabulary::indoor);
        if kmax > vocab.modifiers().len() {
            return bad("modifiers_per_object exceeds the vocabulary");
        }
        match self.placement {
            ObjectPlacement::Uniform { min_separation } if min_separation < 0.0 => {
                bad("min_separation must be >= 0")
            }
            ObjectPlacement::Pairs {
                spacing,
                min_separation,
            } if spacing <= 0.0 || min_separation < 0.0 => {
                bad("pair spacing must be > 0 and min_separation >= 0")
            }
            _ => Ok(()),
        }
    }
}

/// Generates a reproducible world. Free cells not reachable from the start
/// are filled in, so every object and every free cell is reachable.
pub fn generate_world(spec: &WorldSpec, seed: u64) -> Result<GridWorld, WorldError> {
    spec.validate()?;
    let vocab = spec.vocabulary.clone().unwrap_or_else(Vocabulary::indoor);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last_reason = String::new();
    for _ in 0..MAX_ATTEMPTS {
        match try_generate(spec, &vocab, &mut rng) {
            Ok((map, start, objects)) => {
                let world = GridWorld {
                    map,
                    objects,
                    vocabulary: vocab,
                    start,
                    seed,
                };
                world.validate()?;
                return Ok(world);
            }
            Err(reason) => last_reason = reason,
        }
    }
    Err(WorldError::Unsatisfiable {
        attempts: MAX_ATTEMPTS,
        reason: last_reason,
    })
}

type Generated = (GridMap, AgentPose, Vec<WorldObject>);

fn try_generate(spec: &WorldSpec, vocab: &Vocabulary, rng: &mut ChaCha8Rng) -> Result<Generated, String> {
    let mut map = GridMap::new(spec.width, spec.height, spec.cell_size);
    let target = (spec.obstacle_density * map.len() as f64).round() as usize;
    while map.obstacle_count() < target {
        let (w, h) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
        let x0 = rng.gen_range(0..spec.width as i32);
        let y0 = rng.gen_range(0..spec.height as i32);
        for y in y0..y0 + h {
            for x in x0..x0 + w {
                map.set_obstacle(Cell::new(x, y), true);
            }
        }
    }

    let free: Vec<Cell> = map.free_cells().collect();
    let start_cell = *free.choose(rng).ok_or("no free cell")?;
    let dist = distance_field(&map, start_cell);
    for (i, d) in dist.iter().enumerate() {
        if d.is_none() {
            map.set_obstacle(map.cell_at(i), true);
        }
    }
    let heading = *Heading::ALL.choose(rng).unwrap();
    let start = AgentPose::new(start_cell, heading);

    let mut candidates: Vec<Cell> = map.free_cells().filter(|c| *c != start_cell).collect();
    if candidates.len() < spec.object_count {
        return Err(format!(
            "only {} reachable cells for {} objects",
            candidates.len(),
            spec.object_count
        ));
    }
    candidates.shuffle(rng);
    let cells = place(spec, &map, &candidates, rng)?;

    let paired = matches!(spec.placement, ObjectPlacement::Pairs { .. });
    let mut objects: Vec<WorldObject> = Vec::with_capacity(cells.len());
    for (i, cell) in cells.into_iter().enumerate() {
        let [rmin, rmax] = spec.footprint_radius;
        let radius = if rmax > rmin { rng.gen_range(rmin..=rmax) } else { rmin };
        let mut attributes = random_attributes(spec, vocab, rng);
        // The second member of a pair is a look-alike of the first.
        if paired && i % 2 == 1 {
            attributes.category = objects[i - 1].attributes.category.clone();
        }
        objects.push(WorldObject {
            true_id: TrueObjectId(i as u32 + 1),
            center: map.cell_center(cell, spec.object_height),
            footprint_radius: radius,
            attributes,
        });
    }
    Ok((map, start, objects))
}

fn separated(map: &GridMap, c: Cell, others: &[Cell], min_separation: f64) -> bool {
    others
        .iter()
        .all(|o| c.distance(*o) * map.cell_size() > min_separation)
}

fn place(spec: &WorldSpec, map: &GridMap, candidates: &[Cell], rng: &mut ChaCha8Rng) -> Result<Vec<Cell>, String> {
    let n = spec.object_count;
    let mut chosen: Vec<Cell> = Vec::with_capacity(n);
    match spec.placement {
        ObjectPlacement::Uniform { min_separation } => {
            for c in candidates {
                if chosen.len() == n {
                    break;
                }
                if separated(map, *c, &chosen, min_separation) {
                    chosen.push(*c);
                }
            }
        }
        ObjectPlacement::Pairs {
            spacing,
            min_separation,
        } => {
            let reach = map.meters_to_cells(spacing);
            for anchor in candidates {
                if chosen.len() == n {
                    break;
                }
                if chosen.contains(anchor) || !separated(map, *anchor, &chosen, min_separation) {
                    continue;
                }
                if chosen.len() + 1 == n {
                    chosen.push(*anchor);
                    break;
                }
                let partners: Vec<Cell> = candidates
                    .iter()
                    .copied()
                    .filter(|p| {
                        p != anchor
                            && p.distance(*anchor) <= reach + 1e-9
                            && separated(map, *p, &chosen, min_separation)
                    })
                    .collect();
                if let Some(p) = partners.choose(rng) {
                    chosen.push(*anchor);
                    chosen.push(*p);
                }
            }
        }
    }
    if chosen.len() < n {
        return Err(format!("placed {} of {} objects", chosen.len(), n));
    }
    Ok(chosen)
}

fn random_attributes(spec: &WorldSpec, vocab: &Vocabulary, rng: &mut ChaCha8Rng) -> AttributeSet {
    let category = vocab.categories().choose(rng).unwrap().clone();
    let [kmin, kmax] = spec.modifiers_per_object;
    let k = rng.gen_range(kmin..=kmax);
    let mut idx = rand::seq::index::sample(rng, vocab.modifiers().len(), k).into_vec();
    idx.sort_unstable();
    AttributeSet::new(
        category,
        idx.into_iter().map(|i| vocab.modifiers()[i].clone()).collect(),
    )
}
