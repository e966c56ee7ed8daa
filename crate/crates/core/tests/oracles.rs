//! Library results checked against slow, independent reference computations.

use std::collections::{BTreeSet, HashMap};

use objmem::aggregator::{select_informative_views, ViewRecord};
use objmem::episode::{load_world, run_episode, RunConfig};
use objmem::explorer::PolicyKind;
use objmem::memory::{serialize, token_count};
use objmem::world::{
    distance_field, generate_world, line_of_sight, parse_world, shortest_path, traversed_cells, write_world, AgentPose, Cell,
    GridMap, Heading, WorldSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_map(rng: &mut ChaCha8Rng, w: u32, h: u32, density: f64) -> GridMap {
    let rows: Vec<String> = (0..h)
        .map(|_| (0..w).map(|_| if rng.gen::<f64>() < density { '#' } else { '.' }).collect())
        .collect();
    let rows: Vec<&str> = rows.iter().map(String::as_str).collect();
    GridMap::from_rows(&rows, 0.5)
}

/// Cells whose open interior the center-to-center segment crosses with
/// positive length, via the slab test on every cell of the bounding box.
fn slab_cells(from: Cell, to: Cell) -> BTreeSet<Cell> {
    let (x0, y0) = (from.x as f64 + 0.5, from.y as f64 + 0.5);
    let (dx, dy) = ((to.x - from.x) as f64, (to.y - from.y) as f64);
    let mut out = BTreeSet::new();
    for y in from.y.min(to.y)..=from.y.max(to.y) {
        for x in from.x.min(to.x)..=from.x.max(to.x) {
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            for (p, d, a) in [(x0, dx, x as f64), (y0, dy, y as f64)] {
                if d == 0.0 {
                    if p <= a || p >= a + 1.0 {
                        hi = -1.0;
                    }
                } else {
                    let (t1, t2) = ((a - p) / d, (a + 1.0 - p) / d);
                    lo = lo.max(t1.min(t2));
                    hi = hi.min(t1.max(t2));
                }
            }
            if hi - lo > 1e-9 || (from == to && x == from.x && y == from.y) {
                out.insert(Cell::new(x, y));
            }
        }
    }
    out
}

#[test]
fn traversal_matches_slab_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..3000 {
        let a = Cell::new(rng.gen_range(-12..12), rng.gen_range(-12..12));
        let b = Cell::new(rng.gen_range(-12..12), rng.gen_range(-12..12));
        let got = traversed_cells(a, b);
        let set: BTreeSet<Cell> = got.iter().copied().collect();
        assert_eq!(set.len(), got.len(), "{a:?} -> {b:?} repeats a cell");
        assert_eq!(set, slab_cells(a, b), "{a:?} -> {b:?}");
        assert_eq!((got[0], *got.last().unwrap()), (a, b));
    }
}

#[test]
fn line_of_sight_matches_slab_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..40 {
        let map = random_map(&mut rng, 15, 15, 0.25);
        for _ in 0..100 {
            let a = Cell::new(rng.gen_range(0..15), rng.gen_range(0..15));
            let b = Cell::new(rng.gen_range(0..15), rng.gen_range(0..15));
            let expected = slab_cells(a, b).into_iter().filter(|c| *c != b).all(|c| map.is_free(c));
            assert_eq!(line_of_sight(&map, a, b), expected, "{a:?} -> {b:?}");
        }
    }
}

/// Bellman-Ford style relaxation until nothing changes.
fn relaxed_distances(map: &GridMap, from: Cell) -> HashMap<Cell, u32> {
    let mut d = HashMap::new();
    if !map.is_free(from) {
        return d;
    }
    d.insert(from, 0);
    loop {
        let mut changed = false;
        for c in map.free_cells() {
            let best = c.neighbors4().iter().filter_map(|n| d.get(n)).map(|v| v + 1).min();
            if let Some(b) = best {
                if d.get(&c).map_or(true, |&cur| b < cur) {
                    d.insert(c, b);
                    changed = true;
                }
            }
        }
        if !changed {
            return d;
        }
    }
}

#[test]
fn bfs_matches_relaxation_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..30 {
        let map = random_map(&mut rng, 14, 11, 0.3);
        let from = Cell::new(rng.gen_range(0..14), rng.gen_range(0..11));
        let oracle = relaxed_distances(&map, from);
        let field = distance_field(&map, from);
        for c in map.cells() {
            assert_eq!(field[map.index(c).unwrap()], oracle.get(&c).copied(), "{c:?}");
            match shortest_path(&map, from, c) {
                Some(path) => {
                    assert_eq!(Some(&(path.len() as u32 - 1)), oracle.get(&c));
                    assert!(path.iter().all(|p| map.is_free(*p)));
                    assert!(path.windows(2).all(|w| w[0].manhattan(w[1]) == 1));
                }
                None => assert!(!oracle.contains_key(&c)),
            }
        }
    }
}

fn flood_fill(map: &GridMap, from: Cell) -> BTreeSet<Cell> {
    let mut seen = BTreeSet::from([from]);
    let mut stack = vec![from];
    while let Some(c) = stack.pop() {
        for n in c.neighbors4() {
            if map.is_free(n) && seen.insert(n) {
                stack.push(n);
            }
        }
    }
    seen
}

#[test]
fn generated_worlds_are_fully_reachable_and_round_trip() {
    for seed in 0..25 {
        let spec = WorldSpec::sized(24, 18, 0.3, 10);
        let w = generate_world(&spec, seed).unwrap();
        w.validate().unwrap();
        let reach = flood_fill(&w.map, w.start.cell);
        let free: BTreeSet<Cell> = w.map.free_cells().collect();
        assert_eq!(reach, free, "seed {seed}");
        for o in &w.objects {
            assert!(reach.contains(&o.cell(&w.map)));
        }
        assert_eq!(parse_world(&write_world(&w)).unwrap(), w);
        assert_eq!(generate_world(&spec, seed).unwrap(), w);
    }
}

fn covered(views: &[&ViewRecord]) -> usize {
    views.iter().flat_map(|v| v.covered_cells.iter()).collect::<BTreeSet<_>>().len()
}

#[test]
fn view_selection_against_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..300 {
        let n = rng.gen_range(1..9);
        let records: Vec<ViewRecord> = (0..n)
            .map(|i| ViewRecord {
                step: i as u32 + 1,
                pose: AgentPose::new(Cell::new(0, 0), Heading::East),
                bearing_deg: rng.gen_range(-180.0..180.0),
                covered_cells: (0..rng.gen_range(0..6)).map(|_| Cell::new(rng.gen_range(0..5), 0)).collect(),
            })
            .collect();
        let budget = rng.gen_range(1..5);
        let picked = select_informative_views(&records, budget);
        assert_eq!(picked.len(), budget.min(n));

        // Every pick has the largest marginal gain available at that point.
        let mut so_far: Vec<&ViewRecord> = Vec::new();
        for p in &picked {
            let base = covered(&so_far);
            let best = records
                .iter()
                .filter(|r| !so_far.iter().any(|s| s.step == r.step))
                .map(|r| {
                    let mut with = so_far.clone();
                    with.push(r);
                    covered(&with) - base
                })
                .max()
                .unwrap();
            so_far.push(p);
            assert_eq!(covered(&so_far) - base, best);
        }

        // Greedy keeps at least (1 - 1/e) of the best subset of that size.
        let k = budget.min(n);
        let optimum = (0u32..1 << n)
            .filter(|m| m.count_ones() as usize == k)
            .map(|m| covered(&records.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).map(|(_, r)| r).collect::<Vec<_>>()))
            .max()
            .unwrap();
        let got = covered(&picked.iter().collect::<Vec<_>>());
        assert!(got as f64 >= (1.0 - (-1.0f64).exp()) * optimum as f64, "{got} vs {optimum}");
    }
}

#[test]
fn logged_counters_match_recounts() {
    let cfg = RunConfig {
        world: WorldSpec::sized(18, 18, 0.1, 6),
        episode_cap: 150,
        ..RunConfig::default()
    };
    for seed in 0..3 {
        let world = load_world(&cfg, seed).unwrap();
        let log = run_episode(&world, &cfg, PolicyKind::Disagreement, seed, seed).unwrap().log;
        let mut hist: HashMap<u32, Vec<(String, u32)>> = HashMap::new();
        for s in &log.steps {
            assert_eq!(s.committed.len(), s.captions.len());
            for (pid, text) in s.committed.iter().zip(&s.captions) {
                let h = hist.entry(pid.0).or_default();
                match h.iter_mut().find(|(t, _)| t == text) {
                    Some((_, c)) => *c += 1,
                    None => h.push((text.clone(), 1)),
                }
            }
            assert_eq!(s.objects, hist.len());
            assert_eq!(s.distinct_captions, hist.values().map(Vec::len).sum::<usize>());
            if let Some(p) = &s.prompt {
                assert_eq!(s.prompt_tokens, token_count(p));
            }
        }
        let mem = &log.footer.final_memory;
        assert_eq!(mem.len(), hist.len());
        for e in mem.entries() {
            let recount: Vec<(String, u32)> = e.captions.iter().map(|c| (c.text.clone(), c.count)).collect();
            assert_eq!(recount, hist[&e.id.0]);
        }
        assert_eq!(log.footer.report.final_tokens, token_count(&serialize(mem)));
        assert_eq!(log.footer.report.detections, log.steps.iter().map(|s| s.detections.len()).sum::<usize>());
    }
}
