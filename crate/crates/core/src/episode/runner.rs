//! The per-step loop: observe, caption, associate, commit, act.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::eval::{replay, EvalError};
use super::log::{EpisodeLog, GroundTruthObject, LogError, LogFooter, LogHeader, StepRecord, StopReason, LOG_FORMAT};
use super::{ConfigError, RunConfig};
use crate::association::{
    apply_matches, associate_heuristic, associate_oracle, make_records, AssociationError, AssociationMode, TrueIdRegistry,
};
use crate::explorer::{Policy, PolicyKind, PolicyView};
use crate::memory::{serialize, token_count, EpisodicMemory};
use crate::oracle::{caption_object, Caption, Embedder};
use crate::protocol::{format_prompt, render_output, RenderError, StructuredOutput, DEFAULT_PROMPT_HEADER};
use crate::world::{
    generate_world, observe, parse_world, step_agent, update_explored, write_world, Action, ExploredMap, GridWorld,
    WorldError, WorldFormatError,
};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("world file {path}: {source}")]
    WorldFile { path: PathBuf, source: WorldFormatError },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("step {step}: {source}")]
    Association { step: u32, source: AssociationError },
    #[error("step {step}: {source}")]
    Render { step: u32, source: RenderError },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Log(#[from] LogError),
}

impl RunError {
    /// Validation problems, world problems, everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::World(_) | RunError::WorldFile { .. } => 3,
            _ => 4,
        }
    }
}

pub struct EpisodeOutcome {
    pub log: EpisodeLog,
    /// Wall-clock seconds per step. Not part of the log, which stays
    /// byte-for-byte reproducible.
    pub step_times: Vec<f64>,
}

pub fn world_hash(world: &GridWorld) -> String {
    hex::encode(Sha256::digest(write_world(world).as_bytes()))
}

/// The configured world file, or a freshly generated world for `seed`.
pub fn load_world(cfg: &RunConfig, seed: u64) -> Result<GridWorld, RunError> {
    match &cfg.world_file {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| RunError::Io {
                path: path.clone(),
                source,
            })?;
            parse_world(&text).map_err(|source| RunError::WorldFile {
                path: path.clone(),
                source,
            })
        }
        None => Ok(generate_world(&cfg.world, seed)?),
    }
}

pub fn run_episode(
    world: &GridWorld,
    cfg: &RunConfig,
    policy: PolicyKind,
    world_seed: u64,
    policy_seed: u64,
) -> Result<EpisodeOutcome, RunError> {
    run_episode_with(world, cfg, policy.build(&cfg.exploration, policy_seed), world_seed, policy_seed)
}

/// Runs one episode with an explicit policy object. Observation noise and
/// captioning draw from separate streams of the policy seed, so two policies
/// following the same trajectory see the same frames.
pub fn run_episode_with(
    world: &GridWorld,
    cfg: &RunConfig,
    mut policy: Box<dyn Policy>,
    world_seed: u64,
    policy_seed: u64,
) -> Result<EpisodeOutcome, RunError> {
    let map = &world.map;
    let embedder = Embedder::new(&world.vocabulary);
    let mut rng_obs = ChaCha8Rng::seed_from_u64(policy_seed);
    rng_obs.set_stream(1);
    let mut rng_cap = ChaCha8Rng::seed_from_u64(policy_seed);
    rng_cap.set_stream(2);

    let header = LogHeader {
        format: LOG_FORMAT.to_string(),
        config_hash: cfg.hash(),
        world_hash: world_hash(world),
        world_seed,
        policy_seed,
        policy: policy.kind(),
        association: cfg.association,
        cell_size: map.cell_size(),
        free_cells: map.free_cells().count(),
        vocabulary: world.vocabulary.clone(),
        ground_truth: world
            .objects
            .iter()
            .map(|o| GroundTruthObject {
                true_id: o.true_id,
                center: o.center,
                attributes: o.attributes.clone(),
            })
            .collect(),
        config: cfg.clone(),
    };

    let mut memory = EpisodicMemory::new();
    let mut registry = TrueIdRegistry::default();
    let mut explored = ExploredMap::new(map);
    let mut pose = world.start;
    update_explored(&mut explored, map, pose, &cfg.fov);
    let mut steps = Vec::new();
    let mut step_times = Vec::new();
    let mut stop_reason = StopReason::EpisodeCap;

    for step in 1..=cfg.episode_cap {
        let t0 = Instant::now();
        let frame = observe(world, pose, &cfg.fov, step, cfg.position_noise, &mut rng_obs);
        let captions: Vec<Caption> = frame
            .truth
            .true_ids
            .iter()
            .zip(&frame.truth.views)
            .map(|(id, view)| {
                let obj = world.object(*id).expect("detections come from world objects");
                caption_object(obj, pose, step, view, &cfg.noise, &world.vocabulary, &mut rng_cap)
            })
            .collect();
        let texts: Vec<String> = captions.iter().map(|c| c.text.clone()).collect();
        let prompt = format_prompt(&memory, &frame.observation, DEFAULT_PROMPT_HEADER);
        let decisions = match cfg.association {
            AssociationMode::Oracle => associate_oracle(&frame.observation, &frame.truth, &registry),
            AssociationMode::Heuristic => {
                associate_heuristic(&frame.observation, &texts, &memory, &embedder, &cfg.association_params)
            }
        };
        let committed = apply_matches(&mut memory, &decisions, &frame.observation, &captions)
            .map_err(|source| RunError::Association { step, source })?;
        for (id, pid) in frame.truth.true_ids.iter().zip(&committed) {
            registry.record_commit(*id, *pid);
        }
        let associations = make_records(step, &decisions, &committed, &frame.truth);

        let action = policy.next_action(&PolicyView {
            step,
            pose,
            map,
            memory: &memory,
            explored: &explored,
            embedder: &embedder,
        });
        let events = policy.drain_events();
        let output = render_output(&StructuredOutput {
            matches: decisions,
            captions: texts.clone(),
            action,
        })
        .map_err(|source| RunError::Render { step, source })?;

        let moved = step_agent(map, pose, action);
        let observed_pose = pose;
        pose = moved.pose;
        update_explored(&mut explored, map, pose, &cfg.fov);
        let tokens = token_count(&serialize(&memory));
        step_times.push(t0.elapsed().as_secs_f64());

        steps.push(StepRecord {
            step,
            pose: observed_pose,
            detections: frame.observation.detections,
            captions: texts,
            prompt_tokens: token_count(&prompt),
            prompt: cfg.record_prompts.then_some(prompt),
            output,
            committed,
            associations,
            action,
            collided: moved.collided,
            tokens,
            objects: memory.len(),
            distinct_captions: memory.distinct_caption_total(),
            explored_cells: explored.explored_free_count(map),
            events,
        });
        if action == Action::Stop {
            stop_reason = StopReason::PolicyStop;
            break;
        }
    }

    let r = replay(&header, &steps, stop_reason == StopReason::PolicyStop)?;
    debug_assert_eq!(r.memory, memory);
    let footer = LogFooter {
        steps: steps.len() as u32,
        stop_reason,
        final_memory: memory,
        pseudo_captions: r.pseudo_captions,
        report: r.report,
    };
    Ok(EpisodeOutcome {
        log: EpisodeLog { header, steps, footer },
        step_times,
    })
}

pub fn log_file_name(policy: PolicyKind, world_seed: u64, policy_seed: u64) -> String {
    format!("{}-w{world_seed}-p{policy_seed}.jsonl", policy.name())
}

/// One episode written by [`run_batch`].
#[derive(Debug, Clone, PartialEq)]
pub struct BatchEntry {
    pub path: PathBuf,
    pub world_seed: u64,
    pub policy_seed: u64,
    pub report: super::EpisodeReport,
    pub step_times: Vec<f64>,
}

/// Runs every configured episode of `cfg.policy` in parallel and writes one
/// log per episode into `out_dir`. Entries come back in episode order.
pub fn run_batch(cfg: &RunConfig, out_dir: &Path) -> Result<Vec<BatchEntry>, RunError> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|source| RunError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    cfg.episodes()
        .par_iter()
        .map(|&(ws, ps)| {
            let world = load_world(cfg, ws)?;
            let out = run_episode(&world, cfg, cfg.policy, ws, ps)?;
            let path = out_dir.join(log_file_name(cfg.policy, ws, ps));
            std::fs::write(&path, out.log.to_jsonl()).map_err(|source| RunError::Io {
                path: path.clone(),
                source,
            })?;
            Ok(BatchEntry {
                path,
                world_seed: ws,
                policy_seed: ps,
                report: out.log.footer.report,
                step_times: out.step_times,
            })
        })
        .collect()
}

#[derive(Serialize)]
struct TimingRow {
    world_seed: u64,
    policy_seed: u64,
    step: usize,
    seconds: f64,
}

/// Per-step wall-clock times, one row per step of every entry.
pub fn write_timing_csv<W: std::io::Write>(entries: &[BatchEntry], w: W) -> Result<(), csv::Error> {
    let mut wtr = csv::Writer::from_writer(w);
    for e in entries {
        for (i, &seconds) in e.step_times.iter().enumerate() {
            wtr.serialize(TimingRow {
                world_seed: e.world_seed,
                policy_seed: e.policy_seed,
                step: i + 1,
                seconds,
            })?;
        }
    }
    wtr.flush()?;
    Ok(())
}
