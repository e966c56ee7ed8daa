//! Episode configuration, execution, logging, evaluation and policy
//! comparison.

mod compare;
mod config;
mod eval;
mod log;
mod runner;

pub use compare::{compare_policies, median, write_csv, Comparison, PolicySummary, WinCount, COMPARED_METRICS};
pub use config::{ConfigError, RunConfig};
pub use eval::{evaluate_log, replay, write_report_csv, write_series_csv, EpisodeReport, EvalError, Replay};
pub use log::{
    EpisodeLog, GroundTruthObject, LogError, LogFooter, LogHeader, PseudoCaptionRecord, StepRecord, StopReason, LOG_FORMAT,
};
pub use runner::{
    load_world, log_file_name, run_batch, run_episode, run_episode_with, world_hash, write_timing_csv, BatchEntry, EpisodeOutcome,
    RunError,
};
