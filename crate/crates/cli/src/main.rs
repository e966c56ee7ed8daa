//! `objmem` command-line runner.
//!
//! Exit codes: 0 success, 2 invalid config or usage, 3 world generation or
//! world file errors, 4 runtime, I/O and evaluation errors.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use objmem::episode::{
    compare_policies, evaluate_log, run_batch, write_csv, write_report_csv, write_series_csv, write_timing_csv, EpisodeLog,
    EvalError, LogError, RunConfig, RunError,
};
use objmem::explorer::PolicyKind;
use objmem::world::{generate_world, write_world, WorldError};
use thiserror::Error;

#[derive(Parser)]
#[command(name = "objmem", version, about = "Deterministic embodied object-memory simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override any config field, e.g. `--set exploration.alpha=0.5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a world and write it in the text world format.
    GenWorld {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run every configured episode and write one JSONL log per episode.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Log directory; overrides `output_dir`.
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Also write per-step wall-clock times to this CSV.
        #[arg(long)]
        timing: Option<PathBuf>,
    },
    /// Recompute metrics from episode logs and write a report CSV.
    Eval {
        /// Log files or directories containing `*.jsonl` logs.
        #[arg(required = true)]
        logs: Vec<PathBuf>,
        #[arg(long, default_value = "report.csv")]
        report: PathBuf,
        /// Per-step series CSV (tokens, objects, coverage).
        #[arg(long)]
        series: Option<PathBuf>,
    },
    /// Run several policies on matched seeds and count per-seed wins.
    ComparePolicies {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Comma-separated policies; overrides `policies`.
        #[arg(long, value_delimiter = ',')]
        policies: Option<Vec<PolicyKind>>,
        /// Directory for rows.csv, summary.csv and wins.csv; overrides `output_dir`.
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Keep every episode log under `<out>/logs`.
        #[arg(long)]
        keep_logs: bool,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Run(#[from] RunError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Log { path: PathBuf, source: LogError },
    #[error("{path}: {source}")]
    Eval { path: PathBuf, source: EvalError },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("no episode logs found")]
    NoLogs,
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Run(e) => e.exit_code() as u8,
            CliError::World(_) => 3,
            _ => 4,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn load_config(args: &ConfigArgs) -> Result<RunConfig, CliError> {
    let text = match &args.config {
        Some(p) => std::fs::read_to_string(p).map_err(io_err(p))?,
        None => String::new(),
    };
    let cfg = RunConfig::from_toml_with_overrides(&text, &args.overrides).map_err(RunError::from)?;
    cfg.validate().map_err(RunError::from)?;
    Ok(cfg)
}

fn csv_file<F>(path: &Path, write: F) -> Result<(), CliError>
where
    F: FnOnce(BufWriter<File>) -> Result<(), csv::Error>,
{
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let f = File::create(path).map_err(io_err(path))?;
    write(BufWriter::new(f)).map_err(|source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

/// Expands directories to their `*.jsonl` files, sorted by name.
fn collect_logs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(io_err(p))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "jsonl"))
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    if out.is_empty() {
        return Err(CliError::NoLogs);
    }
    Ok(out)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.3}"))
}

fn gen_world(cfg: &RunConfig, seed: u64, out: Option<&Path>) -> Result<(), CliError> {
    let world = generate_world(&cfg.world, seed)?;
    let text = write_world(&world);
    match out {
        Some(p) => {
            std::fs::write(p, text).map_err(io_err(p))?;
            eprintln!(
                "wrote {} ({}x{}, {} objects)",
                p.display(),
                world.map.width(),
                world.map.height(),
                world.objects.len()
            );
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cfg: &RunConfig, out: &Path, timing: Option<&Path>) -> Result<(), CliError> {
    let entries = run_batch(cfg, out)?;
    for e in &entries {
        let r = &e.report;
        println!(
            "{}  steps {:>3}  objects {:>2}  mean_cs {}  coverage {:.3}",
            e.path.display(),
            r.steps,
            r.objects,
            fmt_opt(r.mean_cs),
            r.coverage
        );
    }
    if let Some(t) = timing {
        csv_file(t, |w| write_timing_csv(&entries, w))?;
    }
    Ok(())
}

fn eval(inputs: &[PathBuf], report: &Path, series: Option<&Path>) -> Result<(), CliError> {
    let paths = collect_logs(inputs)?;
    let mut logs = Vec::with_capacity(paths.len());
    let mut rows = Vec::with_capacity(paths.len());
    for p in &paths {
        let log = EpisodeLog::read_path(p).map_err(|source| CliError::Log { path: p.clone(), source })?;
        let r = evaluate_log(&log).map_err(|source| CliError::Eval { path: p.clone(), source })?;
        println!(
            "{}  acc {}  mean_cs {}  disagreement {}  attr_f1 {}",
            p.display(),
            fmt_opt(r.accuracy),
            fmt_opt(r.mean_cs),
            fmt_opt(r.mean_disagreement),
            fmt_opt(r.pseudo_attr_f1)
        );
        rows.push(r);
        logs.push(log);
    }
    csv_file(report, |w| write_report_csv(&rows, w))?;
    if let Some(s) = series {
        csv_file(s, |w| write_series_csv(&logs, w))?;
    }
    Ok(())
}

fn compare(cfg: &RunConfig, policies: &[PolicyKind], out: &Path, keep_logs: bool) -> Result<(), CliError> {
    let log_dir = out.join("logs");
    let c = compare_policies(cfg, policies, keep_logs.then_some(log_dir.as_path()))?;
    let rows: Vec<_> = c.rows.iter().flatten().cloned().collect();
    csv_file(&out.join("rows.csv"), |w| write_report_csv(&rows, w))?;
    csv_file(&out.join("summary.csv"), |w| write_csv(&c.summary, w))?;
    csv_file(&out.join("wins.csv"), |w| write_csv(&c.wins, w))?;
    for s in &c.summary {
        println!(
            "{:<12} median mean_cs {}  disagreement {}  coverage {}",
            s.policy.name(),
            fmt_opt(s.median_mean_cs),
            fmt_opt(s.median_mean_disagreement),
            fmt_opt(s.median_coverage)
        );
    }
    for w in c.wins.iter().filter(|w| w.slot == 0) {
        println!(
            "{} vs {} on {}: {} wins, {} losses, {} ties",
            w.policy.name(),
            w.opponent.name(),
            w.metric,
            w.wins,
            w.losses,
            w.ties
        );
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::GenWorld { cfg, seed, out } => gen_world(&load_config(&cfg)?, seed, out.as_deref()),
        Command::Run { cfg, out, timing } => {
            let cfg = load_config(&cfg)?;
            let out = out.unwrap_or_else(|| cfg.output_dir.clone());
            run(&cfg, &out, timing.as_deref())
        }
        Command::Eval { logs, report, series } => eval(&logs, &report, series.as_deref()),
        Command::ComparePolicies {
            cfg,
            policies,
            out,
            keep_logs,
        } => {
            let cfg = load_config(&cfg)?;
            let policies = policies.unwrap_or_else(|| cfg.policies.clone());
            let out = out.unwrap_or_else(|| cfg.output_dir.clone());
            compare(&cfg, &policies, &out, keep_logs)
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn argument_definitions_are_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn policies_parse_from_a_list() {
        let cli = Cli::try_parse_from(["objmem", "compare-policies", "--policies", "random,frontier"]).unwrap();
        let Command::ComparePolicies { policies, .. } = cli.command else {
            panic!("wrong subcommand");
        };
        assert_eq!(policies, Some(vec![PolicyKind::Random, PolicyKind::Frontier]));
        assert!(Cli::try_parse_from(["objmem", "compare-policies", "--policies", "greedy"]).is_err());
    }

    #[test]
    fn directories_expand_to_sorted_logs() {
        let d = tempfile::tempdir().unwrap();
        for name in ["b.jsonl", "a.jsonl", "notes.txt"] {
            std::fs::write(d.path().join(name), "").unwrap();
        }
        let got = collect_logs(&[d.path().to_path_buf()]).unwrap();
        let names: Vec<_> = got.iter().map(|p| p.file_name().unwrap().to_str().unwrap()).collect();
        assert_eq!(names, ["a.jsonl", "b.jsonl"]);
        let empty = tempfile::tempdir().unwrap();
        assert!(matches!(collect_logs(&[empty.path().to_path_buf()]), Err(CliError::NoLogs)));
    }
}
