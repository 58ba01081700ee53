//! The `omega` command: ingest, describe, solve, memory inspection, the
//! improvement pass and the benchmark suite runner.

mod bench;
mod config;
mod solve;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use omega_core::cognition::{improve_pass, load_recipes, register_recipes, Verdict};
use omega_core::memory::{Home, HomeLock};
use omega_core::sdl::{ingest_csv, parse_sdl_file, serialize_sdl, SdlError};
use omega_core::solvers::{builtin_registry, Registry};
use omega_core::task::{fingerprint, parse_task, TaskKind, TaskSpec};
use omega_core::Dataset;

pub use config::{Overrides, RunConfig, CONFIG_FILE};
pub use solve::{PlanReport, SolutionReport, REPORT_FILE};

#[derive(Debug, Parser)]
#[command(name = "omega", version, about = "Portfolio-based data-science engine")]
struct Cli {
    /// Storage root (default: $OMEGA_HOME, else ~/.omega).
    #[arg(long, global = true, value_name = "DIR")]
    home: Option<PathBuf>,
    /// Scheduling rounds per solve.
    #[arg(long, global = true)]
    rounds: Option<usize>,
    /// Minimum slice per PSM and round, in milliseconds.
    #[arg(long = "t-min-ms", global = true, value_name = "MS")]
    t_min_ms: Option<u64>,
    /// Worker threads for the ensemble.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Relative margin for success on tasks without a threshold.
    #[arg(long, global = true)]
    margin: Option<f64>,
    #[arg(long = "log-level", global = true, value_name = "LEVEL")]
    log_level: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert a CSV file to the dataset language.
    Ingest {
        csv: PathBuf,
        /// Output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a dataset's schema and fingerprint.
    Describe {
        sdl: PathBuf,
        /// Task used for the fingerprint (default: clustering).
        #[arg(long)]
        task: Option<PathBuf>,
    },
    /// Solve a task and record the outcome.
    Solve(SolveArgs),
    /// Inspect or reset memory.
    Memory {
        #[command(subcommand)]
        action: MemoryAction,
    },
    /// Run the synthesis and replay pass over the session archive.
    Improve,
    /// Run every `*.task` file in a directory and print a score table.
    Bench { suite: PathBuf },
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Dataset file (default: the task's `data` field).
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    task: PathBuf,
    /// Run a single PSM instead of the ensemble.
    #[arg(long)]
    psm: Option<String>,
    /// Zero timestamps and timings in the report.
    #[arg(long)]
    deterministic: bool,
    /// Skip the improvement pass after solving.
    #[arg(long = "no-improve")]
    no_improve: bool,
    #[arg(long = "out-dir", value_name = "DIR")]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum MemoryAction {
    /// Record counts and per-PSM success rates.
    Stats,
    /// Empty the session archive.
    ClearSession,
}

#[derive(Debug)]
pub(crate) enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => m,
        }
    }
}

pub(crate) fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

pub(crate) type CliResult<T = ()> = Result<T, CliError>;

/// Runs one command. Returns 0 on success, 1 on runtime or data errors and
/// 2 on usage errors.
pub fn run<I, T>(argv: I, env: &BTreeMap<String, String>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                2
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    match dispatch(cli, env, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            e.code()
        }
    }
}

fn dispatch(cli: Cli, env: &BTreeMap<String, String>, out: &mut dyn Write) -> CliResult {
    let out_dir = match &cli.command {
        Command::Solve(args) => args.out_dir.clone(),
        _ => None,
    };
    let flags = Overrides {
        home: cli.home,
        rounds: cli.rounds,
        t_min_ms: cli.t_min_ms,
        workers: cli.workers,
        unthresholded_margin: cli.margin,
        output_dir: out_dir,
        log_level: cli.log_level,
    };
    let cfg = RunConfig::resolve(&flags, env).map_err(CliError::Usage)?;
    let _ = env_logger::Builder::new()
        .parse_filters(&cfg.log_level)
        .target(env_logger::Target::Stderr)
        .try_init();
    log::debug!("home {}", cfg.home.display());

    match cli.command {
        Command::Ingest { csv, out: dest } => ingest(&csv, dest.as_deref(), out),
        Command::Describe { sdl, task } => describe(&sdl, task.as_deref(), out),
        Command::Solve(args) => solve::solve(&cfg, &args, out),
        Command::Memory { action } => memory(&cfg, action, out),
        Command::Improve => improve(&cfg, out),
        Command::Bench { suite } => bench::bench(&cfg, &suite, out),
    }
}

fn ingest(csv: &Path, dest: Option<&Path>, out: &mut dyn Write) -> CliResult {
    let bytes = fs::read(csv).map_err(|e| runtime(format!("{}: {e}", csv.display())))?;
    let name = csv.file_stem().and_then(|s| s.to_str()).unwrap_or("data");
    let d = ingest_csv(&bytes, &sanitize_name(name)).map_err(|e| runtime(format!("{}: {e}", csv.display())))?;
    let text = serialize_sdl(&d);
    match dest {
        Some(path) => {
            fs::write(path, &text).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
            writeln!(out, "wrote {} ({} rows, {} columns)", path.display(), d.row_count, d.columns.len()).map_err(runtime)
        }
        None => out.write_all(text.as_bytes()).map_err(runtime),
    }
}

/// Dataset names are identifiers; other characters become `_`.
fn sanitize_name(stem: &str) -> String {
    let mut s: String = stem
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect();
    if !s.starts_with(|c: char| c.is_ascii_alphabetic() || c == '_') {
        s.insert(0, '_');
    }
    s
}

pub(crate) fn read_dataset(path: &Path) -> CliResult<Dataset> {
    parse_sdl_file(path).map_err(|e| match e {
        SdlError::Io { .. } => runtime(e),
        other => runtime(format!("{}: {other}", path.display())),
    })
}

pub(crate) fn read_task(path: &Path) -> CliResult<TaskSpec> {
    let text = fs::read_to_string(path).map_err(|e| runtime(format!("cannot read `{}`: {e}", path.display())))?;
    parse_task(&text).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

const FINGERPRINT_NAMES: [&str; 7] = [
    "log10_rows",
    "log10_features",
    "frac_numeric",
    "frac_categorical",
    "frac_text",
    "target_cardinality",
    "missing_frac",
];

fn describe(sdl: &Path, task: Option<&Path>, out: &mut dyn Write) -> CliResult {
    let d = read_dataset(sdl)?;
    let task = match task {
        Some(p) => read_task(p)?,
        None => TaskSpec::new(TaskKind::Cluster, Vec::new(), 1, 0),
    };
    let mut text = String::new();
    use std::fmt::Write as _;
    let _ = writeln!(text, "dataset {}: {} rows, {} columns", d.name, d.row_count, d.columns.len());
    if !d.domain_path.is_empty() {
        let _ = writeln!(text, "domain {}", d.domain_path);
    }
    let width = d.columns.iter().map(|c| c.name.len()).max().unwrap_or(0);
    for c in &d.columns {
        let _ = write!(text, "  {:width$}  {:11}  missing {}", c.name, c.dtype.keyword(), c.missing_count());
        if let Some(cats) = c.categories() {
            let _ = write!(text, "  categories {}", cats.join(","));
        }
        if !c.labels.is_empty() {
            let _ = write!(text, "  labels {}", c.labels.join(","));
        }
        text.push('\n');
    }
    let fp = fingerprint(&d, &task).map_err(runtime)?;
    let _ = writeln!(text, "fingerprint ({}):", fp.kind);
    for (name, v) in FINGERPRINT_NAMES.iter().zip(fp.features) {
        let _ = writeln!(text, "  {name:18} {v:.4}");
    }
    out.write_all(text.as_bytes()).map_err(runtime)
}

/// Builtins plus the synthesized PSMs recorded in the home.
pub(crate) fn load_registry(home: &Home) -> CliResult<Registry> {
    let mut registry = builtin_registry();
    let path = home.registry_path();
    let recipes = load_recipes(&path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    register_recipes(&mut registry, &recipes).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    Ok(registry)
}

pub(crate) fn lock(home: &Home) -> CliResult<HomeLock> {
    home.lock().map_err(runtime)
}

fn memory(cfg: &RunConfig, action: MemoryAction, out: &mut dyn Write) -> CliResult {
    let home = Home::new(&cfg.home);
    match action {
        MemoryAction::Stats => {
            let mem = home.load_memory().map_err(runtime)?;
            let session = home.load_session().map_err(runtime)?;
            let registry = load_registry(&home)?;
            let synthesized = registry.ids().iter().filter(|id| id.starts_with("syn:")).count();
            let mut per_psm: BTreeMap<&str, (usize, usize, f64)> = BTreeMap::new();
            for r in mem.records() {
                let e = per_psm.entry(&r.psm_id).or_default();
                e.0 += 1;
                e.1 += usize::from(r.success);
                e.2 += r.score;
            }
            let mut text = format!(
                "home {}\nlong-term records {}\nsession entries {}\nsynthesized psms {}\n",
                cfg.home.display(),
                mem.len(),
                session.len(),
                synthesized
            );
            if !per_psm.is_empty() {
                text.push_str(&format!("{:28} {:>6} {:>9} {:>10}\n", "psm", "runs", "successes", "mean_score"));
                for (id, (runs, ok, total)) in per_psm {
                    text.push_str(&format!("{id:28} {runs:>6} {ok:>9} {:>10.4}\n", total / runs as f64));
                }
            }
            out.write_all(text.as_bytes()).map_err(runtime)
        }
        MemoryAction::ClearSession => {
            let _guard = lock(&home)?;
            let mut session = home.load_session().map_err(runtime)?;
            let n = session.len();
            session.clear();
            home.save_session(&session).map_err(runtime)?;
            writeln!(out, "cleared {n} session entries").map_err(runtime)
        }
    }
}

fn improve(cfg: &RunConfig, out: &mut dyn Write) -> CliResult {
    let home = Home::new(&cfg.home);
    let _guard = lock(&home)?;
    let mut registry = load_registry(&home)?;
    let session = home.load_session().map_err(runtime)?;
    run_improve(&home, &mut registry, &session, out)
}

pub(crate) fn run_improve(
    home: &Home,
    registry: &mut Registry,
    session: &omega_core::memory::SessionArchive,
    out: &mut dyn Write,
) -> CliResult {
    let report = improve_pass(registry, session, Some(&home.registry_path())).map_err(runtime)?;
    let mut text = format!(
        "improve: {} candidates tried, {} accepted, replay {} ms\n",
        report.tried(),
        report.accepted.len(),
        report.replay_ms
    );
    for c in &report.candidates {
        let verdict = match &c.verdict {
            Verdict::Accepted => "accepted".to_string(),
            Verdict::AlreadyRegistered => "already registered".to_string(),
            Verdict::TooFewTasks { replayed } => format!("too few tasks ({replayed} replayed)"),
            Verdict::MeanTooLow { mean } => format!("mean improvement too low ({mean:.4})"),
            Verdict::Regression { worst } => format!("regression on a task ({worst:.4})"),
            Verdict::TooSlow { candidate_ms, base_ms } => {
                format!("too slow ({candidate_ms:.1} ms vs {base_ms:.1} ms)")
            }
        };
        text.push_str(&format!("  {}: {verdict}", c.recipe.id()));
        if let Some(m) = c.mean_delta() {
            text.push_str(&format!(", mean delta {m:.4} over {} tasks", c.deltas.len()));
        }
        text.push('\n');
    }
    out.write_all(text.as_bytes()).map_err(runtime)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names() {
        assert_eq!(sanitize_name("iris"), "iris");
        assert_eq!(sanitize_name("my-data.v2"), "my_data_v2");
        assert_eq!(sanitize_name("2020"), "_2020");
    }
}
