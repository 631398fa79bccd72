//! Command-line entry points. Every failure is reported as one JSON object on
//! stderr with a nonzero exit status.

mod serve;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use retsim::analytics::{analyze, bundled_summaries, effect_sizes_from_summaries, read_summaries, write_report, AnalyticsError};
use retsim::session::{read_log, replay_with_events, write_log, MetricsRecord, SessionError};
use retsim::task::{TaskConfig, TaskError, TaskKind};
use retsim::trainee::{generate_session_with, participant_for, SkillProfile, TraineeError};

pub const CONFIG_ENV: &str = "RETINAVR_CONFIG";

#[derive(Debug, Serialize)]
pub struct CliError {
    pub error: String,
    pub message: String,
}

impl CliError {
    pub fn new(code: &str, message: impl ToString) -> Self {
        Self { error: code.to_string(), message: message.to_string() }
    }
}

impl From<SessionError> for CliError {
    fn from(e: SessionError) -> Self {
        Self::new(e.code(), e)
    }
}

impl From<AnalyticsError> for CliError {
    fn from(e: AnalyticsError) -> Self {
        Self::new(e.code(), e)
    }
}

impl From<TraineeError> for CliError {
    fn from(e: TraineeError) -> Self {
        Self::new(e.code(), e)
    }
}

impl From<TaskError> for CliError {
    fn from(e: TaskError) -> Self {
        Self::new(e.code(), e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new("Io", e)
    }
}

#[derive(Parser, Debug)]
#[command(name = "retsim", version, about = "Vitreoretinal training-task simulator")]
pub struct Cli {
    /// JSON file of task constants; overrides the RETINAVR_CONFIG variable.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ProfileArg {
    Novice,
    Expert,
    Ideal,
}

impl ProfileArg {
    fn profile(self) -> SkillProfile {
        match self {
            ProfileArg::Novice => SkillProfile::NOVICE,
            ProfileArg::Expert => SkillProfile::EXPERT,
            ProfileArg::Ideal => SkillProfile::ideal(),
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Replay a session log and write its metrics.
    Run {
        #[arg(long)]
        input: PathBuf,
        /// Expected module; rejected if the log holds another.
        #[arg(long, value_parser = parse_module)]
        module: Option<TaskKind>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay a session log and print its events as JSON lines, then the report.
    Replay {
        #[arg(long)]
        input: PathBuf,
    },
    /// Generate synthetic sessions.
    Synth {
        #[arg(long, value_enum)]
        profile: ProfileArg,
        /// A module name or `all`.
        #[arg(long, default_value = "all")]
        module: String,
        /// Seed of the first participant; further participants use seed + i.
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        participants: u64,
        #[arg(long, default_value_t = 3)]
        runs: u32,
        #[arg(long)]
        out: PathBuf,
        /// Write only `*.metrics.json`, not the session logs.
        #[arg(long)]
        metrics_only: bool,
    },
    /// Effect sizes, mixed models and heatmaps over a directory of sessions.
    Analyze {
        /// Directory of `*.metrics.json` and/or `*.session.jsonl` files.
        #[arg(long)]
        metrics: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Novice-versus-expert effect sizes from group summary statistics.
    EffectSizes {
        /// CSV of group summaries; the bundled reference cohort when omitted.
        #[arg(long)]
        summaries: Option<PathBuf>,
        /// Include the per-run rows as well as the pooled ones.
        #[arg(long)]
        all_runs: bool,
        #[arg(long)]
        json: bool,
    },
    /// Serve live sessions over WebSocket at /ws.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: String,
        /// Directory for the logs of live sessions.
        #[arg(long, default_value = "sessions")]
        log_dir: PathBuf,
    },
}

fn parse_module(s: &str) -> Result<TaskKind, String> {
    TaskKind::ALL
        .into_iter()
        .find(|k| k.as_str() == s.to_ascii_lowercase())
        .ok_or_else(|| format!("unknown module '{s}' (expected navigation, tremor, peeling or laser)"))
}

/// Task constants from `--config`, else `RETINAVR_CONFIG`, else defaults.
pub fn load_config(flag: Option<&Path>) -> Result<TaskConfig, CliError> {
    let path = flag.map(Path::to_path_buf).or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
    let Some(path) = path else {
        return Ok(TaskConfig::default());
    };
    let text = fs::read_to_string(&path).map_err(|e| CliError::new("ConfigError", format!("{}: {e}", path.display())))?;
    let cfg: TaskConfig = serde_json::from_str(&text).map_err(|e| CliError::new("ConfigError", format!("{}: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("value serializes")
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, format!("{text}\n")).map_err(CliError::from),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { input, module, out } => {
            let log = read_log(&input)?;
            if let Some(m) = module {
                if m != log.header.module {
                    return Err(CliError::new(
                        "ModuleMismatch",
                        format!("log holds a {} session, not {}", log.header.module, m),
                    ));
                }
            }
            let record = MetricsRecord::from_log(&log)?;
            if !record.report.completed {
                return Err(SessionError::IncompleteSession(vec![input.display().to_string()]).into());
            }
            emit(out.as_deref(), &to_json(&record))
        }
        Command::Replay { input } => {
            let log = read_log(&input)?;
            let (report, events) = replay_with_events(&log)?;
            for e in &events {
                println!("{}", serde_json::to_string(e).expect("event serializes"));
            }
            println!("{}", serde_json::to_string(&report).expect("report serializes"));
            Ok(())
        }
        Command::Synth { profile, module, seed, participants, runs, out, metrics_only } => {
            let config = load_config(cli.config.as_deref())?;
            let modules = if module == "all" {
                TaskKind::ALL.to_vec()
            } else {
                vec![parse_module(&module).map_err(|m| CliError::new("UsageError", m))?]
            };
            let profile = profile.profile();
            fs::create_dir_all(&out)?;
            let mut written = 0usize;
            for p in 0..participants {
                let pseed = seed + p;
                for run in 1..=runs {
                    for &kind in &modules {
                        let meta = participant_for(pseed, &profile, run);
                        let stem = format!("{}_run{}_{}", meta.participant_id, run, kind.as_str());
                        let log = generate_session_with(kind, &profile, pseed, meta, &config)?;
                        if !metrics_only {
                            write_log(out.join(format!("{stem}.session.jsonl")), &log)?;
                        }
                        let record = MetricsRecord::from_log(&log)?;
                        fs::write(out.join(format!("{stem}.metrics.json")), to_json(&record))?;
                        written += 1;
                    }
                }
            }
            println!("{}", serde_json::json!({ "sessions": written, "out": out }));
            Ok(())
        }
        Command::Analyze { metrics, report } => {
            let config = load_config(cli.config.as_deref())?;
            let records = collect_records(&metrics)?;
            if records.is_empty() {
                return Err(CliError::new("EmptyInput", format!("no sessions under {}", metrics.display())));
            }
            let analysis = analyze(&records, &config.laser)?;
            write_report(&analysis, &report)?;
            println!(
                "{}",
                serde_json::json!({ "sessions": analysis.sessions, "effect_sizes": analysis.effect_sizes.len(), "report": report })
            );
            Ok(())
        }
        Command::EffectSizes { summaries, all_runs, json } => {
            let rows = match summaries {
                Some(p) => read_summaries(fs::File::open(&p)?)?,
                None => bundled_summaries(),
            };
            let effects: Vec<_> = effect_sizes_from_summaries(&rows)?
                .into_iter()
                .filter(|e| all_runs || e.run == "overall")
                .collect();
            if json {
                println!("{}", to_json(&effects));
            } else {
                for e in &effects {
                    println!("{:<10} {:<13} {:<7} {} {}", e.module, e.metric, e.run, e.effect, e.effect.band.as_str());
                }
            }
            Ok(())
        }
        Command::Serve { port, bind, log_dir } => {
            let config = load_config(cli.config.as_deref())?;
            serve::serve(&bind, port, config, log_dir)
        }
    }
}

/// Metrics records from `*.metrics.json` files, plus replayed `*.session.jsonl`
/// logs that have no metrics file beside them.
fn collect_records(dir: &Path) -> Result<Vec<MetricsRecord>, CliError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?.filter_map(|e| e.ok().map(|e| e.path())).collect();
    paths.sort();
    let mut records = Vec::new();
    for p in &paths {
        let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if name.ends_with(".metrics.json") {
            let text = fs::read_to_string(p)?;
            let record: MetricsRecord =
                serde_json::from_str(&text).map_err(|e| CliError::new("CorruptMetrics", format!("{name}: {e}")))?;
            records.push(record);
        } else if let Some(stem) = name.strip_suffix(".session.jsonl") {
            if !dir.join(format!("{stem}.metrics.json")).exists() {
                records.push(MetricsRecord::from_log(&read_log(p)?)?);
            }
        }
    }
    Ok(records)
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprintln!("{}", serde_json::to_string(&CliError::new("UsageError", e.to_string().trim())).unwrap());
            return 2;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", serde_json::to_string(&e).expect("error serializes"));
            1
        }
    }
}
