//! The `idcc` command line.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::cfg::{build_cfg, graph_to_dot};
use crate::config::{Bounds, CheckConfig};
use crate::engine::{check_revision, harness_adequacy, render_report_text, report_to_json, HarnessStatus, Status};
use crate::instrument::instrument;
use crate::lang::{emit_source, merge_programs, parse_program, Program};
use crate::spec::{load_spec, spec_to_dot, DependencySpec};
use crate::workflow::{check_history, load_history, load_history_list};

pub const EXIT_CORRECT: i32 = 0;
pub const EXIT_INCORRECT: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_ERROR: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "idcc", version, about = "Checks HAL call-order dependencies on C-subset programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Args)]
struct CheckArgs {
    /// Dependency specification (`.tdep`).
    #[arg(long)]
    spec: PathBuf,
    /// HAL model program merged into the checked program.
    #[arg(long)]
    hal: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long, default_value_t = 3)]
    loop_bound: u32,
    #[arg(long, default_value_t = 10_000)]
    max_steps: u64,
    #[arg(long, default_value_t = 1_000_000)]
    max_paths: u64,
    /// Exploration timeout in seconds.
    #[arg(long, env = "IDCC_TIMEOUT", default_value_t = 60)]
    timeout: u64,
    #[arg(long, default_value_t = 8)]
    inline_depth: usize,
}

impl CheckArgs {
    fn config(&self) -> CheckConfig {
        CheckConfig {
            bounds: Bounds {
                loop_bound: self.loop_bound,
                max_steps: self.max_steps,
                max_paths: self.max_paths,
                timeout: Duration::from_secs(self.timeout),
            },
            inline_depth: self.inline_depth,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check one program revision.
    Check {
        file: PathBuf,
        #[command(flatten)]
        args: CheckArgs,
        /// Also write the control-flow graph of `main` as DOT.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Check every revision of a history directory, in file-name order.
    History {
        #[arg(required_unless_present = "from_list")]
        dir: Option<PathBuf>,
        /// Manifest listing revision files, one per line.
        #[arg(long, conflicts_with = "dir")]
        from_list: Option<PathBuf>,
        #[command(flatten)]
        args: CheckArgs,
    },
    /// Print the program with the dependency assertions inserted.
    Instrument {
        file: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        hal: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Report which spec-function call sites the exploration reaches.
    Reach {
        file: PathBuf,
        #[command(flatten)]
        args: CheckArgs,
    },
    /// Print the specification as a DOT graph.
    Graph {
        #[arg(long)]
        spec: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn write_file(path: &Path, text: &str) -> Result<(), String> {
    std::fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn spec(path: &Path) -> Result<DependencySpec, String> {
    load_spec(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn program(path: &Path) -> Result<Program, String> {
    let origin = path.display().to_string();
    parse_program(&read(path)?, &origin).map_err(|e| format!("{origin}: {e}"))
}

fn hal(path: Option<&PathBuf>) -> Result<Option<Program>, String> {
    path.map(|p| program(p)).transpose()
}

fn exit_code(status: Status) -> i32 {
    match status {
        Status::Correct => EXIT_CORRECT,
        Status::Incorrect => EXIT_INCORRECT,
        Status::Unknown => EXIT_UNKNOWN,
    }
}

fn json_text(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn execute(cmd: Command, out: &mut dyn Write) -> Result<i32, String> {
    let io = |e: std::io::Error| format!("cannot write output: {e}");
    match cmd {
        Command::Check { file, args, dot } => {
            let (p, s, h) = (program(&file)?, spec(&args.spec)?, hal(args.hal.as_ref())?);
            let config = args.config();
            let report = check_revision(&p, &s, h.as_ref(), &config).map_err(|e| format!("{}: {e}", file.display()))?;
            if let Some(dot) = dot {
                let merged = match &h {
                    Some(h) => merge_programs(&p, h).map_err(|e| e.to_string())?,
                    None => p.clone(),
                };
                let cfg = build_cfg(&merged, &config.cfg_config()).map_err(|e| e.to_string())?;
                write_file(&dot, &graph_to_dot(&cfg.main))?;
            }
            let text = match args.format {
                Format::Text => render_report_text(&report),
                Format::Json => json_text(&report_to_json(&report)),
            };
            out.write_all(text.as_bytes()).map_err(io)?;
            Ok(exit_code(report.status))
        }
        Command::History { dir, from_list, args } => {
            let history = match (&dir, &from_list) {
                (_, Some(list)) => load_history_list(list),
                (Some(dir), None) => load_history(dir),
                (None, None) => unreachable!("clap requires a directory or a manifest"),
            }
            .map_err(|e| e.to_string())?;
            let (s, h) = (spec(&args.spec)?, hal(args.hal.as_ref())?);
            let report = check_history(&history, &s, h.as_ref(), &args.config());
            let text = match args.format {
                Format::Text => report.render_table(),
                Format::Json => json_text(&report.to_json()),
            };
            out.write_all(text.as_bytes()).map_err(io)?;
            Ok(exit_code(report.status()))
        }
        Command::Instrument { file, spec: spec_path, hal: hal_path, output } => {
            let (mut p, s) = (program(&file)?, spec(&spec_path)?);
            if let Some(h) = hal(hal_path.as_ref())? {
                p = merge_programs(&p, &h).map_err(|e| e.to_string())?;
            }
            let text = emit_source(&instrument(&p, &s).map_err(|e| format!("{}: {e}", file.display()))?);
            match output {
                Some(path) => write_file(&path, &text)?,
                None => out.write_all(text.as_bytes()).map_err(io)?,
            }
            Ok(EXIT_CORRECT)
        }
        Command::Reach { file, args } => {
            let (p, s, h) = (program(&file)?, spec(&args.spec)?, hal(args.hal.as_ref())?);
            let entries =
                harness_adequacy(&p, &s, h.as_ref(), &args.config()).map_err(|e| format!("{}: {e}", file.display()))?;
            let text = match args.format {
                Format::Json => json_text(&serde_json::to_value(&entries).expect("harness entries serialize")),
                Format::Text => {
                    let mut t = String::new();
                    for e in &entries {
                        let status = serde_json::to_value(e.status).expect("status serializes");
                        t.push_str(&format!("{}:{} {} {}\n", e.line, e.column, e.callee, status.as_str().unwrap_or_default()));
                        if let Some(s) = &e.suggestion {
                            t.push_str(&format!("  {s}\n"));
                        }
                    }
                    t
                }
            };
            out.write_all(text.as_bytes()).map_err(io)?;
            let all = entries.iter().all(|e| e.status == HarnessStatus::Reached);
            Ok(if all { EXIT_CORRECT } else { EXIT_UNKNOWN })
        }
        Command::Graph { spec: spec_path, output } => {
            let dot = spec_to_dot(&spec(&spec_path)?);
            match output {
                Some(path) => write_file(&path, &dot)?,
                None => out.write_all(dot.as_bytes()).map_err(io)?,
            }
            Ok(EXIT_CORRECT)
        }
    }
}

/// Runs the command line with the given arguments (including the program
/// name) and returns the exit code.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_CORRECT };
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(message) => {
            let _ = writeln!(err, "error: {message}");
            EXIT_ERROR
        }
    }
}

/// Runs with the process arguments and standard streams.
pub fn run() -> i32 {
    run_with(std::env::args_os(), &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
