mod commands;
mod failure;
mod generators;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nilreduce::certify::DEFAULT_BUDGET;
use nilreduce::report::{to_canonical_json, with_config};
use nilreduce::{Mode, Target};
use serde_json::{json, Value};

use commands::{read_json, system_text, Report, Settings, SimulateArgs};
use failure::Failure;

/// Reduction certificates for polynomial sequences in unipotent groups,
/// plus the ergodic and Hahn-Banach labs.
#[derive(Parser)]
#[command(name = "nilreduce", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// strict keeps sequences as they are; cheating also drops constant right factors.
    #[arg(long, global = true, value_enum)]
    mode: Option<ModeArg>,
    /// trivial ends at (1_G); single ends at one sequence using complete steps.
    #[arg(long, global = true, value_enum)]
    target: Option<TargetArg>,
    /// Step budget for certify, search cap for simulate.
    #[arg(long, global = true)]
    budget: Option<usize>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Generator file (matrices, or a permutation space for simulate).
    #[arg(long, global = true)]
    generators: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// One m-reduction step followed by normalization. SYSTEM is the text or @file.
    Reduce {
        system: String,
        /// Fresh parameter index (default: one past the largest in SYSTEM).
        #[arg(long)]
        param: Option<u32>,
    },
    /// One complete m-reduction step followed by normalization.
    CompleteReduce {
        system: String,
        #[arg(long)]
        param: Option<u32>,
    },
    /// Search for a reduction certificate and print the trace.
    Certify { system: String },
    /// Replay and check a trace written by certify.
    VerifyTrace {
        report: PathBuf,
        /// Override the system recorded in the report.
        #[arg(long)]
        system: Option<String>,
    },
    /// Three-part decomposition of a vector against a family of atomic norms.
    Decompose { experiment: PathBuf },
    /// Oscillation of multiple ergodic averages on a finite space.
    Simulate {
        system: String,
        /// `{"functions": [[...], ...]}`, one value list per word.
        #[arg(long)]
        functions: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        from: u64,
        #[arg(long, default_value_t = 10_000)]
        to: u64,
    },
    /// Run the golden checks and golden traces.
    VerifyAppendix,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Strict,
    Cheating,
}

#[derive(Clone, Copy, ValueEnum)]
enum TargetArg {
    Trivial,
    Single,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Text,
    Csv,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", to_canonical_json(&f.document()));
            ExitCode::from(f.exit_code())
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if cli.format == Format::Csv && !matches!(cli.command, Command::Simulate { .. }) {
        return Err(Failure::Input("csv output is only available for simulate".into()));
    }
    let generators = cli.generators.as_deref().map(read_json).transpose()?;
    let settings = Settings {
        mode: match cli.mode {
            Some(ModeArg::Cheating) => Mode::Cheating,
            _ => Mode::Strict,
        },
        target: match cli.target {
            Some(TargetArg::Single) => Target::Single,
            _ => Target::Trivial,
        },
        budget: cli.budget.unwrap_or(match cli.command {
            Command::Simulate { .. } => 1 << 20,
            _ => DEFAULT_BUDGET,
        }),
        epsilon: cli.epsilon,
        generators,
    };
    let mut config = json!({
        "command": command_name(&cli.command),
        "version": env!("CARGO_PKG_VERSION"),
        "mode": settings.mode,
        "target": settings.target,
        "budget": settings.budget,
        "epsilon": settings.epsilon,
        "generators": settings.generators.clone().unwrap_or_else(|| json!("abelian")),
    });
    let unused: &[&str] = match cli.command {
        Command::Decompose { .. } | Command::VerifyAppendix => &["generators", "mode", "target", "budget"],
        Command::Simulate { .. } => &["mode", "target"],
        _ => &[],
    };
    for key in unused {
        config.as_object_mut().expect("object").remove(*key);
    }
    let report = match &cli.command {
        Command::Reduce { system, param } | Command::CompleteReduce { system, param } => {
            let text = system_text(system)?;
            config["system"] = json!(text);
            config["param"] = json!(param);
            let complete = matches!(cli.command, Command::CompleteReduce { .. });
            commands::reduce(&text, *param, complete, &settings)?
        }
        Command::Certify { system } => {
            let text = system_text(system)?;
            config["system"] = json!(text);
            commands::certify(&text, &settings)?
        }
        Command::VerifyTrace { report, system } => {
            let text = system.as_deref().map(system_text).transpose()?;
            config["report"] = json!(report.display().to_string());
            let r = commands::verify_trace_file(
                report,
                text.as_deref(),
                &settings,
                cli.mode.is_some(),
                cli.target.is_some(),
            )?;
            config["system"] = r.result["system"].clone();
            config["mode"] = r.result["mode"].clone();
            config["target"] = r.result["target"].clone();
            r
        }
        Command::Decompose { experiment } => {
            let exp = read_json(experiment)?;
            config["experiment"] = exp.clone();
            commands::decompose_file(&exp, &settings)?
        }
        Command::Simulate { system, functions, from, to } => {
            let text = system_text(system)?;
            let functions = functions.as_deref().map(read_json).transpose()?;
            config["system"] = json!(text);
            config["from"] = json!(from);
            config["to"] = json!(to);
            config["functions"] = functions.clone().unwrap_or_else(|| json!("indicator of 0"));
            let args = SimulateArgs { system: &text, functions, from: *from, to: *to };
            commands::simulate(&args, &settings)?
        }
        Command::VerifyAppendix => commands::verify_appendix()?,
    };
    emit(cli, config, report)
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Reduce { .. } => "reduce",
        Command::CompleteReduce { .. } => "complete-reduce",
        Command::Certify { .. } => "certify",
        Command::VerifyTrace { .. } => "verify-trace",
        Command::Decompose { .. } => "decompose",
        Command::Simulate { .. } => "simulate",
        Command::VerifyAppendix => "verify-appendix",
    }
}

fn emit(cli: &Cli, config: Value, report: Report) -> Result<(), Failure> {
    let body = match cli.format {
        Format::Json => to_canonical_json(&with_config(config, report.result)) + "\n",
        Format::Text => report.text,
        Format::Csv => report
            .csv
            .ok_or_else(|| Failure::Input("this command has no csv output".into()))?,
    };
    match &cli.out {
        None => std::io::stdout()
            .write_all(body.as_bytes())
            .map_err(|e| Failure::Io(e.to_string())),
        Some(path) => write_atomically(path, body.as_bytes()),
    }
}

/// Writes next to the destination and renames, so a failed run never
/// leaves a partial file behind.
fn write_atomically(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::Io(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}
