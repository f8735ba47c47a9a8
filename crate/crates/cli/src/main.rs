//! `sbfl`: batch ranking, explanations, ingestion, Elo voting and the
//! session service.
//!
//! Exit codes: 0 success, 1 internal failure, 2 usage or input error.

mod elo;
mod input;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use input::{CliError, SpectrumSource};

#[derive(Parser)]
#[command(name = "sbfl", version, about = "Spectrum-based fault localization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rank code elements by suspiciousness
    Rank(RankArgs),
    /// Show how one element's score comes about
    Explain(ExplainArgs),
    /// Turn per-test LCOV files and a JUnit report into a canonical spectrum document
    Convert(ConvertArgs),
    /// List the builtin formulas
    Formulas,
    /// Run the local session service
    Serve(ServeArgs),
    /// Pairwise Elo voting over a list of items
    Elo(elo::EloArgs),
}

#[derive(Args)]
struct RankArgs {
    #[command(flatten)]
    source: SpectrumSource,
    #[command(flatten)]
    scoring: Scoring,
    /// Print only the first N entries
    #[arg(long, value_name = "N")]
    top: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Args)]
struct Scoring {
    /// Builtin name (TARANTULA, OCHIAI, BARINEL) or a formula over ef, ep, nf, np, F, P
    #[arg(long, default_value = "OCHIAI")]
    formula: String,
    /// STATEMENT, METHOD, CLASS, FILE or PACKAGE [default: finest covered kind]
    #[arg(long)]
    granularity: Option<String>,
    /// INPUT_ORDER, NAME_ASC, LINE_ASC or AVERAGE_RANK
    #[arg(long, default_value = "LINE_ASC")]
    tiebreak: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Canonical,
}

#[derive(Args)]
struct ExplainArgs {
    #[command(flatten)]
    source: SpectrumSource,
    #[arg(long, default_value = "OCHIAI")]
    formula: String,
    /// Element name, or `#<id>`
    #[arg(long)]
    element: String,
    #[arg(long, default_value = "LINE_ASC")]
    tiebreak: String,
}

#[derive(Args)]
struct ConvertArgs {
    #[command(flatten)]
    source: SpectrumSource,
    /// Write here instead of standard output
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, env = "SBFL_DATA_DIR", default_value = "sbfl-data")]
    data_dir: PathBuf,
    #[arg(long, default_value_t = 7878)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: std::net::IpAddr,
    /// Seed for session ids
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Rank(args) => rank(args),
        Command::Explain(args) => explain(args),
        Command::Convert(args) => convert(args),
        Command::Formulas => formulas(),
        Command::Serve(args) => serve(args),
        Command::Elo(args) => elo::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn rank(args: RankArgs) -> Result<(), CliError> {
    let loaded = args.source.load()?;
    let session = report::session(
        &loaded,
        &args.scoring.formula,
        args.scoring.granularity.as_deref(),
        &args.scoring.tiebreak,
    )?;
    if session.ranking().no_failing_tests {
        eprintln!("warning: no failing tests; scores carry no fault signal");
    }
    let text = match args.format {
        Format::Table => report::table(&session, args.top),
        Format::Canonical => report::canonical(&session, args.top)?,
    };
    write_stdout(&text)
}

fn explain(args: ExplainArgs) -> Result<(), CliError> {
    let loaded = args.source.load()?;
    let element = input::find_element(&loaded.spectrum, &args.element)?;
    let kind = loaded.spectrum.element(element).expect("found above").kind;
    let session = report::session(&loaded, &args.formula, Some(kind.as_str()), &args.tiebreak)?;
    write_stdout(&report::explanation(&session, element)?)
}

fn convert(args: ConvertArgs) -> Result<(), CliError> {
    let loaded = args.source.load()?;
    let text = sbfl_core::ingest::export_canonical(&loaded.spectrum, loaded.call_graph.as_ref());
    match args.output {
        Some(path) => std::fs::write(&path, text).map_err(|e| CliError::Internal(format!("{}: {e}", path.display()))),
        None => write_stdout(&text),
    }
}

fn formulas() -> Result<(), CliError> {
    let mut out = String::new();
    for (name, definition) in sbfl_core::formula::list_builtins() {
        out.push_str(&format!("{name:<10} {definition}\n"));
    }
    write_stdout(&out)
}

fn serve(args: ServeArgs) -> Result<(), CliError> {
    let store =
        sbfl_service::SessionStore::open(&args.data_dir, args.seed).map_err(|e| CliError::Internal(e.to_string()))?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Internal(e.to_string()))?;
    let addr = std::net::SocketAddr::new(args.host, args.port);
    let data_dir = args.data_dir.display().to_string();
    runtime
        .block_on(sbfl_service::serve(std::sync::Arc::new(store), addr, |bound| {
            eprintln!("serving sessions from {data_dir} on http://{bound}");
        }))
        .map_err(|e| CliError::Internal(format!("{addr}: {e}")))
}

fn write_stdout(text: &str) -> Result<(), CliError> {
    let mut stdout = std::io::stdout().lock();
    match stdout.write_all(text.as_bytes()).and_then(|()| stdout.flush()) {
        // a closed pipe (`sbfl rank ... | head`) is not a failure
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => other.map_err(|e| CliError::Internal(e.to_string())),
    }
}
