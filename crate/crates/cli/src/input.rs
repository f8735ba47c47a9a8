use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, ValueEnum};

use sbfl_core::formula::FormulaError;
use sbfl_core::ingest::{load_manifest_spectrum, parse_canonical, IngestError, MergePolicy};
use sbfl_core::interactive::CallGraph;
use sbfl_core::spectrum::{ElementId, Spectrum};

#[derive(Debug)]
pub enum CliError {
    /// bad flags or flag values
    Usage(String),
    /// unreadable or invalid input files
    Input(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Input(_) => 2,
            CliError::Internal(_) => 1,
        }
    }

    /// Formula errors point at the offending character.
    pub fn formula(text: &str, err: &FormulaError) -> Self {
        let column = err.offset().saturating_sub(1);
        CliError::Input(format!("invalid formula: {err}\n  {text}\n  {}^", " ".repeat(column)))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Input(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

impl From<IngestError> for CliError {
    fn from(err: IngestError) -> Self {
        CliError::Input(err.to_string())
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Merge {
    /// a line counts as covered if any of its DA records has hits
    AnyHit,
    /// only if all of them do
    AllHit,
}

/// Where the spectrum comes from: a canonical document, or a manifest of
/// per-test LCOV files plus a JUnit report.
#[derive(Args)]
pub struct SpectrumSource {
    /// Manifest of `<test name><TAB><lcov file>` lines
    #[arg(long, value_name = "MANIFEST", requires = "tests", conflicts_with = "spectrum")]
    coverage: Option<PathBuf>,
    /// JUnit XML report
    #[arg(long, value_name = "JUNIT", requires = "coverage", conflicts_with = "spectrum")]
    tests: Option<PathBuf>,
    /// Canonical spectrum document
    #[arg(long, value_name = "FILE", required_unless_present = "coverage")]
    spectrum: Option<PathBuf>,
    /// How repeated DA records for one line combine
    #[arg(long, value_enum, default_value_t = Merge::AnyHit)]
    merge: Merge,
}

pub struct Loaded {
    pub spectrum: Arc<Spectrum>,
    pub call_graph: Option<CallGraph>,
}

impl SpectrumSource {
    /// Reads the spectrum, printing ingestion warnings to standard error.
    pub fn load(&self) -> Result<Loaded, CliError> {
        let (spectrum, call_graph, warnings) = match (&self.spectrum, &self.coverage, &self.tests) {
            (Some(path), _, _) => {
                let text =
                    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
                let parsed = parse_canonical(&text).map_err(|e| e.in_file(path))?;
                (parsed.spectrum, parsed.call_graph, parsed.warnings)
            }
            (None, Some(manifest), Some(junit)) => {
                let policy = match self.merge {
                    Merge::AnyHit => MergePolicy::AnyHit,
                    Merge::AllHit => MergePolicy::AllHit,
                };
                let assembled = load_manifest_spectrum(manifest, junit, policy)?;
                (assembled.spectrum, None, assembled.warnings)
            }
            _ => return Err(CliError::Usage("give --spectrum, or --coverage with --tests".into())),
        };
        for warning in warnings {
            eprintln!("warning: {warning}");
        }
        Ok(Loaded {
            spectrum: Arc::new(spectrum),
            call_graph,
        })
    }
}

/// Looks an element up by exact name, or by id written as `#<id>`.
pub fn find_element(spectrum: &Spectrum, query: &str) -> Result<ElementId, CliError> {
    if let Some(id) = query.strip_prefix('#').and_then(|n| n.parse::<u64>().ok()) {
        return spectrum
            .element(ElementId(id))
            .map(|e| e.id)
            .ok_or_else(|| CliError::Input(format!("no element with id {id}")));
    }
    let matches: Vec<ElementId> = spectrum
        .elements()
        .iter()
        .filter(|e| e.name == query)
        .map(|e| e.id)
        .collect();
    match matches.as_slice() {
        [one] => Ok(*one),
        [] => Err(CliError::Input(format!("no element named `{query}`"))),
        many => {
            let ids: Vec<String> = many.iter().map(|id| format!("#{id}")).collect();
            Err(CliError::Input(format!(
                "`{query}` names {} elements; pick one of {}",
                many.len(),
                ids.join(", ")
            )))
        }
    }
}
