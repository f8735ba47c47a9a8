//! Reading and writing spectra.
//!
//! * canonical spectrum document (`sbfl-spectrum/1`), lossless both ways
//! * LCOV line coverage, one stream per test
//! * JUnit XML test outcomes
//! * a tab-separated manifest pairing test names with LCOV files

mod canonical;
mod junit;
mod lcov;
mod manifest;

use std::path::PathBuf;

use thiserror::Error;

use crate::spectrum::SpectrumError;

pub use canonical::{
    export_canonical, parse_canonical, parse_canonical_value, CanonicalDocument, ElementRecord, ParsedSpectrum,
    TestRecord, SPECTRUM_VERSION,
};
pub use junit::parse_junit;
pub use lcov::{parse_lcov, LcovCoverage, MergePolicy};
pub use manifest::{assemble, load_manifest_spectrum, parse_manifest, Assembled, ManifestEntry};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("schema error at `{path}`: {reason}")]
    Schema { path: String, reason: String },
    #[error("unsupported document version `{found}`, expected `{SPECTRUM_VERSION}`")]
    VersionMismatch { found: String },
    #[error("invalid spectrum: {0}")]
    Spectrum(#[from] SpectrumError),
    #[error("malformed LCOV record on line {line}: `{content}` ({reason})")]
    MalformedRecord {
        line: usize,
        content: String,
        reason: String,
    },
    #[error("malformed JUnit document: {0}")]
    MalformedDocument(String),
    #[error("manifest line {line}: {reason}")]
    Manifest { line: usize, reason: String },
    #[error("cannot join tests and coverage: {0}")]
    Join(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<IngestError>,
    },
}

impl IngestError {
    /// Attaches the file the error came from.
    pub fn in_file(self, path: impl Into<PathBuf>) -> Self {
        IngestError::InFile {
            path: path.into(),
            source: Box::new(self),
        }
    }
}

pub(crate) fn read_file(path: &std::path::Path) -> Result<String, IngestError> {
    std::fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}
