use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::IngestError;
use crate::interactive::CallGraph;
use crate::spectrum::{CodeElement, ElementId, ElementKind, Location, Outcome, Spectrum, TestCase, TestId};

pub const SPECTRUM_VERSION: &str = "sbfl-spectrum/1";

const KNOWN_FIELDS: [&str; 5] = ["version", "elements", "tests", "coverage", "call_graph"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementRecord {
    pub id: u64,
    pub name: String,
    pub kind: ElementKind,
    pub path: String,
    pub start_line: u32,
    pub end_line: u32,
    pub parent: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestRecord {
    pub id: u64,
    pub name: String,
    pub outcome: Outcome,
}

/// Serialized form of a spectrum. Field order here is the output key order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalDocument {
    pub version: String,
    pub elements: Vec<ElementRecord>,
    pub tests: Vec<TestRecord>,
    /// `[test id, element id]` pairs
    pub coverage: Vec<[u64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub call_graph: Option<Vec<[u64; 2]>>,
}

impl CanonicalDocument {
    pub fn from_spectrum(spectrum: &Spectrum, call_graph: Option<&CallGraph>) -> Self {
        Self {
            version: SPECTRUM_VERSION.to_string(),
            elements: spectrum
                .elements()
                .iter()
                .map(|e| ElementRecord {
                    id: e.id.0,
                    name: e.name.clone(),
                    kind: e.kind,
                    path: e.location.path.clone(),
                    start_line: e.location.start_line,
                    end_line: e.location.end_line,
                    parent: e.parent.map(|p| p.0),
                })
                .collect(),
            tests: spectrum
                .tests()
                .iter()
                .map(|t| TestRecord {
                    id: t.id.0,
                    name: t.name.clone(),
                    outcome: t.outcome,
                })
                .collect(),
            coverage: spectrum.coverage_pairs().map(|(t, e)| [t.0, e.0]).collect(),
            call_graph: call_graph.map(|g| g.edges().iter().map(|(a, b)| [a.0, b.0]).collect()),
        }
    }

    /// Validates references and builds the spectrum and call graph.
    pub fn into_parts(self) -> Result<(Spectrum, Option<CallGraph>), IngestError> {
        if self.version != SPECTRUM_VERSION {
            return Err(IngestError::VersionMismatch { found: self.version });
        }
        let elements = self
            .elements
            .into_iter()
            .map(|r| CodeElement {
                id: ElementId(r.id),
                name: r.name,
                kind: r.kind,
                location: Location::new(r.path, r.start_line, r.end_line),
                parent: r.parent.map(ElementId),
            })
            .collect();
        let tests = self
            .tests
            .into_iter()
            .map(|r| TestCase {
                id: TestId(r.id),
                name: r.name,
                outcome: r.outcome,
            })
            .collect();
        let coverage = self.coverage.into_iter().map(|[t, e]| (TestId(t), ElementId(e)));
        let spectrum = Spectrum::build(elements, tests, coverage)?;

        let call_graph = self
            .call_graph
            .map(|edges| CallGraph::new(edges.into_iter().map(|[a, b]| (ElementId(a), ElementId(b)))));
        if let Some(graph) = &call_graph {
            graph.validate(&spectrum).map_err(|err| IngestError::Schema {
                path: "call_graph".into(),
                reason: err.to_string(),
            })?;
        }
        Ok((spectrum, call_graph))
    }
}

#[derive(Debug, Clone)]
pub struct ParsedSpectrum {
    pub spectrum: Spectrum,
    pub call_graph: Option<CallGraph>,
    /// unknown top-level fields, ignored
    pub warnings: Vec<String>,
}

/// Parses a canonical spectrum document from JSON text.
pub fn parse_canonical(text: &str) -> Result<ParsedSpectrum, IngestError> {
    let value: Value = serde_json::from_str(text).map_err(|err| IngestError::Schema {
        path: "$".into(),
        reason: err.to_string(),
    })?;
    parse_canonical_value(value)
}

pub fn parse_canonical_value(value: Value) -> Result<ParsedSpectrum, IngestError> {
    let Value::Object(mut root) = value else {
        return Err(IngestError::Schema {
            path: "$".into(),
            reason: "expected an object".into(),
        });
    };
    let warnings = root
        .keys()
        .filter(|key| !KNOWN_FIELDS.contains(&key.as_str()))
        .map(|key| format!("ignoring unknown field `{key}`"))
        .collect();

    let version = match root.remove("version") {
        Some(Value::String(v)) => v,
        Some(_) => return Err(schema("version", "expected a string")),
        None => return Err(schema("version", "missing field")),
    };
    if version != SPECTRUM_VERSION {
        return Err(IngestError::VersionMismatch { found: version });
    }

    let document = CanonicalDocument {
        version,
        elements: section(&mut root, "elements")?,
        tests: section(&mut root, "tests")?,
        coverage: section(&mut root, "coverage")?,
        call_graph: match root.remove("call_graph") {
            None | Some(Value::Null) => None,
            Some(value) => Some(entries("call_graph", value)?),
        },
    };
    let (spectrum, call_graph) = document.into_parts()?;
    Ok(ParsedSpectrum {
        spectrum,
        call_graph,
        warnings,
    })
}

fn schema(path: &str, reason: impl Into<String>) -> IngestError {
    IngestError::Schema {
        path: path.to_string(),
        reason: reason.into(),
    }
}

fn section<T: DeserializeOwned>(root: &mut Map<String, Value>, name: &str) -> Result<Vec<T>, IngestError> {
    let value = root.remove(name).ok_or_else(|| schema(name, "missing field"))?;
    entries(name, value)
}

/// Deserializes array entries one at a time so errors carry an index.
fn entries<T: DeserializeOwned>(name: &str, value: Value) -> Result<Vec<T>, IngestError> {
    let Value::Array(items) = value else {
        return Err(schema(name, "expected an array"));
    };
    items
        .into_iter()
        .enumerate()
        .map(|(i, item)| serde_json::from_value(item).map_err(|err| schema(&format!("{name}[{i}]"), err.to_string())))
        .collect()
}

/// Serializes a spectrum as a canonical document. Output is deterministic:
/// elements and tests in registration order, coverage grouped by test.
pub fn export_canonical(spectrum: &Spectrum, call_graph: Option<&CallGraph>) -> String {
    let document = CanonicalDocument::from_spectrum(spectrum, call_graph);
    let mut text = serde_json::to_string_pretty(&document).expect("document is always serializable");
    text.push('\n');
    text
}
