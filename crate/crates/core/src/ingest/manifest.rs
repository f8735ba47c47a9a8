//! Joining per-test LCOV streams with JUnit outcomes.
//!
//! The manifest is plain text, one `<test name>\t<lcov path>` per line;
//! blank lines and lines starting with `#` are skipped. Relative LCOV paths
//! resolve against the manifest's directory. Tests are matched by exact
//! name only.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use super::lcov::{parse_lcov, LcovCoverage, MergePolicy};
use super::{junit::parse_junit, read_file, IngestError};
use crate::spectrum::{CodeElement, ElementId, ElementKind, Location, Spectrum, TestCase, TestId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub test_name: String,
    pub lcov_path: PathBuf,
}

pub fn parse_manifest(text: &str) -> Result<Vec<ManifestEntry>, IngestError> {
    let mut entries = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |reason: String| IngestError::Manifest { line: idx + 1, reason };
        let Some((name, path)) = line.split_once('\t') else {
            return Err(bad("expected `<test name><TAB><lcov path>`".into()));
        };
        if name.is_empty() || path.trim().is_empty() {
            return Err(bad("empty test name or path".into()));
        }
        if !seen.insert(name.to_string()) {
            return Err(bad(format!("test `{name}` listed twice")));
        }
        entries.push(ManifestEntry {
            test_name: name.to_string(),
            lcov_path: PathBuf::from(path.trim()),
        });
    }
    Ok(entries)
}

#[derive(Debug, Clone)]
pub struct Assembled {
    pub spectrum: Spectrum,
    pub warnings: Vec<String>,
}

/// Builds a spectrum from test outcomes and per-test coverage streams.
///
/// Every source file becomes a FILE element and every line seen in any
/// stream a STATEMENT under it. Ids are handed out in path order, each file
/// followed by its lines in ascending order, starting from 1.
pub fn assemble(tests: Vec<TestCase>, streams: Vec<(String, LcovCoverage)>) -> Result<Assembled, IngestError> {
    let mut warnings = Vec::new();
    let mut by_name: HashMap<&str, TestId> = HashMap::new();
    for test in &tests {
        if by_name.insert(test.name.as_str(), test.id).is_some() {
            return Err(IngestError::Join(format!("test name `{}` is not unique", test.name)));
        }
    }

    let mut lines_by_path: BTreeMap<&str, BTreeSet<u32>> = BTreeMap::new();
    for (_, stream) in &streams {
        for (path, lines) in &stream.files {
            lines_by_path.entry(path).or_default().extend(lines.keys());
        }
    }

    let mut elements = Vec::new();
    let mut statement_ids: HashMap<(&str, u32), ElementId> = HashMap::new();
    let mut next_id = 1u64;
    for (&path, lines) in &lines_by_path {
        let file_id = next_id;
        next_id += 1;
        let first = lines.first().copied().unwrap_or(0);
        let last = lines.last().copied().unwrap_or(0);
        elements.push(CodeElement::new(
            file_id,
            path,
            ElementKind::File,
            Location::new(path, first, last),
            None,
        ));
        for &line in lines {
            statement_ids.insert((path, line), ElementId(next_id));
            elements.push(CodeElement::new(
                next_id,
                format!("{path}:{line}"),
                ElementKind::Statement,
                Location::new(path, line, line),
                Some(file_id),
            ));
            next_id += 1;
        }
    }

    let mut coverage = Vec::new();
    let mut with_coverage = BTreeSet::new();
    for (name, stream) in &streams {
        let Some(&test) = by_name.get(name.as_str()) else {
            warnings.push(format!("coverage for `{name}` has no test result; ignored"));
            continue;
        };
        with_coverage.insert(test);
        for (path, line) in stream.covered_lines() {
            coverage.push((test, statement_ids[&(path, line)]));
        }
    }
    for test in &tests {
        if !with_coverage.contains(&test.id) {
            warnings.push(format!("test `{}` has no coverage stream", test.name));
        }
    }

    let spectrum = Spectrum::build(elements, tests, coverage)?;
    Ok(Assembled { spectrum, warnings })
}

/// Reads a manifest, the LCOV files it lists and a JUnit report.
pub fn load_manifest_spectrum(
    manifest_path: &Path,
    junit_path: &Path,
    policy: MergePolicy,
) -> Result<Assembled, IngestError> {
    let entries = parse_manifest(&read_file(manifest_path)?).map_err(|e| e.in_file(manifest_path))?;
    let tests = parse_junit(&read_file(junit_path)?).map_err(|e| e.in_file(junit_path))?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));

    let mut warnings = Vec::new();
    let mut streams = Vec::with_capacity(entries.len());
    for entry in entries {
        let path = base.join(&entry.lcov_path);
        let stream = parse_lcov(&read_file(&path)?, policy).map_err(|e| e.in_file(&path))?;
        warnings.extend(stream.warnings.iter().map(|w| format!("{}: {w}", path.display())));
        streams.push((entry.test_name, stream));
    }
    let mut assembled = assemble(tests, streams)?;
    warnings.append(&mut assembled.warnings);
    assembled.warnings = warnings;
    Ok(assembled)
}
