//! Program spectrum: code-element registry, test outcomes and the binary
//! coverage relation between them.
//!
//! Coverage is stored twice: per test as a sorted list of element indices,
//! and per element as a block bitset over test indices. The first serves
//! test selection and batch metric counting, the second answers
//! single-element metric queries with a couple of popcounts.

mod bitset;
mod selection;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bitset::BlockBitSet;
pub use selection::TestSelection;

/// Opaque handle of a code element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ElementId(pub u64);

/// Opaque handle of a test case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TestId(pub u64);

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for TestId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Granularity of a code element, ordered from finest to coarsest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ElementKind {
    Statement,
    Method,
    Class,
    File,
    Package,
}

impl ElementKind {
    pub const ALL: [ElementKind; 5] = [
        ElementKind::Statement,
        ElementKind::Method,
        ElementKind::Class,
        ElementKind::File,
        ElementKind::Package,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ElementKind::Statement => "STATEMENT",
            ElementKind::Method => "METHOD",
            ElementKind::Class => "CLASS",
            ElementKind::File => "FILE",
            ElementKind::Package => "PACKAGE",
        }
    }

    /// Case-insensitive inverse of [`ElementKind::as_str`].
    pub fn parse(text: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|kind| kind.as_str().eq_ignore_ascii_case(text.trim()))
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Location {
    pub path: String,
    pub start_line: u32,
    pub end_line: u32,
}

impl Location {
    pub fn new(path: impl Into<String>, start_line: u32, end_line: u32) -> Self {
        Self {
            path: path.into(),
            start_line,
            end_line,
        }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.start_line == self.end_line {
            write!(f, "{}:{}", self.path, self.start_line)
        } else {
            write!(f, "{}:{}-{}", self.path, self.start_line, self.end_line)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeElement {
    pub id: ElementId,
    pub name: String,
    pub kind: ElementKind,
    pub location: Location,
    pub parent: Option<ElementId>,
}

impl CodeElement {
    pub fn new(id: u64, name: impl Into<String>, kind: ElementKind, location: Location, parent: Option<u64>) -> Self {
        Self {
            id: ElementId(id),
            name: name.into(),
            kind,
            location,
            parent: parent.map(ElementId),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Outcome {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    pub id: TestId,
    pub name: String,
    pub outcome: Outcome,
}

impl TestCase {
    pub fn new(id: u64, name: impl Into<String>, outcome: Outcome) -> Self {
        Self {
            id: TestId(id),
            name: name.into(),
            outcome,
        }
    }

    pub fn failed(&self) -> bool {
        self.outcome == Outcome::Fail
    }
}

/// The four spectrum counts of one element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct BasicMetrics {
    /// executed by a failing test
    pub ef: u64,
    /// executed by a passing test
    pub ep: u64,
    /// not executed by a failing test
    pub nf: u64,
    /// not executed by a passing test
    pub np: u64,
}

impl BasicMetrics {
    pub fn new(ef: u64, ep: u64, nf: u64, np: u64) -> Self {
        Self { ef, ep, nf, np }
    }

    pub fn failed_total(&self) -> u64 {
        self.ef + self.nf
    }

    pub fn passed_total(&self) -> u64 {
        self.ep + self.np
    }

    pub fn executed(&self) -> u64 {
        self.ef + self.ep
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpectrumError {
    #[error("duplicate element id {0}")]
    DuplicateElementId(ElementId),
    #[error("duplicate test id {0}")]
    DuplicateTestId(TestId),
    #[error("coverage pair (test {test}, element {element}) references an unregistered id")]
    DanglingReference { test: TestId, element: ElementId },
    #[error("invalid hierarchy at element {element}: {reason}")]
    InvalidHierarchy { element: ElementId, reason: String },
    #[error("unknown element {0}")]
    UnknownElement(ElementId),
}

/// An immutable, validated program spectrum.
#[derive(Debug, Clone)]
pub struct Spectrum {
    elements: Vec<CodeElement>,
    element_index: HashMap<ElementId, usize>,
    tests: Vec<TestCase>,
    test_index: HashMap<TestId, usize>,
    children: Vec<Vec<usize>>,
    /// per test: ascending element indices
    per_test: Vec<Vec<usize>>,
    /// per element: covering test indices
    per_element: Vec<BlockBitSet>,
    failing: BlockBitSet,
    failed: u64,
}

impl Spectrum {
    /// Validates the inputs and builds both coverage directions.
    ///
    /// Duplicate coverage pairs collapse into one; the relation is binary.
    pub fn build(
        elements: Vec<CodeElement>,
        tests: Vec<TestCase>,
        coverage: impl IntoIterator<Item = (TestId, ElementId)>,
    ) -> Result<Self, SpectrumError> {
        let mut element_index = HashMap::with_capacity(elements.len());
        for (idx, element) in elements.iter().enumerate() {
            if element_index.insert(element.id, idx).is_some() {
                return Err(SpectrumError::DuplicateElementId(element.id));
            }
        }
        let mut test_index = HashMap::with_capacity(tests.len());
        for (idx, test) in tests.iter().enumerate() {
            if test_index.insert(test.id, idx).is_some() {
                return Err(SpectrumError::DuplicateTestId(test.id));
            }
        }

        // A parent must be strictly coarser, so parent chains cannot cycle.
        let mut children = vec![Vec::new(); elements.len()];
        for (idx, element) in elements.iter().enumerate() {
            let Some(parent_id) = element.parent else {
                continue;
            };
            let Some(&parent_idx) = element_index.get(&parent_id) else {
                return Err(SpectrumError::InvalidHierarchy {
                    element: element.id,
                    reason: format!("parent {parent_id} is not registered"),
                });
            };
            let parent = &elements[parent_idx];
            if parent.kind <= element.kind {
                return Err(SpectrumError::InvalidHierarchy {
                    element: element.id,
                    reason: format!(
                        "parent {} has kind {}, which is not coarser than {}",
                        parent.id, parent.kind, element.kind
                    ),
                });
            }
            children[parent_idx].push(idx);
        }

        let test_count = tests.len();
        let mut per_test = vec![Vec::new(); test_count];
        let mut per_element = vec![BlockBitSet::new(test_count); elements.len()];
        for (test, element) in coverage {
            let (Some(&t), Some(&e)) = (test_index.get(&test), element_index.get(&element)) else {
                return Err(SpectrumError::DanglingReference { test, element });
            };
            per_test[t].push(e);
            per_element[e].insert(t);
        }
        for row in &mut per_test {
            row.sort_unstable();
            row.dedup();
        }

        let mut failing = BlockBitSet::new(test_count);
        for (idx, test) in tests.iter().enumerate() {
            if test.failed() {
                failing.insert(idx);
            }
        }
        let failed = failing.count_ones() as u64;

        Ok(Self {
            elements,
            element_index,
            tests,
            test_index,
            children,
            per_test,
            per_element,
            failing,
            failed,
        })
    }

    pub fn elements(&self) -> &[CodeElement] {
        &self.elements
    }

    pub fn tests(&self) -> &[TestCase] {
        &self.tests
    }

    pub fn element(&self, id: ElementId) -> Option<&CodeElement> {
        self.element_index.get(&id).map(|&idx| &self.elements[idx])
    }

    pub fn test(&self, id: TestId) -> Option<&TestCase> {
        self.test_index.get(&id).map(|&idx| &self.tests[idx])
    }

    pub fn contains_element(&self, id: ElementId) -> bool {
        self.element_index.contains_key(&id)
    }

    /// Position of the element in registration order.
    pub fn element_position(&self, id: ElementId) -> Option<usize> {
        self.element_index.get(&id).copied()
    }

    /// F: number of failing tests.
    pub fn failed_count(&self) -> u64 {
        self.failed
    }

    /// P: number of passing tests.
    pub fn passed_count(&self) -> u64 {
        self.tests.len() as u64 - self.failed
    }

    pub fn test_count(&self) -> usize {
        self.tests.len()
    }

    pub fn coverage_len(&self) -> usize {
        self.per_test.iter().map(Vec::len).sum()
    }

    /// Elements executed by a test, in registration order.
    pub fn covered_by(&self, test: TestId) -> impl Iterator<Item = ElementId> + '_ {
        let row = self
            .test_index
            .get(&test)
            .map(|&t| self.per_test[t].as_slice())
            .unwrap_or_default();
        row.iter().map(|&e| self.elements[e].id)
    }

    /// Tests executing an element, in registration order.
    pub fn covering_tests(&self, element: ElementId) -> Result<Vec<TestId>, SpectrumError> {
        let idx = self.require(element)?;
        Ok(self.per_element[idx].iter().map(|t| self.tests[t].id).collect())
    }

    /// All (test, element) pairs, grouped by test in registration order.
    pub fn coverage_pairs(&self) -> impl Iterator<Item = (TestId, ElementId)> + '_ {
        self.per_test.iter().enumerate().flat_map(move |(t, row)| {
            let test = self.tests[t].id;
            row.iter().map(move |&e| (test, self.elements[e].id))
        })
    }

    pub fn basic_metrics(&self, element: ElementId) -> Result<BasicMetrics, SpectrumError> {
        let idx = self.require(element)?;
        Ok(self.metrics_at(idx))
    }

    pub(crate) fn metrics_at(&self, idx: usize) -> BasicMetrics {
        let covering = &self.per_element[idx];
        let ef = covering.intersection_count(&self.failing) as u64;
        let ep = covering.count_ones() as u64 - ef;
        self.complete(ef, ep)
    }

    fn complete(&self, ef: u64, ep: u64) -> BasicMetrics {
        BasicMetrics {
            ef,
            ep,
            nf: self.failed - ef,
            np: self.passed_count() - ep,
        }
    }

    /// Metrics of every element, indexed by registration position.
    ///
    /// Counts in one pass over the per-test rows.
    pub fn metrics_by_position(&self) -> Vec<BasicMetrics> {
        let mut executed = vec![(0u64, 0u64); self.elements.len()];
        for (test, row) in self.tests.iter().zip(&self.per_test) {
            let failed = test.failed();
            for &e in row {
                if failed {
                    executed[e].0 += 1;
                } else {
                    executed[e].1 += 1;
                }
            }
        }
        executed.into_iter().map(|(ef, ep)| self.complete(ef, ep)).collect()
    }

    pub fn all_metrics(&self) -> HashMap<ElementId, BasicMetrics> {
        self.elements
            .iter()
            .map(|element| element.id)
            .zip(self.metrics_by_position())
            .collect()
    }

    pub fn children(&self, element: ElementId) -> Result<Vec<ElementId>, SpectrumError> {
        let idx = self.require(element)?;
        Ok(self.children[idx].iter().map(|&c| self.elements[c].id).collect())
    }

    /// Elements of `kind` in the subtree rooted at `element`, the root
    /// included, in ascending id order.
    pub fn descendants(&self, element: ElementId, kind: ElementKind) -> Result<Vec<ElementId>, SpectrumError> {
        let root = self.require(element)?;
        let mut found = Vec::new();
        let mut stack = vec![root];
        while let Some(idx) = stack.pop() {
            let current = &self.elements[idx];
            if current.kind == kind {
                found.push(current.id);
            }
            // nothing finer than `kind` can contain a `kind` element
            if current.kind > kind {
                stack.extend(&self.children[idx]);
            }
        }
        found.sort_unstable();
        Ok(found)
    }

    pub fn elements_of_kind(&self, kind: ElementKind) -> impl Iterator<Item = &CodeElement> + '_ {
        self.elements.iter().filter(move |element| element.kind == kind)
    }

    /// Finest kind among elements that appear in the coverage relation.
    pub fn finest_covered_kind(&self) -> Option<ElementKind> {
        self.per_element
            .iter()
            .zip(&self.elements)
            .filter(|(covering, _)| covering.count_ones() > 0)
            .map(|(_, element)| element.kind)
            .min()
    }

    fn require(&self, element: ElementId) -> Result<usize, SpectrumError> {
        self.element_index
            .get(&element)
            .copied()
            .ok_or(SpectrumError::UnknownElement(element))
    }

    pub(crate) fn per_test_rows(&self) -> &[Vec<usize>] {
        &self.per_test
    }
}
