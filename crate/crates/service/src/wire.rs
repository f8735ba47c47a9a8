//! JSON bodies exchanged with clients.
//!
//! Field order is fixed by the struct definitions and floats are written in
//! shortest round-trip form, so equal session state serializes to equal
//! bytes.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use sbfl_core::interactive::{FeedbackAction, Session, Verdict};
use sbfl_core::ranking::{self, color_scale, Aggregator, TieBreak};
use sbfl_core::spectrum::{BasicMetrics, CodeElement, ElementId, ElementKind, TestId};

use crate::error::ServiceError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationBody {
    pub path: String,
    pub start_line: u32,
    pub end_line: u32,
}

impl From<&CodeElement> for LocationBody {
    fn from(e: &CodeElement) -> Self {
        LocationBody {
            path: e.location.path.clone(),
            start_line: e.location.start_line,
            end_line: e.location.end_line,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryBody {
    pub rank: f64,
    pub element: ElementId,
    pub name: String,
    pub kind: ElementKind,
    pub location: LocationBody,
    /// score after feedback multipliers
    pub score: f64,
    pub base_score: f64,
    pub multiplier: f64,
    pub tie_group: usize,
    /// RGB, from green (not suspicious) to red
    pub color: [u8; 3],
    pub metrics: BasicMetrics,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivationBody {
    pub from: ElementKind,
    pub aggregator: Aggregator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingBody {
    pub formula: String,
    pub definition: String,
    pub granularity: ElementKind,
    pub tiebreak: TieBreak,
    pub derivation: Option<DerivationBody>,
    pub no_failing_tests: bool,
    pub warnings: Vec<String>,
    /// element confirmed as the fault, if any
    pub concluded: Option<ElementId>,
    pub feedback_count: usize,
    /// number of ranked elements before `limit` was applied
    pub total: usize,
    pub entries: Vec<EntryBody>,
}

impl RankingBody {
    pub fn of(session: &Session, limit: Option<usize>) -> Self {
        let spectrum = session.spectrum();
        let report = session.ranking();
        let base: HashMap<ElementId, f64> = session.base_ranking().scores();
        let mut warnings = Vec::new();
        if report.no_failing_tests {
            warnings.push("spectrum has no failing tests; scores carry no fault signal".to_string());
        }
        if let Some(found) = session.concluded() {
            warnings.push(format!("session concluded: fault confirmed at element {found}"));
        }
        let entries = report
            .entries
            .iter()
            .take(limit.unwrap_or(usize::MAX))
            .map(|entry| {
                let element = spectrum.element(entry.element).expect("ranked elements are registered");
                let (r, g, b) = color_scale(entry.score);
                EntryBody {
                    rank: entry.rank,
                    element: entry.element,
                    name: element.name.clone(),
                    kind: element.kind,
                    location: element.into(),
                    score: entry.score,
                    base_score: base[&entry.element],
                    multiplier: session.multiplier(entry.element),
                    tie_group: entry.tie_group,
                    color: [r, g, b],
                    metrics: entry.metrics,
                }
            })
            .collect();
        RankingBody {
            formula: report.formula.label().to_string(),
            definition: report.formula.definition().to_string(),
            granularity: report.granularity,
            tiebreak: report.tiebreak,
            derivation: report.derivation.map(|d| DerivationBody {
                from: d.from,
                aggregator: d.aggregator,
            }),
            no_failing_tests: report.no_failing_tests,
            warnings,
            concluded: session.concluded(),
            feedback_count: session.log().len(),
            total: report.entries.len(),
            entries,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestRef {
    pub id: TestId,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementRef {
    pub element: ElementId,
    pub name: String,
    pub kind: ElementKind,
}

/// Explanation of one ranked element.
///
/// When the session ranks a coarser kind than coverage was recorded at,
/// the element's score is the maximum over its descendants, and the
/// metrics and trace describe the descendant that supplied it
/// (`derived_from`). Either way `score == base_score` and
/// `ranked_score == base_score * multiplier`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationBody {
    pub element: ElementId,
    pub name: String,
    pub kind: ElementKind,
    pub location: LocationBody,
    pub formula: String,
    pub derived_from: Option<ElementRef>,
    pub metrics: BasicMetrics,
    pub trace: String,
    pub score: f64,
    pub base_score: f64,
    pub multiplier: f64,
    pub ranked_score: f64,
    pub failing_tests: Vec<TestRef>,
    pub passing_count: u64,
}

impl ExplanationBody {
    pub fn of(session: &Session, element: ElementId) -> Result<Self, ServiceError> {
        let spectrum = session.spectrum();
        let not_ranked = || ServiceError::NotFound {
            kind: "UnknownElement",
            message: format!("element {element} is not ranked in this session"),
        };
        let ranked = session.ranking().entry(element).ok_or_else(not_ranked)?;
        let base_score = session.base_ranking().entry(element).ok_or_else(not_ranked)?.score;
        let code = spectrum.element(element).ok_or_else(not_ranked)?;

        let mut source = element;
        let mut derived_from = None;
        if let Some(derivation) = session.ranking().derivation {
            let fine = ranking::rank(spectrum, session.formula(), derivation.from, session.tiebreak())?;
            let below: std::collections::HashSet<ElementId> = spectrum
                .descendants(element, derivation.from)
                .map_err(|_| not_ranked())?
                .into_iter()
                .collect();
            // entries are ordered, so the first hit is the maximum under the tie-break
            if let Some(top) = fine.entries.iter().find(|e| below.contains(&e.element)) {
                source = top.element;
                let e = spectrum.element(source).expect("ranked elements are registered");
                derived_from = Some(ElementRef {
                    element: source,
                    name: e.name.clone(),
                    kind: e.kind,
                });
            }
        }

        let explanation = ranking::explain(spectrum, session.formula(), source)?;
        let score = if derived_from.is_none() && session.ranking().derivation.is_some() {
            // no descendants: the aggregate of nothing
            base_score
        } else {
            explanation.score
        };
        Ok(ExplanationBody {
            element,
            name: code.name.clone(),
            kind: code.kind,
            location: code.into(),
            formula: explanation.formula,
            derived_from,
            metrics: explanation.metrics,
            trace: explanation.trace,
            score,
            base_score,
            multiplier: session.multiplier(element),
            ranked_score: ranked.score,
            failing_tests: explanation
                .failing_tests
                .iter()
                .map(|&id| TestRef {
                    id,
                    name: spectrum.test(id).map(|t| t.name.clone()).unwrap_or_default(),
                })
                .collect(),
            passing_count: explanation.passing_count,
        })
    }
}

/// One node of the code hierarchy with its score at its own kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyNode {
    pub element: ElementId,
    pub name: String,
    pub kind: ElementKind,
    pub parent: Option<ElementId>,
    pub location: LocationBody,
    /// current ranked score at the session granularity, otherwise the
    /// engine score for this element's kind
    pub score: f64,
    pub color: [u8; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyBody {
    pub granularity: ElementKind,
    pub nodes: Vec<HierarchyNode>,
}

impl HierarchyBody {
    pub fn of(session: &Session) -> Result<Self, ServiceError> {
        let spectrum = session.spectrum();
        let mut scores: HashMap<ElementId, f64> = HashMap::new();
        for kind in ElementKind::ALL {
            if kind == session.granularity() || spectrum.elements_of_kind(kind).next().is_none() {
                continue;
            }
            scores.extend(ranking::rank(spectrum, session.formula(), kind, session.tiebreak())?.scores());
        }
        scores.extend(session.ranking().scores());
        let nodes = spectrum
            .elements()
            .iter()
            .map(|e| {
                let score = scores.get(&e.id).copied().unwrap_or(0.0);
                let (r, g, b) = color_scale(score);
                HierarchyNode {
                    element: e.id,
                    name: e.name.clone(),
                    kind: e.kind,
                    parent: e.parent,
                    location: e.into(),
                    score,
                    color: [r, g, b],
                }
            })
            .collect();
        Ok(HierarchyBody {
            granularity: session.granularity(),
            nodes,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateRequest {
    /// canonical spectrum document
    pub spectrum: serde_json::Value,
    pub formula: String,
    /// defaults to the finest kind coverage was recorded at
    #[serde(default)]
    pub granularity: Option<String>,
    #[serde(default)]
    pub tiebreak: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateResponse {
    pub session: String,
    pub ranking: RankingBody,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeedbackRequest {
    pub element: ElementId,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReanalyzeRequest {
    pub spectrum: serde_json::Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReanalyzeResponse {
    /// feedback dropped because its element no longer exists
    pub skipped: Vec<FeedbackAction>,
    pub ranking: RankingBody,
}

pub const EXPORT_VERSION: &str = "sbfl-session-export/1";

/// Self-contained session snapshot: enough to rebuild the session
/// elsewhere, plus the ranking it produced for verification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExportDocument {
    pub version: String,
    pub formula: String,
    pub granularity: ElementKind,
    pub tiebreak: TieBreak,
    pub seed: u64,
    pub log: Vec<FeedbackAction>,
    pub spectrum: serde_json::Value,
    pub ranking: RankingBody,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FormulaInfo {
    pub name: String,
    pub definition: String,
}
