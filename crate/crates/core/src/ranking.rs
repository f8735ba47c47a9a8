//! Ranked suspiciousness reports.
//!
//! Scores are compared exactly; equal scores form a tie group whose
//! internal order comes from the report's [`TieBreak`]. Ranking at a kind
//! coarser than the one coverage was recorded at aggregates the fine-grained
//! scores with [`Aggregator::Max`].

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::Formula;
use crate::spectrum::{BasicMetrics, ElementId, ElementKind, Spectrum, TestId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RankingError {
    #[error("spectrum has no {0} elements")]
    NoSuchGranularity(ElementKind),
    #[error("{to} is not coarser than {from}")]
    NotCoarser { from: ElementKind, to: ElementKind },
    #[error("unknown element {0}")]
    UnknownElement(ElementId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TieBreak {
    /// element registration order
    InputOrder,
    NameAsc,
    /// source path, then start line
    #[default]
    LineAsc,
    /// registration order, every member ranked at the group's mean position
    AverageRank,
}

impl TieBreak {
    pub const ALL: [TieBreak; 4] = [
        TieBreak::InputOrder,
        TieBreak::NameAsc,
        TieBreak::LineAsc,
        TieBreak::AverageRank,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TieBreak::InputOrder => "INPUT_ORDER",
            TieBreak::NameAsc => "NAME_ASC",
            TieBreak::LineAsc => "LINE_ASC",
            TieBreak::AverageRank => "AVERAGE_RANK",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        let normalized = text.trim().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(&normalized))
    }
}

impl fmt::Display for TieBreak {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Aggregator {
    #[default]
    Max,
    Mean,
    Sum,
}

impl Aggregator {
    pub fn as_str(self) -> &'static str {
        match self {
            Aggregator::Max => "MAX",
            Aggregator::Mean => "MEAN",
            Aggregator::Sum => "SUM",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        [Aggregator::Max, Aggregator::Mean, Aggregator::Sum]
            .into_iter()
            .find(|a| a.as_str().eq_ignore_ascii_case(text.trim()))
    }

    /// Empty input aggregates to 0.
    pub fn apply(self, scores: &[f64]) -> f64 {
        if scores.is_empty() {
            return 0.0;
        }
        match self {
            Aggregator::Max => scores.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Aggregator::Sum => scores.iter().sum(),
            Aggregator::Mean => scores.iter().sum::<f64>() / scores.len() as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedEntry {
    pub element: ElementId,
    pub score: f64,
    /// 1-based; fractional only under [`TieBreak::AverageRank`]
    pub rank: f64,
    /// the element's own counts
    pub metrics: BasicMetrics,
    /// 0-based index of the score-equal group
    pub tie_group: usize,
}

/// How an aggregated report was derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Derivation {
    pub from: ElementKind,
    pub aggregator: Aggregator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedReport {
    pub entries: Vec<RankedEntry>,
    pub formula: Formula,
    pub granularity: ElementKind,
    pub tiebreak: TieBreak,
    /// F = 0: every score is 0 and the ranking carries no information
    pub no_failing_tests: bool,
    pub derivation: Option<Derivation>,
}

impl RankedReport {
    pub fn entry(&self, element: ElementId) -> Option<&RankedEntry> {
        self.entries.iter().find(|e| e.element == element)
    }

    pub fn scores(&self) -> HashMap<ElementId, f64> {
        self.entries.iter().map(|e| (e.element, e.score)).collect()
    }
}

/// Scored element awaiting ordering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scored {
    pub element: ElementId,
    pub score: f64,
    pub metrics: BasicMetrics,
}

/// Sorts scored elements into ranked entries.
///
/// A `pinned` element goes first in a group of its own regardless of score.
/// Elements missing from the spectrum sort after known ones in id order.
pub fn order_entries(
    spectrum: &Spectrum,
    mut scored: Vec<Scored>,
    tiebreak: TieBreak,
    pinned: Option<ElementId>,
) -> Vec<RankedEntry> {
    // -0.0 would otherwise sort apart from 0.0 under total_cmp
    for s in &mut scored {
        if s.score == 0.0 {
            s.score = 0.0;
        }
    }
    let position = |id: ElementId| spectrum.element_position(id).unwrap_or(usize::MAX);
    scored.sort_by(|a, b| {
        let pin = (Some(b.element) == pinned).cmp(&(Some(a.element) == pinned));
        pin.then_with(|| b.score.total_cmp(&a.score))
            .then_with(|| tie_order(spectrum, tiebreak, a.element, b.element))
            .then_with(|| position(a.element).cmp(&position(b.element)))
            .then_with(|| a.element.cmp(&b.element))
    });

    let mut entries: Vec<RankedEntry> = Vec::with_capacity(scored.len());
    for (i, s) in scored.iter().enumerate() {
        let same_group = i > 0
            && s.score == scored[i - 1].score
            && Some(s.element) != pinned
            && Some(scored[i - 1].element) != pinned;
        let tie_group = if same_group {
            entries[i - 1].tie_group
        } else {
            entries.last().map_or(0, |e| e.tie_group + 1)
        };
        entries.push(RankedEntry {
            element: s.element,
            score: s.score,
            rank: (i + 1) as f64,
            metrics: s.metrics,
            tie_group,
        });
    }

    if tiebreak == TieBreak::AverageRank {
        let mut start = 0;
        while start < entries.len() {
            let group = entries[start].tie_group;
            let end = entries[start..]
                .iter()
                .position(|e| e.tie_group != group)
                .map_or(entries.len(), |len| start + len);
            let mean = (start + 1 + end) as f64 / 2.0;
            for entry in &mut entries[start..end] {
                entry.rank = mean;
            }
            start = end;
        }
    }
    entries
}

fn tie_order(spectrum: &Spectrum, tiebreak: TieBreak, a: ElementId, b: ElementId) -> Ordering {
    let (Some(ea), Some(eb)) = (spectrum.element(a), spectrum.element(b)) else {
        return Ordering::Equal;
    };
    match tiebreak {
        TieBreak::InputOrder | TieBreak::AverageRank => Ordering::Equal,
        TieBreak::NameAsc => ea.name.cmp(&eb.name),
        TieBreak::LineAsc => ea
            .location
            .path
            .cmp(&eb.location.path)
            .then(ea.location.start_line.cmp(&eb.location.start_line)),
    }
}

fn direct_scores(spectrum: &Spectrum, formula: &Formula, kind: ElementKind) -> Vec<Scored> {
    let metrics = spectrum.metrics_by_position();
    spectrum
        .elements()
        .iter()
        .zip(metrics)
        .filter(|(element, _)| element.kind == kind)
        .map(|(element, metrics)| Scored {
            element: element.id,
            score: formula.evaluate(&metrics),
            metrics,
        })
        .collect()
}

/// Ranks every element of `granularity`.
///
/// When coverage was recorded at a finer kind, scores are computed there
/// and lifted with [`Aggregator::Max`].
pub fn rank(
    spectrum: &Spectrum,
    formula: &Formula,
    granularity: ElementKind,
    tiebreak: TieBreak,
) -> Result<RankedReport, RankingError> {
    if spectrum.elements_of_kind(granularity).next().is_none() {
        return Err(RankingError::NoSuchGranularity(granularity));
    }
    let base_kind = spectrum
        .finest_covered_kind()
        .filter(|&kind| kind < granularity)
        .unwrap_or(granularity);
    let base = RankedReport {
        entries: order_entries(spectrum, direct_scores(spectrum, formula, base_kind), tiebreak, None),
        formula: formula.clone(),
        granularity: base_kind,
        tiebreak,
        no_failing_tests: spectrum.failed_count() == 0,
        derivation: None,
    };
    if base_kind == granularity {
        Ok(base)
    } else {
        aggregate(&base, spectrum, granularity, Aggregator::Max)
    }
}

/// The kind to rank when none is asked for: the finest kind coverage was
/// recorded at, or the finest registered kind when nothing is covered.
pub fn default_granularity(spectrum: &Spectrum) -> Option<ElementKind> {
    spectrum
        .finest_covered_kind()
        .or_else(|| spectrum.elements().iter().map(|e| e.kind).min())
}

/// Lifts a report to a coarser kind: each target element scores the
/// aggregate of its descendants' scores at the report's kind.
pub fn aggregate(
    report: &RankedReport,
    spectrum: &Spectrum,
    target: ElementKind,
    aggregator: Aggregator,
) -> Result<RankedReport, RankingError> {
    if target <= report.granularity {
        return Err(RankingError::NotCoarser {
            from: report.granularity,
            to: target,
        });
    }
    if spectrum.elements_of_kind(target).next().is_none() {
        return Err(RankingError::NoSuchGranularity(target));
    }
    let fine_scores = report.scores();
    let metrics = spectrum.metrics_by_position();
    let scored = spectrum
        .elements()
        .iter()
        .zip(metrics)
        .filter(|(element, _)| element.kind == target)
        .map(|(element, metrics)| {
            let scores: Vec<f64> = spectrum
                .descendants(element.id, report.granularity)
                .expect("element comes from the spectrum")
                .into_iter()
                .filter_map(|id| fine_scores.get(&id).copied())
                .collect();
            Scored {
                element: element.id,
                score: aggregator.apply(&scores),
                metrics,
            }
        })
        .collect();
    Ok(RankedReport {
        entries: order_entries(spectrum, scored, report.tiebreak, None),
        formula: report.formula.clone(),
        granularity: target,
        tiebreak: report.tiebreak,
        no_failing_tests: report.no_failing_tests,
        derivation: Some(Derivation {
            from: report.derivation.map_or(report.granularity, |d| d.from),
            aggregator,
        }),
    })
}

/// Why an element scored what it did.
#[derive(Debug, Clone, PartialEq)]
pub struct Explanation {
    pub element: ElementId,
    pub metrics: BasicMetrics,
    pub formula: String,
    /// formula text with every metric identifier replaced by its value
    pub trace: String,
    pub score: f64,
    pub failing_tests: Vec<TestId>,
    pub passing_count: u64,
}

pub fn explain(spectrum: &Spectrum, formula: &Formula, element: ElementId) -> Result<Explanation, RankingError> {
    let metrics = spectrum
        .basic_metrics(element)
        .map_err(|_| RankingError::UnknownElement(element))?;
    let covering = spectrum
        .covering_tests(element)
        .map_err(|_| RankingError::UnknownElement(element))?;
    let mut failing_tests: Vec<TestId> = covering
        .into_iter()
        .filter(|&t| spectrum.test(t).is_some_and(|t| t.failed()))
        .collect();
    failing_tests.sort_unstable();
    Ok(Explanation {
        element,
        metrics,
        formula: formula.definition().to_string(),
        trace: formula.substitution_trace(&metrics),
        score: formula.evaluate(&metrics),
        failing_tests,
        passing_count: metrics.ep,
    })
}

/// Linear green (0,200,0) at 0 to red (220,0,0) at 1. Out-of-range input is
/// clamped.
pub fn color_scale(score: f64) -> (u8, u8, u8) {
    let s = if score.is_nan() { 0.0 } else { score.clamp(0.0, 1.0) };
    let red = (220.0 * s).round() as u8;
    let green = (200.0 * (1.0 - s)).round() as u8;
    (red, green, 0)
}
