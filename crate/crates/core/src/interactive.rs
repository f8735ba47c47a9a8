//! Interactive fault localization: developer verdicts reorder the ranking.
//!
//! Each verdict updates per-element score multipliers (default 1). The
//! displayed ranking is the base ranking with every score multiplied by its
//! element's multiplier and re-sorted. Multipliers are a pure function of
//! the feedback log, so undo and reanalysis work by replaying the log.
//!
//! Update rule, with call-graph edges treated as undirected and `h` the hop
//! distance (1 or 2) of a neighbor:
//!
//! | verdict              | element     | neighbors within 2 hops |
//! |----------------------|-------------|-------------------------|
//! | `NOT_FAULTY`         | set to 0    | `× 0.5^h`               |
//! | `SUSPICIOUS_CONTEXT` | `× 2`       | `× (1 + 0.5^h)`         |
//! | `FAULT_FOUND`        | pinned at 1 | unchanged               |
//!
//! `FAULT_FOUND` also concludes the session; further verdicts are refused.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::Formula;
use crate::ranking::{self, order_entries, RankedReport, RankingError, Scored, TieBreak};
use crate::spectrum::{ElementId, ElementKind, Spectrum};

const PROPAGATION_RADIUS: u32 = 2;
const HOP_DECAY: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InteractiveError {
    #[error("element {0} is not ranked in this session")]
    UnknownElement(ElementId),
    #[error("session is concluded: fault found at element {0}")]
    SessionConcluded(ElementId),
    #[error("feedback log is empty")]
    EmptyLog,
    #[error("feedback sequence {got} does not follow {last}")]
    OutOfSequence { last: u64, got: u64 },
    #[error("call graph edge {caller} -> {callee}: {reason}")]
    InvalidCallGraph {
        caller: ElementId,
        callee: ElementId,
        reason: String,
    },
    #[error(transparent)]
    Ranking(#[from] RankingError),
}

/// Caller → callee edges between METHOD elements.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CallGraph {
    edges: Vec<(ElementId, ElementId)>,
    adjacency: HashMap<ElementId, BTreeSet<ElementId>>,
}

impl CallGraph {
    pub fn new(edges: impl IntoIterator<Item = (ElementId, ElementId)>) -> Self {
        let mut graph = CallGraph::default();
        for (caller, callee) in edges {
            graph.edges.push((caller, callee));
            graph.adjacency.entry(caller).or_default().insert(callee);
            graph.adjacency.entry(callee).or_default().insert(caller);
        }
        graph
    }

    pub fn edges(&self) -> &[(ElementId, ElementId)] {
        &self.edges
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Checks that every endpoint is a registered METHOD element.
    pub fn validate(&self, spectrum: &Spectrum) -> Result<(), InteractiveError> {
        for &(caller, callee) in &self.edges {
            for endpoint in [caller, callee] {
                let reason = match spectrum.element(endpoint) {
                    None => format!("element {endpoint} is not registered"),
                    Some(e) if e.kind != ElementKind::Method => {
                        format!("element {endpoint} is a {}, not a METHOD", e.kind)
                    }
                    Some(_) => continue,
                };
                return Err(InteractiveError::InvalidCallGraph { caller, callee, reason });
            }
        }
        Ok(())
    }

    /// Keeps the edges whose endpoints are METHOD elements of `spectrum`.
    pub fn restricted_to(&self, spectrum: &Spectrum) -> CallGraph {
        let is_method = |id| spectrum.element(id).is_some_and(|e| e.kind == ElementKind::Method);
        CallGraph::new(
            self.edges
                .iter()
                .copied()
                .filter(|&(a, b)| is_method(a) && is_method(b)),
        )
    }

    /// Elements reachable within `radius` undirected hops, excluding the
    /// start, with their shortest hop distance. Sorted by id.
    pub fn neighborhood(&self, start: ElementId, radius: u32) -> Vec<(ElementId, u32)> {
        let mut distance: BTreeMap<ElementId, u32> = BTreeMap::new();
        let mut queue = VecDeque::from([(start, 0)]);
        distance.insert(start, 0);
        while let Some((node, hops)) = queue.pop_front() {
            if hops == radius {
                continue;
            }
            for &next in self.adjacency.get(&node).into_iter().flatten() {
                if let std::collections::btree_map::Entry::Vacant(slot) = distance.entry(next) {
                    slot.insert(hops + 1);
                    queue.push_back((next, hops + 1));
                }
            }
        }
        distance.remove(&start);
        distance.into_iter().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    NotFaulty,
    SuspiciousContext,
    FaultFound,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::NotFaulty => "NOT_FAULTY",
            Verdict::SuspiciousContext => "SUSPICIOUS_CONTEXT",
            Verdict::FaultFound => "FAULT_FOUND",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        let normalized = text.trim().replace('-', "_");
        [Verdict::NotFaulty, Verdict::SuspiciousContext, Verdict::FaultFound]
            .into_iter()
            .find(|v| v.as_str().eq_ignore_ascii_case(&normalized))
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackAction {
    pub sequence: u64,
    pub element: ElementId,
    pub verdict: Verdict,
}

/// Multiplier state derived from a feedback log.
#[derive(Debug, Clone, PartialEq, Default)]
struct Adjustments {
    multipliers: BTreeMap<ElementId, f64>,
    concluded: Option<ElementId>,
}

impl Adjustments {
    fn apply(&mut self, graph: Option<&CallGraph>, action: &FeedbackAction) {
        let neighbors = graph
            .map(|g| g.neighborhood(action.element, PROPAGATION_RADIUS))
            .unwrap_or_default();
        match action.verdict {
            Verdict::NotFaulty => {
                self.multipliers.insert(action.element, 0.0);
                for (neighbor, hops) in neighbors {
                    *self.multipliers.entry(neighbor).or_insert(1.0) *= HOP_DECAY.powi(hops as i32);
                }
            }
            Verdict::SuspiciousContext => {
                *self.multipliers.entry(action.element).or_insert(1.0) *= 2.0;
                for (neighbor, hops) in neighbors {
                    *self.multipliers.entry(neighbor).or_insert(1.0) *= 1.0 + HOP_DECAY.powi(hops as i32);
                }
            }
            Verdict::FaultFound => self.concluded = Some(action.element),
        }
    }

    fn multiplier(&self, element: ElementId) -> f64 {
        self.multipliers.get(&element).copied().unwrap_or(1.0)
    }
}

/// Result of [`Session::reanalyze`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReanalyzeOutcome {
    /// actions dropped because their element is gone
    pub skipped: Vec<FeedbackAction>,
}

/// One interactive localization session.
#[derive(Debug, Clone)]
pub struct Session {
    spectrum: Arc<Spectrum>,
    formula: Formula,
    granularity: ElementKind,
    tiebreak: TieBreak,
    call_graph: Option<CallGraph>,
    log: Vec<FeedbackAction>,
    adjustments: Adjustments,
    dirty: bool,
    base: RankedReport,
    current: RankedReport,
}

impl Session {
    pub fn new(
        spectrum: Arc<Spectrum>,
        formula: Formula,
        granularity: ElementKind,
        tiebreak: TieBreak,
        call_graph: Option<CallGraph>,
    ) -> Result<Self, InteractiveError> {
        if let Some(graph) = &call_graph {
            graph.validate(&spectrum)?;
        }
        let base = ranking::rank(&spectrum, &formula, granularity, tiebreak)?;
        Ok(Self {
            spectrum,
            formula,
            granularity,
            tiebreak,
            call_graph,
            log: Vec::new(),
            adjustments: Adjustments::default(),
            dirty: false,
            current: base.clone(),
            base,
        })
    }

    pub fn spectrum(&self) -> &Arc<Spectrum> {
        &self.spectrum
    }

    pub fn formula(&self) -> &Formula {
        &self.formula
    }

    pub fn granularity(&self) -> ElementKind {
        self.granularity
    }

    pub fn tiebreak(&self) -> TieBreak {
        self.tiebreak
    }

    pub fn call_graph(&self) -> Option<&CallGraph> {
        self.call_graph.as_ref()
    }

    pub fn log(&self) -> &[FeedbackAction] {
        &self.log
    }

    /// The ranking with multipliers applied.
    pub fn ranking(&self) -> &RankedReport {
        &self.current
    }

    /// The ranking before any feedback.
    pub fn base_ranking(&self) -> &RankedReport {
        &self.base
    }

    pub fn multiplier(&self, element: ElementId) -> f64 {
        self.adjustments.multiplier(element)
    }

    /// Multipliers that differ from the default, by element id.
    pub fn multipliers(&self) -> &BTreeMap<ElementId, f64> {
        &self.adjustments.multipliers
    }

    pub fn concluded(&self) -> Option<ElementId> {
        self.adjustments.concluded
    }

    pub fn is_dirty(&self) -> bool {
        self.dirty
    }

    /// Flags the spectrum as stale, e.g. after a source change.
    pub fn mark_dirty(&mut self) {
        self.dirty = true;
    }

    pub fn next_sequence(&self) -> u64 {
        self.log.last().map_or(1, |a| a.sequence + 1)
    }

    /// Records a verdict under the next sequence number.
    pub fn feedback(&mut self, element: ElementId, verdict: Verdict) -> Result<&RankedReport, InteractiveError> {
        let action = FeedbackAction {
            sequence: self.next_sequence(),
            element,
            verdict,
        };
        self.apply_feedback(action)
    }

    pub fn apply_feedback(&mut self, action: FeedbackAction) -> Result<&RankedReport, InteractiveError> {
        if let Some(found) = self.adjustments.concluded {
            return Err(InteractiveError::SessionConcluded(found));
        }
        if let Some(last) = self.log.last() {
            if action.sequence <= last.sequence {
                return Err(InteractiveError::OutOfSequence {
                    last: last.sequence,
                    got: action.sequence,
                });
            }
        }
        if self.base.entry(action.element).is_none() {
            return Err(InteractiveError::UnknownElement(action.element));
        }
        self.adjustments.apply(self.call_graph.as_ref(), &action);
        self.log.push(action);
        self.refresh();
        Ok(&self.current)
    }

    /// Drops the last action and rebuilds state by replaying the rest.
    pub fn undo(&mut self) -> Result<&RankedReport, InteractiveError> {
        if self.log.pop().is_none() {
            return Err(InteractiveError::EmptyLog);
        }
        self.replay();
        Ok(&self.current)
    }

    /// Swaps in a new spectrum and replays the log against it.
    ///
    /// Without a new call graph the old one is kept, minus edges whose
    /// endpoints disappeared. Actions on elements that no longer exist at
    /// the session granularity are dropped from the log and reported.
    pub fn reanalyze(
        &mut self,
        spectrum: Arc<Spectrum>,
        call_graph: Option<CallGraph>,
    ) -> Result<ReanalyzeOutcome, InteractiveError> {
        let call_graph = match call_graph {
            Some(graph) => {
                graph.validate(&spectrum)?;
                Some(graph)
            }
            None => self.call_graph.as_ref().map(|g| g.restricted_to(&spectrum)),
        };
        let base = ranking::rank(&spectrum, &self.formula, self.granularity, self.tiebreak)?;

        let (kept, skipped): (Vec<_>, Vec<_>) = std::mem::take(&mut self.log)
            .into_iter()
            .partition(|a| base.entry(a.element).is_some());
        self.spectrum = spectrum;
        self.call_graph = call_graph;
        self.base = base;
        self.log = kept;
        self.dirty = false;
        self.replay();
        Ok(ReanalyzeOutcome { skipped })
    }

    fn replay(&mut self) {
        let mut adjustments = Adjustments::default();
        for action in &self.log {
            adjustments.apply(self.call_graph.as_ref(), action);
        }
        self.adjustments = adjustments;
        self.refresh();
    }

    fn refresh(&mut self) {
        let scored = self
            .base
            .entries
            .iter()
            .map(|e| Scored {
                element: e.element,
                score: e.score * self.adjustments.multiplier(e.element),
                metrics: e.metrics,
            })
            .collect();
        self.current = RankedReport {
            entries: order_entries(&self.spectrum, scored, self.tiebreak, self.adjustments.concluded),
            ..self.base.clone()
        };
    }
}
