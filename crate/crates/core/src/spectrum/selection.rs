use std::collections::BTreeSet;

use super::{ElementId, Spectrum, SpectrumError, TestId};

/// Result of [`Spectrum::select_tests`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TestSelection {
    /// Failing tests (ascending id), then the greedily chosen passing tests.
    pub tests: Vec<TestId>,
    /// Targets no test executes at all.
    pub uncoverable: Vec<ElementId>,
}

impl Spectrum {
    /// Picks a reduced test list for re-running: every failing test, plus a
    /// greedy set cover of `targets` by passing tests.
    ///
    /// `None` targets every registered element. The greedy step takes the
    /// passing test covering the most still-uncovered targets, ties going to
    /// the smaller test id, and stops when no test adds anything.
    pub fn select_tests(&self, targets: Option<&[ElementId]>) -> Result<TestSelection, SpectrumError> {
        let target_positions: BTreeSet<usize> = match targets {
            Some(ids) => ids
                .iter()
                .map(|&id| self.element_position(id).ok_or(SpectrumError::UnknownElement(id)))
                .collect::<Result<_, _>>()?,
            None => (0..self.elements().len()).collect(),
        };

        let mut failing: Vec<TestId> = self.tests().iter().filter(|t| t.failed()).map(|t| t.id).collect();
        failing.sort_unstable();

        let mut passing: Vec<(TestId, &[usize])> = self
            .tests()
            .iter()
            .zip(self.per_test_rows())
            .filter(|(t, _)| !t.failed())
            .map(|(t, row)| (t.id, row.as_slice()))
            .collect();
        passing.sort_unstable_by_key(|(id, _)| *id);

        let mut uncovered = target_positions.clone();
        let mut chosen = vec![false; passing.len()];
        let mut selected = failing;
        loop {
            let mut best: Option<(usize, usize)> = None;
            for (i, (_, row)) in passing.iter().enumerate() {
                if chosen[i] {
                    continue;
                }
                let gain = row.iter().filter(|e| uncovered.contains(e)).count();
                // strict > keeps the smallest id on ties
                if gain > 0 && best.is_none_or(|(_, g)| gain > g) {
                    best = Some((i, gain));
                }
            }
            let Some((i, _)) = best else { break };
            chosen[i] = true;
            selected.push(passing[i].0);
            for e in passing[i].1 {
                uncovered.remove(e);
            }
        }

        let uncoverable = target_positions
            .into_iter()
            .map(|pos| self.elements()[pos].id)
            .filter(|&id| self.covering_tests(id).map(|tests| tests.is_empty()).unwrap_or(false))
            .collect();

        Ok(TestSelection {
            tests: selected,
            uncoverable,
        })
    }
}
