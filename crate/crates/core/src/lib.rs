//! Spectrum-based fault localization.
//!
//! A [`Spectrum`] records which code elements each test executed and which
//! tests failed. [`ranking::rank`] scores every element with a suspiciousness
//! [`Formula`] and orders them; [`interactive::Session`] lets a developer
//! refine that order with verdicts; [`elo`] ranks arbitrary items from
//! pairwise votes. [`ingest`] reads LCOV, JUnit and the canonical spectrum
//! document.

pub mod elo;
pub mod formula;
pub mod ingest;
pub mod interactive;
pub mod ranking;
pub mod spectrum;
pub mod synth;

pub use formula::{list_builtins, parse_formula, Builtin, Formula, FormulaError};
pub use interactive::{CallGraph, FeedbackAction, Session, Verdict};
pub use ranking::{aggregate, color_scale, explain, rank, Aggregator, RankedReport, TieBreak};
pub use spectrum::{
    BasicMetrics, CodeElement, ElementId, ElementKind, Location, Outcome, Spectrum, SpectrumError, TestCase, TestId,
};
