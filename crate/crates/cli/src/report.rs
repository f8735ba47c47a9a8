use std::fmt::Write;

use sbfl_core::formula::Formula;
use sbfl_core::interactive::Session;
use sbfl_core::ranking::{default_granularity, TieBreak};
use sbfl_core::spectrum::{ElementId, ElementKind};
use sbfl_service::wire::{ExplanationBody, RankingBody};

use crate::input::{CliError, Loaded};

/// A feedback-free session: the plain engine ranking plus everything the
/// service's serializers need.
pub fn session(loaded: &Loaded, formula: &str, granularity: Option<&str>, tiebreak: &str) -> Result<Session, CliError> {
    let formula = Formula::resolve(formula).map_err(|e| CliError::formula(formula, &e))?;
    let granularity = match granularity {
        Some(text) => {
            ElementKind::parse(text).ok_or_else(|| CliError::Usage(format!("unknown granularity `{text}`")))?
        }
        None => default_granularity(&loaded.spectrum)
            .ok_or_else(|| CliError::Input("the spectrum has no elements".into()))?,
    };
    let tiebreak =
        TieBreak::parse(tiebreak).ok_or_else(|| CliError::Usage(format!("unknown tie-break `{tiebreak}`")))?;
    Session::new(loaded.spectrum.clone(), formula, granularity, tiebreak, None)
        .map_err(|e| CliError::Input(e.to_string()))
}

fn fmt_rank(rank: f64) -> String {
    // whole ranks print bare, AVERAGE_RANK fractions keep their decimals
    format!("{rank}")
}

pub fn table(session: &Session, top: Option<usize>) -> String {
    let spectrum = session.spectrum();
    let rows: Vec<[String; 4]> = session
        .ranking()
        .entries
        .iter()
        .take(top.unwrap_or(usize::MAX))
        .map(|entry| {
            let element = spectrum.element(entry.element).expect("ranked elements are registered");
            [
                fmt_rank(entry.rank),
                format!("{:.4}", entry.score),
                element.name.clone(),
                element.location.to_string(),
            ]
        })
        .collect();
    let header = ["rank", "score", "element", "location"];
    let mut widths = header.map(str::len);
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    for row in std::iter::once(header.map(String::from)).chain(rows) {
        let line = format!(
            "{:>w0$}  {:>w1$}  {:<w2$}  {}",
            row[0],
            row[1],
            row[2],
            row[3],
            w0 = widths[0],
            w1 = widths[1],
            w2 = widths[2],
        );
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

pub fn canonical(session: &Session, top: Option<usize>) -> Result<String, CliError> {
    let mut text =
        serde_json::to_string_pretty(&RankingBody::of(session, top)).map_err(|e| CliError::Internal(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

pub fn explanation(session: &Session, element: ElementId) -> Result<String, CliError> {
    let e = ExplanationBody::of(session, element).map_err(|e| CliError::Input(e.to_string()))?;
    let spectrum = session.spectrum();
    let location = &spectrum.element(element).expect("explained elements exist").location;
    let m = e.metrics;
    let formula = match session.formula() {
        Formula::Builtin(b) => format!("{} = {}", b.name(), e.formula),
        Formula::Custom(_) => e.formula.clone(),
    };

    let mut out = String::new();
    let _ = writeln!(out, "element  {} ({}, {location})", e.name, e.kind);
    let _ = writeln!(out, "formula  {formula}");
    if let Some(via) = &e.derived_from {
        let _ = writeln!(out, "via      {} ({}), highest-scoring descendant", via.name, via.kind);
    }
    let _ = writeln!(out, "metrics  ef={} ep={} nf={} np={}", m.ef, m.ep, m.nf, m.np);
    let _ = writeln!(out, "trace    {}", e.trace);
    let _ = writeln!(out, "score    {:.4}", e.score);
    let failing: Vec<&str> = e.failing_tests.iter().map(|t| t.name.as_str()).collect();
    let _ = writeln!(
        out,
        "failing  {}",
        if failing.is_empty() {
            "(none)".to_string()
        } else {
            failing.join(", ")
        }
    );
    let _ = writeln!(out, "passing  {} covering passing test(s)", e.passing_count);
    Ok(out)
}
