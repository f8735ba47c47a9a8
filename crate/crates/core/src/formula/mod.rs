//! Suspiciousness formulas over the four basic metrics.
//!
//! Every division by zero, `0/0` included, yields 0, and any non-finite
//! intermediate result collapses to 0, so evaluation is total and never
//! produces NaN or infinity. Custom formulas are not clamped to `[0, 1]`.

mod parser;

use std::fmt;

use thiserror::Error;

use crate::spectrum::BasicMetrics;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("parse error at offset {offset}: expected {expected}, found {found}")]
    Parse {
        offset: usize,
        expected: String,
        found: String,
    },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
}

impl FormulaError {
    pub fn offset(&self) -> usize {
        match self {
            FormulaError::Parse { offset, .. } | FormulaError::UnknownIdentifier { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    Tarantula,
    Ochiai,
    Barinel,
}

impl Builtin {
    pub const ALL: [Builtin; 3] = [Builtin::Tarantula, Builtin::Ochiai, Builtin::Barinel];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Tarantula => "TARANTULA",
            Builtin::Ochiai => "OCHIAI",
            Builtin::Barinel => "BARINEL",
        }
    }

    /// Definition in the formula language. Evaluating it reproduces
    /// [`Builtin::score`] bit for bit.
    pub fn definition(self) -> &'static str {
        match self {
            Builtin::Tarantula => "(ef/F)/((ef/F)+(ep/P))",
            Builtin::Ochiai => "ef / sqrt(F*(ef+ep))",
            // 1 - ep/(ep+ef) for executed elements; 0 when never executed
            Builtin::Barinel => "ef/(ef+ep)",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|b| b.name().eq_ignore_ascii_case(name.trim()))
    }

    pub fn score(self, m: &BasicMetrics) -> f64 {
        let ef = m.ef as f64;
        let ep = m.ep as f64;
        let failed = m.failed_total() as f64;
        let passed = m.passed_total() as f64;
        match self {
            Builtin::Tarantula => {
                let fail_ratio = safe_div(ef, failed);
                let pass_ratio = safe_div(ep, passed);
                safe_div(fail_ratio, fail_ratio + pass_ratio)
            }
            Builtin::Ochiai => safe_div(ef, (failed * (ef + ep)).sqrt()),
            Builtin::Barinel => safe_div(ef, ef + ep),
        }
    }
}

/// Name and definition text of each built-in formula.
pub fn list_builtins() -> Vec<(&'static str, &'static str)> {
    Builtin::ALL.into_iter().map(|b| (b.name(), b.definition())).collect()
}

fn safe_div(numerator: f64, denominator: f64) -> f64 {
    if denominator == 0.0 {
        0.0
    } else {
        finite_or_zero(numerator / denominator)
    }
}

/// Maps NaN, infinities and negative zero to 0.
fn finite_or_zero(value: f64) -> f64 {
    if value.is_finite() && value != 0.0 {
        value
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Terminal {
    Ef,
    Ep,
    Nf,
    Np,
    /// total failing tests
    Failed,
    /// total passing tests
    Passed,
}

impl Terminal {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "ef" => Terminal::Ef,
            "ep" => Terminal::Ep,
            "nf" => Terminal::Nf,
            "np" => Terminal::Np,
            "F" => Terminal::Failed,
            "P" => Terminal::Passed,
            _ => return None,
        })
    }

    fn value(self, m: &BasicMetrics) -> u64 {
        match self {
            Terminal::Ef => m.ef,
            Terminal::Ep => m.ep,
            Terminal::Nf => m.nf,
            Terminal::Np => m.np,
            Terminal::Failed => m.failed_total(),
            Terminal::Passed => m.passed_total(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Function {
    Sqrt,
    Min,
    Max,
}

impl Function {
    fn from_name(name: &str) -> Option<Self> {
        match name {
            "sqrt" => Some(Function::Sqrt),
            "min" => Some(Function::Min),
            "max" => Some(Function::Max),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Parsed formula expression.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    Terminal(Terminal),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Call(Function, Vec<Expr>),
}

impl Expr {
    pub fn eval(&self, m: &BasicMetrics) -> f64 {
        let value = match self {
            Expr::Number(n) => *n,
            Expr::Terminal(t) => t.value(m) as f64,
            Expr::Binary(op, lhs, rhs) => {
                let (a, b) = (lhs.eval(m), rhs.eval(m));
                match op {
                    BinaryOp::Add => a + b,
                    BinaryOp::Sub => a - b,
                    BinaryOp::Mul => a * b,
                    BinaryOp::Div => safe_div(a, b),
                }
            }
            Expr::Call(func, args) => match func {
                Function::Sqrt => args[0].eval(m).sqrt(),
                Function::Min => args[0].eval(m).min(args[1].eval(m)),
                Function::Max => args[0].eval(m).max(args[1].eval(m)),
            },
        };
        finite_or_zero(value)
    }
}

/// A user-defined formula: its source text and parsed tree.
#[derive(Debug, Clone, PartialEq)]
pub struct CustomFormula {
    text: String,
    expr: Expr,
}

impl CustomFormula {
    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    Builtin(Builtin),
    Custom(CustomFormula),
}

impl Formula {
    /// Parses an expression in the formula language.
    pub fn parse(text: &str) -> Result<Self, FormulaError> {
        let expr = parser::parse(text)?;
        Ok(Formula::Custom(CustomFormula {
            text: text.to_string(),
            expr,
        }))
    }

    /// A builtin name (case-insensitive) or else a formula expression.
    pub fn resolve(text: &str) -> Result<Self, FormulaError> {
        match Builtin::from_name(text) {
            Some(builtin) => Ok(Formula::Builtin(builtin)),
            None => Self::parse(text),
        }
    }

    /// Builtin name, or the expression text for custom formulas. Feeding
    /// this back into [`Formula::resolve`] gives an equal formula.
    pub fn label(&self) -> &str {
        match self {
            Formula::Builtin(b) => b.name(),
            Formula::Custom(c) => c.text(),
        }
    }

    /// The expression text the score is computed from.
    pub fn definition(&self) -> &str {
        match self {
            Formula::Builtin(b) => b.definition(),
            Formula::Custom(c) => c.text(),
        }
    }

    pub fn evaluate(&self, metrics: &BasicMetrics) -> f64 {
        match self {
            Formula::Builtin(b) => b.score(metrics),
            Formula::Custom(c) => c.expr.eval(metrics),
        }
    }

    /// The definition with each metric identifier replaced by its value,
    /// whitespace and layout preserved.
    pub fn substitution_trace(&self, metrics: &BasicMetrics) -> String {
        let text = self.definition();
        let tokens = parser::tokenize(text).expect("formula text was validated at parse time");
        let mut out = String::with_capacity(text.len());
        let mut cursor = 0;
        for token in tokens {
            if let parser::TokenKind::Ident(name) = &token.kind {
                if let Some(terminal) = Terminal::from_name(name) {
                    out.push_str(&text[cursor..token.span.start]);
                    out.push_str(&terminal.value(metrics).to_string());
                    cursor = token.span.end;
                }
            }
        }
        out.push_str(&text[cursor..]);
        out
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Parses an expression in the formula language.
pub fn parse_formula(text: &str) -> Result<Formula, FormulaError> {
    Formula::parse(text)
}
