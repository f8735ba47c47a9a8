//! Seeded synthetic spectra for benchmarks and property checks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::spectrum::{CodeElement, ElementId, ElementKind, Location, Outcome, Spectrum, TestCase, TestId};

/// `statements` flat STATEMENT elements (ids 1..) and `tests` tests (ids 1..),
/// each pair covered with probability `density`, each test failing with
/// probability `fail_rate`.
pub fn flat<R: Rng>(rng: &mut R, tests: usize, statements: usize, density: f64, fail_rate: f64) -> Spectrum {
    let elements = (1..=statements as u64)
        .map(|i| {
            CodeElement::new(
                i,
                format!("s{i}"),
                ElementKind::Statement,
                Location::new("synthetic.c", i as u32, i as u32),
                None,
            )
        })
        .collect();
    let tests_vec = random_tests(rng, tests, fail_rate);
    let mut coverage = Vec::new();
    for t in 1..=tests as u64 {
        for e in 1..=statements as u64 {
            if rng.random_bool(density) {
                coverage.push((TestId(t), ElementId(e)));
            }
        }
    }
    Spectrum::build(elements, tests_vec, coverage).expect("generated ids are consistent")
}

fn random_tests<R: Rng>(rng: &mut R, tests: usize, fail_rate: f64) -> Vec<TestCase> {
    (1..=tests as u64)
        .map(|i| {
            let outcome = if rng.random_bool(fail_rate) {
                Outcome::Fail
            } else {
                Outcome::Pass
            };
            TestCase::new(i, format!("t{i}"), outcome)
        })
        .collect()
}

/// Shape of a layered CLASS > METHOD > STATEMENT tree.
#[derive(Debug, Clone, Copy)]
pub struct TreeShape {
    pub classes: usize,
    pub max_methods: usize,
    pub max_statements: usize,
}

/// A complete three-level hierarchy; every statement sits under a method
/// and every method under a class. Per-node child counts are drawn from
/// `0..=max`, so empty methods and classes occur. Coverage touches
/// statements only.
pub fn layered<R: Rng>(rng: &mut R, shape: TreeShape, tests: usize, density: f64, fail_rate: f64) -> Spectrum {
    let mut elements = Vec::new();
    let mut statements = Vec::new();
    let mut next = 1u64;
    let mut line = 1u32;
    for c in 0..shape.classes {
        let class_id = next;
        next += 1;
        let path = format!("src/c{c}.java");
        elements.push(CodeElement::new(
            class_id,
            format!("C{c}"),
            ElementKind::Class,
            Location::new(&path, 1, 1),
            None,
        ));
        for m in 0..rng.random_range(0..=shape.max_methods) {
            let method_id = next;
            next += 1;
            elements.push(CodeElement::new(
                method_id,
                format!("C{c}.m{m}"),
                ElementKind::Method,
                Location::new(&path, line, line),
                Some(class_id),
            ));
            for _ in 0..rng.random_range(0..=shape.max_statements) {
                line += 1;
                elements.push(CodeElement::new(
                    next,
                    format!("{path}:{line}"),
                    ElementKind::Statement,
                    Location::new(&path, line, line),
                    Some(method_id),
                ));
                statements.push(ElementId(next));
                next += 1;
            }
            line += 1;
        }
    }
    let tests_vec = random_tests(rng, tests, fail_rate);
    let mut coverage = Vec::new();
    for t in 1..=tests as u64 {
        for &s in &statements {
            if rng.random_bool(density) {
                coverage.push((TestId(t), s));
            }
        }
    }
    Spectrum::build(elements, tests_vec, coverage).expect("generated ids are consistent")
}

/// A flat spectrum with one planted fault: it is executed by every failing
/// test and no passing one, while every other element is executed by some
/// passing test or by no failing test. Needs `tests >= 2`.
pub fn single_fault<R: Rng>(rng: &mut R, tests: usize, statements: usize, density: f64) -> (Spectrum, ElementId) {
    assert!(tests >= 2 && statements >= 1);
    let failing_count = rng.random_range(1..tests);
    let mut order: Vec<u64> = (1..=tests as u64).collect();
    order.shuffle(rng);
    let failing: Vec<u64> = order[..failing_count].to_vec();
    let passing: Vec<u64> = order[failing_count..].to_vec();
    let tests_vec = (1..=tests as u64)
        .map(|i| {
            let outcome = if failing.contains(&i) {
                Outcome::Fail
            } else {
                Outcome::Pass
            };
            TestCase::new(i, format!("t{i}"), outcome)
        })
        .collect();

    let fault = rng.random_range(1..=statements as u64);
    let elements = (1..=statements as u64)
        .map(|i| {
            CodeElement::new(
                i,
                format!("s{i}"),
                ElementKind::Statement,
                Location::new("synthetic.c", i as u32, i as u32),
                None,
            )
        })
        .collect();
    let mut coverage = Vec::new();
    for e in 1..=statements as u64 {
        if e == fault {
            coverage.extend(failing.iter().map(|&t| (TestId(t), ElementId(e))));
            continue;
        }
        let mut executed_by_failing = false;
        let mut executed_by_passing = false;
        for t in 1..=tests as u64 {
            if rng.random_bool(density) {
                coverage.push((TestId(t), ElementId(e)));
                if failing.contains(&t) {
                    executed_by_failing = true;
                } else {
                    executed_by_passing = true;
                }
            }
        }
        if executed_by_failing && !executed_by_passing {
            let t = passing[rng.random_range(0..passing.len())];
            coverage.push((TestId(t), ElementId(e)));
        }
    }
    let spectrum = Spectrum::build(elements, tests_vec, coverage).expect("generated ids are consistent");
    (spectrum, ElementId(fault))
}
