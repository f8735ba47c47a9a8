//! Test outcomes from JUnit XML.
//!
//! Every `<testcase>` becomes a test named `classname.name` (just `name`
//! without a classname). A nested `<failure>` or `<error>` means FAIL, a
//! nested `<skipped>` drops the case, anything else is PASS. Ids are
//! assigned 1, 2, ... in document order.

use super::IngestError;
use crate::spectrum::{Outcome, TestCase};

pub fn parse_junit(text: &str) -> Result<Vec<TestCase>, IngestError> {
    let document = roxmltree::Document::parse(text).map_err(|err| IngestError::MalformedDocument(err.to_string()))?;
    let root = document.root_element();
    if !matches!(root.tag_name().name(), "testsuites" | "testsuite") {
        return Err(IngestError::MalformedDocument(format!(
            "expected <testsuites> or <testsuite> root, found <{}>",
            root.tag_name().name()
        )));
    }

    let mut tests = Vec::new();
    for case in root
        .descendants()
        .filter(|node| node.is_element() && node.has_tag_name("testcase"))
    {
        let name = case.attribute("name").ok_or_else(|| {
            let pos = document.text_pos_at(case.range().start);
            IngestError::MalformedDocument(format!(
                "<testcase> without a name attribute at {}:{}",
                pos.row, pos.col
            ))
        })?;
        let children: Vec<&str> = case
            .children()
            .filter(|child| child.is_element())
            .map(|child| child.tag_name().name())
            .collect();
        if children.contains(&"skipped") {
            continue;
        }
        let outcome = if children.iter().any(|&tag| tag == "failure" || tag == "error") {
            Outcome::Fail
        } else {
            Outcome::Pass
        };
        let full_name = match case.attribute("classname") {
            Some(class) if !class.is_empty() => format!("{class}.{name}"),
            _ => name.to_string(),
        };
        tests.push(TestCase::new(tests.len() as u64 + 1, full_name, outcome));
    }
    Ok(tests)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failure_and_pass() {
        let xml = r#"<?xml version="1.0"?>
            <testsuite name="s">
              <testcase classname="pkg.A" name="ok"/>
              <testcase classname="pkg.A" name="bad"><failure message="boom">trace</failure></testcase>
            </testsuite>"#;
        let tests = parse_junit(xml).unwrap();
        let outcomes: Vec<_> = tests.iter().map(|t| t.outcome).collect();
        assert_eq!(outcomes, vec![Outcome::Pass, Outcome::Fail]);
        assert_eq!(tests[0].name, "pkg.A.ok");
        assert_eq!(tests[1].id.0, 2);
    }

    #[test]
    fn errors_fail_and_skips_vanish() {
        let xml = r#"<testsuites>
              <testsuite name="one">
                <testcase name="crash"><error type="panic"/></testcase>
                <testcase classname="C" name="later"><skipped/></testcase>
                <testcase classname="C" name="out"><system-out>hi</system-out></testcase>
              </testsuite>
            </testsuites>"#;
        let tests = parse_junit(xml).unwrap();
        assert_eq!(tests.len(), 2);
        assert_eq!(tests[0].name, "crash");
        assert_eq!(tests[0].outcome, Outcome::Fail);
        assert_eq!(tests[1].name, "C.out");
        assert_eq!(tests[1].outcome, Outcome::Pass);
    }

    #[test]
    fn malformed_documents() {
        for xml in [
            "<testsuite><testcase name='a'></testsuite>",
            "<report/>",
            "<testsuite><testcase/></testsuite>",
            "",
        ] {
            assert!(
                matches!(parse_junit(xml), Err(IngestError::MalformedDocument(_))),
                "{xml}"
            );
        }
    }
}
