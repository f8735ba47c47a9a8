//! Line coverage from LCOV tracefiles.
//!
//! Only `SF:`, `DA:` and `end_of_record` carry meaning here. Other record
//! types (`TN`, `FN`, `FNDA`, `BRDA`, `LF`, ...) are skipped with a warning.
//! A line is covered when its hit count is positive.

use std::collections::{BTreeMap, BTreeSet};

use super::IngestError;

/// How repeated `DA` records for the same line combine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MergePolicy {
    /// covered if any record reports hits
    #[default]
    AnyHit,
    /// covered only if every record reports hits
    AllHit,
}

/// Coverage of one test: per source path, line → covered.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LcovCoverage {
    pub files: BTreeMap<String, BTreeMap<u32, bool>>,
    pub warnings: Vec<String>,
}

impl LcovCoverage {
    pub fn covered_lines(&self) -> impl Iterator<Item = (&str, u32)> + '_ {
        self.files.iter().flat_map(|(path, lines)| {
            lines
                .iter()
                .filter(|(_, &covered)| covered)
                .map(move |(&line, _)| (path.as_str(), line))
        })
    }
}

pub fn parse_lcov(text: &str, policy: MergePolicy) -> Result<LcovCoverage, IngestError> {
    let mut coverage = LcovCoverage::default();
    let mut ignored: BTreeSet<String> = BTreeSet::new();
    let mut current: Option<String> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        let malformed = |reason: &str| IngestError::MalformedRecord {
            line: line_no,
            content: raw.to_string(),
            reason: reason.to_string(),
        };
        if line.is_empty() {
            continue;
        }
        if line == "end_of_record" {
            if current.take().is_none() {
                return Err(malformed("end_of_record without SF"));
            }
            continue;
        }
        let Some((tag, body)) = line.split_once(':') else {
            return Err(malformed("expected TAG:value"));
        };
        match tag {
            "SF" => {
                if body.is_empty() {
                    return Err(malformed("empty source path"));
                }
                if current.is_some() {
                    return Err(malformed("SF before end_of_record"));
                }
                coverage.files.entry(body.to_string()).or_default();
                current = Some(body.to_string());
            }
            "DA" => {
                let Some(path) = &current else {
                    return Err(malformed("DA outside of an SF section"));
                };
                let mut fields = body.split(',');
                let line_number = fields
                    .next()
                    .and_then(|f| f.trim().parse::<u32>().ok())
                    .filter(|&n| n > 0)
                    .ok_or_else(|| malformed("line number must be a positive integer"))?;
                let hits = fields
                    .next()
                    .and_then(|f| f.trim().parse::<i128>().ok())
                    .ok_or_else(|| malformed("hit count must be an integer"))?;
                // a third field is an optional checksum
                if fields.nth(1).is_some() {
                    return Err(malformed("too many fields"));
                }
                let hit = hits > 0;
                let lines = coverage.files.get_mut(path).expect("SF registered the file");
                lines
                    .entry(line_number)
                    .and_modify(|covered| match policy {
                        MergePolicy::AnyHit => *covered |= hit,
                        MergePolicy::AllHit => *covered &= hit,
                    })
                    .or_insert(hit);
            }
            other => {
                ignored.insert(other.to_string());
            }
        }
    }
    if let Some(path) = current {
        coverage.warnings.push(format!("missing end_of_record after SF:{path}"));
    }
    coverage
        .warnings
        .extend(ignored.into_iter().map(|tag| format!("ignored {tag} records")));
    Ok(coverage)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_record() {
        let c = parse_lcov("SF:a.c\nDA:3,1\nDA:4,0\nend_of_record\n", MergePolicy::AnyHit).unwrap();
        let lines = &c.files["a.c"];
        assert_eq!(lines.len(), 2);
        assert!(lines[&3]);
        assert!(!lines[&4]);
        assert_eq!(c.covered_lines().collect::<Vec<_>>(), vec![("a.c", 3)]);
        assert!(c.warnings.is_empty());
    }

    #[test]
    fn non_numeric_line_is_malformed() {
        let err = parse_lcov("SF:a.c\nDA:x,1\nend_of_record\n", MergePolicy::AnyHit).unwrap_err();
        match err {
            IngestError::MalformedRecord { line, content, .. } => {
                assert_eq!(line, 2);
                assert_eq!(content, "DA:x,1");
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn structural_errors() {
        for text in [
            "DA:1,1\n",
            "SF:a\nDA:1\n",
            "SF:a\nDA:0,1\n",
            "SF:a\nDA:1,1,abc,extra\n",
            "SF:a\nSF:b\n",
            "end_of_record\n",
            "garbage\n",
            "SF:\n",
        ] {
            assert!(
                matches!(
                    parse_lcov(text, MergePolicy::AnyHit),
                    Err(IngestError::MalformedRecord { .. })
                ),
                "{text:?}"
            );
        }
    }

    #[test]
    fn checksums_and_other_records() {
        let text = "TN:t\nSF:a.c\nFN:1,main\nFNDA:1,main\nDA:1,5,abcdef\nBRDA:1,0,0,1\nLF:1\nLH:1\nend_of_record\n";
        let c = parse_lcov(text, MergePolicy::AnyHit).unwrap();
        assert!(c.files["a.c"][&1]);
        assert_eq!(c.warnings.len(), 6);
        assert!(c.warnings.iter().any(|w| w.contains("BRDA")));
    }

    #[test]
    fn repeated_lines_follow_policy() {
        let text = "SF:a.c\nDA:1,0\nend_of_record\nSF:a.c\nDA:1,2\nend_of_record\n";
        assert!(parse_lcov(text, MergePolicy::AnyHit).unwrap().files["a.c"][&1]);
        assert!(!parse_lcov(text, MergePolicy::AllHit).unwrap().files["a.c"][&1]);
    }

    #[test]
    fn missing_end_of_record_warns() {
        let c = parse_lcov("SF:a.c\nDA:1,1\n", MergePolicy::AnyHit).unwrap();
        assert!(c.files["a.c"][&1]);
        assert_eq!(c.warnings.len(), 1);
    }

    #[test]
    fn record_order_does_not_matter() {
        let forward = "SF:a.c\nDA:1,1\nDA:2,0\nDA:3,4\nend_of_record\nSF:b.c\nDA:7,1\nend_of_record\n";
        let shuffled = "SF:b.c\nDA:7,1\nend_of_record\nSF:a.c\nDA:3,4\nDA:1,1\nDA:2,0\nend_of_record\n";
        for policy in [MergePolicy::AnyHit, MergePolicy::AllHit] {
            assert_eq!(
                parse_lcov(forward, policy).unwrap(),
                parse_lcov(shuffled, policy).unwrap()
            );
        }
    }
}
