//! Recorded command cases: `<dir>/<case>/cmd.json` holds `{"args": [...]}`
//! and `expected.json` the report the command must produce.

use std::fs;
use std::path::Path;

use preskit_core::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{dispatch, to_json};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseFile {
    args: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CaseFailure {
    pub case: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorpusSummary {
    pub summary: String,
    pub cases: usize,
    pub passed: Vec<String>,
    pub failed: Vec<CaseFailure>,
}

/// Drops fields that legitimately vary between runs and re-serializes with
/// sorted keys and two-space indentation.
pub fn normalize(report: &Value) -> String {
    let mut v = report.clone();
    if let Some(obj) = v.as_object_mut() {
        obj.remove("timing_ms");
    }
    let mut s = to_json(&v, 2);
    s.push('\n');
    s
}

/// Line diff listing the first few differing lines.
fn diff(expected: &str, actual: &str) -> String {
    let e: Vec<&str> = expected.lines().collect();
    let a: Vec<&str> = actual.lines().collect();
    let mut out = Vec::new();
    for i in 0..e.len().max(a.len()) {
        let (l, r) = (e.get(i).copied(), a.get(i).copied());
        if l != r {
            out.push(format!(
                "line {}: expected {} found {}",
                i + 1,
                l.unwrap_or("<eof>").trim(),
                r.unwrap_or("<eof>").trim()
            ));
            if out.len() == 5 {
                break;
            }
        }
    }
    out.join("; ")
}

fn run_case(dir: &Path, update: bool) -> std::result::Result<(), String> {
    let cmd = fs::read_to_string(dir.join("cmd.json"))
        .map_err(|_| "missing command file cmd.json".to_string())?;
    let case: CaseFile = serde_json::from_str(&cmd).map_err(|e| format!("bad cmd.json: {e}"))?;
    let argv = std::iter::once("preskit".to_string()).chain(case.args);
    let report = dispatch(argv, dir);
    let actual = normalize(&serde_json::to_value(&report).expect("report serializes"));
    let path = dir.join("expected.json");
    if update {
        return fs::write(&path, &actual).map_err(|e| format!("cannot write expected.json: {e}"));
    }
    let text = fs::read_to_string(&path)
        .map_err(|_| "missing expectation file expected.json".to_string())?;
    let expected: Value =
        serde_json::from_str(&text).map_err(|e| format!("bad expected.json: {e}"))?;
    let expected = normalize(&expected);
    if expected == actual {
        Ok(())
    } else {
        Err(diff(&expected, &actual))
    }
}

/// Runs every case directory of `dir`, in name order.
pub fn run_corpus(dir: &Path, update: bool) -> Result<CorpusSummary> {
    let entries = fs::read_dir(dir)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", dir.display())))?;
    let mut cases: Vec<_> = entries
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    cases.sort();
    let mut passed = Vec::new();
    let mut failed = Vec::new();
    for case in &cases {
        let name = case
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        match run_case(case, update) {
            Ok(()) => passed.push(name),
            Err(reason) => failed.push(CaseFailure { case: name, reason }),
        }
    }
    let summary = if failed.is_empty() {
        format!("{} cases", cases.len())
    } else {
        format!("{} cases, {} failed", cases.len(), failed.len())
    };
    Ok(CorpusSummary {
        summary,
        cases: cases.len(),
        passed,
        failed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_directory_has_no_cases() {
        let dir = tempfile::tempdir().unwrap();
        let s = run_corpus(dir.path(), false).unwrap();
        assert_eq!(s.summary, "0 cases");
        assert_eq!(s.cases, 0);
    }

    #[test]
    fn diff_names_lines() {
        assert_eq!(diff("a\nb\n", "a\nc\n"), "line 2: expected b found c");
        assert_eq!(diff("a\n", "a\nb\n"), "line 2: expected <eof> found b");
    }

    #[test]
    fn missing_expectation_fails_the_case() {
        let dir = tempfile::tempdir().unwrap();
        let case = dir.path().join("c1");
        fs::create_dir(&case).unwrap();
        fs::write(
            case.join("cmd.json"),
            r#"{"args":["aut","--structure","FIX3"]}"#,
        )
        .unwrap();
        let s = run_corpus(dir.path(), false).unwrap();
        assert_eq!(s.failed.len(), 1);
        assert!(s.failed[0].reason.contains("missing expectation"));
    }
}
