//! Expected diagnostics read from gcc's own JSON output.

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use serde_json::Value;
use sidekick_core::capture::{parse_compile_diagnostics, Severity};

#[derive(Debug, PartialEq, Eq, Clone)]
pub struct Expected {
    pub file: String,
    pub line: u32,
    pub severity: Severity,
}

pub fn corpus_dir() -> PathBuf {
    // resolves from any crate in the workspace
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/diagnostics")
}

fn severity_of(kind: &str) -> Severity {
    match kind {
        "error" | "fatal error" => Severity::Error,
        "warning" => Severity::Warning,
        _ => Severity::Note,
    }
}

fn flatten(diags: &[Value], out: &mut Vec<Expected>) {
    for d in diags {
        let caret = &d["locations"][0]["caret"];
        if let (Some(file), Some(line)) = (caret["file"].as_str(), caret["line"].as_u64()) {
            out.push(Expected {
                file: file.to_string(),
                line: line as u32,
                severity: severity_of(d["kind"].as_str().unwrap_or("")),
            });
        }
        if let Some(children) = d["children"].as_array() {
            flatten(children, out);
        }
    }
}

/// gcc may print trailing text after the JSON array; read the first value only.
pub fn oracle(json_text: &str) -> Vec<Expected> {
    let first: Value = serde_json::Deserializer::from_str(json_text)
        .into_iter::<Value>()
        .next()
        .expect("oracle file holds a JSON value")
        .expect("oracle JSON parses");
    let mut out = Vec::new();
    flatten(first.as_array().expect("top-level array"), &mut out);
    out
}

pub fn fixtures() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "c"))
        .collect();
    v.sort();
    v
}

pub struct Score {
    pub files: usize,
    pub total: usize,
    pub correct: usize,
    pub mismatches: Vec<String>,
}

/// Compares the parser with gcc's JSON output, diagnostic by diagnostic.
pub fn score_corpus() -> Score {
    let files = fixtures();
    let mut score = Score { files: files.len(), total: 0, correct: 0, mismatches: Vec::new() };
    for src in files {
        let stderr = std::fs::read_to_string(src.with_extension("stderr")).unwrap();
        let expected = oracle(&std::fs::read_to_string(src.with_extension("json")).unwrap());
        let parsed: Vec<Expected> = parse_compile_diagnostics(&stderr)
            .into_iter()
            .map(|d| Expected { file: d.file, line: d.line, severity: d.severity })
            .collect();
        score.total += expected.len();
        for (i, exp) in expected.iter().enumerate() {
            if parsed.get(i) == Some(exp) {
                score.correct += 1;
            } else {
                score.mismatches.push(format!("{}: #{i} expected {exp:?}, got {:?}", src.display(), parsed.get(i)));
            }
        }
    }
    score
}
