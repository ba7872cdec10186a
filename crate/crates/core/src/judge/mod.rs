//! Test-based judging of candidate repairs and the resulting metrics.

mod sandbox;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use sandbox::{compile_c99, run_tests, Binary, CompilerConfig, ExecLimits, TestRun};

use crate::corpus::{Assignment, Corpus};
use crate::gateway::CandidateProgram;
use crate::similarity::PassVector;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum JudgeError {
    #[error("compilation failed:\n{diagnostics}")]
    CompileError { diagnostics: String },
    #[error("C compiler not found: {0}")]
    ToolchainMissing(String),
    #[error("sandbox failure: {0}")]
    SandboxFailure(String),
    #[error("invalid execution limits: {0}")]
    InvalidLimits(String),
    #[error("cannot vote on an empty list of verdicts")]
    EmptyVerdictList,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestOutcome {
    Correct,
    WrongOutput,
    Timeout,
    RuntimeError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Classification {
    Pass,
    PartialRepair,
    Fail,
    CompileError,
    NoCode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub classification: Classification,
    pub pass_vector: PassVector,
    pub outcomes: Vec<TestOutcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compile_error: Option<String>,
}

impl Verdict {
    /// Verdict for a sample with no usable program (failed request or no code).
    pub fn no_code(tests: usize) -> Self {
        Self {
            classification: Classification::NoCode,
            pass_vector: PassVector::new(vec![false; tests]),
            outcomes: Vec::new(),
            compile_error: None,
        }
    }

    pub fn compile_error(tests: usize, diagnostics: String) -> Self {
        Self {
            classification: Classification::CompileError,
            pass_vector: PassVector::new(vec![false; tests]),
            outcomes: Vec::new(),
            compile_error: Some(diagnostics),
        }
    }

    pub fn is_pass(&self) -> bool {
        self.classification == Classification::Pass
    }

    pub fn is_partial(&self) -> bool {
        matches!(self.classification, Classification::Pass | Classification::PartialRepair)
    }
}

/// CRLF to LF, trailing whitespace stripped from every line, trailing blank
/// lines dropped.
pub fn normalize_output(bytes: &[u8]) -> Vec<u8> {
    let mut lines: Vec<&[u8]> = bytes
        .split(|&b| b == b'\n')
        .map(|l| {
            let end = l.iter().rposition(|b| !b.is_ascii_whitespace()).map_or(0, |i| i + 1);
            &l[..end]
        })
        .collect();
    while lines.last().is_some_and(|l| l.is_empty()) {
        lines.pop();
    }
    lines.join(&b'\n')
}

/// Pass when every test passes; PartialRepair when nothing the baseline passed
/// regressed and at least one test the baseline failed now passes.
pub fn classify(baseline: &PassVector, candidate: &PassVector) -> Classification {
    if candidate.is_complete() {
        return Classification::Pass;
    }
    let pairs = || baseline.bits().iter().zip(candidate.bits());
    let kept = pairs().all(|(&b, &c)| !b || c);
    let gained = pairs().any(|(&b, &c)| !b && c);
    if baseline.len() == candidate.len() && kept && gained {
        Classification::PartialRepair
    } else {
        Classification::Fail
    }
}

/// Compiles and tests one candidate against the assignment's tests. `None`
/// means extraction found no program.
pub fn judge_candidate(
    candidate: Option<&CandidateProgram>,
    assignment: &Assignment,
    baseline: &PassVector,
    limits: &ExecLimits,
    cc: &CompilerConfig,
    workdir: Option<&Path>,
) -> Result<Verdict, JudgeError> {
    let k = assignment.tests.len();
    let Some(candidate) = candidate else {
        return Ok(Verdict::no_code(k));
    };
    let binary = match compile_c99(&candidate.source, workdir, cc) {
        Ok(b) => b,
        Err(JudgeError::CompileError { diagnostics }) => return Ok(Verdict::compile_error(k, diagnostics)),
        Err(e) => return Err(e),
    };
    let run = run_tests(&binary, &assignment.tests, limits)?;
    Ok(Verdict {
        classification: classify(baseline, &run.pass_vector),
        pass_vector: run.pass_vector,
        outcomes: run.outcomes,
        compile_error: None,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgramOutcome {
    pub fixed: bool,
    pub partial: bool,
    pub verdicts: Vec<Verdict>,
}

/// Strict majority: 3 of 5, 2 of 3, 3 of 4.
pub fn vote_threshold(n: usize) -> usize {
    n / 2 + 1
}

pub fn majority_vote(verdicts: Vec<Verdict>) -> Result<ProgramOutcome, JudgeError> {
    if verdicts.is_empty() {
        return Err(JudgeError::EmptyVerdictList);
    }
    let t = vote_threshold(verdicts.len());
    let fixed = verdicts.iter().filter(|v| v.is_pass()).count() >= t;
    let partial = verdicts.iter().filter(|v| v.is_partial()).count() >= t;
    Ok(ProgramOutcome { fixed, partial, verdicts })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub total: usize,
    pub fixed: usize,
    pub pass_rate: f64,
    pub partial: usize,
    pub partial_rate: f64,
}

impl RateRow {
    fn from_outcomes<'a>(outcomes: impl Iterator<Item = &'a ProgramOutcome>) -> Self {
        let (mut total, mut fixed, mut partial) = (0, 0, 0);
        for o in outcomes {
            total += 1;
            fixed += o.fixed as usize;
            partial += o.partial as usize;
        }
        let rate = |x: usize| if total == 0 { 0.0 } else { x as f64 / total as f64 };
        Self { total, fixed, pass_rate: rate(fixed), partial, partial_rate: rate(partial) }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BugTypeTally {
    /// Evaluated programs with at least one bug of this category.
    pub programs: usize,
    pub fixed_programs: usize,
    /// Annotated bugs of this category across evaluated programs.
    pub bugs: usize,
    /// Bugs belonging to fixed programs.
    pub fixed_bugs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_assignment: BTreeMap<String, RateRow>,
    pub overall: RateRow,
    /// Keyed by main bug category; empty when no evaluated program is annotated.
    pub per_bug_type: BTreeMap<String, BugTypeTally>,
}

/// Outcomes for ids missing from the corpus are counted in the overall row only.
pub fn aggregate(outcomes: &BTreeMap<String, ProgramOutcome>, corpus: &Corpus) -> MetricsReport {
    let mut per_assignment = BTreeMap::new();
    for aid in corpus.assignments.keys() {
        let row = RateRow::from_outcomes(
            outcomes
                .iter()
                .filter(|(sid, _)| corpus.submission(sid).is_some_and(|s| &s.assignment_id == aid))
                .map(|(_, o)| o),
        );
        if row.total > 0 {
            per_assignment.insert(aid.clone(), row);
        }
    }
    let mut per_bug_type: BTreeMap<String, BugTypeTally> = BTreeMap::new();
    for (sid, o) in outcomes {
        let Some(anns) = corpus.submission(sid).and_then(|s| s.bug_annotations()) else {
            continue;
        };
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for a in anns {
            *counts.entry(a.bug_type.main.as_str()).or_default() += 1;
        }
        for (main, n) in counts {
            let t = per_bug_type.entry(main.to_string()).or_default();
            t.programs += 1;
            t.bugs += n;
            if o.fixed {
                t.fixed_programs += 1;
                t.fixed_bugs += n;
            }
        }
    }
    MetricsReport { per_assignment, overall: RateRow::from_outcomes(outcomes.values()), per_bug_type }
}

impl MetricsReport {
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<16} {:>6} {:>18} {:>18}", "assignment", "total", "fixed", "partial");
        let row = |out: &mut String, name: &str, r: &RateRow| {
            let _ = writeln!(
                out,
                "{:<16} {:>6} {:>18} {:>18}",
                name,
                r.total,
                format!("{} ({:.2}%)", r.fixed, 100.0 * r.pass_rate),
                format!("{} ({:.2}%)", r.partial, 100.0 * r.partial_rate),
            );
        };
        for (aid, r) in &self.per_assignment {
            row(&mut out, aid, r);
        }
        row(&mut out, "overall", &self.overall);
        if !self.per_bug_type.is_empty() {
            let _ = writeln!(out);
            let _ =
                writeln!(out, "{:<16} {:>9} {:>9} {:>6} {:>11}", "bug type", "programs", "fixed", "bugs", "fixed bugs");
            for (main, t) in &self.per_bug_type {
                let _ = writeln!(
                    out,
                    "{:<16} {:>9} {:>9} {:>6} {:>11}",
                    main, t.programs, t.fixed_programs, t.bugs, t.fixed_bugs
                );
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(s: &str) -> PassVector {
        s.parse().unwrap()
    }

    fn verdict(c: Classification) -> Verdict {
        Verdict { classification: c, ..Verdict::no_code(5) }
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_output(b"a \r\nb\t\n\n\n"), b"a\nb");
        assert_eq!(normalize_output(b"9"), normalize_output(b"9\n"));
        assert_ne!(normalize_output(b"a b"), normalize_output(b"ab"));
        assert_ne!(normalize_output(b"\na"), normalize_output(b"a"));
        assert!(normalize_output(b"  \n\n").is_empty());
    }

    #[test]
    fn classification_rules() {
        assert_eq!(classify(&pv("10000"), &pv("11111")), Classification::Pass);
        assert_eq!(classify(&pv("10000"), &pv("11000")), Classification::PartialRepair);
        assert_eq!(classify(&pv("10000"), &pv("01100")), Classification::Fail);
        assert_eq!(classify(&pv("10000"), &pv("10000")), Classification::Fail);
        assert_eq!(classify(&pv("00000"), &pv("00001")), Classification::PartialRepair);
        assert_eq!(classify(&pv("00000"), &pv("00000")), Classification::Fail);
    }

    #[test]
    fn voting() {
        use Classification::*;
        let vote = |cs: &[Classification]| majority_vote(cs.iter().map(|&c| verdict(c)).collect()).unwrap();
        let o = vote(&[Pass, Pass, Pass, Fail, Fail]);
        assert!(o.fixed && o.partial);
        let o = vote(&[Pass, Pass, Fail, Fail, Fail]);
        assert!(!o.fixed && !o.partial);
        let o = vote(&[Pass, Pass, PartialRepair, Fail, Fail]);
        assert!(!o.fixed && o.partial);
        let o = vote(&[Pass, NoCode, CompileError, Pass, Pass]);
        assert!(o.fixed);
        assert_eq!(majority_vote(vec![]), Err(JudgeError::EmptyVerdictList));
        assert_eq!((vote_threshold(5), vote_threshold(4), vote_threshold(3), vote_threshold(1)), (3, 3, 2, 1));
    }

    #[test]
    fn judge_no_code_and_compile_error() {
        let a = Assignment {
            id: "a".into(),
            title: None,
            description: String::new(),
            io_format: String::new(),
            examples: vec![],
            tests: vec![crate::corpus::TestCase { index: 1, stdin: b"".to_vec(), expected_stdout: b"hi".to_vec() }],
        };
        let base = pv("0");
        let lim = ExecLimits::default();
        let cc = CompilerConfig::default();
        let v = judge_candidate(None, &a, &base, &lim, &cc, None).unwrap();
        assert_eq!(v.classification, Classification::NoCode);
        let bad = CandidateProgram {
            source: "int main(){return x;}".into(),
            extraction_method: crate::gateway::ExtractionMethod::WholeText,
        };
        let v = judge_candidate(Some(&bad), &a, &base, &lim, &cc, None).unwrap();
        assert_eq!(v.classification, Classification::CompileError);
        assert!(v.compile_error.unwrap().contains("error"));
        let good = CandidateProgram {
            source: "#include <stdio.h>\nint main(){printf(\"hi\\n\");return 0;}".into(),
            extraction_method: crate::gateway::ExtractionMethod::WholeText,
        };
        assert_eq!(
            judge_candidate(Some(&good), &a, &base, &lim, &cc, None).unwrap().classification,
            Classification::Pass
        );
    }
}
