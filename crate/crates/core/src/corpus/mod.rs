//! Assignment corpora: on-disk layout, validation and summary statistics.
//!
//! ```text
//! root/taxonomy.json
//! root/assignments/<aid>/problem.json
//! root/assignments/<aid>/tests/<k>.in, <k>.out      k = 1..K
//! root/submissions/<sid>/meta.json
//! root/submissions/<sid>/buggy.c, fixed.c
//! root/submissions/<sid>/annotations.json           optional
//! ```

mod load;
mod stats;
mod taxonomy;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use load::load_corpus;
pub use stats::{
    annotation_stats, corpus_stats, loc, AnnotationReport, AnnotationStats, AnnotationStatsError, AssignmentStats,
    StatsReport, BUG_COUNT_BUCKETS,
};
pub use taxonomy::{Taxonomy, DEFAULT_TAXONOMY_JSON};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("missing file: {path}")]
    MissingFile { path: PathBuf },
    #[error("malformed manifest {path}: {reason}")]
    MalformedManifest { path: PathBuf, reason: String },
    #[error("{path}: unknown assignment id {assignment_id:?}")]
    DanglingAssignmentRef { path: PathBuf, assignment_id: String },
    #[error("{path}: duplicate id {id:?}")]
    DuplicateId { path: PathBuf, id: String },
    #[error("invalid annotation in {path}: {reason}")]
    InvalidAnnotation { path: PathBuf, reason: String },
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CorpusError {
    pub fn path(&self) -> &std::path::Path {
        match self {
            CorpusError::MissingFile { path }
            | CorpusError::MalformedManifest { path, .. }
            | CorpusError::DanglingAssignmentRef { path, .. }
            | CorpusError::DuplicateId { path, .. }
            | CorpusError::InvalidAnnotation { path, .. }
            | CorpusError::Io { path, .. } => path,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestCase {
    /// 1-based.
    pub index: usize,
    pub stdin: Vec<u8>,
    pub expected_stdout: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IoExample {
    pub input: String,
    pub output: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub id: String,
    pub title: Option<String>,
    pub description: String,
    pub io_format: String,
    pub examples: Vec<IoExample>,
    pub tests: Vec<TestCase>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RepairType {
    StatementAddition,
    StatementDeletion,
    StatementModification,
    PositionModification,
}

impl RepairType {
    pub fn describe(self) -> &'static str {
        match self {
            RepairType::StatementAddition => "statement addition",
            RepairType::StatementDeletion => "statement deletion",
            RepairType::StatementModification => "statement modification",
            RepairType::PositionModification => "position modification",
        }
    }
}

/// `(main, sub)` pair; serialized as a two-element array.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "(String, String)", into = "(String, String)")]
pub struct BugType {
    pub main: String,
    pub sub: String,
}

impl BugType {
    pub fn new(main: impl Into<String>, sub: impl Into<String>) -> Self {
        Self { main: main.into(), sub: sub.into() }
    }
}

impl From<(String, String)> for BugType {
    fn from((main, sub): (String, String)) -> Self {
        Self { main, sub }
    }
}

impl From<BugType> for (String, String) {
    fn from(b: BugType) -> Self {
        (b.main, b.sub)
    }
}

impl fmt::Display for BugType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} / {}", self.main, self.sub)
    }
}

/// Inclusive 1-based line range; serialized as `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "(usize, usize)", into = "(usize, usize)")]
pub struct LineRange {
    pub start: usize,
    pub end: usize,
}

impl LineRange {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }
}

impl From<(usize, usize)> for LineRange {
    fn from((start, end): (usize, usize)) -> Self {
        Self { start, end }
    }
}

impl From<LineRange> for (usize, usize) {
    fn from(r: LineRange) -> Self {
        (r.start, r.end)
    }
}

impl fmt::Display for LineRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.start == self.end {
            write!(f, "{}", self.start)
        } else {
            write!(f, "{}-{}", self.start, self.end)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BugAnnotation {
    pub lines: LineRange,
    pub bug_type: BugType,
    pub repair_type: RepairType,
    pub correlated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Submission {
    pub id: String,
    pub assignment_id: String,
    pub buggy_source: String,
    pub fixed_source: String,
    pub annotations: Option<Vec<BugAnnotation>>,
}

impl Submission {
    /// Annotations, if any are present and nonempty.
    pub fn bug_annotations(&self) -> Option<&[BugAnnotation]> {
        self.annotations.as_deref().filter(|a| !a.is_empty())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub root: PathBuf,
    pub assignments: BTreeMap<String, Assignment>,
    pub submissions: BTreeMap<String, Submission>,
    pub taxonomy: Taxonomy,
}

impl Corpus {
    pub fn assignment(&self, id: &str) -> Option<&Assignment> {
        self.assignments.get(id)
    }

    pub fn submission(&self, id: &str) -> Option<&Submission> {
        self.submissions.get(id)
    }

    /// Submissions of one assignment, in id order.
    pub fn submissions_of<'a>(&'a self, assignment_id: &'a str) -> impl Iterator<Item = &'a Submission> {
        self.submissions.values().filter(move |s| s.assignment_id == assignment_id)
    }
}
