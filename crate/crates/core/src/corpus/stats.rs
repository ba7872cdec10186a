use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Corpus, Submission};
use crate::analysis::{detect_components, parse_ast, GrammarProfile, ParseError};

/// Per-program bug-count buckets: 1, 2, 3, 4, 5, more than 5.
pub const BUG_COUNT_BUCKETS: [&str; 6] = ["1", "2", "3", "4", "5", ">5"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentStats {
    pub assignment_id: String,
    pub programs: usize,
    pub loc_avg: f64,
    pub loc_median: f64,
    pub loc_max: usize,
    pub struct_programs: usize,
    pub pointer_programs: usize,
    pub multidim_array_programs: usize,
    /// Programs using at least one of struct, pointer, multi-dimensional array.
    pub complex_component_programs: usize,
    pub custom_function_programs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub assignments: Vec<AssignmentStats>,
    pub overall: AssignmentStats,
}

/// Non-blank lines.
pub fn loc(source: &str) -> usize {
    source.lines().filter(|l| !l.trim().is_empty()).count()
}

pub fn corpus_stats(corpus: &Corpus) -> Result<StatsReport, ParseError> {
    let mut rows = Vec::new();
    let mut all = Vec::new();
    for aid in corpus.assignments.keys() {
        let mut programs = Vec::new();
        for s in corpus.submissions_of(aid) {
            let profile = detect_components(&parse_ast(&s.buggy_source)?);
            programs.push((loc(&s.buggy_source), profile));
        }
        rows.push(summarize(aid, &programs));
        all.extend(programs);
    }
    Ok(StatsReport { assignments: rows, overall: summarize("overall", &all) })
}

fn summarize(id: &str, programs: &[(usize, GrammarProfile)]) -> AssignmentStats {
    let mut locs: Vec<usize> = programs.iter().map(|(l, _)| *l).collect();
    locs.sort_unstable();
    let n = locs.len();
    let loc_avg = if n == 0 { 0.0 } else { locs.iter().sum::<usize>() as f64 / n as f64 };
    let loc_median = match n {
        0 => 0.0,
        _ if n % 2 == 1 => locs[n / 2] as f64,
        _ => (locs[n / 2 - 1] + locs[n / 2]) as f64 / 2.0,
    };
    let count = |f: fn(&GrammarProfile) -> bool| programs.iter().filter(|(_, p)| f(p)).count();
    AssignmentStats {
        assignment_id: id.to_string(),
        programs: n,
        loc_avg,
        loc_median,
        loc_max: locs.last().copied().unwrap_or(0),
        struct_programs: count(|p| p.has_struct),
        pointer_programs: count(|p| p.has_pointer),
        multidim_array_programs: count(|p| p.has_multidim_array),
        complex_component_programs: count(|p| p.has_struct || p.has_pointer || p.has_multidim_array),
        custom_function_programs: count(GrammarProfile::has_custom_functions),
    }
}

impl StatsReport {
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<14} {:>9} {:>8} {:>8} {:>6} {:>7} {:>8} {:>8} {:>5} {:>5}",
            "ID", "#Programs", "LOC avg", "median", "max", "Struct", "Pointer", "M-Array", "CGC", "CF"
        );
        for row in self.assignments.iter().chain(std::iter::once(&self.overall)) {
            let _ = writeln!(
                out,
                "{:<14} {:>9} {:>8.1} {:>8.1} {:>6} {:>7} {:>8} {:>8} {:>5} {:>5}",
                row.assignment_id,
                row.programs,
                row.loc_avg,
                row.loc_median,
                row.loc_max,
                row.struct_programs,
                row.pointer_programs,
                row.multidim_array_programs,
                row.complex_component_programs,
                row.custom_function_programs
            );
        }
        out
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnnotationStatsError {
    #[error("no submission carries bug annotations")]
    NoAnnotations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationStats {
    pub assignment_id: String,
    pub annotated_programs: usize,
    pub unannotated_programs: usize,
    pub total_bugs: usize,
    /// Program counts per [`BUG_COUNT_BUCKETS`] entry.
    pub bucket_counts: [usize; 6],
    /// `bucket_counts / annotated_programs`; all zero when nothing is annotated.
    pub bucket_proportions: [f64; 6],
    pub multi_bug_programs: usize,
    /// Multi-bug programs with at least one correlated annotation.
    pub related_programs: usize,
    pub related_proportion: f64,
    /// True when there are no multi-bug programs; `related_proportion` is then 0.
    pub related_undefined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationReport {
    pub assignments: Vec<AnnotationStats>,
    pub overall: AnnotationStats,
}

pub fn annotation_stats(corpus: &Corpus) -> Result<AnnotationReport, AnnotationStatsError> {
    let rows: Vec<AnnotationStats> =
        corpus.assignments.keys().map(|aid| tally(aid, corpus.submissions_of(aid))).collect();
    let overall = tally("overall", corpus.submissions.values());
    if overall.annotated_programs == 0 {
        return Err(AnnotationStatsError::NoAnnotations);
    }
    Ok(AnnotationReport { assignments: rows, overall })
}

fn tally<'a>(id: &str, subs: impl Iterator<Item = &'a Submission>) -> AnnotationStats {
    let mut s = AnnotationStats {
        assignment_id: id.to_string(),
        annotated_programs: 0,
        unannotated_programs: 0,
        total_bugs: 0,
        bucket_counts: [0; 6],
        bucket_proportions: [0.0; 6],
        multi_bug_programs: 0,
        related_programs: 0,
        related_proportion: 0.0,
        related_undefined: true,
    };
    for sub in subs {
        let Some(anns) = sub.bug_annotations() else {
            s.unannotated_programs += 1;
            continue;
        };
        s.annotated_programs += 1;
        s.total_bugs += anns.len();
        s.bucket_counts[anns.len().min(6) - 1] += 1;
        if anns.len() >= 2 {
            s.multi_bug_programs += 1;
            if anns.iter().any(|a| a.correlated) {
                s.related_programs += 1;
            }
        }
    }
    if s.annotated_programs > 0 {
        let n = s.annotated_programs as f64;
        for (p, &c) in s.bucket_proportions.iter_mut().zip(&s.bucket_counts) {
            *p = c as f64 / n;
        }
    }
    if s.multi_bug_programs > 0 {
        s.related_undefined = false;
        s.related_proportion = s.related_programs as f64 / s.multi_bug_programs as f64;
    }
    s
}

impl AnnotationReport {
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:<14}", "ID");
        for b in BUG_COUNT_BUCKETS {
            let _ = write!(out, " {b:>7}");
        }
        let _ = writeln!(out, " {:>8}", "Related");
        for row in self.assignments.iter().chain(std::iter::once(&self.overall)) {
            let _ = write!(out, "{:<14}", row.assignment_id);
            for p in row.bucket_proportions {
                let _ = write!(out, " {:>6.1}%", p * 100.0);
            }
            if row.related_undefined {
                let _ = writeln!(out, " {:>8}", "n/a");
            } else {
                let _ = writeln!(out, " {:>7.1}%", row.related_proportion * 100.0);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;
    use std::path::PathBuf;

    use super::*;
    use crate::corpus::{Assignment, BugAnnotation, BugType, LineRange, RepairType, Taxonomy, TestCase};

    fn corpus(subs: Vec<(&str, &str, Option<Vec<BugAnnotation>>)>) -> Corpus {
        let mut assignments = BTreeMap::new();
        assignments.insert(
            "a".to_string(),
            Assignment {
                id: "a".into(),
                title: None,
                description: String::new(),
                io_format: String::new(),
                examples: vec![],
                tests: vec![TestCase { index: 1, stdin: vec![], expected_stdout: vec![] }],
            },
        );
        let submissions = subs
            .into_iter()
            .map(|(id, src, anns)| {
                let s = Submission {
                    id: id.into(),
                    assignment_id: "a".into(),
                    buggy_source: src.into(),
                    fixed_source: src.into(),
                    annotations: anns,
                };
                (id.to_string(), s)
            })
            .collect();
        Corpus { root: PathBuf::new(), assignments, submissions, taxonomy: Taxonomy::default() }
    }

    fn ann(correlated: bool) -> BugAnnotation {
        BugAnnotation {
            lines: LineRange::new(1, 1),
            bug_type: BugType::new("Loop", "LoopCondition"),
            repair_type: RepairType::StatementModification,
            correlated,
        }
    }

    #[test]
    fn single_thirteen_line_program() {
        let src = "#include <stdio.h>\n\nint main(void)\n{\n    int a;\n    int b;\n\n    scanf(\"%d\", &a);\n    scanf(\"%d\", &b);\n    a = a + b;\n    printf(\"%d\\n\", a);\n    if (a > 0)\n        a = 0;\n    return 0;\n}\n";
        assert_eq!(loc(src), 13);
        let r = corpus_stats(&corpus(vec![("s", src, None)])).unwrap();
        let o = &r.overall;
        assert_eq!((o.loc_avg, o.loc_median, o.loc_max), (13.0, 13.0, 13));
        assert_eq!(o.complex_component_programs + o.custom_function_programs, 0);
        assert_eq!(r.assignments[0], AssignmentStats { assignment_id: "a".into(), ..o.clone() });
    }

    #[test]
    fn struct_counted() {
        let r = corpus_stats(&corpus(vec![(
            "s",
            "struct Point { int x; };\nint main(){ struct Point p; p.x = 1; return 0; }\n",
            None,
        )]))
        .unwrap();
        assert_eq!(r.overall.struct_programs, 1);
        assert_eq!(r.overall.pointer_programs, 0);
    }

    #[test]
    fn even_median() {
        let r =
            corpus_stats(&corpus(vec![("s1", "int a;\n", None), ("s2", "int a;\nint b;\nint c;\n", None)])).unwrap();
        assert_eq!(r.overall.loc_median, 2.0);
        assert_eq!(r.overall.loc_avg, 2.0);
        assert_eq!(r.overall.loc_max, 3);
    }

    #[test]
    fn one_bug_each_leaves_related_undefined() {
        let r = annotation_stats(&corpus(vec![
            ("s1", "int a;", Some(vec![ann(false)])),
            ("s2", "int a;", Some(vec![ann(true)])),
            ("s3", "int a;", None),
        ]))
        .unwrap();
        assert_eq!(r.overall.bucket_proportions[0], 1.0);
        assert!(r.overall.related_undefined);
        assert_eq!(r.overall.related_proportion, 0.0);
        assert_eq!(r.overall.unannotated_programs, 1);
    }

    #[test]
    fn related_half() {
        let r = annotation_stats(&corpus(vec![
            ("s1", "int a;", Some(vec![ann(true), ann(true)])),
            ("s2", "int a;", Some(vec![ann(false), ann(false)])),
        ]))
        .unwrap();
        assert_eq!(r.overall.related_proportion, 0.5);
        assert!(!r.overall.related_undefined);
        assert_eq!(r.overall.bucket_counts, [0, 2, 0, 0, 0, 0]);
    }

    #[test]
    fn many_bugs_bucket() {
        let r = annotation_stats(&corpus(vec![("s1", "int a;", Some(vec![ann(false); 9]))])).unwrap();
        assert_eq!(r.overall.bucket_counts, [0, 0, 0, 0, 0, 1]);
    }

    #[test]
    fn no_annotations() {
        assert_eq!(
            annotation_stats(&corpus(vec![("s1", "int a;", None), ("s2", "int a;", Some(vec![]))])),
            Err(AnnotationStatsError::NoAnnotations)
        );
    }
}
