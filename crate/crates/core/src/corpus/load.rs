use std::collections::BTreeMap;
use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;

use super::{Assignment, BugAnnotation, Corpus, CorpusError, IoExample, Submission, Taxonomy, TestCase};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    id: String,
    #[serde(default)]
    title: Option<String>,
    description: String,
    io_format: String,
    #[serde(default)]
    examples: Vec<IoExample>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MetaFile {
    id: String,
    assignment_id: String,
}

/// Loads and validates a corpus directory.
pub fn load_corpus(root: &Path) -> Result<Corpus, CorpusError> {
    let assignment_dirs = subdirs(&root.join("assignments"))?;
    if assignment_dirs.is_empty() {
        return Err(malformed(&root.join("assignments"), "no assignments found"));
    }
    let taxonomy_path = root.join("taxonomy.json");
    let taxonomy =
        Taxonomy::from_json(&read_text(&taxonomy_path)?).map_err(|reason| malformed(&taxonomy_path, reason))?;

    let mut assignments = BTreeMap::new();
    for dir in assignment_dirs {
        let a = load_assignment(&dir)?;
        if assignments.contains_key(&a.id) {
            return Err(CorpusError::DuplicateId { path: dir.join("problem.json"), id: a.id });
        }
        assignments.insert(a.id.clone(), a);
    }

    let mut submissions = BTreeMap::new();
    let submissions_root = root.join("submissions");
    let submission_dirs = if submissions_root.exists() { subdirs(&submissions_root)? } else { Vec::new() };
    for dir in submission_dirs {
        let s = load_submission(&dir, &taxonomy)?;
        if !assignments.contains_key(&s.assignment_id) {
            return Err(CorpusError::DanglingAssignmentRef {
                path: dir.join("meta.json"),
                assignment_id: s.assignment_id,
            });
        }
        if submissions.contains_key(&s.id) {
            return Err(CorpusError::DuplicateId { path: dir.join("meta.json"), id: s.id });
        }
        submissions.insert(s.id.clone(), s);
    }

    Ok(Corpus { root: root.to_path_buf(), assignments, submissions, taxonomy })
}

fn load_assignment(dir: &Path) -> Result<Assignment, CorpusError> {
    let path = dir.join("problem.json");
    let problem: ProblemFile = read_json(&path)?;
    if problem.id.is_empty() {
        return Err(malformed(&path, "empty id"));
    }
    if let Some(i) = problem.examples.iter().position(|e| e.input.is_empty() || e.output.is_empty()) {
        return Err(malformed(&path, format!("example {} has empty input or output", i + 1)));
    }
    let tests = load_tests(&dir.join("tests"))?;
    Ok(Assignment {
        id: problem.id,
        title: problem.title,
        description: problem.description,
        io_format: problem.io_format,
        examples: problem.examples,
        tests,
    })
}

fn load_tests(dir: &Path) -> Result<Vec<TestCase>, CorpusError> {
    let entries = match fs::read_dir(dir) {
        Ok(entries) => entries,
        Err(e) if e.kind() == ErrorKind::NotFound => return Err(CorpusError::MissingFile { path: dir.to_path_buf() }),
        Err(e) => return Err(io_error(dir, e)),
    };
    let mut max_index = 0;
    for entry in entries {
        let entry = entry.map_err(|e| io_error(dir, e))?;
        let name = entry.file_name();
        let name = name.to_string_lossy();
        let Some((stem, ext)) = name.rsplit_once('.') else { continue };
        if ext != "in" && ext != "out" {
            continue;
        }
        let index: usize = stem
            .parse()
            .ok()
            .filter(|&k| k >= 1)
            .ok_or_else(|| malformed(&entry.path(), "test files must be named <k>.in / <k>.out with k >= 1"))?;
        max_index = max_index.max(index);
    }
    if max_index == 0 {
        return Err(CorpusError::MissingFile { path: dir.join("1.in") });
    }
    // Every index up to the largest one must have both files.
    (1..=max_index)
        .map(|index| {
            Ok(TestCase {
                index,
                stdin: read_bytes(&dir.join(format!("{index}.in")))?,
                expected_stdout: read_bytes(&dir.join(format!("{index}.out")))?,
            })
        })
        .collect()
}

fn load_submission(dir: &Path, taxonomy: &Taxonomy) -> Result<Submission, CorpusError> {
    let meta_path = dir.join("meta.json");
    let meta: MetaFile = read_json(&meta_path)?;
    if meta.id.is_empty() {
        return Err(malformed(&meta_path, "empty id"));
    }
    let buggy_source = read_source(&dir.join("buggy.c"))?;
    let fixed_source = read_source(&dir.join("fixed.c"))?;

    let ann_path = dir.join("annotations.json");
    let annotations = if ann_path.exists() {
        let list: Vec<BugAnnotation> = read_json(&ann_path)?;
        let line_count = buggy_source.lines().count();
        for (i, a) in list.iter().enumerate() {
            let n = i + 1;
            if a.lines.start == 0 || a.lines.start > a.lines.end || a.lines.end > line_count {
                return Err(CorpusError::InvalidAnnotation {
                    path: ann_path,
                    reason: format!("annotation {n}: line range {} outside 1..={line_count}", a.lines),
                });
            }
            if !taxonomy.contains(&a.bug_type.main, &a.bug_type.sub) {
                return Err(CorpusError::InvalidAnnotation {
                    path: ann_path,
                    reason: format!("annotation {n}: unknown bug type {}", a.bug_type),
                });
            }
        }
        Some(list)
    } else {
        None
    };

    Ok(Submission { id: meta.id, assignment_id: meta.assignment_id, buggy_source, fixed_source, annotations })
}

fn subdirs(dir: &Path) -> Result<Vec<PathBuf>, CorpusError> {
    let entries = match fs::read_dir(dir) {
        Ok(entries) => entries,
        Err(e) if e.kind() == ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io_error(dir, e)),
    };
    let mut out = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| io_error(dir, e))?;
        if entry.file_type().map_err(|e| io_error(&entry.path(), e))?.is_dir() {
            out.push(entry.path());
        }
    }
    out.sort();
    Ok(out)
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, CorpusError> {
    fs::read(path).map_err(|e| {
        if e.kind() == ErrorKind::NotFound {
            CorpusError::MissingFile { path: path.to_path_buf() }
        } else {
            io_error(path, e)
        }
    })
}

fn read_text(path: &Path) -> Result<String, CorpusError> {
    String::from_utf8(read_bytes(path)?).map_err(|_| malformed(path, "not valid UTF-8"))
}

fn read_source(path: &Path) -> Result<String, CorpusError> {
    let text = read_text(path)?;
    if text.trim().is_empty() {
        return Err(malformed(path, "empty source file"));
    }
    Ok(text)
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CorpusError> {
    serde_json::from_str(&read_text(path)?).map_err(|e| malformed(path, e.to_string()))
}

fn malformed(path: &Path, reason: impl Into<String>) -> CorpusError {
    CorpusError::MalformedManifest { path: path.to_path_buf(), reason: reason.into() }
}

fn io_error(path: &Path, source: std::io::Error) -> CorpusError {
    CorpusError::Io { path: path.to_path_buf(), source }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::DEFAULT_TAXONOMY_JSON;

    fn write(path: &Path, content: &[u8]) {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(path, content).unwrap();
    }

    fn minimal(root: &Path) {
        write(&root.join("taxonomy.json"), DEFAULT_TAXONOMY_JSON.as_bytes());
        write(
            &root.join("assignments/a1/problem.json"),
            br#"{"id":"a1","description":"d","io_format":"io","examples":[{"input":"1","output":"1"}]}"#,
        );
        write(&root.join("assignments/a1/tests/1.in"), b"1\n");
        write(&root.join("assignments/a1/tests/1.out"), b"1\r\n");
        write(&root.join("submissions/s1/meta.json"), br#"{"id":"s1","assignment_id":"a1"}"#);
        write(&root.join("submissions/s1/buggy.c"), b"int main(){\n  return 1;\n}\n");
        write(&root.join("submissions/s1/fixed.c"), b"int main(){\n  return 0;\n}\n");
    }

    #[test]
    fn loads_minimal_corpus_verbatim() {
        let tmp = tempfile::tempdir().unwrap();
        minimal(tmp.path());
        let c = load_corpus(tmp.path()).unwrap();
        assert_eq!(c.assignments.len(), 1);
        assert_eq!(c.submissions.len(), 1);
        assert_eq!(c.assignments["a1"].tests[0].expected_stdout, b"1\r\n");
        assert_eq!(c.submissions["s1"].buggy_source, "int main(){\n  return 1;\n}\n");
        assert_eq!(c, load_corpus(tmp.path()).unwrap());
    }

    #[test]
    fn empty_directory_is_malformed() {
        let tmp = tempfile::tempdir().unwrap();
        assert!(matches!(load_corpus(tmp.path()), Err(CorpusError::MalformedManifest { .. })));
    }

    #[test]
    fn dangling_assignment() {
        let tmp = tempfile::tempdir().unwrap();
        minimal(tmp.path());
        write(&tmp.path().join("submissions/s1/meta.json"), br#"{"id":"s1","assignment_id":"zz"}"#);
        let err = load_corpus(tmp.path()).unwrap_err();
        assert!(matches!(err, CorpusError::DanglingAssignmentRef { ref assignment_id, .. } if assignment_id == "zz"));
        assert!(err.path().ends_with("s1/meta.json"));
    }

    #[test]
    fn duplicate_submission_id() {
        let tmp = tempfile::tempdir().unwrap();
        minimal(tmp.path());
        let src = tmp.path().join("submissions/s1");
        let dst = tmp.path().join("submissions/s2");
        fs::create_dir_all(&dst).unwrap();
        for f in ["meta.json", "buggy.c", "fixed.c"] {
            fs::copy(src.join(f), dst.join(f)).unwrap();
        }
        assert!(matches!(load_corpus(tmp.path()), Err(CorpusError::DuplicateId { .. })));
    }

    #[test]
    fn missing_tests_dir_and_gap() {
        let tmp = tempfile::tempdir().unwrap();
        minimal(tmp.path());
        write(&tmp.path().join("assignments/a1/tests/3.in"), b"");
        write(&tmp.path().join("assignments/a1/tests/3.out"), b"");
        let err = load_corpus(tmp.path()).unwrap_err();
        assert!(matches!(err, CorpusError::MissingFile { ref path } if path.ends_with("2.in")));

        fs::remove_dir_all(tmp.path().join("assignments/a1/tests")).unwrap();
        assert!(matches!(load_corpus(tmp.path()), Err(CorpusError::MissingFile { .. })));
    }

    #[test]
    fn annotation_validation() {
        let tmp = tempfile::tempdir().unwrap();
        minimal(tmp.path());
        let ann = tmp.path().join("submissions/s1/annotations.json");
        write(
            &ann,
            br#"[{"lines":[2,2],"bug_type":["Other","ReturnValue"],"repair_type":"StatementModification","correlated":false}]"#,
        );
        let c = load_corpus(tmp.path()).unwrap();
        assert_eq!(c.submissions["s1"].bug_annotations().unwrap().len(), 1);

        write(
            &ann,
            br#"[{"lines":[2,9],"bug_type":["Other","ReturnValue"],"repair_type":"StatementModification","correlated":false}]"#,
        );
        assert!(matches!(load_corpus(tmp.path()), Err(CorpusError::InvalidAnnotation { .. })));

        write(
            &ann,
            br#"[{"lines":[2,2],"bug_type":["Other","Bogus"],"repair_type":"StatementModification","correlated":false}]"#,
        );
        assert!(matches!(load_corpus(tmp.path()), Err(CorpusError::InvalidAnnotation { .. })));

        write(
            &ann,
            br#"[{"lines":[2,2],"bug_type":["Other","ReturnValue"],"repair_type":"Rewrite","correlated":false}]"#,
        );
        assert!(matches!(load_corpus(tmp.path()), Err(CorpusError::MalformedManifest { .. })));
    }

    #[test]
    fn missing_taxonomy() {
        let tmp = tempfile::tempdir().unwrap();
        minimal(tmp.path());
        fs::remove_file(tmp.path().join("taxonomy.json")).unwrap();
        assert!(matches!(load_corpus(tmp.path()), Err(CorpusError::MissingFile { .. })));
    }
}
