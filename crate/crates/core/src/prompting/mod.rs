//! Repair prompt assembly.

mod variant;

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Assignment, BugAnnotation, Submission};

pub use variant::{BaseVariant, BugInfoLevel, IoMode, PromptVariant};

pub const DEFAULT_TEMPLATES_TOML: &str = include_str!("../../data/prompt_templates.toml");

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PromptError {
    #[error("variant {0} needs a reference peer")]
    MissingPeer(String),
    #[error("variant {0} needs bug annotations")]
    MissingAnnotations(String),
    #[error("variant {0} needs test cases")]
    MissingTests(String),
    #[error("prompt needs about {estimate} tokens, over the limit of {limit}")]
    PromptTooLong { estimate: usize, limit: usize },
    #[error("invalid prompt variant {0}")]
    InvalidVariant(String),
    #[error("invalid prompt templates: {0}")]
    InvalidTemplates(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SectionLabel {
    #[serde(rename = "TD")]
    Td,
    #[serde(rename = "DESC")]
    Desc,
    #[serde(rename = "IO")]
    Io,
    #[serde(rename = "EXP")]
    Exp,
    #[serde(rename = "TESTS")]
    Tests,
    #[serde(rename = "REF_CODE")]
    RefCode,
    #[serde(rename = "BUGGY")]
    Buggy,
    #[serde(rename = "BUG_INFO")]
    BugInfo,
    #[serde(rename = "TD_final")]
    TdFinal,
}

impl SectionLabel {
    /// Canonical section order.
    pub const ORDER: [SectionLabel; 9] = [
        SectionLabel::Td,
        SectionLabel::Desc,
        SectionLabel::Io,
        SectionLabel::Exp,
        SectionLabel::Tests,
        SectionLabel::RefCode,
        SectionLabel::Buggy,
        SectionLabel::BugInfo,
        SectionLabel::TdFinal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SectionLabel::Td => "TD",
            SectionLabel::Desc => "DESC",
            SectionLabel::Io => "IO",
            SectionLabel::Exp => "EXP",
            SectionLabel::Tests => "TESTS",
            SectionLabel::RefCode => "REF_CODE",
            SectionLabel::Buggy => "BUGGY",
            SectionLabel::BugInfo => "BUG_INFO",
            SectionLabel::TdFinal => "TD_final",
        }
    }

    fn is_code(self) -> bool {
        matches!(self, SectionLabel::RefCode | SectionLabel::Buggy)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectionHeaders {
    pub desc: String,
    pub io: String,
    pub exp: String,
    pub tests: String,
    pub ref_code: String,
    pub buggy: String,
    pub bug_info: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IoTemplates {
    pub example: String,
    pub test: String,
    pub input: String,
    pub output: String,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BugInfoTemplates {
    pub lines: String,
    pub item: String,
    pub bug_type: String,
    pub repair_type: String,
    pub correlated: String,
    pub uncorrelated: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PromptTemplates {
    pub td: String,
    pub td_final: String,
    pub headers: SectionHeaders,
    pub io: IoTemplates,
    pub bug_info: BugInfoTemplates,
}

impl PromptTemplates {
    pub fn from_toml(text: &str) -> Result<Self, PromptError> {
        toml::from_str(text).map_err(|e| PromptError::InvalidTemplates(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self, PromptError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PromptError::InvalidTemplates(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    fn header(&self, label: SectionLabel) -> Option<&str> {
        let h = &self.headers;
        Some(match label {
            SectionLabel::Td | SectionLabel::TdFinal => return None,
            SectionLabel::Desc => &h.desc,
            SectionLabel::Io => &h.io,
            SectionLabel::Exp => &h.exp,
            SectionLabel::Tests => &h.tests,
            SectionLabel::RefCode => &h.ref_code,
            SectionLabel::Buggy => &h.buggy,
            SectionLabel::BugInfo => &h.bug_info,
        })
    }
}

impl Default for PromptTemplates {
    fn default() -> Self {
        Self::from_toml(DEFAULT_TEMPLATES_TOML).expect("bundled templates are valid")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSection {
    pub label: SectionLabel,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub variant: PromptVariant,
    pub sections: Vec<PromptSection>,
    pub rendered: String,
    /// Rough token count, one token per four bytes.
    pub token_estimate: usize,
}

impl Prompt {
    pub fn labels(&self) -> Vec<SectionLabel> {
        self.sections.iter().map(|s| s.label).collect()
    }

    pub fn section(&self, label: SectionLabel) -> Option<&str> {
        self.sections.iter().find(|s| s.label == label).map(|s| s.body.as_str())
    }
}

pub fn estimate_tokens(text: &str) -> usize {
    text.len().div_ceil(4)
}

/// Builds prompts from a fixed set of templates and an optional token budget.
#[derive(Debug, Clone, Default)]
pub struct PromptBuilder {
    templates: PromptTemplates,
    max_tokens: Option<usize>,
}

impl PromptBuilder {
    pub fn new(templates: PromptTemplates) -> Self {
        Self { templates, max_tokens: None }
    }

    pub fn with_max_tokens(mut self, limit: Option<usize>) -> Self {
        self.max_tokens = limit;
        self
    }

    pub fn templates(&self) -> &PromptTemplates {
        &self.templates
    }

    /// `peer` is the selected peer submission; its fixed source becomes the
    /// reference code. `bug_info` defaults to the submission's own annotations.
    pub fn build(
        &self,
        variant: PromptVariant,
        assignment: &Assignment,
        submission: &Submission,
        peer: Option<&Submission>,
        bug_info: Option<&[BugAnnotation]>,
    ) -> Result<Prompt, PromptError> {
        let t = &self.templates;
        let name = variant.to_string();
        let mut sections = vec![
            (SectionLabel::Td, t.td.clone()),
            (SectionLabel::Desc, assignment.description.clone()),
            (SectionLabel::Io, assignment.io_format.clone()),
        ];
        if variant.shows_examples() {
            sections.push((SectionLabel::Exp, self.examples(assignment)));
        }
        if variant.shows_tests() {
            if assignment.tests.is_empty() {
                return Err(PromptError::MissingTests(name));
            }
            sections.push((SectionLabel::Tests, self.tests(assignment)));
        }
        if variant.needs_peer() {
            let peer = peer.ok_or_else(|| PromptError::MissingPeer(name.clone()))?;
            sections.push((SectionLabel::RefCode, peer.fixed_source.clone()));
        }
        sections.push((SectionLabel::Buggy, submission.buggy_source.clone()));
        if variant.needs_annotations() {
            let anns = bug_info
                .or_else(|| submission.bug_annotations())
                .filter(|a| !a.is_empty())
                .ok_or_else(|| PromptError::MissingAnnotations(name.clone()))?;
            sections.push((SectionLabel::BugInfo, self.bug_info(variant.bug_info, anns)));
        }
        sections.push((SectionLabel::TdFinal, t.td_final.clone()));

        let sections: Vec<PromptSection> =
            sections.into_iter().map(|(label, body)| PromptSection { label, body }).collect();
        let rendered = render_sections(t, &sections);
        let token_estimate = estimate_tokens(&rendered);
        if let Some(limit) = self.max_tokens {
            if token_estimate > limit {
                return Err(PromptError::PromptTooLong { estimate: token_estimate, limit });
            }
        }
        Ok(Prompt { variant, sections, rendered, token_estimate })
    }

    fn examples(&self, a: &Assignment) -> String {
        let io = &self.templates.io;
        let mut out = String::new();
        for (i, ex) in a.examples.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "{}", fill(&io.example, &[("index", &(i + 1).to_string())]));
            push_io_block(&mut out, io, &ex.input, &ex.output);
            if let Some(note) = &ex.note {
                let _ = writeln!(out, "{}", fill(&io.note, &[("note", note)]));
            }
        }
        out.truncate(out.trim_end_matches('\n').len());
        out
    }

    fn tests(&self, a: &Assignment) -> String {
        let io = &self.templates.io;
        let mut out = String::new();
        for (i, tc) in a.tests.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "{}", fill(&io.test, &[("index", &tc.index.to_string())]));
            push_io_block(
                &mut out,
                io,
                &String::from_utf8_lossy(&tc.stdin),
                &String::from_utf8_lossy(&tc.expected_stdout),
            );
        }
        out.truncate(out.trim_end_matches('\n').len());
        out
    }

    fn bug_info(&self, level: BugInfoLevel, anns: &[BugAnnotation]) -> String {
        let b = &self.templates.bug_info;
        let lines: Vec<String> = anns.iter().map(|a| a.lines.to_string()).collect();
        let mut out = fill(&b.lines, &[("lines", &lines.join(", "))]);
        if level >= BugInfoLevel::Type {
            for (i, a) in anns.iter().enumerate() {
                let mut parts = vec![fill(&b.bug_type, &[("bug_type", &a.bug_type.to_string())])];
                if level >= BugInfoLevel::Repair {
                    parts.push(fill(&b.repair_type, &[("repair_type", a.repair_type.describe())]));
                }
                if level >= BugInfoLevel::Correlation {
                    parts.push(if a.correlated { b.correlated.clone() } else { b.uncorrelated.clone() });
                }
                let item = fill(&b.item, &[("index", &(i + 1).to_string()), ("lines", &a.lines.to_string())]);
                let _ = write!(out, "\n{} {}.", item, parts.join("; "));
            }
        }
        out
    }
}

/// Builds a prompt with the bundled templates and no token limit.
pub fn build_prompt(
    variant: PromptVariant,
    assignment: &Assignment,
    submission: &Submission,
    peer: Option<&Submission>,
    bug_info: Option<&[BugAnnotation]>,
) -> Result<Prompt, PromptError> {
    PromptBuilder::default().build(variant, assignment, submission, peer, bug_info)
}

fn push_io_block(out: &mut String, io: &IoTemplates, input: &str, output: &str) {
    let _ = writeln!(out, "{}", io.input);
    push_fenced(out, "", input);
    let _ = writeln!(out, "{}", io.output);
    push_fenced(out, "", output);
}

fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    let mut s = template.to_string();
    for (k, v) in vars {
        s = s.replace(&format!("{{{k}}}"), v);
    }
    s
}

/// A backtick fence longer than any backtick run in `body` (at least three).
pub fn fence_for(body: &str) -> String {
    let mut longest = 0;
    let mut run = 0;
    for c in body.chars() {
        if c == '`' {
            run += 1;
            longest = longest.max(run);
        } else {
            run = 0;
        }
    }
    "`".repeat((longest + 1).max(3))
}

fn push_fenced(out: &mut String, lang: &str, body: &str) {
    let fence = fence_for(body);
    let _ = writeln!(out, "{fence}{lang}");
    out.push_str(body);
    if !body.ends_with('\n') {
        out.push('\n');
    }
    let _ = writeln!(out, "{fence}");
}

fn render_sections(t: &PromptTemplates, sections: &[PromptSection]) -> String {
    let mut out = String::new();
    for (i, s) in sections.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        if let Some(h) = t.header(s.label) {
            let _ = writeln!(out, "{h}");
        }
        if s.label.is_code() {
            push_fenced(&mut out, "c", &s.body);
        } else {
            out.push_str(&s.body);
            if !s.body.ends_with('\n') {
                out.push('\n');
            }
        }
    }
    out
}

/// Re-renders a prompt from its sections.
pub fn render(prompt: &Prompt, templates: &PromptTemplates) -> String {
    render_sections(templates, &prompt.sections)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{BugType, IoExample, LineRange, RepairType, TestCase};

    fn assignment() -> Assignment {
        Assignment {
            id: "a".into(),
            title: None,
            description: "Print the sum of two integers.".into(),
            io_format: "Two integers on one line; print their sum.".into(),
            examples: vec![IoExample { input: "1 2".into(), output: "3".into(), note: Some("1+2=3".into()) }],
            tests: vec![TestCase { index: 1, stdin: b"4 5\n".to_vec(), expected_stdout: b"9\n".to_vec() }],
        }
    }

    fn submission(src: &str) -> Submission {
        Submission {
            id: "s".into(),
            assignment_id: "a".into(),
            buggy_source: src.into(),
            fixed_source: "int main(){return 0;}\n".into(),
            annotations: Some(vec![BugAnnotation {
                lines: LineRange::new(4, 6),
                bug_type: BugType::new("Output", "Format"),
                repair_type: RepairType::StatementModification,
                correlated: true,
            }]),
        }
    }

    use SectionLabel::*;

    #[test]
    fn basic_sections() {
        let p = build_prompt(PromptVariant::BASIC, &assignment(), &submission("int main(){}"), None, None).unwrap();
        assert_eq!(p.labels(), vec![Td, Desc, Io, Exp, Buggy, TdFinal]);
    }

    #[test]
    fn par_adds_reference_before_buggy() {
        let peer = submission("x");
        let p =
            build_prompt(PromptVariant::PAR, &assignment(), &submission("int main(){}"), Some(&peer), None).unwrap();
        assert_eq!(p.labels(), vec![Td, Desc, Io, Exp, RefCode, Buggy, TdFinal]);
        assert_eq!(p.section(RefCode), Some("int main(){return 0;}\n"));
    }

    #[test]
    fn bug_line_only_shows_range() {
        let s = submission("int main(){}");
        let v = PromptVariant::PAR.with_bug_info(BugInfoLevel::Line);
        let p = build_prompt(v, &assignment(), &s, Some(&s), None).unwrap();
        let info = p.section(BugInfo).unwrap();
        assert!(info.contains("4-6"));
        assert!(!info.contains("Format") && !info.contains("repaired") && !info.contains("related"));

        let v = PromptVariant::PAR.with_bug_info(BugInfoLevel::Correlation);
        let info = build_prompt(v, &assignment(), &s, Some(&s), None).unwrap().section(BugInfo).unwrap().to_string();
        assert!(info.contains("Output / Format"));
        assert!(info.contains("statement modification"));
        assert!(info.contains("is related"));
    }

    #[test]
    fn test_case_modes() {
        let s = submission("int main(){}");
        let v = PromptVariant::BASIC.with_io(IoMode::TestCases);
        let p = build_prompt(v, &assignment(), &s, None, None).unwrap();
        assert_eq!(p.labels(), vec![Td, Desc, Io, Tests, Buggy, TdFinal]);
        assert!(p.section(Tests).unwrap().contains("4 5\n"));
        let v = PromptVariant::BASIC.with_io(IoMode::ExamplesAndTestCases);
        let p = build_prompt(v, &assignment(), &s, None, None).unwrap();
        assert_eq!(p.labels(), vec![Td, Desc, Io, Exp, Tests, Buggy, TdFinal]);
        let mut a = assignment();
        a.tests.clear();
        assert!(matches!(build_prompt(v, &a, &s, None, None), Err(PromptError::MissingTests(_))));
    }

    #[test]
    fn missing_inputs() {
        let mut s = submission("int main(){}");
        assert!(matches!(
            build_prompt(PromptVariant::PAR, &assignment(), &s, None, None),
            Err(PromptError::MissingPeer(_))
        ));
        s.annotations = None;
        let v = PromptVariant::BASIC.with_bug_info(BugInfoLevel::Line);
        assert!(matches!(build_prompt(v, &assignment(), &s, None, None), Err(PromptError::MissingAnnotations(_))));
    }

    #[test]
    fn removing_peer_gives_basic() {
        let s = submission("int main(){}");
        let par = build_prompt(PromptVariant::PAR, &assignment(), &s, Some(&s), None).unwrap();
        let basic = build_prompt(PromptVariant::BASIC, &assignment(), &s, None, None).unwrap();
        let stripped: Vec<_> = par.sections.iter().filter(|x| x.label != RefCode).cloned().collect();
        assert_eq!(stripped, basic.sections);
    }

    #[test]
    fn fences_outgrow_backticks() {
        assert_eq!(fence_for("plain"), "```");
        assert_eq!(fence_for("a ``` b"), "````");
        let s = submission("/* ```` */ int main(){}");
        let p = build_prompt(PromptVariant::BASIC, &assignment(), &s, None, None).unwrap();
        assert!(p.rendered.contains("`````c\n/* ```` */ int main(){}\n`````\n"));
    }

    #[test]
    fn deterministic_and_budgeted() {
        let s = submission("int main(){}");
        let a = build_prompt(PromptVariant::BASIC, &assignment(), &s, None, None).unwrap();
        let b = build_prompt(PromptVariant::BASIC, &assignment(), &s, None, None).unwrap();
        assert_eq!(a.rendered, b.rendered);
        assert_eq!(render(&a, &PromptTemplates::default()), a.rendered);
        assert_eq!(a.token_estimate, a.rendered.len().div_ceil(4));
        let tight = PromptBuilder::default().with_max_tokens(Some(10));
        assert!(matches!(
            tight.build(PromptVariant::BASIC, &assignment(), &s, None, None),
            Err(PromptError::PromptTooLong { .. })
        ));
    }

    #[test]
    fn rendered_starts_with_td_and_ends_with_final() {
        let s = submission("int main(){}");
        let p = build_prompt(PromptVariant::BASIC, &assignment(), &s, None, None).unwrap();
        let t = PromptTemplates::default();
        assert!(p.rendered.starts_with(&t.td));
        assert!(p.rendered.ends_with(&format!("{}\n", t.td_final)));
    }
}
