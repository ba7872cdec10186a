use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::PromptError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaseVariant {
    /// No reference code.
    Basic,
    /// Reference code from the selected peer.
    PaR,
}

/// Which input/output material accompanies the problem description.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum IoMode {
    #[default]
    Examples,
    TestCases,
    ExamplesAndTestCases,
}

/// Cumulative levels of bug information; each level includes the ones below it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum BugInfoLevel {
    #[default]
    None,
    Line,
    Type,
    Repair,
    Correlation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PromptVariant {
    pub base: BaseVariant,
    pub io: IoMode,
    pub bug_info: BugInfoLevel,
}

impl PromptVariant {
    pub const BASIC: PromptVariant =
        PromptVariant { base: BaseVariant::Basic, io: IoMode::Examples, bug_info: BugInfoLevel::None };
    pub const PAR: PromptVariant =
        PromptVariant { base: BaseVariant::PaR, io: IoMode::Examples, bug_info: BugInfoLevel::None };

    pub fn with_bug_info(self, bug_info: BugInfoLevel) -> Self {
        Self { bug_info, ..self }
    }

    pub fn with_io(self, io: IoMode) -> Self {
        Self { io, ..self }
    }

    pub fn needs_peer(&self) -> bool {
        self.base == BaseVariant::PaR
    }

    pub fn needs_annotations(&self) -> bool {
        self.bug_info > BugInfoLevel::None
    }

    pub fn shows_examples(&self) -> bool {
        matches!(self.io, IoMode::Examples | IoMode::ExamplesAndTestCases)
    }

    pub fn shows_tests(&self) -> bool {
        matches!(self.io, IoMode::TestCases | IoMode::ExamplesAndTestCases)
    }

    /// Every variant evaluated in the ablations: both bases crossed with each
    /// IO mode and each bug-information level.
    pub fn all() -> Vec<PromptVariant> {
        let mut out = Vec::new();
        for base in [BaseVariant::Basic, BaseVariant::PaR] {
            for io in [IoMode::Examples, IoMode::TestCases, IoMode::ExamplesAndTestCases] {
                for bug_info in [
                    BugInfoLevel::None,
                    BugInfoLevel::Line,
                    BugInfoLevel::Type,
                    BugInfoLevel::Repair,
                    BugInfoLevel::Correlation,
                ] {
                    out.push(PromptVariant { base, io, bug_info });
                }
            }
        }
        out
    }
}

impl Default for PromptVariant {
    fn default() -> Self {
        Self::PAR
    }
}

const BUG_FLAGS: [(&str, BugInfoLevel); 4] = [
    ("bl", BugInfoLevel::Line),
    ("bt", BugInfoLevel::Type),
    ("rt", BugInfoLevel::Repair),
    ("bc", BugInfoLevel::Correlation),
];

/// Canonical form: `basic` or `par`, then optionally `+tests` or
/// `+exp-tests`, then the bug-information flags in order (`+bl+bt+rt+bc`).
impl fmt::Display for PromptVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.base {
            BaseVariant::Basic => "basic",
            BaseVariant::PaR => "par",
        })?;
        match self.io {
            IoMode::Examples => {}
            IoMode::TestCases => f.write_str("+tests")?,
            IoMode::ExamplesAndTestCases => f.write_str("+exp-tests")?,
        }
        for (flag, level) in BUG_FLAGS {
            if self.bug_info >= level {
                write!(f, "+{flag}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for PromptVariant {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |why: String| PromptError::InvalidVariant(format!("{s:?}: {why}"));
        let lower = s.trim().to_ascii_lowercase();
        let mut parts = lower.split('+');
        let base = match parts.next().unwrap_or_default() {
            "basic" => BaseVariant::Basic,
            "par" => BaseVariant::PaR,
            other => return Err(bad(format!("unknown base {other:?}, expected basic or par"))),
        };
        let mut io = IoMode::Examples;
        let mut bug_info = BugInfoLevel::None;
        for part in parts {
            match part {
                "tests" if io == IoMode::Examples => io = IoMode::TestCases,
                "exp-tests" if io == IoMode::Examples => io = IoMode::ExamplesAndTestCases,
                "tests" | "exp-tests" => return Err(bad("more than one IO mode".into())),
                flag => {
                    let Some(&(_, level)) = BUG_FLAGS.iter().find(|(f, _)| *f == flag) else {
                        return Err(bad(format!("unknown component {flag:?}")));
                    };
                    // Bug information accumulates: bt needs bl, rt needs bt, bc needs rt.
                    let expected = BUG_FLAGS.iter().find(|(_, l)| *l > bug_info).map(|(f, _)| *f);
                    if expected != Some(flag) {
                        return Err(bad(format!(
                            "{flag} must follow {}",
                            BUG_FLAGS
                                .iter()
                                .take_while(|(f, _)| *f != flag)
                                .map(|(f, _)| *f)
                                .collect::<Vec<_>>()
                                .join("+")
                        )));
                    }
                    bug_info = level;
                }
            }
        }
        Ok(PromptVariant { base, io, bug_info })
    }
}

impl Serialize for PromptVariant {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PromptVariant {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_all_variants() {
        let all = PromptVariant::all();
        assert_eq!(all.len(), 30);
        for v in all {
            assert_eq!(v.to_string().parse::<PromptVariant>().unwrap(), v);
        }
    }

    #[test]
    fn parse_examples() {
        assert_eq!("basic".parse::<PromptVariant>().unwrap(), PromptVariant::BASIC);
        assert_eq!("PaR".parse::<PromptVariant>().unwrap(), PromptVariant::PAR);
        let v: PromptVariant = "par+bl+bt".parse().unwrap();
        assert_eq!(v.bug_info, BugInfoLevel::Type);
        let v: PromptVariant = "basic+tests+bl".parse().unwrap();
        assert_eq!((v.io, v.bug_info), (IoMode::TestCases, BugInfoLevel::Line));
    }

    #[test]
    fn cumulative_rule_enforced() {
        assert!("par+bt".parse::<PromptVariant>().is_err());
        assert!("par+bl+rt".parse::<PromptVariant>().is_err());
        assert!("par+bl+bl".parse::<PromptVariant>().is_err());
        assert!("par+tests+exp-tests".parse::<PromptVariant>().is_err());
        assert!("chat".parse::<PromptVariant>().is_err());
    }
}
