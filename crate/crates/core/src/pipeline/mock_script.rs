//! Authoring canned mock responses. A script maps submission ids to one
//! scripted reply per sample; materializing it renders each submission's
//! prompt and writes the replies under the prompt's hash.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer};

use super::{prepare_prompts, PipelineConfig, PipelineError, Workspace};
use crate::corpus::Submission;
use crate::gateway::{prompt_id, MockProvider};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScriptedReply {
    /// The submission's fixed program in a fenced block after a line of prose.
    Fixed,
    /// The fixed program as the entire reply.
    BareFixed,
    /// The unchanged buggy program in a fenced block.
    Buggy,
    /// Prose without any code.
    Prose,
    /// No response file, so the request fails.
    Missing,
    /// Verbatim contents of a file relative to the script.
    File(PathBuf),
}

impl FromStr for ScriptedReply {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "fixed" => Self::Fixed,
            "bare-fixed" => Self::BareFixed,
            "buggy" => Self::Buggy,
            "prose" => Self::Prose,
            "missing" => Self::Missing,
            _ => match s.strip_prefix("file:") {
                Some(p) if !p.is_empty() => Self::File(PathBuf::from(p)),
                _ => return Err(format!("unknown scripted reply {s:?}")),
            },
        })
    }
}

impl fmt::Display for ScriptedReply {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fixed => f.write_str("fixed"),
            Self::BareFixed => f.write_str("bare-fixed"),
            Self::Buggy => f.write_str("buggy"),
            Self::Prose => f.write_str("prose"),
            Self::Missing => f.write_str("missing"),
            Self::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl<'de> Deserialize<'de> for ScriptedReply {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(transparent)]
pub struct MockScript {
    pub replies: BTreeMap<String, Vec<ScriptedReply>>,
}

impl MockScript {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        super::read_json(path)
    }
}

const PROSE_REPLY: &str =
    "The logic looks right to me. Check the loop bounds and the output format against the examples.\n";

fn fenced(lead: &str, source: &str) -> String {
    let nl = if source.ends_with('\n') { "" } else { "\n" };
    format!("{lead}\n\n```c\n{source}{nl}```\n")
}

fn reply_text(reply: &ScriptedReply, s: &Submission, base: &Path) -> Result<Option<String>, PipelineError> {
    Ok(Some(match reply {
        ScriptedReply::Fixed => fenced("Here is the corrected program.", &s.fixed_source),
        ScriptedReply::BareFixed => s.fixed_source.clone(),
        ScriptedReply::Buggy => fenced("I could not find the problem; the program is unchanged.", &s.buggy_source),
        ScriptedReply::Prose => PROSE_REPLY.to_string(),
        ScriptedReply::Missing => return Ok(None),
        ScriptedReply::File(p) => {
            let path = base.join(p);
            std::fs::read_to_string(&path).map_err(|e| PipelineError::io(&path, e))?
        }
    }))
}

/// Writes `<dest>/<sha256(prompt)>/<k>.txt` for every scripted reply and
/// returns the number of files written. Every script entry must name a
/// corpus submission and hold exactly `samples_per_prompt` replies.
pub fn materialize_mock(
    cfg: &PipelineConfig,
    ws: &Workspace,
    script: &MockScript,
    script_dir: &Path,
    dest: &Path,
) -> Result<usize, PipelineError> {
    let n = cfg.llm.samples_per_prompt;
    for (id, replies) in &script.replies {
        if ws.corpus.submission(id).is_none() {
            return Err(PipelineError::Config(format!("mock script names unknown submission {id:?}")));
        }
        if replies.len() != n {
            return Err(PipelineError::Config(format!(
                "mock script has {} replies for {id:?}, expected samples_per_prompt = {n}",
                replies.len()
            )));
        }
    }
    let (_, prompts) = prepare_prompts(cfg, ws, None)?;
    let mock = MockProvider::new(dest);
    let mut written = 0;
    for (id, replies) in &script.replies {
        let prompt = prompts[id].prompt.as_ref().map_err(|e| PipelineError::Config(format!("{id}: {e}")))?;
        let pid = prompt_id(&prompt.rendered);
        let s = &ws.corpus.submissions[id];
        for (k, reply) in replies.iter().enumerate() {
            let Some(text) = reply_text(reply, s, script_dir)? else { continue };
            let path = mock.response_path(&pid, k);
            let dir = path.parent().expect("response path has a parent");
            std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
            std::fs::write(&path, text).map_err(|e| PipelineError::io(&path, e))?;
            written += 1;
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reply_names_round_trip() {
        for s in ["fixed", "bare-fixed", "buggy", "prose", "missing", "file:replies/a.txt"] {
            assert_eq!(s.parse::<ScriptedReply>().unwrap().to_string(), s);
        }
        assert!("file:".parse::<ScriptedReply>().is_err());
        assert!("great".parse::<ScriptedReply>().is_err());
    }

    #[test]
    fn script_parses() {
        let s: MockScript = serde_json::from_str(r#"{"s1": ["fixed", "prose"], "s2": []}"#).unwrap();
        assert_eq!(s.replies["s1"], vec![ScriptedReply::Fixed, ScriptedReply::Prose]);
        assert!(serde_json::from_str::<MockScript>(r#"{"s1": ["nope"]}"#).is_err());
    }

    #[test]
    fn fenced_reply_keeps_source_bytes() {
        assert_eq!(fenced("Fix:", "int main(){}"), "Fix:\n\n```c\nint main(){}\n```\n");
        assert_eq!(fenced("Fix:", "int main(){}\n"), "Fix:\n\n```c\nint main(){}\n```\n");
    }
}
