#![allow(dead_code)]

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use par_core::analysis::StdlibNames;
use par_core::corpus::{load_corpus, Corpus};
use par_core::pipeline::PipelineConfig;
use rand::Rng;

pub fn toy_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/toy")
}

pub fn toy_corpus() -> Corpus {
    load_corpus(&toy_dir().join("corpus")).expect("toy corpus loads")
}

pub fn toy_config() -> PipelineConfig {
    PipelineConfig::load(&toy_dir().join("par.toml")).expect("toy config loads")
}

/// Copies a directory tree.
pub fn copy_tree(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for entry in std::fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let dest = to.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            copy_tree(&entry.path(), &dest);
        } else {
            std::fs::copy(entry.path(), dest).unwrap();
        }
    }
}

/// Every file under `root`, keyed by relative path.
pub fn read_tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

const C_KEYWORDS: &[&str] = &[
    "auto",
    "break",
    "case",
    "char",
    "const",
    "continue",
    "default",
    "do",
    "double",
    "else",
    "enum",
    "extern",
    "float",
    "for",
    "goto",
    "if",
    "inline",
    "int",
    "long",
    "register",
    "restrict",
    "return",
    "short",
    "signed",
    "sizeof",
    "static",
    "struct",
    "switch",
    "typedef",
    "union",
    "unsigned",
    "void",
    "volatile",
    "while",
    "_Bool",
    "_Complex",
    "_Imaginary",
];

/// Consistently renames every user identifier of a C program to a fresh random
/// name. Preprocessor lines, comments and literals are left alone.
pub struct Renamer<'a> {
    pub stdlib: &'a StdlibNames,
}

impl Renamer<'_> {
    /// User identifiers in order of first appearance. Names that also occur
    /// in a preprocessor line are kept as they are.
    pub fn user_identifiers(&self, src: &str) -> Vec<String> {
        let directive_words: HashSet<&str> = src
            .lines()
            .filter(|l| l.trim_start().starts_with('#'))
            .flat_map(|l| l.split(|c: char| !(c.is_ascii_alphanumeric() || c == '_')))
            .collect();
        let mut seen = Vec::new();
        scan(src, |word| {
            if self.is_user(word) && !directive_words.contains(word) && !seen.iter().any(|s| s == word) {
                seen.push(word.to_string());
            }
            word.to_string()
        });
        seen
    }

    fn is_user(&self, word: &str) -> bool {
        word != "main" && !C_KEYWORDS.contains(&word) && !self.stdlib.contains(word)
    }

    pub fn rename(&self, src: &str, rng: &mut impl Rng) -> String {
        let mut used: HashSet<String> = HashSet::new();
        let mut map = BTreeMap::new();
        for id in self.user_identifiers(src) {
            let fresh = loop {
                let len = rng.gen_range(1..=8);
                let mut name = String::from("r");
                for _ in 0..len {
                    let c = b"abcdefghijklmnopqrstuvwxyz_0123456789"[rng.gen_range(0..37)];
                    name.push(c as char);
                }
                if self.is_user(&name) && used.insert(name.clone()) {
                    break name;
                }
            };
            map.insert(id, fresh);
        }
        scan(src, |word| map.get(word).cloned().unwrap_or_else(|| word.to_string()))
    }
}

/// Rewrites identifier-like words outside directives, comments and literals.
fn scan(src: &str, mut f: impl FnMut(&str) -> String) -> String {
    let b = src.as_bytes();
    let mut out = String::with_capacity(src.len());
    let mut i = 0;
    let mut line_start = true;
    while i < b.len() {
        let c = b[i];
        if line_start && c == b'#' {
            let end = src[i..].find('\n').map_or(b.len(), |n| i + n);
            out.push_str(&src[i..end]);
            i = end;
            continue;
        }
        if c == b'\n' {
            line_start = true;
            out.push('\n');
            i += 1;
            continue;
        }
        if !c.is_ascii_whitespace() {
            line_start = false;
        }
        if src[i..].starts_with("//") {
            let end = src[i..].find('\n').map_or(b.len(), |n| i + n);
            out.push_str(&src[i..end]);
            i = end;
        } else if src[i..].starts_with("/*") {
            let end = src[i + 2..].find("*/").map_or(b.len(), |n| i + 2 + n + 2);
            out.push_str(&src[i..end]);
            i = end;
        } else if c == b'"' || c == b'\'' {
            let mut j = i + 1;
            while j < b.len() && b[j] != c {
                j += if b[j] == b'\\' { 2 } else { 1 };
            }
            let end = (j + 1).min(b.len());
            out.push_str(&src[i..end]);
            i = end;
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let mut j = i;
            while j < b.len() && (b[j].is_ascii_alphanumeric() || b[j] == b'_') {
                j += 1;
            }
            out.push_str(&f(&src[i..j]));
            i = j;
        } else if c.is_ascii_digit() {
            let mut j = i;
            while j < b.len() && (b[j].is_ascii_alphanumeric() || b[j] == b'_' || b[j] == b'.') {
                j += 1;
            }
            out.push_str(&src[i..j]);
            i = j;
        } else {
            let ch = src[i..].chars().next().unwrap();
            out.push(ch);
            i += ch.len_utf8();
        }
    }
    out
}
