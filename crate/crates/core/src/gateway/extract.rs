//! Pulling a C program out of a free-form model reply.

use serde::{Deserialize, Serialize};

use super::GatewayError;
use crate::analysis::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExtractionMethod {
    FencedBlock,
    WholeText,
    HeuristicStrip,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateProgram {
    pub source: String,
    pub extraction_method: ExtractionMethod,
}

/// Share of non-blank lines that must look like C for a bare reply to be
/// taken whole.
pub const WHOLE_TEXT_THRESHOLD: f64 = 0.9;

const DECL_STARTERS: &[&str] = &[
    "int", "char", "void", "float", "double", "long", "short", "unsigned", "signed", "struct", "union", "enum",
    "typedef", "static", "const", "extern", "_Bool", "bool", "size_t",
];

/// Tries, in order: the longest fenced block that mentions `main` (else the
/// longest block); the whole reply when it starts like a C file and reads as
/// C; everything from the first `#include` or declaration line onwards.
pub fn extract_code(text: &str) -> Result<CandidateProgram, GatewayError> {
    if let Some(source) = best_fenced_block(text) {
        return Ok(CandidateProgram { source: source.to_string(), extraction_method: ExtractionMethod::FencedBlock });
    }
    if starts_like_c(text) && tokenize(text).is_ok() && code_line_ratio(text) >= WHOLE_TEXT_THRESHOLD {
        return Ok(CandidateProgram { source: text.to_string(), extraction_method: ExtractionMethod::WholeText });
    }
    if let Some(rest) = strip_leading_prose(text) {
        return Ok(CandidateProgram { source: rest.to_string(), extraction_method: ExtractionMethod::HeuristicStrip });
    }
    Err(GatewayError::NoCodeFound)
}

/// Bodies of all fenced blocks, as byte slices of the input. An unclosed
/// fence runs to the end of the text.
pub fn fenced_blocks(text: &str) -> Vec<&str> {
    let mut blocks = Vec::new();
    let mut open: Option<(usize, usize)> = None; // (fence length, body start)
    let mut pos = 0;
    for line in text.split_inclusive('\n') {
        let start = pos;
        pos += line.len();
        let trimmed = line.trim_start();
        let ticks = trimmed.bytes().take_while(|&b| b == b'`').count();
        match open {
            None if ticks >= 3 && !trimmed[ticks..].contains('`') => open = Some((ticks, pos)),
            Some((len, body)) if ticks >= len && trimmed[ticks..].trim().is_empty() => {
                blocks.push(&text[body..start]);
                open = None;
            }
            _ => {}
        }
    }
    if let Some((_, body)) = open {
        blocks.push(&text[body.min(text.len())..]);
    }
    blocks
}

fn best_fenced_block(text: &str) -> Option<&str> {
    let blocks: Vec<&str> = fenced_blocks(text).into_iter().filter(|b| !b.trim().is_empty()).collect();
    longest(blocks.iter().copied().filter(|b| mentions_main(b))).or_else(|| longest(blocks.iter().copied()))
}

/// First of the longest items.
fn longest<'a>(items: impl Iterator<Item = &'a str>) -> Option<&'a str> {
    items.fold(None, |best, b| match best {
        Some(x) if x.len() >= b.len() => Some(x),
        _ => Some(b),
    })
}

fn mentions_main(code: &str) -> bool {
    tokenize(code).map(|ts| ts.tokens.iter().any(|t| t.text == "main")).unwrap_or_else(|_| code.contains("main"))
}

fn first_word(line: &str) -> &str {
    let t = line.trim_start();
    let end = t.find(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).unwrap_or(t.len());
    &t[..end]
}

fn is_decl_line(line: &str) -> bool {
    DECL_STARTERS.contains(&first_word(line))
}

fn starts_like_c(text: &str) -> bool {
    text.lines().map(str::trim).find(|l| !l.is_empty()).is_some_and(|l| l.starts_with('#') || is_decl_line(l))
}

fn looks_like_code(line: &str) -> bool {
    let t = line.trim();
    t.starts_with('#')
        || t.starts_with("//")
        || t.starts_with("/*")
        || t.starts_with('*')
        || t.ends_with(['{', '}', ';', ',', ')', ':', '('])
        || t.ends_with("*/")
        || matches!(first_word(t), "else" | "do")
}

fn code_line_ratio(text: &str) -> f64 {
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    if lines.is_empty() {
        return 0.0;
    }
    lines.iter().filter(|l| looks_like_code(l)).count() as f64 / lines.len() as f64
}

fn strip_leading_prose(text: &str) -> Option<&str> {
    let mut pos = 0;
    for line in text.split_inclusive('\n') {
        let t = line.trim_start();
        if t.starts_with("#include") || is_decl_line(t) {
            let rest = &text[pos..];
            return (rest.contains(';') || rest.contains('{')).then_some(rest);
        }
        pos += line.len();
    }
    None
}
