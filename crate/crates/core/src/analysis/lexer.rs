//! A small C99 lexer.
//!
//! Comments and whitespace are dropped. A preprocessor line (including its
//! backslash continuations) becomes a single [`TokenKind::Directive`] token
//! whose text is the directive with comments removed and internal whitespace
//! collapsed to single spaces.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LexError {
    #[error("unterminated comment starting on line {line}")]
    UnterminatedComment { line: usize },
    #[error("unterminated string or character literal on line {line}")]
    UnterminatedString { line: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TokenKind {
    Keyword,
    Identifier,
    Literal,
    Operator,
    Punctuation,
    Directive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    /// 1-based line of the first character.
    pub line: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenStream {
    pub tokens: Vec<Token>,
    /// Set when the source bytes were not valid UTF-8 and were decoded lossily.
    pub lossy: bool,
}

impl TokenStream {
    pub fn kinds(&self) -> Vec<TokenKind> {
        self.tokens.iter().map(|t| t.kind).collect()
    }

    pub fn texts(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.text.as_str()).collect()
    }

    /// Renders the stream back to C text: tokens separated by one space,
    /// directives terminated by a newline so they re-lex as one token.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for tok in &self.tokens {
            let fresh_line = out.is_empty() || out.ends_with('\n');
            if tok.kind == TokenKind::Directive {
                if !fresh_line {
                    out.push('\n');
                }
                out.push_str(&tok.text);
                out.push('\n');
            } else {
                if !fresh_line {
                    out.push(' ');
                }
                out.push_str(&tok.text);
            }
        }
        out
    }
}

pub const C99_KEYWORDS: &[&str] = &[
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

pub fn is_keyword(word: &str) -> bool {
    C99_KEYWORDS.contains(&word)
}

// Longest first.
const OPERATORS: &[&str] = &[
    "<<=", ">>=", "...", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "*=", "/=", "%=", "+=",
    "-=", "&=", "^=", "|=", "##", "+", "-", "*", "/", "%", "<", ">", "=", "!", "~", "&", "|", "^", "?", ":", ".", "#",
];

const PUNCTUATION: &[u8] = b"()[]{};,";

pub fn tokenize(source: &str) -> Result<TokenStream, LexError> {
    Lexer::new(source).run()
}

/// Lexes raw bytes, falling back to lossy UTF-8 decoding.
pub fn tokenize_bytes(source: &[u8]) -> Result<TokenStream, LexError> {
    match std::str::from_utf8(source) {
        Ok(s) => tokenize(s),
        Err(_) => {
            let decoded = String::from_utf8_lossy(source);
            let mut ts = tokenize(&decoded)?;
            ts.lossy = true;
            Ok(ts)
        }
    }
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    line: usize,
    /// True while only whitespace has been seen since the last newline.
    at_line_start: bool,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self { src, bytes: src.as_bytes(), pos: 0, line: 1, at_line_start: true }
    }

    fn peek(&self, off: usize) -> Option<u8> {
        self.bytes.get(self.pos + off).copied()
    }

    fn run(mut self) -> Result<TokenStream, LexError> {
        let mut tokens = Vec::new();
        while self.pos < self.bytes.len() {
            let c = self.bytes[self.pos];
            match c {
                b'\n' => {
                    self.line += 1;
                    self.pos += 1;
                    self.at_line_start = true;
                }
                b' ' | b'\t' | b'\r' | 0x0b | 0x0c => self.pos += 1,
                b'\\' if matches!(self.peek(1), Some(b'\n')) => {
                    self.pos += 2;
                    self.line += 1;
                }
                b'\\' if matches!((self.peek(1), self.peek(2)), (Some(b'\r'), Some(b'\n'))) => {
                    self.pos += 3;
                    self.line += 1;
                }
                b'/' if self.peek(1) == Some(b'/') => self.skip_line_comment(),
                b'/' if self.peek(1) == Some(b'*') => self.skip_block_comment()?,
                b'#' if self.at_line_start => {
                    let tok = self.directive()?;
                    tokens.push(tok);
                }
                _ => {
                    self.at_line_start = false;
                    let tok = self.token()?;
                    tokens.push(tok);
                }
            }
        }
        Ok(TokenStream { tokens, lossy: false })
    }

    fn skip_line_comment(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
            if self.bytes[self.pos] == b'\\' && self.peek(1) == Some(b'\n') {
                self.pos += 1;
                self.line += 1;
            }
            self.pos += 1;
        }
    }

    fn skip_block_comment(&mut self) -> Result<(), LexError> {
        let start_line = self.line;
        self.pos += 2;
        loop {
            match self.bytes.get(self.pos) {
                None => return Err(LexError::UnterminatedComment { line: start_line }),
                Some(b'*') if self.peek(1) == Some(b'/') => {
                    self.pos += 2;
                    return Ok(());
                }
                Some(b'\n') => {
                    self.line += 1;
                    self.pos += 1;
                }
                Some(_) => self.pos += 1,
            }
        }
    }

    /// Skips a quoted literal starting at `self.pos`, returning its end offset.
    fn skip_quoted(&mut self, quote: u8) -> Result<(), LexError> {
        let start_line = self.line;
        self.pos += 1;
        loop {
            match self.bytes.get(self.pos) {
                None | Some(b'\n') => return Err(LexError::UnterminatedString { line: start_line }),
                Some(b'\\') => {
                    if self.peek(1) == Some(b'\n') {
                        self.line += 1;
                    }
                    self.pos += 2;
                }
                Some(&c) if c == quote => {
                    self.pos += 1;
                    return Ok(());
                }
                Some(_) => self.pos += 1,
            }
        }
    }

    fn directive(&mut self) -> Result<Token, LexError> {
        let line = self.line;
        let mut text = String::new();
        while self.pos < self.bytes.len() {
            let c = self.bytes[self.pos];
            match c {
                b'\n' => break,
                b'\\' if self.peek(1) == Some(b'\n') => {
                    self.pos += 2;
                    self.line += 1;
                    text.push(' ');
                }
                b'\\' if matches!((self.peek(1), self.peek(2)), (Some(b'\r'), Some(b'\n'))) => {
                    self.pos += 3;
                    self.line += 1;
                    text.push(' ');
                }
                b'/' if self.peek(1) == Some(b'/') => self.skip_line_comment(),
                b'/' if self.peek(1) == Some(b'*') => {
                    self.skip_block_comment()?;
                    text.push(' ');
                }
                b'"' | b'\'' => {
                    let start = self.pos;
                    self.skip_quoted(c)?;
                    text.push_str(&self.src[start..self.pos]);
                }
                _ => {
                    let ch = self.src[self.pos..].chars().next().unwrap();
                    text.push(ch);
                    self.pos += ch.len_utf8();
                }
            }
        }
        Ok(Token { kind: TokenKind::Directive, text: collapse_whitespace(&text), line })
    }

    fn token(&mut self) -> Result<Token, LexError> {
        let line = self.line;
        let start = self.pos;
        let c = self.bytes[self.pos];

        // String and char literals, with optional encoding prefix.
        let prefix_len = literal_prefix_len(&self.bytes[self.pos..]);
        if let Some(n) = prefix_len {
            self.pos += n;
            let quote = self.bytes[self.pos];
            self.skip_quoted(quote)?;
            return Ok(self.make(TokenKind::Literal, start, line));
        }
        if c == b'"' || c == b'\'' {
            self.skip_quoted(c)?;
            return Ok(self.make(TokenKind::Literal, start, line));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while self.pos < self.bytes.len()
                && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
            {
                self.pos += 1;
            }
            let word = &self.src[start..self.pos];
            let kind = if is_keyword(word) { TokenKind::Keyword } else { TokenKind::Identifier };
            return Ok(self.make(kind, start, line));
        }
        if c.is_ascii_digit() || (c == b'.' && self.peek(1).is_some_and(|d| d.is_ascii_digit())) {
            self.number();
            return Ok(self.make(TokenKind::Literal, start, line));
        }
        if PUNCTUATION.contains(&c) {
            self.pos += 1;
            return Ok(self.make(TokenKind::Punctuation, start, line));
        }
        let rest = &self.src[self.pos..];
        if let Some(op) = OPERATORS.iter().find(|op| rest.starts_with(**op)) {
            self.pos += op.len();
            return Ok(self.make(TokenKind::Operator, start, line));
        }
        // Anything else (stray `@`, `$`, non-ASCII) is a single-char token.
        let ch = rest.chars().next().unwrap();
        self.pos += ch.len_utf8();
        Ok(self.make(TokenKind::Punctuation, start, line))
    }

    /// pp-number: digits, letters, `_`, `.`, and signs following an exponent char.
    fn number(&mut self) {
        while let Some(c) = self.bytes.get(self.pos).copied() {
            let signed_exponent = (c == b'+' || c == b'-')
                && self.pos > 0
                && matches!(self.bytes[self.pos - 1], b'e' | b'E' | b'p' | b'P')
                && !is_hex_digit_context(&self.bytes[..self.pos]);
            if signed_exponent || c.is_ascii_alphanumeric() || c == b'_' || c == b'.' {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn make(&self, kind: TokenKind, start: usize, line: usize) -> Token {
        Token { kind, text: self.src[start..self.pos].to_string(), line }
    }
}

/// In a hex literal without `p`, `e` is a digit and a following sign ends the number.
fn is_hex_digit_context(before: &[u8]) -> bool {
    let tail: Vec<u8> =
        before.iter().rev().take_while(|c| c.is_ascii_alphanumeric() || **c == b'_' || **c == b'.').copied().collect();
    let literal: Vec<u8> = tail.into_iter().rev().collect();
    let is_hex = literal.len() > 2 && (literal.starts_with(b"0x") || literal.starts_with(b"0X"));
    is_hex && matches!(literal.last(), Some(b'e' | b'E'))
}

fn literal_prefix_len(bytes: &[u8]) -> Option<usize> {
    for prefix in [&b"u8"[..], b"L", b"u", b"U"] {
        if bytes.starts_with(prefix) && matches!(bytes.get(prefix.len()), Some(b'"' | b'\'')) {
            return Some(prefix.len());
        }
    }
    None
}

fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}
