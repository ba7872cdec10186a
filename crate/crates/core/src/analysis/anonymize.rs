use std::collections::{HashMap, HashSet};
use std::path::Path;

use super::lexer::{tokenize, Token, TokenKind, TokenStream};

const DEFAULT_STDLIB_NAMES: &str = include_str!("../../data/stdlib_names.txt");

/// Identifiers that anonymization must keep verbatim.
#[derive(Debug, Clone)]
pub struct StdlibNames {
    names: HashSet<String>,
}

impl StdlibNames {
    pub fn parse(text: &str) -> Self {
        let names =
            text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).map(str::to_string).collect();
        Self { names }
    }

    pub fn from_file(path: &Path) -> std::io::Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.names.contains(name)
    }

    /// Whether anonymization preserves this identifier.
    pub fn is_preserved(&self, name: &str) -> bool {
        name == "main" || self.contains(name)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

impl Default for StdlibNames {
    fn default() -> Self {
        Self::parse(DEFAULT_STDLIB_NAMES)
    }
}

/// Replaces user identifiers with `v1`, `v2`, ... in order of first occurrence.
///
/// Identifiers inside `#define` directives share the same mapping so that a
/// renamed macro stays consistent with its uses.
pub fn anonymize(stream: &TokenStream, stdlib: &StdlibNames) -> TokenStream {
    let mut renamer = Renamer { map: HashMap::new(), stdlib };
    let tokens = stream
        .tokens
        .iter()
        .map(|tok| match tok.kind {
            TokenKind::Identifier => Token { text: renamer.rename(&tok.text), ..tok.clone() },
            TokenKind::Directive => Token { text: renamer.directive(&tok.text), ..tok.clone() },
            _ => tok.clone(),
        })
        .collect();
    TokenStream { tokens, lossy: stream.lossy }
}

struct Renamer<'a> {
    map: HashMap<String, String>,
    stdlib: &'a StdlibNames,
}

impl Renamer<'_> {
    fn rename(&mut self, name: &str) -> String {
        if self.stdlib.is_preserved(name) {
            return name.to_string();
        }
        let next = self.map.len() + 1;
        self.map.entry(name.to_string()).or_insert_with(|| format!("v{next}")).clone()
    }

    fn directive(&mut self, text: &str) -> String {
        let Some(body) = define_body(text) else {
            return text.to_string();
        };
        let Ok(inner) = tokenize(body) else {
            return text.to_string();
        };
        let mut parts = vec!["#define".to_string()];
        for tok in &inner.tokens {
            match tok.kind {
                TokenKind::Identifier => parts.push(self.rename(&tok.text)),
                _ => parts.push(tok.text.clone()),
            }
        }
        parts.join(" ")
    }
}

fn define_body(text: &str) -> Option<&str> {
    let rest = text.strip_prefix('#')?.trim_start();
    let body = rest.strip_prefix("define")?;
    if body.starts_with(|c: char| c.is_ascii_alphanumeric() || c == '_') {
        return None;
    }
    Some(body.trim_start())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn anon(src: &str) -> String {
        let ts = tokenize(src).unwrap();
        anonymize(&ts, &StdlibNames::default()).texts().join(" ")
    }

    #[test]
    fn variables_become_generic_names() {
        assert_eq!(anon("int count=0; count++;"), "int v1 = 0 ; v1 ++ ;");
    }

    #[test]
    fn stdlib_calls_are_preserved() {
        assert_eq!(anon(r#"printf("%d", total);"#), r#"printf ( "%d" , v1 ) ;"#);
    }

    #[test]
    fn main_is_preserved() {
        assert_eq!(anon("int main(){int a; return a;}"), "int main ( ) { int v1 ; return v1 ; }");
    }

    #[test]
    fn idempotent_on_already_anonymized() {
        let ts = tokenize("int v2 = 3; int total = v2 + 1; printf(\"%d\", total);").unwrap();
        let names = StdlibNames::default();
        let once = anonymize(&ts, &names);
        assert_eq!(anonymize(&once, &names), once);
    }

    #[test]
    fn define_shares_the_mapping() {
        assert_eq!(anon("#define LIMIT 10\nint a[LIMIT];"), "#define v1 10 int v2 [ v1 ] ;");
    }

    #[test]
    fn include_untouched() {
        assert_eq!(anon("#include <stdio.h>\nint x;"), "#include <stdio.h> int v1 ;");
    }

    #[test]
    fn custom_allowlist() {
        let names = StdlibNames::parse("# comment\nfoo\n\n");
        assert_eq!(names.len(), 1);
        let ts = tokenize("foo(bar);").unwrap();
        assert_eq!(anonymize(&ts, &names).texts(), vec!["foo", "(", "v1", ")", ";"]);
    }
}
