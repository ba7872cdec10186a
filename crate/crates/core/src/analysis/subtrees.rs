use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ast::{Ast, AstNode, ERROR_KIND};

/// Leaf kinds whose text is a user-chosen name.
pub const NAME_LEAF_KINDS: &[&str] = &["identifier", "field_identifier", "type_identifier", "statement_identifier"];

/// Leaf kinds whose text is a literal value.
pub const LITERAL_LEAF_KINDS: &[&str] = &[
    "number_literal",
    "string_content",
    "character",
    "escape_sequence",
    "system_lib_string",
    "preproc_arg",
    "char_literal",
    "string_literal",
    "true",
    "false",
    "null",
];

/// Multiset of canonical subtree fingerprints, one per internal node.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubtreeBag {
    counts: BTreeMap<String, usize>,
    total: usize,
}

impl SubtreeBag {
    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn count(&self, fingerprint: &str) -> usize {
        self.counts.get(fingerprint).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.counts.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Size of the multiset intersection.
    pub fn intersection_len(&self, other: &SubtreeBag) -> usize {
        self.counts.iter().map(|(k, &n)| n.min(other.count(k))).sum()
    }

    fn insert(&mut self, fingerprint: String) {
        *self.counts.entry(fingerprint).or_default() += 1;
        self.total += 1;
    }
}

/// How a leaf appears inside a fingerprint: names and literals collapse to
/// their kind, other tokens keep their text.
pub fn leaf_label(node: &AstNode) -> String {
    if node.kind == ERROR_KIND || NAME_LEAF_KINDS.contains(&node.kind) || LITERAL_LEAF_KINDS.contains(&node.kind) {
        return node.kind.to_string();
    }
    let text = node.text.as_deref().unwrap_or_default();
    if !node.named || text == node.kind {
        text.to_string()
    } else {
        format!("{}={}", node.kind, text)
    }
}

pub fn enumerate_subtrees(ast: &Ast) -> SubtreeBag {
    let mut bag = SubtreeBag::default();
    if ast.is_empty() {
        return bag;
    }
    // Children have larger ids than their parent, so a reverse sweep sees
    // every child before the node that contains it.
    let mut serialized: Vec<String> = vec![String::new(); ast.len()];
    for id in (0..ast.len()).rev() {
        let node = ast.node(id);
        if node.is_leaf() {
            serialized[id] = leaf_label(node);
            continue;
        }
        let mut s = String::with_capacity(16);
        s.push('(');
        s.push_str(node.kind);
        for &c in &node.children {
            s.push(' ');
            s.push_str(&serialized[c]);
        }
        s.push(')');
        bag.insert(s.clone());
        serialized[id] = s;
    }
    bag
}
