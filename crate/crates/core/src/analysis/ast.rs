//! Owned, arena-backed syntax tree built from tree-sitter's C grammar.
//!
//! Comments and zero-width `MISSING` nodes inserted by error recovery are not
//! copied, so every leaf corresponds to a real source token. Syntax errors
//! surface as nodes of kind [`ERROR_KIND`].

use std::cell::RefCell;
use std::sync::LazyLock;

use thiserror::Error;
use tree_sitter::{Language, Node, Parser};

pub const ERROR_KIND: &str = "ERROR";

pub type NodeId = usize;

static C_LANGUAGE: LazyLock<Language> = LazyLock::new(|| tree_sitter_c::LANGUAGE.into());

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("parser produced no tree: {0}")]
    FatalParse(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AstNode {
    /// Grammar production name; for anonymous tokens this is the token text.
    pub kind: &'static str,
    /// Field name under which the parent holds this node, if any.
    pub field: Option<&'static str>,
    pub named: bool,
    pub children: Vec<NodeId>,
    /// Source text, present on leaves only.
    pub text: Option<String>,
    /// 1-based line of the first byte.
    pub line: usize,
}

impl AstNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Nodes are stored in pre-order, so ids increase in source order and the
/// root is always id 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ast {
    nodes: Vec<AstNode>,
}

thread_local! {
    static PARSER: RefCell<Option<Parser>> = const { RefCell::new(None) };
}

pub fn parse_ast(source: &str) -> Result<Ast, ParseError> {
    PARSER.with(|cell| {
        let mut slot = cell.borrow_mut();
        if slot.is_none() {
            let mut parser = Parser::new();
            parser.set_language(&C_LANGUAGE).map_err(|e| ParseError::FatalParse(e.to_string()))?;
            *slot = Some(parser);
        }
        let parser = slot.as_mut().expect("parser initialized above");
        let tree =
            parser.parse(source, None).ok_or_else(|| ParseError::FatalParse("tree-sitter returned no tree".into()))?;
        let mut nodes = Vec::new();
        copy_node(tree.root_node(), None, source.as_bytes(), &mut nodes);
        Ok(Ast { nodes })
    })
}

fn keep(node: &Node) -> bool {
    !node.is_missing() && node.kind() != "comment"
}

fn copy_node(node: Node, field: Option<&'static str>, src: &[u8], out: &mut Vec<AstNode>) -> NodeId {
    let id = out.len();
    let kind =
        if node.is_error() { ERROR_KIND } else { C_LANGUAGE.node_kind_for_id(node.kind_id()).unwrap_or(ERROR_KIND) };
    out.push(AstNode {
        kind,
        field,
        named: node.is_named(),
        children: Vec::new(),
        text: None,
        line: node.start_position().row + 1,
    });
    let mut children = Vec::new();
    let mut cursor = node.walk();
    if cursor.goto_first_child() {
        loop {
            let child = cursor.node();
            if keep(&child) {
                let field = cursor.field_id().and_then(|f| C_LANGUAGE.field_name_for_id(f.get()));
                children.push(copy_node(child, field, src, out));
            }
            if !cursor.goto_next_sibling() {
                break;
            }
        }
    }
    if children.is_empty() {
        let text = node.utf8_text(src).unwrap_or_default().to_string();
        out[id].text = Some(text);
    }
    out[id].children = children;
    id
}

impl Ast {
    pub const ROOT: NodeId = 0;

    pub fn root(&self) -> &AstNode {
        &self.nodes[Self::ROOT]
    }

    pub fn node(&self, id: NodeId) -> &AstNode {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &AstNode)> {
        self.nodes.iter().enumerate()
    }

    pub fn internal_node_count(&self) -> usize {
        self.nodes.iter().filter(|n| !n.children.is_empty()).count()
    }

    pub fn contains_error(&self) -> bool {
        self.nodes.iter().any(|n| n.kind == ERROR_KIND)
    }

    pub fn child_by_field(&self, id: NodeId, field: &str) -> Option<NodeId> {
        self.nodes[id].children.iter().copied().find(|c| self.nodes[*c].field == Some(field))
    }

    pub fn children_by_field<'a>(&'a self, id: NodeId, field: &'a str) -> impl Iterator<Item = NodeId> + 'a {
        self.nodes[id].children.iter().copied().filter(move |c| self.nodes[*c].field == Some(field))
    }

    pub fn named_children(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes[id].children.iter().copied().filter(move |c| self.nodes[*c].named)
    }

    /// Leaf text, or `None` for internal nodes.
    pub fn text(&self, id: NodeId) -> Option<&str> {
        self.nodes[id].text.as_deref()
    }

    /// S-expression dump of the tree (leaves show their text), for debugging.
    pub fn to_sexp(&self) -> String {
        let mut out = String::new();
        self.sexp_into(Self::ROOT, &mut out);
        out
    }

    fn sexp_into(&self, id: NodeId, out: &mut String) {
        let node = &self.nodes[id];
        match &node.text {
            Some(t) => out.push_str(&format!("{}:{:?}", node.kind, t)),
            None => {
                out.push('(');
                out.push_str(node.kind);
                for &c in &node.children {
                    out.push(' ');
                    self.sexp_into(c, out);
                }
                out.push(')');
            }
        }
    }
}
