//! Lexical, syntactic and data-flow analysis of C source.

pub mod anonymize;
pub mod ast;
pub mod components;
pub mod dataflow;
pub mod lexer;
pub mod subtrees;

pub use anonymize::{anonymize, StdlibNames};
pub use ast::{parse_ast, Ast, AstNode, NodeId, ParseError};
pub use components::{detect_components, GrammarProfile};
pub use dataflow::{extract_dataflow, DataFlowEdge, DataFlowGraph};
pub use lexer::{tokenize, tokenize_bytes, LexError, Token, TokenKind, TokenStream};
pub use subtrees::{enumerate_subtrees, SubtreeBag};
