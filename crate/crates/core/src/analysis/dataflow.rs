//! Def-use extraction over the C syntax tree.
//!
//! Extraction runs in two passes. The first resolves every variable
//! occurrence to a scoped variable and numbers it: variables get normalized
//! names `v1, v2, ...` in order of first appearance, and each occurrence of a
//! variable gets a 1-based ordinal in source order. The second pass walks the
//! program in evaluation order, tracking the set of reaching definitions per
//! variable, and emits an edge `(variable, def ordinal, use ordinal)` for every
//! definition reaching a use. Branches merge by union and loops iterate to a
//! fixed point, so every reaching definition along any path produces an edge.
//!
//! Definition sites: declarations with an initializer, file-scope and
//! `static` declarations (zero-initialized), function parameters, `#define`
//! names, enumerators, assignments, `++`/`--`, and the destination arguments
//! of `scanf`, `fscanf`, `sscanf`, `gets` and `fgets`. Stores through a
//! subscript, member or dereference add a definition without killing earlier
//! ones. Identifiers that are never declared start with a synthetic
//! definition at ordinal 0.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::anonymize::StdlibNames;
use super::ast::{Ast, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DataFlowEdge {
    /// Normalized variable number (`v{var}`).
    pub var: u32,
    pub def: u32,
    #[serde(rename = "use")]
    pub use_site: u32,
}

impl fmt::Display for DataFlowEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(v{}, def@{}, use@{})", self.var, self.def, self.use_site)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataFlowGraph {
    edges: BTreeSet<DataFlowEdge>,
    variable_count: u32,
}

impl DataFlowGraph {
    pub fn from_edges(edges: impl IntoIterator<Item = DataFlowEdge>) -> Self {
        let edges: BTreeSet<_> = edges.into_iter().collect();
        let variable_count = edges.iter().map(|e| e.var).max().unwrap_or(0);
        Self { edges, variable_count }
    }

    pub fn edges(&self) -> impl Iterator<Item = &DataFlowEdge> {
        self.edges.iter()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, edge: &DataFlowEdge) -> bool {
        self.edges.contains(edge)
    }

    /// Number of distinct variables seen, edges or not.
    pub fn variable_count(&self) -> u32 {
        self.variable_count
    }

    pub fn intersection_len(&self, other: &DataFlowGraph) -> usize {
        self.edges.intersection(&other.edges).count()
    }
}

const SCANF_FAMILY: &[(&str, usize)] = &[("scanf", 1), ("fscanf", 2), ("sscanf", 2)];
const LINE_READERS: &[&str] = &["gets", "fgets"];

pub fn extract_dataflow(ast: &Ast, stdlib: &StdlibNames) -> DataFlowGraph {
    if ast.is_empty() {
        return DataFlowGraph::default();
    }
    let resolution = Resolver::run(ast, stdlib);
    let variable_count = resolution.vars.len() as u32;
    let mut flow = Flow { ast, res: &resolution, edges: BTreeSet::new() };
    // Undeclared names start out defined at the synthetic ordinal 0.
    let mut global: State = resolution
        .vars
        .iter()
        .enumerate()
        .filter(|(_, v)| v.undeclared)
        .map(|(i, _)| (i, BTreeSet::from([0])))
        .collect();
    flow.top_level(Ast::ROOT, &mut global);
    DataFlowGraph { edges: flow.edges, variable_count }
}

type VarId = usize;

struct VarInfo {
    undeclared: bool,
    occurrences: u32,
}

struct Resolution {
    vars: Vec<VarInfo>,
    /// identifier node -> (variable, occurrence ordinal)
    occurrences: HashMap<NodeId, (VarId, u32)>,
}

struct Resolver<'a> {
    ast: &'a Ast,
    stdlib: &'a StdlibNames,
    functions: HashSet<&'a str>,
    scopes: Vec<HashMap<&'a str, VarId>>,
    undeclared: HashMap<&'a str, VarId>,
    out: Resolution,
}

impl<'a> Resolver<'a> {
    fn run(ast: &'a Ast, stdlib: &'a StdlibNames) -> Resolution {
        let mut r = Resolver {
            ast,
            stdlib,
            functions: collect_function_names(ast),
            scopes: vec![HashMap::new()],
            undeclared: HashMap::new(),
            out: Resolution { vars: Vec::new(), occurrences: HashMap::new() },
        };
        r.walk(Ast::ROOT);
        r.out
    }

    fn new_var(&mut self, undeclared: bool) -> VarId {
        self.out.vars.push(VarInfo { undeclared, occurrences: 0 });
        self.out.vars.len() - 1
    }

    fn occur(&mut self, node: NodeId, var: VarId) {
        let info = &mut self.out.vars[var];
        info.occurrences += 1;
        self.out.occurrences.insert(node, (var, info.occurrences));
    }

    fn declare(&mut self, node: NodeId) {
        let Some(name) = self.ast.text(node) else { return };
        let var = self.new_var(false);
        self.scopes.last_mut().expect("scope stack never empty").insert(name, var);
        self.occur(node, var);
    }

    fn reference(&mut self, node: NodeId) {
        let Some(name) = self.ast.text(node) else { return };
        if let Some(var) = self.scopes.iter().rev().find_map(|s| s.get(name).copied()) {
            self.occur(node, var);
            return;
        }
        if self.stdlib.is_preserved(name) || self.functions.contains(name) {
            return;
        }
        let var = match self.undeclared.get(name) {
            Some(&v) => v,
            None => {
                let v = self.new_var(true);
                self.undeclared.insert(name, v);
                v
            }
        };
        self.occur(node, var);
    }

    fn scoped(&mut self, f: impl FnOnce(&mut Self)) {
        self.scopes.push(HashMap::new());
        f(self);
        self.scopes.pop();
    }

    fn walk_children(&mut self, id: NodeId) {
        for &c in &self.ast.node(id).children {
            self.walk(c);
        }
    }

    fn walk(&mut self, id: NodeId) {
        let ast = self.ast;
        match ast.node(id).kind {
            "identifier" => self.reference(id),
            "function_definition" => {
                if let Some(t) = ast.child_by_field(id, "type") {
                    self.walk(t);
                }
                self.scoped(|r| {
                    if let Some(params) = ast.child_by_field(id, "declarator").and_then(|d| function_parameters(ast, d))
                    {
                        for p in ast.named_children(params) {
                            if let Some(d) = ast.child_by_field(p, "declarator") {
                                r.declarator(d);
                            }
                        }
                    }
                    if let Some(body) = ast.child_by_field(id, "body") {
                        r.walk(body);
                    }
                });
            }
            "declaration" => {
                for &c in &ast.node(id).children {
                    if ast.node(c).field == Some("declarator") {
                        self.declarator(c);
                    } else {
                        self.walk(c);
                    }
                }
            }
            "preproc_def" => {
                if let Some(name) = ast.child_by_field(id, "name") {
                    self.declare(name);
                }
            }
            "enumerator" => {
                if let Some(name) = ast.child_by_field(id, "name") {
                    self.declare(name);
                }
                if let Some(v) = ast.child_by_field(id, "value") {
                    self.walk(v);
                }
            }
            "call_expression" => {
                if let Some(f) = ast.child_by_field(id, "function") {
                    if ast.node(f).kind != "identifier" {
                        self.walk(f);
                    }
                }
                if let Some(args) = ast.child_by_field(id, "arguments") {
                    self.walk(args);
                }
            }
            "compound_statement" | "for_statement" => self.scoped(|r| r.walk_children(id)),
            "preproc_function_def" | "type_definition" | "field_declaration_list" => {}
            _ => self.walk_children(id),
        }
    }

    fn declarator(&mut self, id: NodeId) {
        let ast = self.ast;
        match ast.node(id).kind {
            "identifier" => self.declare(id),
            "init_declarator" => {
                if let Some(d) = ast.child_by_field(id, "declarator") {
                    self.declarator(d);
                }
                if let Some(v) = ast.child_by_field(id, "value") {
                    self.walk(v);
                }
            }
            "pointer_declarator" | "parenthesized_declarator" => {
                if let Some(d) = ast.child_by_field(id, "declarator") {
                    self.declarator(d);
                }
            }
            "array_declarator" => {
                if let Some(d) = ast.child_by_field(id, "declarator") {
                    self.declarator(d);
                }
                if let Some(s) = ast.child_by_field(id, "size") {
                    self.walk(s);
                }
            }
            // Prototypes declare functions, not variables.
            "function_declarator" => {}
            _ => self.walk(id),
        }
    }
}

fn collect_function_names(ast: &Ast) -> HashSet<&str> {
    let mut names = HashSet::new();
    for (_, node) in ast.nodes() {
        if node.kind != "function_declarator" {
            continue;
        }
        if let Some(&first) = node.children.first() {
            if ast.node(first).kind == "identifier" {
                if let Some(t) = ast.text(first) {
                    names.insert(t);
                }
            }
        }
    }
    names
}

/// Finds the parameter list of a function definition's declarator.
fn function_parameters(ast: &Ast, mut id: NodeId) -> Option<NodeId> {
    loop {
        let node = ast.node(id);
        if node.kind == "function_declarator" {
            return ast.child_by_field(id, "parameters");
        }
        id = ast.child_by_field(id, "declarator")?;
    }
}

type State = BTreeMap<VarId, BTreeSet<u32>>;

fn merge(into: &mut State, other: &State) {
    for (var, defs) in other {
        into.entry(*var).or_default().extend(defs.iter().copied());
    }
}

struct Flow<'a> {
    ast: &'a Ast,
    res: &'a Resolution,
    edges: BTreeSet<DataFlowEdge>,
}

impl Flow<'_> {
    fn lookup(&self, id: NodeId) -> Option<(VarId, u32)> {
        self.res.occurrences.get(&id).copied()
    }

    fn reaching(&self, var: VarId, s: &State) -> BTreeSet<u32> {
        s.get(&var).cloned().unwrap_or_default()
    }

    fn use_site(&mut self, id: NodeId, s: &State) {
        let Some((var, occ)) = self.lookup(id) else { return };
        for def in self.reaching(var, s) {
            self.edges.insert(DataFlowEdge { var: var as u32 + 1, def, use_site: occ });
        }
    }

    fn def_site(&mut self, id: NodeId, s: &mut State, strong: bool) {
        let Some((var, occ)) = self.lookup(id) else { return };
        if strong {
            s.insert(var, BTreeSet::from([occ]));
        } else {
            let mut defs = self.reaching(var, s);
            defs.insert(occ);
            s.insert(var, defs);
        }
    }

    /// A declared name with no definition yet.
    fn fresh(&mut self, id: NodeId, s: &mut State) {
        if let Some((var, _)) = self.lookup(id) {
            s.insert(var, BTreeSet::new());
        }
    }

    fn top_level(&mut self, id: NodeId, global: &mut State) {
        let ast = self.ast;
        for &c in &ast.node(id).children {
            match ast.node(c).kind {
                "function_definition" => {
                    let mut local = global.clone();
                    self.function(c, &mut local);
                }
                "declaration" => self.declaration(c, global, true),
                "preproc_ifdef" | "preproc_if" | "preproc_else" | "preproc_elif" => self.top_level(c, global),
                _ => self.visit(c, global),
            }
        }
    }

    fn declaration(&mut self, id: NodeId, s: &mut State, file_scope: bool) {
        let ast = self.ast;
        let is_static = ast.node(id).children.iter().any(|&c| {
            ast.node(c).kind == "storage_class_specifier"
                && ast.node(c).children.iter().any(|&k| ast.text(k) == Some("static"))
        });
        let init = if file_scope || is_static { DeclInit::Defined } else { DeclInit::Undefined };
        for d in ast.children_by_field(id, "declarator").collect::<Vec<_>>() {
            self.declarator(d, s, init);
        }
    }

    fn declarator(&mut self, id: NodeId, s: &mut State, init: DeclInit) {
        let ast = self.ast;
        match ast.node(id).kind {
            "identifier" => match init {
                DeclInit::Defined => self.def_site(id, s, true),
                DeclInit::Undefined => self.fresh(id, s),
            },
            "init_declarator" => {
                if let Some(v) = ast.child_by_field(id, "value") {
                    self.visit(v, s);
                }
                if let Some(d) = ast.child_by_field(id, "declarator") {
                    self.declarator(d, s, DeclInit::Defined);
                }
            }
            "pointer_declarator" | "parenthesized_declarator" => {
                if let Some(d) = ast.child_by_field(id, "declarator") {
                    self.declarator(d, s, init);
                }
            }
            "array_declarator" => {
                if let Some(size) = ast.child_by_field(id, "size") {
                    self.visit(size, s);
                }
                if let Some(d) = ast.child_by_field(id, "declarator") {
                    self.declarator(d, s, init);
                }
            }
            "function_declarator" => {}
            _ => self.visit(id, s),
        }
    }

    fn visit_field(&mut self, id: NodeId, field: &str, s: &mut State) {
        if let Some(c) = self.ast.child_by_field(id, field) {
            self.visit(c, s);
        }
    }

    fn visit_children(&mut self, id: NodeId, s: &mut State) {
        for &c in &self.ast.node(id).children {
            self.visit(c, s);
        }
    }

    fn visit(&mut self, id: NodeId, s: &mut State) {
        let ast = self.ast;
        match ast.node(id).kind {
            "identifier" => self.use_site(id, s),
            "declaration" => self.declaration(id, s, false),
            "function_definition" => {
                let mut local = s.clone();
                self.function(id, &mut local);
            }
            "preproc_def" => {
                if let Some(name) = ast.child_by_field(id, "name") {
                    self.def_site(name, s, true);
                }
            }
            "enumerator" => {
                self.visit_field(id, "value", s);
                if let Some(name) = ast.child_by_field(id, "name") {
                    self.def_site(name, s, true);
                }
            }
            "if_statement" => {
                self.visit_field(id, "condition", s);
                let mut then = s.clone();
                self.visit_field(id, "consequence", &mut then);
                if let Some(alt) = ast.child_by_field(id, "alternative") {
                    self.visit(alt, s);
                }
                merge(s, &then);
            }
            "while_statement" => {
                let (cond, body) = (ast.child_by_field(id, "condition"), ast.child_by_field(id, "body"));
                self.fixpoint(s, |f, cur| {
                    if let Some(c) = cond {
                        f.visit(c, cur);
                    }
                    let exit = cur.clone();
                    if let Some(b) = body {
                        f.visit(b, cur);
                    }
                    exit
                });
            }
            "do_statement" => {
                let (cond, body) = (ast.child_by_field(id, "condition"), ast.child_by_field(id, "body"));
                self.fixpoint(s, |f, cur| {
                    if let Some(b) = body {
                        f.visit(b, cur);
                    }
                    if let Some(c) = cond {
                        f.visit(c, cur);
                    }
                    cur.clone()
                });
            }
            "for_statement" => {
                self.visit_field(id, "initializer", s);
                let (cond, update, body) = (
                    ast.child_by_field(id, "condition"),
                    ast.child_by_field(id, "update"),
                    ast.child_by_field(id, "body"),
                );
                self.fixpoint(s, |f, cur| {
                    if let Some(c) = cond {
                        f.visit(c, cur);
                    }
                    let exit = cur.clone();
                    if let Some(b) = body {
                        f.visit(b, cur);
                    }
                    if let Some(u) = update {
                        f.visit(u, cur);
                    }
                    exit
                });
            }
            "switch_statement" => {
                self.visit_field(id, "condition", s);
                let entry = s.clone();
                if let Some(body) = ast.child_by_field(id, "body") {
                    for &c in &ast.node(body).children {
                        if ast.node(c).kind == "case_statement" {
                            merge(s, &entry);
                            self.visit_field(c, "value", s);
                            for &stmt in &ast.node(c).children {
                                if ast.node(stmt).named && ast.node(stmt).field.is_none() {
                                    self.visit(stmt, s);
                                }
                            }
                        } else {
                            self.visit(c, s);
                        }
                    }
                }
                merge(s, &entry);
            }
            "conditional_expression" => {
                self.visit_field(id, "condition", s);
                let mut a = s.clone();
                self.visit_field(id, "consequence", &mut a);
                self.visit_field(id, "alternative", s);
                merge(s, &a);
            }
            "assignment_expression" => {
                self.visit_field(id, "right", s);
                let compound =
                    ast.child_by_field(id, "operator").and_then(|op| ast.text(op)).is_some_and(|op| op != "=");
                if let Some(left) = ast.child_by_field(id, "left") {
                    self.store(left, s, compound, true);
                }
            }
            "update_expression" => {
                if let Some(arg) = ast.child_by_field(id, "argument") {
                    self.store(arg, s, true, true);
                }
            }
            "call_expression" => self.call(id, s),
            _ => self.visit_children(id, s),
        }
    }

    fn function(&mut self, id: NodeId, s: &mut State) {
        let ast = self.ast;
        if let Some(params) = ast.child_by_field(id, "declarator").and_then(|d| function_parameters(ast, d)) {
            for p in ast.named_children(params) {
                if let Some(d) = ast.child_by_field(p, "declarator") {
                    self.declarator(d, s, DeclInit::Defined);
                }
            }
        }
        self.visit_field(id, "body", s);
    }

    /// Runs `body` from the loop head until the head state stops growing.
    /// `body` returns the state on the loop's exit edge.
    fn fixpoint(&mut self, s: &mut State, mut body: impl FnMut(&mut Self, &mut State) -> State) {
        let mut head = s.clone();
        loop {
            let mut cur = head.clone();
            let exit = body(self, &mut cur);
            let mut next = head.clone();
            merge(&mut next, &cur);
            if next == head {
                *s = exit;
                return;
            }
            head = next;
        }
    }

    /// Writes through an lvalue. Only a bare identifier is a killing store.
    fn store(&mut self, id: NodeId, s: &mut State, read_first: bool, strong: bool) {
        let ast = self.ast;
        match ast.node(id).kind {
            "identifier" => {
                if read_first {
                    self.use_site(id, s);
                }
                self.def_site(id, s, strong);
            }
            "parenthesized_expression" => {
                if let Some(inner) = ast.named_children(id).next() {
                    self.store(inner, s, read_first, strong);
                }
            }
            "subscript_expression" => {
                self.visit_field(id, "index", s);
                if let Some(base) = ast.child_by_field(id, "argument") {
                    self.store(base, s, read_first, false);
                }
            }
            "field_expression" | "pointer_expression" => {
                let is_deref = ast.node(id).kind == "field_expression"
                    || ast.child_by_field(id, "operator").and_then(|o| ast.text(o)) == Some("*");
                match ast.child_by_field(id, "argument") {
                    Some(base) if is_deref => self.store(base, s, read_first, false),
                    _ => self.visit(id, s),
                }
            }
            _ => self.visit(id, s),
        }
    }

    fn call(&mut self, id: NodeId, s: &mut State) {
        let ast = self.ast;
        let callee = ast.child_by_field(id, "function");
        let name = callee.filter(|&f| ast.node(f).kind == "identifier").and_then(|f| ast.text(f));
        if let Some(f) = callee {
            self.visit(f, s);
        }
        let Some(args) = ast.child_by_field(id, "arguments") else { return };
        let args: Vec<NodeId> = ast.named_children(args).collect();
        let first_dest = match name {
            Some(n) => SCANF_FAMILY
                .iter()
                .find(|(f, _)| *f == n)
                .map(|(_, skip)| *skip)
                .or_else(|| LINE_READERS.contains(&n).then_some(0)),
            None => None,
        };
        let dest_range = match (name, first_dest) {
            (Some(n), Some(0)) if LINE_READERS.contains(&n) => 0..1,
            (_, Some(skip)) => skip..args.len(),
            _ => 0..0,
        };
        for (i, &arg) in args.iter().enumerate() {
            if dest_range.contains(&i) {
                self.read_into(arg, s);
            } else {
                self.visit(arg, s);
            }
        }
    }

    fn read_into(&mut self, arg: NodeId, s: &mut State) {
        let ast = self.ast;
        match ast.node(arg).kind {
            "pointer_expression" if ast.child_by_field(arg, "operator").and_then(|o| ast.text(o)) == Some("&") => {
                if let Some(target) = ast.child_by_field(arg, "argument") {
                    self.store(target, s, false, true);
                }
            }
            "identifier" => self.store(arg, s, false, false),
            _ => self.visit(arg, s),
        }
    }
}

#[derive(Clone, Copy)]
enum DeclInit {
    Defined,
    Undefined,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::ast::parse_ast;

    fn dfg(src: &str) -> Vec<(u32, u32, u32)> {
        let ast = parse_ast(src).unwrap();
        extract_dataflow(&ast, &StdlibNames::default()).edges().map(|e| (e.var, e.def, e.use_site)).collect()
    }

    #[test]
    fn single_def_use() {
        assert_eq!(dfg("int a=1; int b=a;"), vec![(1, 1, 2)]);
    }

    #[test]
    fn unused_variable_has_no_edges() {
        assert_eq!(dfg("int main(){int x; int y = 2; return 0;}"), vec![]);
    }

    #[test]
    fn undeclared_gets_synthetic_def() {
        assert_eq!(dfg("int main(){return q;}"), vec![(1, 0, 1)]);
    }

    #[test]
    fn branches_merge_all_reaching_defs() {
        // x: decl(1) x=1 (2) x=2 (3) use (4)
        let edges = dfg("int main(){int x; if (1) x = 1; else x = 2; return x;}");
        assert_eq!(edges, vec![(1, 2, 4), (1, 3, 4)]);
    }

    #[test]
    fn loop_carried_definitions() {
        // i: decl(1) cond(2) update(3); update reads previous i defs {1,3}
        let edges = dfg("int main(){for(int i=0;i<3;i++){} return 0;}");
        assert_eq!(edges, vec![(1, 1, 2), (1, 1, 3), (1, 3, 2), (1, 3, 3)]);
    }

    #[test]
    fn scanf_defines_its_destination() {
        // n: decl(1) &n(2) use(3)
        let edges = dfg("int main(){int n; scanf(\"%d\", &n); return n;}");
        assert_eq!(edges, vec![(1, 2, 3)]);
    }

    #[test]
    fn function_names_are_not_variables() {
        let edges = dfg("int f(int p){return p;} int main(){return f(1);}");
        assert_eq!(edges, vec![(1, 1, 2)]);
    }

    #[test]
    fn subscript_store_is_weak() {
        // a: decl(1) a[0]=(2) a[1]=(3) use(4)
        let edges = dfg("int main(){int a[2] = {0}; a[0] = 1; a[1] = 2; return a[0];}");
        assert_eq!(edges, vec![(1, 1, 4), (1, 2, 4), (1, 3, 4)]);
    }

    #[test]
    fn shadowing_creates_distinct_variables() {
        // outer x = v1: decl(1), use(2) ; inner x = v2: decl(1), use(2)
        let edges = dfg("int main(){int x = 1; { int x = 2; x; } return x;}");
        assert_eq!(edges, vec![(1, 1, 2), (2, 1, 2)]);
    }
}
