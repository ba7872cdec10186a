use serde::{Deserialize, Serialize};

use super::ast::{Ast, NodeId};

const SCANF_FAMILY: &[&str] = &["scanf", "fscanf", "sscanf"];

/// Which "complex grammatical components" a program uses.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrammarProfile {
    pub has_struct: bool,
    pub has_pointer: bool,
    pub has_multidim_array: bool,
    /// Function definitions other than `main`.
    pub custom_function_count: usize,
}

impl GrammarProfile {
    pub fn has_custom_functions(&self) -> bool {
        self.custom_function_count > 0
    }
}

pub fn detect_components(ast: &Ast) -> GrammarProfile {
    let mut profile = GrammarProfile::default();
    for (id, node) in ast.nodes() {
        match node.kind {
            "struct_specifier" => profile.has_struct = true,
            "pointer_declarator" | "abstract_pointer_declarator" => profile.has_pointer = true,
            "field_expression" if operator(ast, id) == Some("->") => profile.has_pointer = true,
            "pointer_expression" => match operator(ast, id) {
                Some("*") => profile.has_pointer = true,
                // `&x` handed to scanf is input plumbing, not pointer use.
                Some("&") if !is_scanf_argument(ast, id) => profile.has_pointer = true,
                _ => {}
            },
            "array_declarator" => {
                let inner = ast.child_by_field(id, "declarator");
                if inner.is_some_and(|d| ast.node(d).kind == "array_declarator") {
                    profile.has_multidim_array = true;
                }
            }
            "function_definition" if function_name(ast, id) != Some("main") => {
                profile.custom_function_count += 1;
            }
            _ => {}
        }
    }
    profile
}

fn operator(ast: &Ast, id: NodeId) -> Option<&str> {
    ast.child_by_field(id, "operator").and_then(|o| ast.text(o))
}

fn function_name(ast: &Ast, def: NodeId) -> Option<&str> {
    let mut id = ast.child_by_field(def, "declarator")?;
    loop {
        let node = ast.node(id);
        if node.kind == "identifier" {
            return ast.text(id);
        }
        id = ast.child_by_field(id, "declarator")?;
    }
}

fn is_scanf_argument(ast: &Ast, id: NodeId) -> bool {
    // Pre-order ids: the parent is the nearest earlier node listing `id` as a child.
    let parent = (0..id).rev().find(|&p| ast.node(p).children.contains(&id));
    let Some(args) = parent.filter(|&p| ast.node(p).kind == "argument_list") else {
        return false;
    };
    let call = (0..args).rev().find(|&p| ast.node(p).children.contains(&args));
    call.and_then(|c| ast.child_by_field(c, "function"))
        .and_then(|f| ast.text(f))
        .is_some_and(|name| SCANF_FAMILY.contains(&name))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::ast::parse_ast;

    fn profile(src: &str) -> GrammarProfile {
        detect_components(&parse_ast(src).unwrap())
    }

    #[test]
    fn multidim_array() {
        assert!(profile("int g[3][4];").has_multidim_array);
        assert!(!profile("int g[3];").has_multidim_array);
    }

    #[test]
    fn plain_main_has_nothing() {
        assert_eq!(profile("int main(){return 0;}"), GrammarProfile::default());
    }

    #[test]
    fn custom_functions_exclude_main() {
        let p = profile("int f(void){return 1;} int main(){return f();}");
        assert_eq!(p.custom_function_count, 1);
        assert!(p.has_custom_functions());
    }

    #[test]
    fn struct_detected() {
        let p = profile("struct Point { int x; }; int main(){ struct Point p; p.x = 1; return p.x; }");
        assert!(p.has_struct);
        assert!(!p.has_pointer);
    }

    #[test]
    fn pointers_detected() {
        assert!(profile("int main(){int *p = 0; return 0;}").has_pointer);
        assert!(profile("void f(int a[], int *n){} int main(){return 0;}").has_pointer);
        assert!(profile("int main(){int a, b; int t = *(&a); return t;}").has_pointer);
    }

    #[test]
    fn scanf_address_is_not_pointer_use() {
        assert!(!profile("int main(){int n; scanf(\"%d\", &n); return n;}").has_pointer);
    }
}
