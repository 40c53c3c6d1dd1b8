//! Converting runtime terms back to surface syntax for printing.

use std::collections::HashMap;

use crate::reader::{print_ast, Ast, OperatorTable};
use crate::terms::{Term, VarId};

/// Names unbound variables `_1`, `_2`, ... in order of first appearance;
/// one namer shared across several terms keeps the numbering consistent.
#[derive(Default)]
pub struct VarNamer {
    names: HashMap<VarId, String>,
    fixed: HashMap<VarId, String>,
}

impl VarNamer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Uses source names for the given variables instead of `_k`.
    pub fn with_names(names: impl IntoIterator<Item = (VarId, String)>) -> Self {
        VarNamer {
            names: HashMap::new(),
            fixed: names.into_iter().collect(),
        }
    }

    pub fn name(&mut self, v: VarId) -> String {
        if let Some(n) = self.fixed.get(&v) {
            return n.clone();
        }
        let next = self.names.len() + 1;
        self.names.entry(v).or_insert_with(|| format!("_{next}")).clone()
    }
}

pub fn term_to_ast(t: &Term, namer: &mut VarNamer) -> Ast {
    match t {
        Term::Var(v) => Ast::Var(namer.name(*v)),
        Term::Int(i) => Ast::Int(*i),
        Term::Ctor(name, args) => Ast::Compound(name.as_str().to_owned(), args.iter().map(|a| term_to_ast(a, namer)).collect()),
        Term::Fun(app) => Ast::Compound(
            app.name.as_str().to_owned(),
            app.args.iter().map(|a| term_to_ast(a, namer)).collect(),
        ),
        Term::Lambda(l) => {
            let params = l.params.iter().map(|p| Ast::Var(namer.name(*p))).collect();
            Ast::app("lambda", vec![Ast::list(params, Ast::nil()), term_to_ast(&l.body, namer)])
        }
        Term::Eta(e) => Ast::app("eta", vec![Ast::Var(namer.name(e.var)), term_to_ast(&e.goal, namer)]),
    }
}

pub fn term_text(t: &Term, ops: &OperatorTable, namer: &mut VarNamer) -> String {
    print_ast(&term_to_ast(t, namer), ops)
}
