use std::fmt::Write as _;

use super::lexer::is_symbol_char;
use super::ops::{Fixity, OperatorTable};

/// Surface syntax tree, before names are resolved against declarations.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Ast {
    Var(String),
    Int(i64),
    Compound(String, Vec<Ast>),
}

impl Ast {
    pub fn atom(name: &str) -> Ast {
        Ast::Compound(name.to_owned(), Vec::new())
    }

    pub fn app(name: &str, args: Vec<Ast>) -> Ast {
        Ast::Compound(name.to_owned(), args)
    }

    pub fn nil() -> Ast {
        Ast::atom("[]")
    }

    pub fn cons(head: Ast, tail: Ast) -> Ast {
        Ast::app("[|]", vec![head, tail])
    }

    pub fn list(items: Vec<Ast>, tail: Ast) -> Ast {
        items.into_iter().rev().fold(tail, |t, h| Ast::cons(h, t))
    }

    pub fn name(&self) -> Option<&str> {
        match self {
            Ast::Compound(n, _) => Some(n),
            _ => None,
        }
    }

    pub fn args(&self) -> &[Ast] {
        match self {
            Ast::Compound(_, a) => a,
            _ => &[],
        }
    }

    pub fn is_atom(&self, name: &str) -> bool {
        matches!(self, Ast::Compound(n, a) if n == name && a.is_empty())
    }

    /// Splits a right-nested conjunction into its conjuncts.
    pub fn conjuncts(&self) -> Vec<Ast> {
        let mut out = Vec::new();
        let mut cur = self;
        loop {
            match cur {
                Ast::Compound(n, a) if n == "," && a.len() == 2 => {
                    out.extend(a[0].conjuncts());
                    cur = &a[1];
                }
                other => {
                    out.push(other.clone());
                    return out;
                }
            }
        }
    }

    /// Rebuilds a right-nested conjunction from a non-empty goal list.
    pub fn conjunction(goals: &[Ast]) -> Ast {
        let (last, init) = goals.split_last().expect("empty conjunction");
        init.iter()
            .rev()
            .fold(last.clone(), |acc, g| Ast::app(",", vec![g.clone(), acc]))
    }

    /// Variable names in order of first appearance, `_` excluded.
    pub fn var_names(&self, out: &mut Vec<String>) {
        match self {
            Ast::Var(v) => {
                if v != "_" && !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Ast::Int(_) => {}
            Ast::Compound(_, args) => args.iter().for_each(|a| a.var_names(out)),
        }
    }

    /// Like [`Ast::var_names`] but skipping variables bound by `lambda`
    /// parameter lists and `eta` binders.
    pub fn free_var_names(&self, out: &mut Vec<String>) {
        let mut bound = Vec::new();
        self.free_vars_in(&mut bound, out);
    }

    fn free_vars_in(&self, bound: &mut Vec<String>, out: &mut Vec<String>) {
        match self {
            Ast::Var(v) => {
                if v != "_" && !bound.contains(v) && !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Ast::Int(_) => {}
            Ast::Compound(n, args) if (n == "lambda" || n == "eta") && args.len() == 2 => {
                let mut binders = Vec::new();
                args[0].var_names(&mut binders);
                let before = bound.len();
                bound.extend(binders);
                args[1].free_vars_in(bound, out);
                bound.truncate(before);
            }
            Ast::Compound(_, args) => args.iter().for_each(|a| a.free_vars_in(bound, out)),
        }
    }

    pub fn display<'a>(&'a self, ops: &'a OperatorTable) -> AstDisplay<'a> {
        AstDisplay { ast: self, ops }
    }
}

pub struct AstDisplay<'a> {
    ast: &'a Ast,
    ops: &'a OperatorTable,
}

impl std::fmt::Display for AstDisplay<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&print_ast(self.ast, self.ops))
    }
}

/// Renders with operators in infix/prefix form and minimal parentheses.
pub fn print_ast(ast: &Ast, ops: &OperatorTable) -> String {
    let mut out = String::new();
    write_term(&mut out, ast, ops, 1200);
    out
}

fn is_letter_atom(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_lowercase()) && cs.all(|c| c.is_alphanumeric() || c == '_')
}

fn is_symbol_atom(s: &str) -> bool {
    !s.is_empty() && s.chars().all(is_symbol_char)
}

pub fn atom_text(name: &str) -> String {
    if is_letter_atom(name) || is_symbol_atom(name) || matches!(name, "[]" | "!" | ";" | "{}") {
        name.to_owned()
    } else {
        let mut s = String::from("'");
        for c in name.chars() {
            match c {
                '\'' => s.push_str("\\'"),
                '\\' => s.push_str("\\\\"),
                '\n' => s.push_str("\\n"),
                c => s.push(c),
            }
        }
        s.push('\'');
        s
    }
}

fn push_glued(out: &mut String, text: &str) {
    if let (Some(a), Some(b)) = (out.chars().last(), text.chars().next()) {
        let clash = (is_symbol_char(a) && is_symbol_char(b))
            || ((a.is_alphanumeric() || a == '_') && (b.is_alphanumeric() || b == '_'))
            || (a == ',' && b == ',');
        if clash {
            out.push(' ');
        }
    }
    out.push_str(text);
}

fn write_term(out: &mut String, ast: &Ast, ops: &OperatorTable, max: u16) {
    match ast {
        Ast::Var(v) => push_glued(out, v),
        Ast::Int(i) => {
            if *i < 0 && max < 200 {
                push_glued(out, &format!("({i})"));
            } else {
                push_glued(out, &i.to_string());
            }
        }
        Ast::Compound(name, args) => {
            if name == "[|]" && args.len() == 2 {
                write_list(out, ast, ops);
                return;
            }
            if args.is_empty() {
                let text = atom_text(name);
                if ops.is_op(name) && max < 1200 && name != "[]" {
                    // a bare operator atom as an operand
                    if max < 999 {
                        push_glued(out, &format!("({text})"));
                        return;
                    }
                }
                push_glued(out, &text);
                return;
            }
            if args.len() == 2 {
                if let Some(def) = ops.infix(name) {
                    let (lmax, rmax) = def.operand_limits();
                    let paren = def.priority > max;
                    if paren {
                        push_glued(out, "(");
                    }
                    write_term(out, &args[0], ops, lmax);
                    let op = atom_text(name);
                    if name == "," {
                        out.push(',');
                    } else if is_letter_atom(name) || matches!(name.as_str(), ":-" | "->>" | "=>") {
                        out.push(' ');
                        out.push_str(&op);
                        out.push(' ');
                    } else {
                        push_glued(out, &op);
                    }
                    write_term(out, &args[1], ops, rmax);
                    if paren {
                        out.push(')');
                    }
                    return;
                }
            }
            if args.len() == 1 {
                if let Some(def) = ops.prefix(name) {
                    let negative_literal = name == "-" && matches!(args[0], Ast::Int(_));
                    if !negative_literal {
                        let (_, amax) = def.operand_limits();
                        let paren = def.priority > max;
                        if paren {
                            push_glued(out, "(");
                        }
                        push_glued(out, &atom_text(name));
                        let arg_is_op_atom = matches!(&args[0], Ast::Compound(n, a) if a.is_empty() && ops.is_op(n));
                        if is_letter_atom(name) || arg_is_op_atom {
                            out.push(' ');
                        }
                        write_term(out, &args[0], ops, amax);
                        if paren {
                            out.push(')');
                        }
                        return;
                    }
                }
                if let Some(def) = ops.postfix(name) {
                    let (amax, _) = def.operand_limits();
                    let paren = def.priority > max;
                    if paren {
                        push_glued(out, "(");
                    }
                    write_term(out, &args[0], ops, amax);
                    push_glued(out, &atom_text(name));
                    if paren {
                        out.push(')');
                    }
                    return;
                }
            }
            push_glued(out, &atom_text(name));
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_term(out, a, ops, 999);
            }
            out.push(')');
        }
    }
}

fn write_list(out: &mut String, ast: &Ast, ops: &OperatorTable) {
    push_glued(out, "[");
    let mut cur = ast;
    let mut first = true;
    loop {
        match cur {
            Ast::Compound(n, a) if n == "[|]" && a.len() == 2 => {
                if !first {
                    out.push(',');
                }
                write_term(out, &a[0], ops, 999);
                first = false;
                cur = &a[1];
            }
            t if t.is_atom("[]") => break,
            t => {
                out.push('|');
                write_term(out, t, ops, 999);
                break;
            }
        }
    }
    out.push(']');
}

/// Renders an operator declaration in the form the reader accepts.
pub fn print_op_decl(priority: u16, fixity: Fixity, name: &str) -> String {
    let mut s = String::new();
    let _ = write!(s, "op({priority},{fixity},{})", atom_text(name));
    s
}
