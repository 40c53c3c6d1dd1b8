//! Static checks on rewrite rules: constructor discipline, left linearity,
//! the term-rewriting variable condition, overlap and exhaustiveness.

use std::collections::HashMap;

use crate::display::{term_to_ast, VarNamer};
use crate::program::Database;
use crate::reader::{print_ast, Ast, OperatorTable};
use crate::terms::{Sym, Term};
use crate::types::Type;

/// Function applications strictly inside the left side arguments.
pub fn functions_in_lhs(args: &[Ast], is_function: &dyn Fn(&str, usize) -> bool) -> Vec<String> {
    fn walk(a: &Ast, is_function: &dyn Fn(&str, usize) -> bool, out: &mut Vec<String>) {
        if let Ast::Compound(n, xs) = a {
            if is_function(n, xs.len()) {
                out.push(format!("{n}/{}", xs.len()));
            }
            xs.iter().for_each(|x| walk(x, is_function, out));
        }
    }
    let mut out = Vec::new();
    args.iter().for_each(|a| walk(a, is_function, &mut out));
    out
}

fn count_vars(a: &Ast, counts: &mut Vec<(String, usize)>) {
    match a {
        Ast::Var(v) if v != "_" => match counts.iter_mut().find(|(n, _)| n == v) {
            Some((_, c)) => *c += 1,
            None => counts.push((v.clone(), 1)),
        },
        Ast::Compound(_, xs) => xs.iter().for_each(|x| count_vars(x, counts)),
        _ => {}
    }
}

/// Variables occurring more than once in the left side.
pub fn repeated_vars(args: &[Ast]) -> Vec<String> {
    let mut counts = Vec::new();
    args.iter().for_each(|a| count_vars(a, &mut counts));
    counts.into_iter().filter(|(_, c)| *c > 1).map(|(n, _)| n).collect()
}

fn free_vars(a: &Ast, bound: &mut Vec<String>, out: &mut Vec<String>) {
    match a {
        Ast::Var(v) => {
            if v != "_" && !bound.contains(v) && !out.contains(v) {
                out.push(v.clone());
            }
        }
        Ast::Int(_) => {}
        Ast::Compound(n, xs) => {
            let binders: Vec<String> = if n == "lambda" && xs.len() == 2 {
                crate::program::list_items(&xs[0])
                    .unwrap_or_default()
                    .into_iter()
                    .filter_map(|p| match p {
                        Ast::Var(v) => Some(v),
                        _ => None,
                    })
                    .collect()
            } else if n == "eta" && xs.len() == 2 {
                match &xs[0] {
                    Ast::Var(v) => vec![v.clone()],
                    _ => vec![],
                }
            } else {
                xs.iter().for_each(|x| free_vars(x, bound, out));
                return;
            };
            let depth = bound.len();
            bound.extend(binders);
            free_vars(&xs[1], bound, out);
            bound.truncate(depth);
        }
    }
}

/// Right-side variables (not bound by `lambda` or `eta`) absent from the
/// left side.
pub fn unbound_rhs_vars(lhs: &[Ast], rhs: &Ast) -> Vec<String> {
    let mut left = Vec::new();
    lhs.iter().for_each(|a| free_vars(a, &mut Vec::new(), &mut left));
    let mut right = Vec::new();
    free_vars(rhs, &mut Vec::new(), &mut right);
    right.into_iter().filter(|v| !left.contains(v)).collect()
}

fn walk_subst<'a>(t: &'a Term, s: &'a HashMap<u32, Term>) -> &'a Term {
    let mut t = t;
    while let Term::Var(v) = t {
        match s.get(&v.0) {
            Some(b) => t = b,
            None => break,
        }
    }
    t
}

fn occurs(v: u32, t: &Term, s: &HashMap<u32, Term>) -> bool {
    match walk_subst(t, s) {
        Term::Var(u) => u.0 == v,
        Term::Ctor(_, xs) => xs.iter().any(|x| occurs(v, x, s)),
        _ => false,
    }
}

fn syntactic_unify(a: &Term, b: &Term, s: &mut HashMap<u32, Term>) -> bool {
    let a = walk_subst(a, s).clone();
    let b = walk_subst(b, s).clone();
    match (&a, &b) {
        (Term::Var(x), Term::Var(y)) if x == y => true,
        (Term::Var(x), t) | (t, Term::Var(x)) => {
            if occurs(x.0, t, s) {
                return false;
            }
            s.insert(x.0, t.clone());
            true
        }
        (Term::Int(x), Term::Int(y)) => x == y,
        (Term::Ctor(f, xs), Term::Ctor(g, ys)) => {
            f == g && xs.len() == ys.len() && xs.iter().zip(ys.iter()).all(|(x, y)| syntactic_unify(x, y, s))
        }
        _ => false,
    }
}

/// Whether two left-side argument tuples (each numbered from zero) unify
/// once renamed apart.
pub fn lhs_unifiable(a: &[Term], b: &[Term]) -> bool {
    let shift = a.iter().chain(b.iter()).map(max_var).max().unwrap_or(0) + 1;
    let mut s = HashMap::new();
    a.len() == b.len() && a.iter().zip(b.iter()).all(|(x, y)| syntactic_unify(x, &y.offset(shift), &mut s))
}

fn max_var(t: &Term) -> u32 {
    let mut m = 0;
    t.visit_vars(&mut |v| m = m.max(v.0));
    m
}

/// Index pairs `(i, j)`, `i < j`, of rules whose left sides unify.
pub fn check_overlap(rules: &[std::sync::Arc<crate::program::Rule>]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..rules.len() {
        for j in i + 1..rules.len() {
            if lhs_unifiable(&rules[i].lhs, &rules[j].lhs) {
                out.push((i, j));
            }
        }
    }
    out
}

/// A candidate argument pattern in the exhaustiveness procedure.
#[derive(Clone, Debug, PartialEq)]
pub enum Pat {
    Any(Type),
    Ctor(Sym, Vec<Pat>),
    Int(i64),
}

impl Pat {
    pub fn to_ast(&self) -> Ast {
        match self {
            Pat::Any(_) => Ast::Var("_".into()),
            Pat::Int(i) => Ast::Int(*i),
            Pat::Ctor(n, xs) => Ast::Compound(n.as_str().to_owned(), xs.iter().map(Pat::to_ast).collect()),
        }
    }
}

pub fn pattern_text(f: Sym, pats: &[Pat], ops: &OperatorTable) -> String {
    print_ast(&Ast::Compound(f.as_str().to_owned(), pats.iter().map(Pat::to_ast).collect()), ops)
}

fn pat_unifiable(c: &Pat, p: &Term) -> bool {
    match (c, p) {
        (_, Term::Var(_)) | (Pat::Any(_), _) => true,
        (Pat::Int(x), Term::Int(y)) => x == y,
        (Pat::Ctor(f, xs), Term::Ctor(g, ys)) => {
            f == g && xs.len() == ys.len() && xs.iter().zip(ys.iter()).all(|(x, y)| pat_unifiable(x, y))
        }
        _ => false,
    }
}

fn pat_instance(c: &Pat, p: &Term) -> bool {
    match (c, p) {
        (_, Term::Var(_)) => true,
        (Pat::Int(x), Term::Int(y)) => x == y,
        (Pat::Ctor(f, xs), Term::Ctor(g, ys)) => {
            f == g && xs.len() == ys.len() && xs.iter().zip(ys.iter()).all(|(x, y)| pat_instance(x, y))
        }
        _ => false,
    }
}

/// Skeletons of every constructor of `ty`, or `None` when the type cannot
/// be split (integers, functions, type variables).
fn skeletons(ty: &Type, db: &Database) -> Option<Vec<Pat>> {
    let (name, params) = match ty {
        Type::Bool => (crate::terms::well_known().bool_, Vec::new()),
        Type::App(n, ps) => (*n, ps.clone()),
        _ => return None,
    };
    let ctors = db.ctors_of(name);
    if ctors.is_empty() {
        return None;
    }
    Some(
        ctors
            .into_iter()
            .map(|c| Pat::Ctor(c.name, c.args.iter().map(|a| Pat::Any(a.instantiate(&params))).collect()))
            .collect(),
    )
}

/// Replaces the first `Any` (pre-order) sitting where `p` has a constructor
/// or integer by each skeleton of its type. `Err(())` if that position
/// cannot be split; `Ok(None)` if there is no such position.
fn split_first(c: &[Pat], p: &[Term], db: &Database) -> Result<Option<Vec<Vec<Pat>>>, ()> {
    for i in 0..c.len() {
        match (&c[i], &p[i]) {
            (_, Term::Var(_)) => continue,
            (Pat::Any(ty), _) => {
                let Some(sks) = skeletons(ty, db) else { return Err(()) };
                return Ok(Some(
                    sks.into_iter()
                        .map(|sk| {
                            let mut v = c.to_vec();
                            v[i] = sk;
                            v
                        })
                        .collect(),
                ));
            }
            (Pat::Ctor(f, xs), Term::Ctor(_, ys)) => {
                if let Some(subs) = split_first(xs, ys, db)? {
                    return Ok(Some(
                        subs.into_iter()
                            .map(|sub| {
                                let mut v = c.to_vec();
                                v[i] = Pat::Ctor(*f, sub);
                                v
                            })
                            .collect(),
                    ));
                }
            }
            _ => continue,
        }
    }
    Ok(None)
}

fn subtract(c: Vec<Pat>, p: &[Term], db: &Database, out: &mut Vec<Vec<Pat>>) {
    let unifiable = c.len() == p.len() && c.iter().zip(p).all(|(x, y)| pat_unifiable(x, y));
    if !unifiable {
        out.push(c);
        return;
    }
    if c.iter().zip(p).all(|(x, y)| pat_instance(x, y)) {
        return;
    }
    match split_first(&c, p, db) {
        Ok(Some(parts)) => parts.into_iter().for_each(|part| subtract(part, p, db, out)),
        _ => out.push(c),
    }
}

/// Runs the instantiation procedure: starting from one tuple of variables,
/// each rule's argument tuple removes what it covers. The survivors are the
/// missing patterns; an empty result means the rules are exhaustive.
/// Non-linear left sides are treated as linear.
pub fn check_exhaustive(arg_types: &[Type], lhs_tuples: &[Vec<Term>], db: &Database) -> Vec<Vec<Pat>> {
    let mut cands = vec![arg_types.iter().map(|t| Pat::Any(t.clone())).collect::<Vec<_>>()];
    for p in lhs_tuples {
        let mut next = Vec::new();
        for c in cands {
            subtract(c, p, db, &mut next);
        }
        cands = next;
    }
    cands
}

/// Renders a term with `_k` variables, for diagnostics.
pub fn term_display(t: &Term, ops: &OperatorTable) -> String {
    print_ast(&term_to_ast(t, &mut VarNamer::new()), ops)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::load_source;
    use crate::terms::well_known;

    fn lhs(db: &Database, f: &str) -> Vec<Vec<Term>> {
        db.rules_for(Sym::intern(f)).iter().map(|r| r.lhs.clone()).collect()
    }

    #[test]
    fn mem_is_exhaustive() {
        let (db, _) = load_source(
            "function mem(A,list(A)) =>> bool.
             mem(X,[]) ->> false.
             mem(X,[Y|Ys]) ->> (X eq Y) or mem(X,Ys).",
        )
        .unwrap();
        let f = Sym::intern("mem");
        assert!(check_exhaustive(&db.funs[&f].args, &lhs(&db, "mem"), &db).is_empty());
    }

    #[test]
    fn variable_tuple_is_exhaustive() {
        let (db, _) = load_source("constructors ab => a, b. function k(ab,int) =>> ab. k(W,X) ->> W.").unwrap();
        let f = Sym::intern("k");
        assert!(check_exhaustive(&db.funs[&f].args, &lhs(&db, "k"), &db).is_empty());
    }

    #[test]
    fn append_missing_cons_case() {
        let (db, _) = load_source("function app(list(A), list(A)) =>> list(A). app([],V) ->> V.").unwrap();
        let f = Sym::intern("app");
        let missing = check_exhaustive(&db.funs[&f].args, &lhs(&db, "app"), &db);
        assert_eq!(missing.len(), 1);
        assert!(matches!(&missing[0][0], Pat::Ctor(c, _) if *c == well_known().cons));
    }

    #[test]
    fn integer_positions_are_never_exhausted() {
        let (db, _) = load_source("function z(int) =>> int. z(0) ->> 0.").unwrap();
        let f = Sym::intern("z");
        assert_eq!(check_exhaustive(&db.funs[&f].args, &lhs(&db, "z"), &db).len(), 1);
    }

    #[test]
    fn rhs_binders_are_not_free() {
        let rhs = Ast::app(
            "lambda",
            vec![Ast::list(vec![Ast::Var("X".into())], Ast::nil()), Ast::Var("X".into())],
        );
        assert!(unbound_rhs_vars(&[], &rhs).is_empty());
        assert_eq!(unbound_rhs_vars(&[], &Ast::Var("Y".into())), vec!["Y"]);
    }

    #[test]
    fn overlap_is_syntactic_unification() {
        let x = Term::Var(crate::terms::VarId(0));
        let a = Term::atom(Sym::intern("a"));
        let b = Term::atom(Sym::intern("b"));
        assert!(!lhs_unifiable(&[x.clone(), a.clone()], &[a.clone(), b.clone()]));
        assert!(lhs_unifiable(std::slice::from_ref(&x), &[Term::Int(0)]));
        assert!(!lhs_unifiable(&[x.clone(), x.clone()], &[a, b]));
    }
}
