//! Declaration-directed type checking of clauses, rules and queries.
//!
//! Every occurrence of a predicate, function or constructor instantiates a
//! fresh copy of its declared scheme; variables are monomorphic within the
//! clause or rule that contains them.

use std::collections::HashMap;
use std::sync::Arc;

use crate::display::{term_to_ast, VarNamer};
use crate::program::{Clause, Database, Rule};
use crate::reader::print_ast;
use crate::terms::{well_known, Eta, FunApp, Lambda, Term, VarId};
use crate::types::{unify_types, Type, TypeScheme, TypeSubst};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("type error in `{item}`: `{term}` has type {found} but {expected} is required")]
pub struct TypeError {
    pub item: String,
    pub term: String,
    pub expected: String,
    pub found: String,
}

/// Result of checking one clause, rule or query.
#[derive(Clone, Debug, Default)]
pub struct Typing {
    /// Type of each local variable id (memo slots included).
    pub var_types: Vec<Type>,
    /// Argument type of each `eq` application, keyed by its memo variable.
    pub eq_types: HashMap<VarId, Type>,
}

fn scheme(args: Vec<Type>, result: Type, vars: u32) -> TypeScheme {
    TypeScheme { vars, args, result }
}

/// Signature of a built-in function; `apply` is handled separately.
pub fn builtin_scheme(name: &str, arity: usize) -> Option<TypeScheme> {
    let int2 = || vec![Type::Int, Type::Int];
    Some(match (name, arity) {
        ("+" | "-" | "*" | "div" | "mod", 2) => scheme(int2(), Type::Int, 0),
        ("abs" | "-", 1) => scheme(vec![Type::Int], Type::Int, 0),
        ("<" | ">" | "=<" | ">=" | "<=", 2) => scheme(int2(), Type::Bool, 0),
        ("and" | "or", 2) => scheme(vec![Type::Bool, Type::Bool], Type::Bool, 0),
        ("eq", 2) => scheme(vec![Type::Var(0), Type::Var(0)], Type::Bool, 1),
        _ => return None,
    })
}

struct Checker<'a> {
    db: &'a Database,
    subst: TypeSubst,
    vars: Vec<Type>,
    eq: Vec<(VarId, Type)>,
    item: &'a str,
    names: Vec<(String, VarId)>,
}

impl<'a> Checker<'a> {
    fn new(db: &'a Database, nvars: usize, item: &'a str, names: &[(String, VarId)]) -> Self {
        let mut subst = TypeSubst::new();
        let vars = (0..nvars).map(|_| subst.fresh()).collect();
        Checker {
            db,
            subst,
            vars,
            eq: Vec::new(),
            item,
            names: names.to_vec(),
        }
    }

    fn error(&self, t: &Term, expected: &Type, found: &Type) -> TypeError {
        let mut namer = VarNamer::with_names(self.names.iter().map(|(n, v)| (*v, n.clone())));
        TypeError {
            item: self.item.to_owned(),
            term: print_ast(&term_to_ast(t, &mut namer), &self.db.ops),
            expected: self.subst.apply(expected).to_string(),
            found: self.subst.apply(found).to_string(),
        }
    }

    fn expect(&mut self, t: &Term, ty: &Type) -> Result<(), TypeError> {
        let found = self.infer(t)?;
        unify_types(&found, ty, &mut self.subst).map_err(|_| self.error(t, ty, &found))
    }

    fn var_type(&mut self, v: VarId) -> Type {
        while self.vars.len() <= v.index() {
            let f = self.subst.fresh();
            self.vars.push(f);
        }
        self.vars[v.index()].clone()
    }

    fn apply_scheme(&mut self, s: &TypeScheme, args: &[Term]) -> Result<Type, TypeError> {
        let (params, result) = self.subst.instantiate(s);
        for (a, p) in args.iter().zip(&params) {
            self.expect(a, p)?;
        }
        Ok(result)
    }

    fn infer(&mut self, t: &Term) -> Result<Type, TypeError> {
        match t {
            Term::Var(v) => Ok(self.var_type(*v)),
            Term::Int(_) => Ok(Type::Int),
            Term::Ctor(name, args) => {
                let info = self.db.ctors.get(name).filter(|c| c.args.len() == args.len()).cloned();
                let Some(info) = info else {
                    let found = Type::App(*name, Vec::new());
                    return Err(self.error(t, &Type::Var(u32::MAX), &found));
                };
                self.apply_scheme(&info.scheme(), args)
            }
            Term::Fun(app) => self.infer_app(t, app),
            Term::Lambda(l) => {
                let params = l.params.iter().map(|p| self.var_type(*p)).collect();
                let body = self.infer(&l.body)?;
                Ok(Type::Fun(params, Box::new(body)))
            }
            Term::Eta(e) => {
                self.goal(&e.goal)?;
                let ty = self.var_type(e.var);
                let memo = self.var_type(e.memo);
                unify_types(&memo, &ty, &mut self.subst).map_err(|_| self.error(t, &ty, &memo))?;
                Ok(ty)
            }
        }
    }

    fn infer_app(&mut self, t: &Term, app: &FunApp) -> Result<Type, TypeError> {
        let name = app.name.as_str();
        let result = if name == "apply" && app.args.len() == 2 {
            let Some(items) = list_literal(&app.args[1]) else {
                let found = self.infer(&app.args[1])?;
                return Err(TypeError {
                    item: self.item.to_owned(),
                    term: {
                        let mut namer = VarNamer::with_names(self.names.iter().map(|(n, v)| (*v, n.clone())));
                        print_ast(&term_to_ast(t, &mut namer), &self.db.ops)
                    },
                    expected: "a list literal of arguments".into(),
                    found: self.subst.apply(&found).to_string(),
                });
            };
            let arg_types = items.iter().map(|i| self.infer(i)).collect::<Result<Vec<_>, _>>()?;
            let res = self.subst.fresh();
            let fty = Type::Fun(arg_types, Box::new(res.clone()));
            self.expect(&app.args[0], &fty)?;
            res
        } else if let Some(s) = self.db.funs.get(&app.name).filter(|s| s.args.len() == app.args.len()).cloned() {
            self.apply_scheme(&s, &app.args)?
        } else if let Some(s) = builtin_scheme(name, app.args.len()) {
            let (params, result) = self.subst.instantiate(&s);
            for (a, p) in app.args.iter().zip(&params) {
                self.expect(a, p)?;
            }
            if name == "eq" {
                if let Type::Fun(..) = self.subst.apply(&params[0]) {
                    return Err(self.error(t, &Type::Var(0), &params[0]));
                }
                self.eq.push((app.memo, params[0].clone()));
            }
            result
        } else {
            return Err(self.error(t, &Type::Var(u32::MAX), &Type::App(app.name, Vec::new())));
        };
        let memo = self.var_type(app.memo);
        unify_types(&memo, &result, &mut self.subst).map_err(|_| self.error(t, &result, &memo))?;
        Ok(result)
    }

    fn goal(&mut self, g: &Term) -> Result<(), TypeError> {
        let wk = well_known();
        let Term::Ctor(name, args) = g else {
            let found = self.infer(g)?;
            return Err(self.error(g, &Type::Bool, &found));
        };
        if *name == wk.conj && args.len() == 2 {
            self.goal(&args[0])?;
            return self.goal(&args[1]);
        }
        if *name == wk.unify && args.len() == 2 {
            let a = self.infer(&args[0])?;
            return self.expect(&args[1], &a);
        }
        if *name == wk.write && args.len() == 1 {
            self.infer(&args[0])?;
            return Ok(());
        }
        if args.is_empty() && (*name == wk.true_ || *name == wk.fail || *name == wk.nl) {
            return Ok(());
        }
        match self.db.preds.get(name).cloned() {
            Some(s) if s.args.len() == args.len() => {
                let (params, _) = self.subst.instantiate(&s);
                for (a, p) in args.iter().zip(&params) {
                    self.expect(a, p)?;
                }
                Ok(())
            }
            _ => Err(self.error(g, &Type::Bool, &Type::App(*name, Vec::new()))),
        }
    }

    fn finish(self) -> Typing {
        Typing {
            var_types: self.vars.iter().map(|t| self.subst.apply(t)).collect(),
            eq_types: self.eq.iter().map(|(m, t)| (*m, self.subst.apply(t))).collect(),
        }
    }
}

/// Items of a list whose spine is written out, `[a,b|[]]` style.
pub fn list_literal(t: &Term) -> Option<Vec<Term>> {
    let wk = well_known();
    let mut out = Vec::new();
    let mut cur = t;
    loop {
        match cur {
            Term::Ctor(c, xs) if *c == wk.cons && xs.len() == 2 => {
                out.push(xs[0].clone());
                cur = &xs[1];
            }
            Term::Ctor(c, xs) if *c == wk.nil && xs.is_empty() => return Some(out),
            _ => return None,
        }
    }
}

pub fn check_clause(c: &Clause, db: &Database) -> Result<Typing, TypeError> {
    let mut ck = Checker::new(db, c.kinds.len(), &c.text, &c.var_names);
    let head = Term::ctor(c.pred, c.args.clone());
    ck.goal(&head)?;
    for g in &c.body {
        ck.goal(g)?;
    }
    Ok(ck.finish())
}

pub fn check_rule(r: &Rule, db: &Database) -> Result<Typing, TypeError> {
    let mut ck = Checker::new(db, r.kinds.len(), &r.text, &r.var_names);
    let s = db.funs.get(&r.fun).cloned().ok_or_else(|| TypeError {
        item: r.text.clone(),
        term: r.fun.to_string(),
        expected: "a declared function".into(),
        found: "an undeclared name".into(),
    })?;
    let (params, result) = ck.subst.instantiate(&s);
    for (a, p) in r.lhs.iter().zip(&params) {
        ck.expect_pattern(a, p)?;
    }
    ck.expect(&r.rhs, &result)?;
    Ok(ck.finish())
}

impl Checker<'_> {
    /// Left-side arguments: function names there were read as constructors,
    /// so they are checked against the function's signature instead.
    fn expect_pattern(&mut self, t: &Term, ty: &Type) -> Result<(), TypeError> {
        match t {
            Term::Ctor(name, args) if !self.db.ctors.contains_key(name) => {
                let s = self
                    .db
                    .funs
                    .get(name)
                    .cloned()
                    .or_else(|| builtin_scheme(name.as_str(), args.len()))
                    .ok_or_else(|| self.error(t, ty, &Type::App(*name, Vec::new())))?;
                let (params, result) = self.subst.instantiate(&s);
                for (a, p) in args.iter().zip(&params) {
                    self.expect_pattern(a, p)?;
                }
                unify_types(&result, ty, &mut self.subst).map_err(|_| self.error(t, ty, &result))
            }
            Term::Ctor(name, args) => {
                let info = self.db.ctors[name].clone();
                let (params, result) = self.subst.instantiate(&info.scheme());
                for (a, p) in args.iter().zip(&params) {
                    self.expect_pattern(a, p)?;
                }
                unify_types(&result, ty, &mut self.subst).map_err(|_| self.error(t, ty, &result))
            }
            other => self.expect(other, ty),
        }
    }
}

/// Checks query goals whose variables are numbered `0..nvars`.
pub fn check_goals(
    goals: &[Term],
    nvars: usize,
    names: &[(String, VarId)],
    db: &Database,
) -> Result<Typing, TypeError> {
    let text = goals
        .iter()
        .map(|g| {
            let mut namer = VarNamer::with_names(names.iter().map(|(n, v)| (*v, n.clone())));
            print_ast(&term_to_ast(g, &mut namer), &db.ops)
        })
        .collect::<Vec<_>>()
        .join(", ");
    let mut ck = Checker::new(db, nvars, &text, names);
    for g in goals {
        ck.goal(g)?;
    }
    Ok(ck.finish())
}

/// Type of a ground-ish runtime value, for soundness checks: `None` if the
/// term does not fit `expected`.
pub fn value_has_type(t: &Term, expected: &Type, db: &Database) -> bool {
    let mut ck = Checker::new(db, 0, "", &[]);
    let base = ck.subst.reserve(expected.max_var().map_or(0, |m| m + 1));
    let expected = expected.offset(base);
    ck.expect(t, &expected).is_ok()
}

/// Copies `t` with each `eq` application carrying its argument type.
pub fn annotate(t: &Term, typing: &Typing) -> Term {
    if typing.eq_types.is_empty() {
        return t.clone();
    }
    match t {
        Term::Var(_) | Term::Int(_) => t.clone(),
        Term::Ctor(n, args) => {
            if args.is_empty() {
                t.clone()
            } else {
                Term::Ctor(*n, args.iter().map(|a| annotate(a, typing)).collect())
            }
        }
        Term::Fun(app) => Term::Fun(Arc::new(FunApp {
            name: app.name,
            args: app.args.iter().map(|a| annotate(a, typing)).collect(),
            memo: app.memo,
            eq_type: typing.eq_types.get(&app.memo).map(|ty| Arc::new(ty.clone())).or_else(|| app.eq_type.clone()),
        })),
        Term::Lambda(l) => Term::Lambda(Arc::new(Lambda {
            params: l.params.clone(),
            body: annotate(&l.body, typing),
        })),
        Term::Eta(e) => Term::Eta(Arc::new(Eta {
            var: e.var,
            goal: annotate(&e.goal, typing),
            memo: e.memo,
        })),
    }
}
