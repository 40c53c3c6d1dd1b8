//! Loading parsed items into an executable [`Database`].

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::checks;
use crate::reader::{parse_program_with, Ast, OperatorTable, ParseError, ProgramItem};
use crate::terms::{well_known, Eta, FunApp, Lambda, Sym, Term, VarId};
use crate::typecheck::{self, TypeError};
use crate::types::{Type, TypeScheme};

#[derive(Clone, Debug, PartialEq)]
pub struct TypeInfo {
    pub name: Sym,
    pub arity: u32,
    pub ctors: Vec<Sym>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CtorInfo {
    pub name: Sym,
    pub type_name: Sym,
    /// Argument types over the type's parameters `0..type_arity`.
    pub args: Vec<Type>,
    pub type_arity: u32,
}

impl CtorInfo {
    pub fn result(&self) -> Type {
        if self.type_name == well_known().bool_ {
            Type::Bool
        } else {
            Type::App(self.type_name, (0..self.type_arity).map(Type::Var).collect())
        }
    }

    pub fn scheme(&self) -> TypeScheme {
        TypeScheme {
            vars: self.type_arity,
            args: self.args.clone(),
            result: self.result(),
        }
    }
}

/// A stored clause; variables are numbered from zero.
#[derive(Clone, Debug)]
pub struct Clause {
    pub pred: Sym,
    pub args: Vec<Term>,
    pub body: Vec<Term>,
    /// Memo flag for each local variable id.
    pub kinds: Arc<[bool]>,
    pub var_names: Vec<(String, VarId)>,
    pub text: String,
}

/// A stored rewrite rule `f(lhs...) ->> rhs`; variables are numbered from zero.
#[derive(Clone, Debug)]
pub struct Rule {
    pub fun: Sym,
    pub lhs: Vec<Term>,
    pub rhs: Term,
    pub kinds: Arc<[bool]>,
    pub var_names: Vec<(String, VarId)>,
    pub text: String,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub check: &'static str,
    /// Text of the offending item.
    pub item: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{sev}({}): {}", self.check, self.message)?;
        if !self.message.contains(&self.item) {
            write!(f, "\n  in: {}", self.item)?;
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{message}\n  in: {item}")]
    Static { item: String, message: String },
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

fn static_err(item: &str, message: impl Into<String>) -> LoadError {
    LoadError::Static {
        item: item.to_owned(),
        message: message.into(),
    }
}

/// Built-in functions with their arities.
pub const BUILTIN_FUNCTIONS: &[(&str, usize)] = &[
    ("+", 2),
    ("-", 2),
    ("*", 2),
    ("div", 2),
    ("mod", 2),
    ("abs", 1),
    ("-", 1),
    ("<", 2),
    (">", 2),
    ("=<", 2),
    (">=", 2),
    ("<=", 2),
    ("and", 2),
    ("or", 2),
    ("eq", 2),
    ("apply", 2),
];

pub const BUILTIN_PREDICATES: &[(&str, usize)] = &[("true", 0), ("fail", 0), ("=", 2), ("write", 1), ("nl", 0), (",", 2)];

pub fn is_builtin_function(name: &str, arity: usize) -> bool {
    BUILTIN_FUNCTIONS.iter().any(|&(n, a)| n == name && a == arity)
}

fn is_builtin_name(name: &str) -> bool {
    BUILTIN_FUNCTIONS.iter().any(|&(n, _)| n == name)
        || BUILTIN_PREDICATES.iter().any(|&(n, _)| n == name)
        || matches!(name, "lambda" | "eta" | "int" | "solve")
}

#[derive(Clone, Debug)]
pub struct Database {
    pub ops: OperatorTable,
    pub types: HashMap<Sym, TypeInfo>,
    pub ctors: HashMap<Sym, CtorInfo>,
    pub preds: HashMap<Sym, TypeScheme>,
    pub funs: HashMap<Sym, TypeScheme>,
    pub clauses: HashMap<Sym, Vec<Arc<Clause>>>,
    pub rules: HashMap<Sym, Vec<Arc<Rule>>>,
    /// Predicates in declaration order.
    pub pred_order: Vec<Sym>,
    /// Functions in declaration order.
    pub fun_order: Vec<Sym>,
}

impl Default for Database {
    fn default() -> Self {
        Self::prelude()
    }
}

impl Database {
    /// The built-in `bool` and `list(A)` types and nothing else.
    pub fn prelude() -> Database {
        let wk = well_known();
        let mut db = Database {
            ops: OperatorTable::default(),
            types: HashMap::new(),
            ctors: HashMap::new(),
            preds: HashMap::new(),
            funs: HashMap::new(),
            clauses: HashMap::new(),
            rules: HashMap::new(),
            pred_order: Vec::new(),
            fun_order: Vec::new(),
        };
        db.types.insert(
            wk.bool_,
            TypeInfo {
                name: wk.bool_,
                arity: 0,
                ctors: vec![wk.true_, wk.false_],
            },
        );
        for c in [wk.true_, wk.false_] {
            db.ctors.insert(
                c,
                CtorInfo {
                    name: c,
                    type_name: wk.bool_,
                    args: vec![],
                    type_arity: 0,
                },
            );
        }
        db.types.insert(
            wk.list,
            TypeInfo {
                name: wk.list,
                arity: 1,
                ctors: vec![wk.nil, wk.cons],
            },
        );
        db.ctors.insert(
            wk.nil,
            CtorInfo {
                name: wk.nil,
                type_name: wk.list,
                args: vec![],
                type_arity: 1,
            },
        );
        db.ctors.insert(
            wk.cons,
            CtorInfo {
                name: wk.cons,
                type_name: wk.list,
                args: vec![Type::Var(0), Type::list(Type::Var(0))],
                type_arity: 1,
            },
        );
        db
    }

    pub fn is_function(&self, name: Sym, arity: usize) -> bool {
        self.funs.get(&name).is_some_and(|s| s.args.len() == arity) || is_builtin_function(name.as_str(), arity)
    }

    /// Arity of a function name, user-defined first.
    fn function_arity(&self, name: &str) -> Option<usize> {
        let sym = Sym::intern(name);
        if let Some(s) = self.funs.get(&sym) {
            return Some(s.args.len());
        }
        BUILTIN_FUNCTIONS.iter().find(|&&(n, _)| n == name).map(|&(_, a)| a)
    }

    pub fn is_ctor(&self, name: Sym, arity: usize) -> bool {
        self.ctors.get(&name).is_some_and(|c| c.args.len() == arity)
    }

    pub fn clauses_for(&self, pred: Sym) -> &[Arc<Clause>] {
        self.clauses.get(&pred).map_or(&[], Vec::as_slice)
    }

    pub fn rules_for(&self, fun: Sym) -> &[Arc<Rule>] {
        self.rules.get(&fun).map_or(&[], Vec::as_slice)
    }

    /// Constructors of a type in declaration order.
    pub fn ctors_of(&self, type_name: Sym) -> Vec<&CtorInfo> {
        self.types
            .get(&type_name)
            .map(|t| t.ctors.iter().filter_map(|c| self.ctors.get(c)).collect())
            .unwrap_or_default()
    }

    /// Converts a type expression; new type variables are numbered from
    /// `vars.len()` if `allow_new`.
    pub fn type_from_ast(&self, ast: &Ast, vars: &mut Vec<String>, allow_new: bool) -> Result<Type, String> {
        match ast {
            Ast::Var(name) => match vars.iter().position(|v| v == name) {
                Some(i) => Ok(Type::Var(i as u32)),
                None if allow_new => {
                    vars.push(name.clone());
                    Ok(Type::Var(vars.len() as u32 - 1))
                }
                None => Err(format!("type variable {name} is not a parameter of the declared type")),
            },
            Ast::Int(i) => Err(format!("`{i}` is not a type")),
            Ast::Compound(n, args) => {
                if n == "=>>" && args.len() == 2 {
                    let params = list_items(&args[0]).ok_or("function type arguments must be a list")?;
                    let params = params
                        .iter()
                        .map(|p| self.type_from_ast(p, vars, allow_new))
                        .collect::<Result<Vec<_>, _>>()?;
                    let res = self.type_from_ast(&args[1], vars, allow_new)?;
                    return Ok(Type::Fun(params, Box::new(res)));
                }
                if n == "int" && args.is_empty() {
                    return Ok(Type::Int);
                }
                if n == "bool" && args.is_empty() {
                    return Ok(Type::Bool);
                }
                let sym = Sym::intern(n);
                match self.types.get(&sym) {
                    Some(info) if info.arity as usize == args.len() => {
                        let ts = args
                            .iter()
                            .map(|a| self.type_from_ast(a, vars, allow_new))
                            .collect::<Result<Vec<_>, _>>()?;
                        Ok(Type::App(sym, ts))
                    }
                    Some(info) => Err(format!("type `{n}` expects {} parameter(s)", info.arity)),
                    None => Err(format!("unknown type `{n}/{}`", args.len())),
                }
            }
        }
    }

    /// Converts a query's goals; query variables take ids `0..n` in order
    /// of first appearance.
    pub fn convert_query(&self, goals: &[Ast], var_names: &[String]) -> Result<ConvertedQuery, String> {
        let mut conv = Converter::new(self);
        for n in var_names {
            conv.var(n);
        }
        let goals = goals.iter().map(|g| conv.goal(g)).collect::<Result<Vec<_>, _>>()?;
        let vars = var_names.iter().map(|n| (n.clone(), conv.vars[n])).collect();
        Ok(ConvertedQuery {
            goals,
            vars,
            kinds: conv.kinds.into(),
        })
    }
}

/// A query converted to terms over local variable ids.
#[derive(Clone, Debug)]
pub struct ConvertedQuery {
    pub goals: Vec<Term>,
    pub vars: Vec<(String, VarId)>,
    pub kinds: Arc<[bool]>,
}

pub(crate) fn list_items(ast: &Ast) -> Option<Vec<Ast>> {
    let mut out = Vec::new();
    let mut cur = ast;
    loop {
        match cur {
            Ast::Compound(n, a) if n == "[|]" && a.len() == 2 => {
                out.push(a[0].clone());
                cur = &a[1];
            }
            t if t.is_atom("[]") => return Some(out),
            _ => return None,
        }
    }
}

/// Surface syntax to terms, resolving each name as a constructor or a
/// function.
pub(crate) struct Converter<'a> {
    db: &'a Database,
    vars: HashMap<String, VarId>,
    kinds: Vec<bool>,
}

impl<'a> Converter<'a> {
    pub fn new(db: &'a Database) -> Self {
        Converter {
            db,
            vars: HashMap::new(),
            kinds: Vec::new(),
        }
    }

    fn fresh(&mut self, memo: bool) -> VarId {
        self.kinds.push(memo);
        VarId(self.kinds.len() as u32 - 1)
    }

    pub fn var(&mut self, name: &str) -> VarId {
        if name == "_" {
            return self.fresh(false);
        }
        if let Some(v) = self.vars.get(name) {
            return *v;
        }
        let v = self.fresh(false);
        self.vars.insert(name.to_owned(), v);
        v
    }

    fn named_vars(&self) -> Vec<(String, VarId)> {
        let mut v: Vec<_> = self.vars.iter().map(|(n, id)| (n.clone(), *id)).collect();
        v.sort_by_key(|(_, id)| *id);
        v
    }

    fn scoped<T>(
        &mut self,
        names: &[String],
        f: impl FnOnce(&mut Self, Vec<VarId>) -> Result<T, String>,
    ) -> Result<T, String> {
        let saved: Vec<_> = names.iter().map(|n| (n.clone(), self.vars.get(n).copied())).collect();
        let ids: Vec<VarId> = names
            .iter()
            .map(|n| {
                let v = self.fresh(false);
                if n != "_" {
                    self.vars.insert(n.clone(), v);
                }
                v
            })
            .collect();
        let out = f(self, ids);
        for (n, old) in saved {
            match old {
                Some(v) => {
                    self.vars.insert(n, v);
                }
                None => {
                    self.vars.remove(&n);
                }
            }
        }
        out
    }

    /// `pattern` converts function names to constructors, as rule left
    /// sides are matched.
    pub fn term(&mut self, ast: &Ast, pattern: bool) -> Result<Term, String> {
        match ast {
            Ast::Var(n) => Ok(Term::Var(self.var(n))),
            Ast::Int(i) => Ok(Term::Int(*i)),
            Ast::Compound(name, args) => {
                if !pattern && name == "lambda" && args.len() == 2 {
                    let params = list_items(&args[0]).ok_or("lambda parameters must be a list of variables")?;
                    let names = params
                        .iter()
                        .map(|p| match p {
                            Ast::Var(n) => Ok(n.clone()),
                            _ => Err("lambda parameters must be variables".to_owned()),
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    let body = &args[1];
                    return self.scoped(&names, |c, params| {
                        let body = c.term(body, false)?;
                        Ok(Term::Lambda(Arc::new(Lambda { params, body })))
                    });
                }
                if !pattern && name == "eta" && args.len() == 2 {
                    let Ast::Var(x) = &args[0] else {
                        return Err("eta expects a variable as its first argument".into());
                    };
                    let goal = &args[1];
                    return self.scoped(std::slice::from_ref(x), |c, ids| {
                        let goal = c.goal(goal)?;
                        let memo = c.fresh(true);
                        Ok(Term::Eta(Arc::new(Eta { var: ids[0], goal, memo })))
                    });
                }
                let sym = Sym::intern(name);
                let arity = args.len();
                if self.db.is_function(sym, arity) {
                    let targs = args.iter().map(|a| self.term(a, pattern)).collect::<Result<Vec<_>, _>>()?;
                    if pattern {
                        return Ok(Term::ctor(sym, targs));
                    }
                    let memo = self.fresh(true);
                    return Ok(Term::Fun(Arc::new(FunApp {
                        name: sym,
                        args: targs,
                        memo,
                        eq_type: None,
                    })));
                }
                if self.db.is_ctor(sym, arity) {
                    let targs = args.iter().map(|a| self.term(a, pattern)).collect::<Result<Vec<_>, _>>()?;
                    return Ok(Term::ctor(sym, targs));
                }
                if arity == 0 && !pattern {
                    if let Some(k) = self.db.function_arity(name).filter(|k| *k > 0) {
                        let params: Vec<VarId> = (0..k).map(|_| self.fresh(false)).collect();
                        let memo = self.fresh(true);
                        let body = Term::fun(sym, params.iter().map(|p| Term::Var(*p)).collect(), memo);
                        return Ok(Term::Lambda(Arc::new(Lambda { params, body })));
                    }
                }
                if self.db.ctors.contains_key(&sym) || self.db.funs.contains_key(&sym) {
                    Err(format!("`{name}` is used with {arity} argument(s), which does not match its declaration"))
                } else {
                    Err(format!("undeclared constructor or function `{name}/{arity}`"))
                }
            }
        }
    }

    pub fn goal(&mut self, ast: &Ast) -> Result<Term, String> {
        match ast {
            Ast::Var(_) => Err("a variable cannot be used as a goal".into()),
            Ast::Int(_) => Err("a number cannot be used as a goal".into()),
            Ast::Compound(name, args) => {
                let sym = Sym::intern(name);
                let arity = args.len();
                if name == "," && arity == 2 {
                    let a = self.goal(&args[0])?;
                    let b = self.goal(&args[1])?;
                    return Ok(Term::ctor(sym, vec![a, b]));
                }
                let builtin = BUILTIN_PREDICATES.iter().any(|&(n, a)| n == name && a == arity);
                let declared = self.db.preds.get(&sym).is_some_and(|s| s.args.len() == arity);
                if !builtin && !declared {
                    return Err(if self.db.preds.contains_key(&sym) {
                        format!("predicate `{name}` is used with {arity} argument(s), which does not match its declaration")
                    } else {
                        format!("undeclared predicate `{name}/{arity}`")
                    });
                }
                let targs = args.iter().map(|a| self.term(a, false)).collect::<Result<Vec<_>, _>>()?;
                Ok(Term::ctor(sym, targs))
            }
        }
    }
}

fn same_scheme(a: &TypeScheme, b: &TypeScheme) -> bool {
    a.args == b.args && a.result == b.result
}

/// Builds a database from parsed items. Warnings are returned alongside;
/// any error aborts.
pub fn load(items: &[ProgramItem]) -> Result<(Database, Vec<Diagnostic>), LoadError> {
    let mut db = Database::prelude();
    let mut diags = Vec::new();
    let texts: Vec<String> = {
        let mut ops = OperatorTable::default();
        items
            .iter()
            .map(|it| {
                if let ProgramItem::OpDecl { priority, fixity, name } = it {
                    ops.add(*priority, *fixity, name);
                }
                it.display(&ops).to_string()
            })
            .collect()
    };

    // type names first, so constructor signatures may refer to any type
    let mut type_params: HashMap<Sym, Vec<String>> = HashMap::new();
    for (i, item) in items.iter().enumerate() {
        match item {
            ProgramItem::OpDecl { priority, fixity, name } => db.ops.add(*priority, *fixity, name),
            ProgramItem::CtorDecl { ty, .. } => {
                let (name, params) = match ty {
                    Ast::Compound(n, ps) => (n, ps),
                    _ => return Err(static_err(&texts[i], "constructor declaration needs a type name")),
                };
                let mut names = Vec::new();
                for p in params {
                    match p {
                        Ast::Var(v) if !names.contains(v) => names.push(v.clone()),
                        _ => return Err(static_err(&texts[i], "type parameters must be distinct variables")),
                    }
                }
                if name == "int" {
                    return Err(static_err(&texts[i], "`int` is a built-in type"));
                }
                let sym = Sym::intern(name);
                if let Some(prev) = type_params.get(&sym) {
                    if prev.len() != names.len() {
                        return Err(static_err(&texts[i], format!("type `{name}` redeclared with a different arity")));
                    }
                } else if let Some(info) = db.types.get(&sym) {
                    if info.arity as usize != names.len() {
                        return Err(static_err(&texts[i], format!("type `{name}` redeclared with a different arity")));
                    }
                }
                type_params.insert(sym, names.clone());
                db.types.entry(sym).or_insert(TypeInfo {
                    name: sym,
                    arity: names.len() as u32,
                    ctors: Vec::new(),
                });
            }
            _ => {}
        }
    }

    let mut pred_decl_at: HashMap<Sym, usize> = HashMap::new();
    let mut fun_decl_at: HashMap<Sym, usize> = HashMap::new();
    for (i, item) in items.iter().enumerate() {
        let text = &texts[i];
        match item {
            ProgramItem::CtorDecl { ty, ctors } => {
                let Ast::Compound(tname, _) = ty else { unreachable!() };
                let tsym = Sym::intern(tname);
                let params = type_params[&tsym].clone();
                let mut new_ctors = Vec::new();
                for c in ctors {
                    let Ast::Compound(cname, cargs) = c else {
                        return Err(static_err(text, "constructor must be a name applied to types"));
                    };
                    let csym = Sym::intern(cname);
                    if is_builtin_name(cname) && !db.ctors.contains_key(&csym) {
                        return Err(static_err(text, format!("`{cname}` is a built-in name")));
                    }
                    if db.funs.contains_key(&csym) {
                        return Err(static_err(text, format!("`{cname}` is already declared as a function")));
                    }
                    let mut vars = params.clone();
                    let args = cargs
                        .iter()
                        .map(|a| db.type_from_ast(a, &mut vars, false))
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|m| static_err(text, m))?;
                    let info = CtorInfo {
                        name: csym,
                        type_name: tsym,
                        args,
                        type_arity: params.len() as u32,
                    };
                    if let Some(prev) = db.ctors.get(&csym) {
                        if *prev != info {
                            return Err(static_err(
                                text,
                                format!("constructor `{cname}` already belongs to type `{}`", prev.type_name),
                            ));
                        }
                        continue;
                    }
                    new_ctors.push(info);
                }
                for info in new_ctors {
                    db.types.get_mut(&tsym).unwrap().ctors.push(info.name);
                    db.ctors.insert(info.name, info);
                }
            }
            ProgramItem::PredDecl { name, arg_types } => {
                let sym = Sym::intern(name);
                if BUILTIN_PREDICATES.iter().any(|&(n, _)| n == name) {
                    return Err(static_err(text, format!("`{name}` is a built-in predicate")));
                }
                let mut vars = Vec::new();
                let args = arg_types
                    .iter()
                    .map(|a| db.type_from_ast(a, &mut vars, true))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|m| static_err(text, m))?;
                let scheme = TypeScheme {
                    vars: vars.len() as u32,
                    args,
                    result: Type::Bool,
                };
                if let Some(prev) = db.preds.get(&sym) {
                    if !same_scheme(prev, &scheme) {
                        return Err(static_err(text, format!("conflicting declarations for predicate `{name}`")));
                    }
                    continue;
                }
                db.preds.insert(sym, scheme);
                db.pred_order.push(sym);
                pred_decl_at.insert(sym, i);
            }
            ProgramItem::FunDecl {
                name,
                arg_types,
                result,
                legacy_arrow,
            } => {
                let sym = Sym::intern(name);
                if is_builtin_name(name) {
                    return Err(static_err(text, format!("`{name}` is a built-in name")));
                }
                if db.ctors.contains_key(&sym) {
                    return Err(static_err(text, format!("`{name}` is already declared as a constructor")));
                }
                if *legacy_arrow {
                    diags.push(Diagnostic {
                        severity: Severity::Warning,
                        check: "syntax",
                        item: text.clone(),
                        message: "`==>` is accepted as an alias of `=>>`".into(),
                    });
                }
                let mut vars = Vec::new();
                let args = arg_types
                    .iter()
                    .map(|a| db.type_from_ast(a, &mut vars, true))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|m| static_err(text, m))?;
                let result = db.type_from_ast(result, &mut vars, true).map_err(|m| static_err(text, m))?;
                let scheme = TypeScheme {
                    vars: vars.len() as u32,
                    args,
                    result,
                };
                if let Some(prev) = db.funs.get(&sym) {
                    if !same_scheme(prev, &scheme) {
                        return Err(static_err(text, format!("conflicting declarations for function `{name}`")));
                    }
                    continue;
                }
                db.funs.insert(sym, scheme);
                db.fun_order.push(sym);
                fun_decl_at.insert(sym, i);
            }
            _ => {}
        }
    }

    for (i, item) in items.iter().enumerate() {
        let text = &texts[i];
        match item {
            ProgramItem::Clause { head, body } => {
                let Ast::Compound(pname, hargs) = head else {
                    return Err(static_err(text, "clause head must be an atom"));
                };
                let psym = Sym::intern(pname);
                match pred_decl_at.get(&psym) {
                    Some(&at) if at < i => {}
                    Some(_) => return Err(static_err(text, format!("predicate `{pname}` is used before its declaration"))),
                    None if BUILTIN_PREDICATES.iter().any(|&(n, _)| n == pname) => {
                        return Err(static_err(text, format!("cannot add clauses to built-in `{pname}`")))
                    }
                    None => return Err(static_err(text, format!("undeclared predicate `{pname}/{}`", hargs.len()))),
                }
                let mut conv = Converter::new(&db);
                let head_t = conv.goal(head).map_err(|m| static_err(text, m))?;
                let body_t = body.iter().map(|g| conv.goal(g)).collect::<Result<Vec<_>, _>>().map_err(|m| static_err(text, m))?;
                let Term::Ctor(_, args) = head_t else { unreachable!() };
                let mut clause = Clause {
                    pred: psym,
                    args: args.to_vec(),
                    body: body_t,
                    kinds: conv.kinds.clone().into(),
                    var_names: conv.named_vars(),
                    text: text.clone(),
                };
                let typing = typecheck::check_clause(&clause, &db)?;
                clause.args = clause.args.iter().map(|t| typecheck::annotate(t, &typing)).collect();
                clause.body = clause.body.iter().map(|t| typecheck::annotate(t, &typing)).collect();
                db.clauses.entry(psym).or_default().push(Arc::new(clause));
            }
            ProgramItem::Rule { lhs, rhs } => {
                let Ast::Compound(fname, largs) = lhs else {
                    return Err(static_err(text, "rule left side must be a function application"));
                };
                let fsym = Sym::intern(fname);
                match fun_decl_at.get(&fsym) {
                    Some(&at) if at < i => {}
                    Some(_) => return Err(static_err(text, format!("function `{fname}` is used before its declaration"))),
                    None if db.ctors.contains_key(&fsym) => {
                        return Err(static_err(text, format!("`{fname}` is a constructor and cannot have rewrite rules")))
                    }
                    None => return Err(static_err(text, format!("undeclared function `{fname}/{}`", largs.len()))),
                }
                if db.funs[&fsym].args.len() != largs.len() {
                    return Err(static_err(text, format!("function `{fname}` applied to the wrong number of arguments")));
                }
                let is_fun = |n: &str, k: usize| db.is_function(Sym::intern(n), k);
                for sub in checks::functions_in_lhs(largs, &is_fun) {
                    diags.push(Diagnostic {
                        severity: Severity::Warning,
                        check: "constructor-discipline",
                        item: text.clone(),
                        message: format!("function `{sub}` appears in the left side arguments"),
                    });
                }
                for v in checks::repeated_vars(largs) {
                    diags.push(Diagnostic {
                        severity: Severity::Warning,
                        check: "left-linearity",
                        item: text.clone(),
                        message: format!("variable {v} occurs more than once in the left side"),
                    });
                }
                for v in checks::unbound_rhs_vars(largs, rhs) {
                    diags.push(Diagnostic {
                        severity: Severity::Warning,
                        check: "term-rewriting",
                        item: text.clone(),
                        message: format!("variable {v} of the right side does not occur in the left side"),
                    });
                }
                let mut conv = Converter::new(&db);
                let lhs_t = largs.iter().map(|a| conv.term(a, true)).collect::<Result<Vec<_>, _>>().map_err(|m| static_err(text, m))?;
                let rhs_t = conv.term(rhs, false).map_err(|m| static_err(text, m))?;
                let mut rule = Rule {
                    fun: fsym,
                    lhs: lhs_t,
                    rhs: rhs_t,
                    kinds: conv.kinds.clone().into(),
                    var_names: conv.named_vars(),
                    text: text.clone(),
                };
                let typing = typecheck::check_rule(&rule, &db)?;
                rule.rhs = typecheck::annotate(&rule.rhs, &typing);
                db.rules.entry(fsym).or_default().push(Arc::new(rule));
            }
            _ => {}
        }
    }

    for f in db.fun_order.clone() {
        let rules = db.rules_for(f).to_vec();
        if rules.is_empty() {
            continue;
        }
        for (i, j) in checks::check_overlap(&rules) {
            diags.push(Diagnostic {
                severity: Severity::Warning,
                check: "non-overlapping",
                item: rules[j].text.clone(),
                message: format!("left side overlaps with `{}`", rules[i].text),
            });
        }
        let tuples: Vec<Vec<Term>> = rules.iter().map(|r| r.lhs.clone()).collect();
        let missing = checks::check_exhaustive(&db.funs[&f].args, &tuples, &db);
        for m in missing {
            let pat = checks::pattern_text(f, &m, &db.ops);
            diags.push(Diagnostic {
                severity: Severity::Warning,
                check: "exhaustiveness",
                item: pat.clone(),
                message: format!("no rule for `{f}` matches {pat}"),
            });
        }
    }
    Ok((db, diags))
}

/// Parses and loads program text.
pub fn load_source(text: &str) -> Result<(Database, Vec<Diagnostic>), LoadError> {
    let items = parse_program_with(text, &mut OperatorTable::default())?;
    load(&items)
}

/// Parses several sources in order, sharing operator declarations, and
/// loads them as one program.
pub fn load_sources<'s>(texts: impl IntoIterator<Item = &'s str>) -> Result<(Database, Vec<Diagnostic>), LoadError> {
    let mut ops = OperatorTable::default();
    let mut items = Vec::new();
    for t in texts {
        items.extend(parse_program_with(t, &mut ops)?);
    }
    load(&items)
}

#[cfg(test)]
mod tests {
    use super::*;

    const APPEND: &str = "
        function app(list(A), list(A)) =>> list(A).
        app([],V) ->> V.
        app([X|U],V) ->> [X|app(U,V)].
    ";

    fn checks_of(src: &str) -> Vec<&'static str> {
        load_source(src).unwrap().1.iter().map(|d| d.check).collect()
    }

    #[test]
    fn append_loads_cleanly() {
        let (db, diags) = load_source(APPEND).unwrap();
        assert!(diags.is_empty(), "{diags:?}");
        assert_eq!(db.rules_for(Sym::intern("app")).len(), 2);
    }

    #[test]
    fn f_system_has_no_overlap() {
        let src = "constructors ab => a, b.
            function f(ab,ab) =>> ab.
            f(W,a) ->> a.
            f(a,b) ->> b.";
        assert!(!checks_of(src).contains(&"non-overlapping"));
    }

    #[test]
    fn left_linearity_violation() {
        let src = "constructors ab => a, b. function g(ab,ab) =>> ab. g(X,X) ->> X.";
        let c = checks_of(src);
        assert!(c.contains(&"left-linearity"));
    }

    #[test]
    fn term_rewriting_violation() {
        let src = "constructors ab => a, b. function h(ab) =>> ab. h(X) ->> Y.";
        assert_eq!(checks_of(src), vec!["term-rewriting"]);
    }

    #[test]
    fn constructor_discipline() {
        let src = format!(
            "{APPEND} function f(list(A)) =>> list(A).
            f(app(U,V)) ->> U. f([]) ->> []. f([X|Xs]) ->> Xs."
        );
        let c = checks_of(&src);
        assert!(c.contains(&"constructor-discipline"), "{c:?}");
        let ok = format!("{APPEND} constructors nat => zero, s(nat). function p(nat) =>> nat. p(s(X)) ->> X. p(zero) ->> zero.");
        assert!(checks_of(&ok).is_empty());
    }

    #[test]
    fn overlap_warning() {
        let src = "constructors ab => a, b. function g(int) =>> ab. g(X) ->> a. g(0) ->> b.";
        assert_eq!(checks_of(src), vec!["non-overlapping"]);
    }

    #[test]
    fn undeclared_names_are_errors() {
        assert!(load_source("p(a).").is_err());
        assert!(load_source("pred p(int). p(a).").is_err());
        assert!(load_source("function f(int) =>> int. g(1) ->> 1.").is_err());
    }

    #[test]
    fn head_before_declaration_is_an_error() {
        let err = load_source("p(1). pred p(int).").unwrap_err();
        assert!(err.to_string().contains("before its declaration"), "{err}");
    }

    #[test]
    fn conflicting_declarations() {
        assert!(load_source("constructors list(A) => [], [A|list(A)].").is_ok());
        assert!(load_source("constructors c => a. constructors d => a.").is_err());
        assert!(load_source("pred p(int). pred p(bool).").is_err());
        assert!(load_source("constructors c => a. function a(int) =>> int.").is_err());
    }

    #[test]
    fn missing_pattern_reported() {
        let src = "function app(list(A), list(A)) =>> list(A). app([],V) ->> V.";
        let (_, diags) = load_source(src).unwrap();
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].check, "exhaustiveness");
        assert_eq!(diags[0].item, "app([_|_],_)");
    }

    #[test]
    fn function_names_as_values_become_lambdas() {
        let (db, _) = load_source("pred p(int). p(X) :- X = apply(+, [1,2]).").unwrap();
        let c = &db.clauses_for(Sym::intern("p"))[0];
        let Term::Ctor(_, args) = &c.body[0] else { panic!() };
        let Term::Fun(app) = &args[1] else { panic!() };
        assert!(matches!(app.args[0], Term::Lambda(_)));
    }
}
