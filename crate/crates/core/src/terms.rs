//! Runtime terms, the backtrackable binding store, and variable renaming.
//!
//! Every function application carries a memo variable. Narrowing an
//! application binds its memo to the rewritten term, so a shared application
//! is rewritten at most once per search branch, and backtracking undoes the
//! rewrite through the same trail that undoes ordinary bindings.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

use crate::types::Type;

/// An interned symbol (atom, functor, predicate or type name).
#[derive(Copy, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sym(u32);

struct Interner {
    ids: HashMap<&'static str, u32>,
    names: Vec<&'static str>,
}

fn interner() -> &'static RwLock<Interner> {
    static INTERNER: OnceLock<RwLock<Interner>> = OnceLock::new();
    INTERNER.get_or_init(|| {
        RwLock::new(Interner {
            ids: HashMap::new(),
            names: Vec::new(),
        })
    })
}

impl Sym {
    pub fn intern(name: &str) -> Sym {
        if let Some(&id) = interner().read().unwrap().ids.get(name) {
            return Sym(id);
        }
        let mut table = interner().write().unwrap();
        if let Some(&id) = table.ids.get(name) {
            return Sym(id);
        }
        let id = table.names.len() as u32;
        let leaked: &'static str = Box::leak(name.to_owned().into_boxed_str());
        table.names.push(leaked);
        table.ids.insert(leaked, id);
        Sym(id)
    }

    pub fn as_str(self) -> &'static str {
        interner().read().unwrap().names[self.0 as usize]
    }
}

impl fmt::Debug for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_str())
    }
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Symbols the engine refers to by identity.
pub struct WellKnown {
    pub nil: Sym,
    pub cons: Sym,
    pub true_: Sym,
    pub false_: Sym,
    pub bool_: Sym,
    pub int: Sym,
    pub list: Sym,
    pub conj: Sym,
    pub unify: Sym,
    pub fail: Sym,
    pub write: Sym,
    pub nl: Sym,
    pub lambda: Sym,
    pub eta: Sym,
    pub apply: Sym,
    pub eq: Sym,
    pub and: Sym,
    pub or: Sym,
    pub solve: Sym,
}

pub fn well_known() -> &'static WellKnown {
    static WK: OnceLock<WellKnown> = OnceLock::new();
    WK.get_or_init(|| WellKnown {
        nil: Sym::intern("[]"),
        cons: Sym::intern("[|]"),
        true_: Sym::intern("true"),
        false_: Sym::intern("false"),
        bool_: Sym::intern("bool"),
        int: Sym::intern("int"),
        list: Sym::intern("list"),
        conj: Sym::intern(","),
        unify: Sym::intern("="),
        fail: Sym::intern("fail"),
        write: Sym::intern("write"),
        nl: Sym::intern("nl"),
        lambda: Sym::intern("lambda"),
        eta: Sym::intern("eta"),
        apply: Sym::intern("apply"),
        eq: Sym::intern("eq"),
        and: Sym::intern("and"),
        or: Sym::intern("or"),
        solve: Sym::intern("solve"),
    })
}

#[derive(Copy, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct VarId(pub u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Term {
    Var(VarId),
    Int(i64),
    /// Constructor application; atoms, booleans, `[]` and list cells included.
    Ctor(Sym, Arc<[Term]>),
    /// Defined (or builtin) function application.
    Fun(Arc<FunApp>),
    Lambda(Arc<Lambda>),
    Eta(Arc<Eta>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FunApp {
    pub name: Sym,
    pub args: Vec<Term>,
    /// Logic variable that receives the rewritten value.
    pub memo: VarId,
    /// Argument type of an `eq` application, filled in by the type checker.
    pub eq_type: Option<Arc<Type>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Lambda {
    pub params: Vec<VarId>,
    pub body: Term,
}

/// `eta(X, G)`: some value of `X` for which goal `G` succeeds.
#[derive(Clone, Debug, PartialEq)]
pub struct Eta {
    pub var: VarId,
    pub goal: Term,
    pub memo: VarId,
}

fn empty_args() -> Arc<[Term]> {
    static EMPTY: OnceLock<Arc<[Term]>> = OnceLock::new();
    EMPTY.get_or_init(|| Arc::from(Vec::new())).clone()
}

impl Term {
    pub fn atom(name: Sym) -> Term {
        Term::Ctor(name, empty_args())
    }

    pub fn ctor(name: Sym, args: Vec<Term>) -> Term {
        if args.is_empty() {
            Term::atom(name)
        } else {
            Term::Ctor(name, Arc::from(args))
        }
    }

    pub fn fun(name: Sym, args: Vec<Term>, memo: VarId) -> Term {
        Term::Fun(Arc::new(FunApp {
            name,
            args,
            memo,
            eq_type: None,
        }))
    }

    pub fn boolean(b: bool) -> Term {
        let wk = well_known();
        Term::atom(if b { wk.true_ } else { wk.false_ })
    }

    pub fn nil() -> Term {
        Term::atom(well_known().nil)
    }

    pub fn cons(head: Term, tail: Term) -> Term {
        Term::Ctor(well_known().cons, Arc::from(vec![head, tail]))
    }

    pub fn list(items: Vec<Term>) -> Term {
        items
            .into_iter()
            .rev()
            .fold(Term::nil(), |tail, head| Term::cons(head, tail))
    }

    pub fn as_var(&self) -> Option<VarId> {
        match self {
            Term::Var(v) => Some(*v),
            _ => None,
        }
    }

    /// True if some function application or description occurs anywhere.
    pub fn has_function(&self) -> bool {
        match self {
            Term::Var(_) | Term::Int(_) => false,
            Term::Ctor(_, args) => args.iter().any(Term::has_function),
            Term::Fun(_) | Term::Eta(_) => true,
            Term::Lambda(l) => l.body.has_function(),
        }
    }

    /// Calls `f` on every variable occurrence, memo variables included.
    pub fn visit_vars(&self, f: &mut impl FnMut(VarId)) {
        match self {
            Term::Var(v) => f(*v),
            Term::Int(_) => {}
            Term::Ctor(_, args) => args.iter().for_each(|a| a.visit_vars(f)),
            Term::Fun(app) => {
                f(app.memo);
                app.args.iter().for_each(|a| a.visit_vars(f));
            }
            Term::Lambda(l) => {
                l.params.iter().for_each(|p| f(*p));
                l.body.visit_vars(f);
            }
            Term::Eta(e) => {
                f(e.var);
                f(e.memo);
                e.goal.visit_vars(f);
            }
        }
    }

    /// Copies the term with every variable id shifted by `base`.
    ///
    /// Stored clauses and rules number their variables from zero, so renaming
    /// apart is a single offset once the block of fresh variables is reserved.
    pub fn offset(&self, base: u32) -> Term {
        match self {
            Term::Var(v) => Term::Var(VarId(v.0 + base)),
            Term::Int(_) => self.clone(),
            Term::Ctor(name, args) => {
                if args.is_empty() {
                    self.clone()
                } else {
                    Term::Ctor(*name, args.iter().map(|a| a.offset(base)).collect())
                }
            }
            Term::Fun(app) => Term::Fun(Arc::new(FunApp {
                name: app.name,
                args: app.args.iter().map(|a| a.offset(base)).collect(),
                memo: VarId(app.memo.0 + base),
                eq_type: app.eq_type.clone(),
            })),
            Term::Lambda(l) => Term::Lambda(Arc::new(Lambda {
                params: l.params.iter().map(|p| VarId(p.0 + base)).collect(),
                body: l.body.offset(base),
            })),
            Term::Eta(e) => Term::Eta(Arc::new(Eta {
                var: VarId(e.var.0 + base),
                goal: e.goal.offset(base),
                memo: VarId(e.memo.0 + base),
            })),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Slot {
    value: Option<Term>,
    memo: bool,
}

/// Position in the binding history that [`BindingState::undo_to`] restores.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Checkpoint {
    pub trail_len: usize,
    pub var_count: u32,
}

/// Backtrackable substitution: variable slots, an undo trail and the depth
/// accounting of the current iterative-deepening round.
#[derive(Clone, Debug, Default)]
pub struct BindingState {
    slots: Vec<Slot>,
    trail: Vec<VarId>,
    pub depth_used: u64,
    pub depth_limit: u64,
    pub limit_hit: bool,
}

impl BindingState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn var_count(&self) -> u32 {
        self.slots.len() as u32
    }

    pub fn fresh_var(&mut self) -> VarId {
        self.alloc(1, 0)
    }

    pub fn fresh_memo(&mut self) -> VarId {
        let id = VarId(self.var_count());
        self.slots.push(Slot {
            value: None,
            memo: true,
        });
        id
    }

    /// Reserves `vars` ordinary variables followed by `memos` memo slots and
    /// returns the id of the first one.
    pub fn alloc(&mut self, vars: u32, memos: u32) -> VarId {
        let base = VarId(self.var_count());
        self.slots.extend((0..vars).map(|_| Slot {
            value: None,
            memo: false,
        }));
        self.slots.extend((0..memos).map(|_| Slot {
            value: None,
            memo: true,
        }));
        base
    }

    /// Reserves one slot per entry of `kinds` (`true` marks a memo slot)
    /// and returns the id of the first.
    pub fn alloc_kinds(&mut self, kinds: &[bool]) -> VarId {
        let base = VarId(self.var_count());
        self.slots.extend(kinds.iter().map(|&memo| Slot { value: None, memo }));
        base
    }

    pub fn is_memo(&self, v: VarId) -> bool {
        self.slots[v.index()].memo
    }

    pub fn lookup(&self, v: VarId) -> Option<&Term> {
        self.slots[v.index()].value.as_ref()
    }

    pub fn is_bound(&self, v: VarId) -> bool {
        self.slots[v.index()].value.is_some()
    }

    pub fn bind(&mut self, v: VarId, t: Term) {
        let slot = &mut self.slots[v.index()];
        debug_assert!(slot.value.is_none(), "rebinding {v:?}");
        slot.value = Some(t);
        self.trail.push(v);
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            trail_len: self.trail.len(),
            var_count: self.var_count(),
        }
    }

    /// Variables bound since `cp`, oldest first.
    pub fn bound_since(&self, cp: Checkpoint) -> &[VarId] {
        &self.trail[cp.trail_len..]
    }

    pub fn undo_to(&mut self, cp: Checkpoint) {
        for v in self.trail.drain(cp.trail_len..).rev() {
            if let Some(slot) = self.slots.get_mut(v.index()) {
                slot.value = None;
            }
        }
        self.slots.truncate(cp.var_count as usize);
    }

    /// Number of bound variables, for tests and diagnostics.
    pub fn bound_count(&self) -> usize {
        self.slots.iter().filter(|s| s.value.is_some()).count()
    }

    /// Every slot's value and memo flag, for comparing states in tests.
    pub fn snapshot(&self) -> Vec<(Option<Term>, bool)> {
        self.slots.iter().map(|s| (s.value.clone(), s.memo)).collect()
    }

    pub fn trail_len(&self) -> usize {
        self.trail.len()
    }
}

/// Follows bound variables and filled memo slots to the representative term.
/// Never rewrites.
pub fn resolve<'a>(mut t: &'a Term, s: &'a BindingState) -> &'a Term {
    loop {
        let next = match t {
            Term::Var(v) => s.lookup(*v),
            Term::Fun(app) => s.lookup(app.memo),
            Term::Eta(e) => s.lookup(e.memo),
            _ => None,
        };
        match next {
            Some(n) => t = n,
            None => return t,
        }
    }
}

/// Applies the substitution throughout the term. Unfilled applications stay.
pub fn deep_resolve(t: &Term, s: &BindingState) -> Term {
    match resolve(t, s) {
        Term::Ctor(name, args) if !args.is_empty() => {
            Term::Ctor(*name, args.iter().map(|a| deep_resolve(a, s)).collect())
        }
        Term::Fun(app) => Term::Fun(Arc::new(FunApp {
            name: app.name,
            args: app.args.iter().map(|a| deep_resolve(a, s)).collect(),
            memo: app.memo,
            eq_type: app.eq_type.clone(),
        })),
        other => other.clone(),
    }
}

/// True if `v` occurs in `t` under the current bindings.
pub fn occurs_in(v: VarId, t: &Term, s: &BindingState) -> bool {
    match resolve(t, s) {
        Term::Var(u) => *u == v,
        Term::Int(_) => false,
        Term::Ctor(_, args) => args.iter().any(|a| occurs_in(v, a, s)),
        Term::Fun(app) => app.args.iter().any(|a| occurs_in(v, a, s)),
        Term::Lambda(l) => occurs_in(v, &l.body, s),
        Term::Eta(e) => occurs_in(v, &e.goal, s),
    }
}

/// Copies `t` giving fresh variables to everything in `rename`, to lambda
/// and eta binders, and fresh memo slots to every function application;
/// other variables are shared.
pub fn copy_fresh(t: &Term, rename: &mut HashMap<VarId, VarId>, s: &mut BindingState) -> Term {
    match t {
        Term::Var(v) => match rename.get(v) {
            Some(n) => Term::Var(*n),
            None => t.clone(),
        },
        Term::Int(_) => t.clone(),
        Term::Ctor(name, args) => {
            if args.is_empty() {
                t.clone()
            } else {
                Term::Ctor(*name, args.iter().map(|a| copy_fresh(a, rename, s)).collect())
            }
        }
        Term::Fun(app) => {
            let args = app.args.iter().map(|a| copy_fresh(a, rename, s)).collect();
            Term::Fun(Arc::new(FunApp {
                name: app.name,
                args,
                memo: s.fresh_memo(),
                eq_type: app.eq_type.clone(),
            }))
        }
        Term::Lambda(l) => {
            let params = l
                .params
                .iter()
                .map(|p| {
                    let n = s.fresh_var();
                    rename.insert(*p, n);
                    n
                })
                .collect();
            let body = copy_fresh(&l.body, rename, s);
            Term::Lambda(Arc::new(Lambda { params, body }))
        }
        Term::Eta(e) => {
            let var = s.fresh_var();
            rename.insert(e.var, var);
            Term::Eta(Arc::new(Eta {
                var,
                goal: copy_fresh(&e.goal, rename, s),
                memo: s.fresh_memo(),
            }))
        }
    }
}
