//! SLD resolution under depth-first iterative deepening.
//!
//! The search is an explicit machine: a persistent list of pending tasks and
//! a stack of choice points. Every choice point remembers a trail checkpoint
//! and the task list it was created under, so backtracking is an undo plus a
//! pointer swap. Unification and narrowing (in [`crate::narrow`]) push tasks
//! onto the same list, which is how a rewrite demanded in the middle of a
//! unification suspends it.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::io::Write;
use std::sync::Arc;

use crate::display::{term_text, VarNamer};
use crate::program::{Clause, ConvertedQuery, CtorInfo, Database, Rule};
use crate::reader::{parse_query, OperatorTable, ParseError};
use crate::terms::{
    copy_fresh, deep_resolve, resolve, well_known, BindingState, Checkpoint, Eta, FunApp, Sym, Term, VarId,
};
use crate::typecheck::{annotate, check_goals, TypeError};
use crate::types::Type;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchConfig {
    pub depth_init: u64,
    pub depth_step: u64,
    /// Last depth limit tried; `None` searches forever.
    pub max_depth: Option<u64>,
    /// Rewrites allowed while normalizing one answer.
    pub max_rewrites: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            depth_init: 5,
            depth_step: 5,
            max_depth: None,
            max_rewrites: 100_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error("runtime error: {0}")]
    Runtime(String),
    #[error("answer normalization exceeded {0} rewrites (divergent or infinite answer)")]
    RewriteCap(u64),
}

/// Why a query could not be started.
#[derive(Debug, thiserror::Error)]
pub enum QueryError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Convert(String),
    #[error(transparent)]
    Type(#[from] TypeError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Answer {
    /// Query variables in order of first appearance, with normalized values.
    pub bindings: Vec<(String, Term)>,
    pub found_depth: u64,
}

impl Answer {
    /// `Name=value` lines; unbound variables are numbered across the whole answer.
    pub fn lines(&self, ops: &OperatorTable) -> Vec<String> {
        let mut namer = VarNamer::new();
        self.bindings
            .iter()
            .map(|(n, t)| format!("{n}={}", term_text(t, ops, &mut namer)))
            .collect()
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum SearchStatus {
    Searching,
    /// The search space was finite and has been fully explored.
    Exhausted,
    /// The maximum depth was reached while branches were still being cut off.
    DepthLimit,
    Failed,
}

impl fmt::Display for SearchStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SearchStatus::Searching => "searching",
            SearchStatus::Exhausted => "exhausted",
            SearchStatus::DepthLimit => "incomplete: depth limit reached",
            SearchStatus::Failed => "stopped by an error",
        })
    }
}

pub(crate) type Goals = Option<Arc<GoalNode>>;

pub(crate) struct GoalNode {
    task: Task,
    next: Goals,
}

#[derive(Clone, Debug)]
pub(crate) enum Task {
    Call(Term),
    Unify(Vec<(Term, Term)>),
    /// Rewrite until the term is not a function application.
    Hnf(Term),
    Narrow(Arc<FunApp>),
    Fill(VarId, Term),
    Commit(u64),
    Arith(Arc<FunApp>),
    BoolOp(Arc<FunApp>),
    Eq(Arc<FunApp>),
    EqFalse(Term, Term, Option<Type>),
    EqFalseNow(Term, Term, Option<Type>),
    EqFalseSome(Vec<Term>, Vec<Term>, Vec<Option<Type>>),
    /// Bind each variable side to a fresh skeleton of `ctor`, then look for
    /// a differing argument.
    EqSplit(Term, Term, Sym, Vec<Option<Type>>),
    Skeleton(VarId, Sym),
    Apply(Arc<FunApp>),
    EtaStep(Arc<Eta>),
    Solution,
    Normalize(Term),
    Emit,
    Capture(Term),
}

/// Clause and rule alternatives are slices of the database, filtered for
/// first-level clashes as they are taken; `next` is the next candidate index.
enum Alt<'db> {
    Clauses {
        args: Arc<[Term]>,
        clauses: &'db [Arc<Clause>],
        next: usize,
    },
    Rules {
        app: Arc<FunApp>,
        rules: &'db [Arc<Rule>],
        next: usize,
    },
    Branches {
        items: Vec<(u64, Vec<Task>)>,
        next: usize,
    },
    Ints(IntFamily),
    Done,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum IntFilter {
    Any,
    NonZero(usize),
    NotEqual(i64),
    Distinct,
}

/// Lazy enumeration of integer assignments by shells of increasing
/// `max |v|`; shell `s` costs `base_cost + s`.
struct IntFamily {
    vars: Vec<VarId>,
    shell: u64,
    started: bool,
    pending: VecDeque<Vec<i64>>,
    filter: IntFilter,
    base_cost: u64,
    then: Vec<Task>,
}

fn shell_values(s: i64) -> Vec<i64> {
    let mut out = vec![0];
    for k in 1..=s {
        out.push(k);
        out.push(-k);
    }
    out
}

fn shell_tuples(k: usize, s: u64) -> VecDeque<Vec<i64>> {
    let s = s as i64;
    let vals = shell_values(s);
    let mut out = VecDeque::new();
    let mut cur = vec![0; k];
    fn rec(i: usize, vals: &[i64], s: i64, cur: &mut Vec<i64>, out: &mut VecDeque<Vec<i64>>) {
        if i == cur.len() {
            if cur.iter().any(|v| v.abs() == s) {
                out.push_back(cur.clone());
            }
            return;
        }
        for &v in vals {
            cur[i] = v;
            rec(i + 1, vals, s, cur, out);
        }
    }
    rec(0, &vals, s, &mut cur, &mut out);
    out
}

struct ChoicePoint<'db> {
    mark: Checkpoint,
    goals: Goals,
    depth: u64,
    normalizing: bool,
    id: u64,
    alt: Alt<'db>,
}

pub(crate) enum Flow {
    Go,
    Fail,
    Emit(Answer),
    Stop,
}

enum Attempt {
    Ready,
    Failed,
    Exhausted,
}

#[derive(Clone, Copy)]
enum Builtin {
    Arith,
    Bool,
    Eq,
    Apply,
}

fn builtin_of(name: Sym, arity: usize) -> Option<Builtin> {
    match (name.as_str(), arity) {
        ("+" | "-" | "*" | "div" | "mod" | "<" | ">" | "=<" | ">=" | "<=", 2) | ("abs" | "-", 1) => Some(Builtin::Arith),
        ("and" | "or", 2) => Some(Builtin::Bool),
        ("eq", 2) => Some(Builtin::Eq),
        ("apply", 2) => Some(Builtin::Apply),
        _ => None,
    }
}

fn runtime(msg: impl Into<String>) -> SolveError {
    SolveError::Runtime(msg.into())
}

/// Integer value of a builtin arithmetic application with known operands.
pub fn eval_arith(name: &str, args: &[i64]) -> Result<Term, SolveError> {
    let overflow = || runtime(format!("integer overflow in `{name}`"));
    let v = match (name, args) {
        ("-", [a]) => a.checked_neg().ok_or_else(overflow)?,
        ("abs", [a]) => a.checked_abs().ok_or_else(overflow)?,
        ("+", [a, b]) => a.checked_add(*b).ok_or_else(overflow)?,
        ("-", [a, b]) => a.checked_sub(*b).ok_or_else(overflow)?,
        ("*", [a, b]) => a.checked_mul(*b).ok_or_else(overflow)?,
        ("div" | "mod", [a, 0]) => return Err(runtime(format!("division by zero in `{a} {name} 0`"))),
        ("div", [a, b]) => {
            let q = a.checked_div(*b).ok_or_else(overflow)?;
            if a % b != 0 && ((*a < 0) != (*b < 0)) {
                q - 1
            } else {
                q
            }
        }
        ("mod", [a, b]) => {
            let r = a.checked_rem(*b).ok_or_else(overflow)?;
            if r != 0 && ((r < 0) != (*b < 0)) {
                r + b
            } else {
                r
            }
        }
        ("<", [a, b]) => return Ok(Term::boolean(a < b)),
        (">", [a, b]) => return Ok(Term::boolean(a > b)),
        ("=<" | "<=", [a, b]) => return Ok(Term::boolean(a <= b)),
        (">=", [a, b]) => return Ok(Term::boolean(a >= b)),
        _ => return Err(runtime(format!("unknown arithmetic function `{name}/{}`", args.len()))),
    };
    Ok(Term::Int(v))
}

pub(crate) struct Machine<'db> {
    pub db: &'db Database,
    pub st: BindingState,
    goals: Goals,
    stack: Vec<ChoicePoint<'db>>,
    next_id: u64,
    pub prev_limit: Option<u64>,
    pub normalizing: bool,
    norm_steps: u64,
    pub max_rewrites: u64,
    found_depth: u64,
    pub query_vars: Vec<(String, VarId)>,
    out: Box<dyn Write + 'db>,
    pub captured: Vec<(Term, BindingState)>,
    pub capture_max: usize,
}

impl<'db> Machine<'db> {
    pub fn new(db: &'db Database, st: BindingState) -> Self {
        Machine {
            db,
            st,
            goals: None,
            stack: Vec::new(),
            next_id: 0,
            prev_limit: None,
            normalizing: false,
            norm_steps: 0,
            max_rewrites: SearchConfig::default().max_rewrites,
            found_depth: 0,
            query_vars: Vec::new(),
            out: Box::new(std::io::sink()),
            captured: Vec::new(),
            capture_max: usize::MAX,
        }
    }

    pub fn set_output(&mut self, out: Box<dyn Write + 'db>) {
        self.out = out;
    }

    pub fn reset(&mut self, st: BindingState) {
        self.st = st;
        self.goals = None;
        self.stack.clear();
        self.normalizing = false;
    }

    pub fn push(&mut self, task: Task) {
        let next = self.goals.take();
        self.goals = Some(Arc::new(GoalNode { task, next }));
    }

    /// Pushes tasks so that the first of them runs first.
    pub fn push_seq(&mut self, tasks: impl DoubleEndedIterator<Item = Task>) {
        for t in tasks.rev() {
            self.push(t);
        }
    }

    /// Spends depth (or, while normalizing, rewrite budget). `false` means
    /// the depth limit cut this branch off.
    pub fn charge(&mut self, cost: u64) -> Result<bool, SolveError> {
        if self.normalizing {
            self.norm_steps += cost;
            if self.norm_steps > self.max_rewrites {
                return Err(SolveError::RewriteCap(self.max_rewrites));
            }
            Ok(true)
        } else if self.st.depth_used + cost > self.st.depth_limit {
            self.st.limit_hit = true;
            Ok(false)
        } else {
            self.st.depth_used += cost;
            Ok(true)
        }
    }

    pub fn run(&mut self) -> Result<Option<Answer>, SolveError> {
        loop {
            let flow = match self.goals.take() {
                Some(node) => match Arc::try_unwrap(node) {
                    Ok(node) => {
                        self.goals = node.next;
                        self.step(node.task)?
                    }
                    Err(shared) => {
                        self.goals = shared.next.clone();
                        self.step(shared.task.clone())?
                    }
                },
                None => Flow::Fail,
            };
            match flow {
                Flow::Go => {}
                Flow::Fail => {
                    if !self.backtrack()? {
                        return Ok(None);
                    }
                }
                Flow::Emit(a) => return Ok(Some(a)),
                Flow::Stop => return Ok(None),
            }
        }
    }

    /// Continues after an emitted answer.
    pub fn resume(&mut self) -> Result<Option<Answer>, SolveError> {
        if !self.backtrack()? {
            return Ok(None);
        }
        self.run()
    }

    fn backtrack(&mut self) -> Result<bool, SolveError> {
        while let Some(mut cp) = self.stack.pop() {
            loop {
                self.st.undo_to(cp.mark);
                self.goals = cp.goals.clone();
                self.st.depth_used = cp.depth;
                self.normalizing = cp.normalizing;
                match self.attempt(&mut cp)? {
                    Attempt::Ready => {
                        if !matches!(cp.alt, Alt::Done) {
                            self.stack.push(cp);
                        }
                        return Ok(true);
                    }
                    Attempt::Failed => continue,
                    Attempt::Exhausted => break,
                }
            }
        }
        Ok(false)
    }

    /// Tries the next alternative of `cp` against the restored state.
    fn attempt(&mut self, cp: &mut ChoicePoint<'db>) -> Result<Attempt, SolveError> {
        let id = cp.id;
        match &mut cp.alt {
            Alt::Done => Ok(Attempt::Exhausted),
            Alt::Clauses { args, clauses, next } => {
                let clauses: &'db [Arc<Clause>] = clauses;
                let Some(i) = self.next_candidate(args, clauses.iter().map(|c| &c.args[..]), *next) else {
                    return Ok(Attempt::Exhausted);
                };
                *next = i + 1;
                let args = args.clone();
                if self.next_candidate(&args, clauses.iter().map(|c| &c.args[..]), i + 1).is_none() {
                    cp.alt = Alt::Done;
                }
                if !self.charge(1)? {
                    return Ok(Attempt::Exhausted);
                }
                Ok(if self.apply_clause(&args, &clauses[i])? { Attempt::Ready } else { Attempt::Failed })
            }
            Alt::Rules { app, rules, next } => {
                let rules: &'db [Arc<Rule>] = rules;
                let Some(i) = self.next_candidate(&app.args, rules.iter().map(|r| &r.lhs[..]), *next) else {
                    return Ok(Attempt::Exhausted);
                };
                *next = i + 1;
                let app = app.clone();
                let last = self.next_candidate(&app.args, rules.iter().map(|r| &r.lhs[..]), i + 1).is_none();
                if last {
                    cp.alt = Alt::Done;
                }
                if !self.charge(1)? {
                    return Ok(Attempt::Exhausted);
                }
                let commit = if last { None } else { Some(id) };
                Ok(if self.apply_rule(&app, &rules[i], commit)? { Attempt::Ready } else { Attempt::Failed })
            }
            Alt::Branches { items, next } => {
                let Some((cost, tasks)) = items.get(*next).cloned() else {
                    return Ok(Attempt::Exhausted);
                };
                *next += 1;
                if *next == items.len() {
                    cp.alt = Alt::Done;
                }
                if !self.charge(cost)? {
                    // later branches never cost less
                    return Ok(Attempt::Exhausted);
                }
                self.push_seq(tasks.into_iter());
                Ok(Attempt::Ready)
            }
            Alt::Ints(fam) => {
                let tuple = loop {
                    if fam.pending.is_empty() {
                        if fam.started {
                            fam.shell += 1;
                        }
                        fam.started = true;
                        fam.pending = shell_tuples(fam.vars.len(), fam.shell);
                    }
                    let t = fam.pending.pop_front().expect("shells are never empty");
                    let keep = match fam.filter {
                        IntFilter::Any => true,
                        IntFilter::NonZero(i) => t[i] != 0,
                        IntFilter::NotEqual(x) => t[0] != x,
                        IntFilter::Distinct => t[0] != t[1],
                    };
                    if keep {
                        break t;
                    }
                };
                let cost = fam.base_cost + fam.shell;
                let vars = fam.vars.clone();
                let then = fam.then.clone();
                if !self.charge(cost)? {
                    cp.alt = Alt::Done;
                    return Ok(Attempt::Exhausted);
                }
                for (v, x) in vars.into_iter().zip(tuple) {
                    self.st.bind(v, Term::Int(x));
                }
                self.push_seq(then.into_iter());
                Ok(Attempt::Ready)
            }
        }
    }

    /// Index of the first head at or after `from` with no first-level clash.
    fn next_candidate<'a>(&self, args: &[Term], heads: impl Iterator<Item = &'a [Term]>, from: usize) -> Option<usize> {
        heads
            .enumerate()
            .skip(from)
            .find(|(_, h)| h.len() == args.len() && !first_level_clash(args, h, &self.st))
            .map(|(i, _)| i)
    }

    fn push_choice(&mut self, alt: Alt<'db>) -> Flow {
        let id = self.next_id;
        self.next_id += 1;
        self.push_choice_with_id(id, alt)
    }

    fn fresh_choice_id(&mut self) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    /// Registers a choice point; the run loop's backtrack then takes its
    /// first alternative.
    fn push_choice_with_id(&mut self, id: u64, alt: Alt<'db>) -> Flow {
        self.stack.push(ChoicePoint {
            mark: self.st.checkpoint(),
            goals: self.goals.clone(),
            depth: self.st.depth_used,
            normalizing: self.normalizing,
            id,
            alt,
        });
        Flow::Fail
    }

    /// Drops the remaining alternatives of choice point `id` if nothing that
    /// existed before it was bound since (the non-overlap cut).
    fn commit(&mut self, id: u64) {
        let Ok(pos) = self.stack.binary_search_by_key(&id, |c| c.id) else {
            return;
        };
        let mark = self.stack[pos].mark;
        let clean = self
            .st
            .bound_since(mark)
            .iter()
            .all(|v| v.0 >= mark.var_count || self.st.is_memo(*v));
        if clean {
            if pos + 1 == self.stack.len() {
                self.stack.pop();
            } else {
                self.stack[pos].alt = Alt::Done;
            }
        }
    }

    fn step(&mut self, task: Task) -> Result<Flow, SolveError> {
        let ok = |b: bool| if b { Flow::Go } else { Flow::Fail };
        match task {
            Task::Call(g) => self.call(&g),
            Task::Unify(pairs) => Ok(ok(self.unify(pairs)?)),
            Task::Hnf(t) => {
                match resolve(&t, &self.st).clone() {
                    Term::Fun(app) => {
                        let again = Term::Fun(app.clone());
                        self.push(Task::Hnf(again));
                        self.push(Task::Narrow(app));
                    }
                    Term::Eta(e) => {
                        let again = Term::Eta(e.clone());
                        self.push(Task::Hnf(again));
                        self.push(Task::EtaStep(e));
                    }
                    _ => {}
                }
                Ok(Flow::Go)
            }
            Task::Narrow(app) => self.narrow(&app),
            Task::Fill(memo, t) => {
                if let Some(old) = self.st.lookup(memo).cloned() {
                    Ok(ok(self.unify(vec![(old, t)])?))
                } else {
                    self.st.bind(memo, t);
                    Ok(Flow::Go)
                }
            }
            Task::Commit(id) => {
                self.commit(id);
                Ok(Flow::Go)
            }
            Task::Arith(app) => self.arith(&app),
            Task::BoolOp(app) => self.bool_op(&app),
            Task::Eq(app) => self.eq(&app),
            Task::EqFalse(a, b, ty) => {
                self.push(Task::EqFalseNow(a.clone(), b.clone(), ty));
                self.push_hnf(&b);
                self.push_hnf(&a);
                Ok(Flow::Go)
            }
            Task::EqFalseNow(a, b, ty) => self.eq_false(&a, &b, ty),
            Task::EqFalseSome(xs, ys, tys) => self.eq_false_some(&xs, &ys, &tys),
            Task::EqSplit(a, b, ctor, tys) => {
                let xs = self.split_side(&a, ctor);
                let ys = self.split_side(&b, ctor);
                self.push(Task::EqFalseSome(xs, ys, tys));
                Ok(Flow::Go)
            }
            Task::Skeleton(v, ctor) => {
                let sk = self.skeleton(ctor);
                self.st.bind(v, sk);
                Ok(Flow::Go)
            }
            Task::Apply(app) => self.apply(&app),
            Task::EtaStep(e) => {
                if self.st.is_bound(e.memo) {
                    return Ok(Flow::Go);
                }
                if !self.charge(1)? {
                    return Ok(Flow::Fail);
                }
                self.push(Task::Fill(e.memo, Term::Var(e.var)));
                self.push(Task::Call(e.goal.clone()));
                Ok(Flow::Go)
            }
            Task::Solution => {
                if self.normalizing {
                    return Ok(Flow::Go);
                }
                let d = self.st.depth_used;
                if self.prev_limit.is_some_and(|p| d <= p) {
                    return Ok(Flow::Fail);
                }
                self.found_depth = d;
                self.normalizing = true;
                self.norm_steps = 0;
                self.push(Task::Emit);
                let vars: Vec<Task> = self.query_vars.iter().map(|(_, v)| Task::Normalize(Term::Var(*v))).collect();
                self.push_seq(vars.into_iter());
                Ok(Flow::Go)
            }
            Task::Normalize(t) => {
                match resolve(&t, &self.st).clone() {
                    Term::Ctor(_, args) => {
                        let tasks: Vec<Task> = args.iter().cloned().map(Task::Normalize).collect();
                        self.push_seq(tasks.into_iter());
                    }
                    Term::Fun(app) => {
                        self.push(Task::Normalize(Term::Fun(app.clone())));
                        self.push(Task::Narrow(app));
                    }
                    Term::Eta(e) => {
                        self.push(Task::Normalize(Term::Eta(e.clone())));
                        self.push(Task::EtaStep(e));
                    }
                    _ => {}
                }
                Ok(Flow::Go)
            }
            Task::Emit => {
                let bindings = self
                    .query_vars
                    .iter()
                    .map(|(n, v)| (n.clone(), deep_resolve(&Term::Var(*v), &self.st)))
                    .collect();
                Ok(Flow::Emit(Answer {
                    bindings,
                    found_depth: self.found_depth,
                }))
            }
            Task::Capture(t) => {
                let v = deep_resolve(&t, &self.st);
                self.captured.push((v, self.st.clone()));
                Ok(if self.captured.len() >= self.capture_max { Flow::Stop } else { Flow::Fail })
            }
        }
    }

    fn call(&mut self, goal: &Term) -> Result<Flow, SolveError> {
        let wk = well_known();
        let g = resolve(goal, &self.st).clone();
        let Term::Ctor(name, args) = &g else {
            return Err(runtime(format!("not a callable goal: {}", self.show(&g))));
        };
        match args.len() {
            2 if *name == wk.conj => {
                self.push(Task::Call(args[1].clone()));
                self.push(Task::Call(args[0].clone()));
                Ok(Flow::Go)
            }
            2 if *name == wk.unify => {
                let ok = self.unify(vec![(args[0].clone(), args[1].clone())])?;
                Ok(if ok { Flow::Go } else { Flow::Fail })
            }
            0 if *name == wk.true_ => Ok(Flow::Go),
            0 if *name == wk.fail => Ok(Flow::Fail),
            1 if *name == wk.write => {
                let t = deep_resolve(&args[0], &self.st);
                let text = self.show(&t);
                self.out
                    .write_all(text.as_bytes())
                    .map_err(|e| runtime(format!("write failed: {e}")))?;
                Ok(Flow::Go)
            }
            0 if *name == wk.nl => {
                self.out
                    .write_all(b"\n")
                    .and_then(|_| self.out.flush())
                    .map_err(|e| runtime(format!("write failed: {e}")))?;
                Ok(Flow::Go)
            }
            _ => self.call_user(*name, args),
        }
    }

    fn show(&self, t: &Term) -> String {
        term_text(t, &self.db.ops, &mut VarNamer::new())
    }

    fn call_user(&mut self, pred: Sym, args: &Arc<[Term]>) -> Result<Flow, SolveError> {
        let db = self.db;
        let Some(clauses) = db.clauses.get(&pred) else {
            if db.preds.contains_key(&pred) {
                return Ok(Flow::Fail);
            }
            return Err(runtime(format!("unknown predicate `{pred}/{}`", args.len())));
        };
        let heads = || clauses.iter().map(|c| &c.args[..]);
        let Some(first) = self.next_candidate(args, heads(), 0) else {
            return Ok(Flow::Fail);
        };
        if self.next_candidate(args, heads(), first + 1).is_none() {
            if !self.charge(1)? {
                return Ok(Flow::Fail);
            }
            return Ok(if self.apply_clause(args, &clauses[first])? { Flow::Go } else { Flow::Fail });
        }
        Ok(self.push_choice(Alt::Clauses {
            args: args.clone(),
            clauses,
            next: first,
        }))
    }

    fn apply_clause(&mut self, args: &[Term], c: &Clause) -> Result<bool, SolveError> {
        let base = self.st.alloc_kinds(&c.kinds).0;
        let body: Vec<Task> = c.body.iter().map(|g| Task::Call(g.offset(base))).collect();
        self.push_seq(body.into_iter());
        let pairs = args.iter().cloned().zip(c.args.iter().map(|h| h.offset(base))).collect();
        self.unify(pairs)
    }

    /// One outermost narrowing step on `app`, unless its memo is filled.
    pub(crate) fn narrow(&mut self, app: &Arc<FunApp>) -> Result<Flow, SolveError> {
        if self.st.is_bound(app.memo) {
            return Ok(Flow::Go);
        }
        let db = self.db;
        if !db.funs.contains_key(&app.name) {
            let Some(b) = builtin_of(app.name, app.args.len()) else {
                return Err(runtime(format!("unknown function `{}/{}`", app.name, app.args.len())));
            };
            return self.builtin(b, app);
        }
        let rules = db.rules_for(app.name);
        let heads = || rules.iter().map(|r| &r.lhs[..]);
        let Some(first) = self.next_candidate(&app.args, heads(), 0) else {
            return Ok(Flow::Fail);
        };
        if self.next_candidate(&app.args, heads(), first + 1).is_none() {
            if !self.charge(1)? {
                return Ok(Flow::Fail);
            }
            return Ok(if self.apply_rule(app, &rules[first], None)? { Flow::Go } else { Flow::Fail });
        }
        Ok(self.push_choice(Alt::Rules {
            app: app.clone(),
            rules,
            next: first,
        }))
    }

    fn apply_rule(&mut self, app: &Arc<FunApp>, r: &Rule, commit: Option<u64>) -> Result<bool, SolveError> {
        let base = self.st.alloc_kinds(&r.kinds).0;
        self.push(Task::Fill(app.memo, r.rhs.offset(base)));
        if let Some(id) = commit {
            self.push(Task::Commit(id));
        }
        let pairs = app.args.iter().cloned().zip(r.lhs.iter().map(|l| l.offset(base))).collect();
        self.unify(pairs)
    }

    fn needs_hnf(&self, t: &Term) -> bool {
        matches!(resolve(t, &self.st), Term::Fun(_) | Term::Eta(_))
    }

    fn push_hnf(&mut self, t: &Term) {
        if self.needs_hnf(t) {
            self.push(Task::Hnf(t.clone()));
        }
    }

    /// Brings the arguments a builtin inspects to head normal form, then
    /// evaluates it; runs at once when they already are.
    fn builtin(&mut self, b: Builtin, app: &Arc<FunApp>) -> Result<Flow, SolveError> {
        let inspected = match b {
            Builtin::Arith | Builtin::Eq => &app.args[..],
            Builtin::Bool | Builtin::Apply => &app.args[..1],
        };
        if !inspected.iter().any(|a| self.needs_hnf(a)) {
            return match b {
                Builtin::Arith => self.arith(app),
                Builtin::Bool => self.bool_op(app),
                Builtin::Eq => self.eq(app),
                Builtin::Apply => self.apply(app),
            };
        }
        self.push(match b {
            Builtin::Arith => Task::Arith(app.clone()),
            Builtin::Bool => Task::BoolOp(app.clone()),
            Builtin::Eq => Task::Eq(app.clone()),
            Builtin::Apply => Task::Apply(app.clone()),
        });
        for a in inspected.iter().rev() {
            self.push(Task::Hnf(a.clone()));
        }
        Ok(Flow::Go)
    }

    fn arith(&mut self, app: &Arc<FunApp>) -> Result<Flow, SolveError> {
        if self.st.is_bound(app.memo) {
            return Ok(Flow::Go);
        }
        let name = app.name.as_str();
        let mut ints = Vec::with_capacity(app.args.len());
        let mut vars: Vec<VarId> = Vec::new();
        let mut divisor = None;
        for (i, a) in app.args.iter().enumerate() {
            match resolve(a, &self.st) {
                Term::Int(n) => ints.push(*n),
                Term::Var(v) => {
                    let pos = vars.iter().position(|w| w == v).unwrap_or_else(|| {
                        vars.push(*v);
                        vars.len() - 1
                    });
                    if i == 1 && matches!(name, "div" | "mod") {
                        divisor = Some(pos);
                    }
                }
                other => {
                    let other = other.clone();
                    return Err(runtime(format!("`{name}` applied to non-integer {}", self.show(&other))));
                }
            }
        }
        if vars.is_empty() {
            if !self.charge(1)? {
                return Ok(Flow::Fail);
            }
            let v = eval_arith(name, &ints)?;
            self.st.bind(app.memo, v);
            return Ok(Flow::Go);
        }
        Ok(self.push_choice(Alt::Ints(IntFamily {
            vars,
            shell: 0,
            started: false,
            pending: VecDeque::new(),
            filter: divisor.map_or(IntFilter::Any, IntFilter::NonZero),
            base_cost: 0,
            then: vec![Task::Arith(app.clone())],
        })))
    }

    fn bool_op(&mut self, app: &Arc<FunApp>) -> Result<Flow, SolveError> {
        if self.st.is_bound(app.memo) {
            return Ok(Flow::Go);
        }
        let wk = well_known();
        let is_and = app.name.as_str() == "and";
        match resolve(&app.args[0], &self.st).clone() {
            Term::Ctor(c, _) if c == wk.true_ || c == wk.false_ => {
                if !self.charge(1)? {
                    return Ok(Flow::Fail);
                }
                let first = c == wk.true_;
                let v = if first == is_and { app.args[1].clone() } else { Term::boolean(first) };
                self.st.bind(app.memo, v);
                Ok(Flow::Go)
            }
            Term::Var(x) => {
                let branch = |b: bool| (0, vec![Task::Unify(vec![(Term::Var(x), Term::boolean(b))]), Task::BoolOp(app.clone())]);
                Ok(self.push_choice(Alt::Branches {
                    items: vec![branch(true), branch(false)],
                    next: 0,
                }))
            }
            other => Err(runtime(format!("`{}` applied to non-boolean {}", app.name, self.show(&other)))),
        }
    }

    fn eq(&mut self, app: &Arc<FunApp>) -> Result<Flow, SolveError> {
        if self.st.is_bound(app.memo) {
            return Ok(Flow::Go);
        }
        let a = resolve(&app.args[0], &self.st).clone();
        let b = resolve(&app.args[1], &self.st).clone();
        let decided = match (&a, &b) {
            (Term::Int(x), Term::Int(y)) => Some(x == y),
            (Term::Ctor(f, xs), Term::Ctor(g, ys)) if f != g || xs.len() != ys.len() => Some(false),
            (Term::Ctor(_, xs), Term::Ctor(_, _)) if xs.is_empty() => Some(true),
            (Term::Lambda(_), _) | (_, Term::Lambda(_)) => return Err(runtime("`eq` cannot compare functions")),
            _ => None,
        };
        if let Some(v) = decided {
            if !self.charge(1)? {
                return Ok(Flow::Fail);
            }
            self.st.bind(app.memo, Term::boolean(v));
            return Ok(Flow::Go);
        }
        let ty = app.eq_type.as_deref().cloned();
        let id = self.fresh_choice_id();
        let yes = vec![
            Task::Unify(vec![(a.clone(), b.clone())]),
            Task::Commit(id),
            Task::Fill(app.memo, Term::boolean(true)),
        ];
        let no = vec![Task::EqFalse(a, b, ty), Task::Fill(app.memo, Term::boolean(false))];
        Ok(self.push_choice_with_id(
            id,
            Alt::Branches {
                items: vec![(1, yes), (1, no)],
                next: 0,
            },
        ))
    }

    fn type_name_of(&self, ty: &Type) -> Option<Sym> {
        match ty {
            Type::Bool => Some(well_known().bool_),
            Type::App(name, _) => Some(*name),
            _ => None,
        }
    }

    fn ctor_info(&self, c: Sym) -> Result<&'db CtorInfo, SolveError> {
        self.db
            .ctors
            .get(&c)
            .ok_or_else(|| runtime(format!("`eq` on a value built with undeclared constructor `{c}`")))
    }

    /// Constructors of the value's type in declaration order.
    fn sibling_ctors(&self, type_name: Sym) -> Vec<&'db CtorInfo> {
        self.db.ctors_of(type_name)
    }

    fn arg_types(c: &CtorInfo, ty: Option<&Type>) -> Vec<Option<Type>> {
        match ty {
            Some(Type::App(_, ps)) if ps.len() as u32 == c.type_arity => {
                c.args.iter().map(|a| Some(a.instantiate(ps))).collect()
            }
            _ => c.args.iter().map(|a| a.is_ground().then(|| a.clone())).collect(),
        }
    }

    fn skeleton(&mut self, c: Sym) -> Term {
        let n = self.db.ctors.get(&c).map_or(0, |i| i.args.len());
        let args = (0..n).map(|_| Term::Var(self.st.fresh_var())).collect();
        Term::ctor(c, args)
    }

    fn split_side(&mut self, t: &Term, c: Sym) -> Vec<Term> {
        match resolve(t, &self.st).clone() {
            Term::Var(v) => {
                let sk = self.skeleton(c);
                self.st.bind(v, sk.clone());
                match sk {
                    Term::Ctor(_, args) => args.to_vec(),
                    _ => Vec::new(),
                }
            }
            Term::Ctor(_, args) => args.to_vec(),
            _ => Vec::new(),
        }
    }

    /// Instantiates `a` and `b` to values that differ.
    fn eq_false(&mut self, a: &Term, b: &Term, ty: Option<Type>) -> Result<Flow, SolveError> {
        let a = resolve(a, &self.st).clone();
        let b = resolve(b, &self.st).clone();
        let ints = |vars, filter| {
            Alt::Ints(IntFamily {
                vars,
                shell: 0,
                started: false,
                pending: VecDeque::new(),
                filter,
                base_cost: 1,
                then: Vec::new(),
            })
        };
        match (&a, &b) {
            (Term::Int(x), Term::Int(y)) => Ok(if x != y { Flow::Go } else { Flow::Fail }),
            (Term::Int(x), Term::Var(v)) | (Term::Var(v), Term::Int(x)) => {
                Ok(self.push_choice(ints(vec![*v], IntFilter::NotEqual(*x))))
            }
            (Term::Var(v), Term::Var(w)) => {
                if v == w {
                    return Ok(Flow::Fail);
                }
                match ty {
                    Some(Type::Int) => Ok(self.push_choice(ints(vec![*v, *w], IntFilter::Distinct))),
                    Some(ref t) if self.type_name_of(t).is_some() => {
                        let cs = self.sibling_ctors(self.type_name_of(t).unwrap());
                        let mut items = Vec::new();
                        for ci in &cs {
                            for cj in &cs {
                                if ci.name != cj.name {
                                    items.push((1, vec![Task::Skeleton(*v, ci.name), Task::Skeleton(*w, cj.name)]));
                                }
                            }
                        }
                        for c in &cs {
                            if !c.args.is_empty() {
                                let tys = Self::arg_types(c, Some(t));
                                items.push((1, vec![Task::EqSplit(a.clone(), b.clone(), c.name, tys)]));
                            }
                        }
                        Ok(self.push_choice(Alt::Branches { items, next: 0 }))
                    }
                    _ => Err(runtime(
                        "`eq` would have to enumerate values of an unknown or polymorphic type",
                    )),
                }
            }
            (Term::Ctor(c, _), Term::Var(v)) | (Term::Var(v), Term::Ctor(c, _)) => {
                let info = self.ctor_info(*c)?;
                let ty = ty.or_else(|| (info.type_arity == 0).then(|| info.result()));
                let mut items = Vec::new();
                for d in self.sibling_ctors(info.type_name) {
                    if d.name != *c {
                        items.push((1, vec![Task::Skeleton(*v, d.name)]));
                    }
                }
                if !info.args.is_empty() {
                    let tys = Self::arg_types(info, ty.as_ref());
                    items.push((1, vec![Task::EqSplit(a.clone(), b.clone(), *c, tys)]));
                }
                if items.is_empty() {
                    return Ok(Flow::Fail);
                }
                Ok(self.push_choice(Alt::Branches { items, next: 0 }))
            }
            (Term::Ctor(f, xs), Term::Ctor(g, ys)) => {
                if f != g || xs.len() != ys.len() {
                    return Ok(Flow::Go);
                }
                let info = self.ctor_info(*f)?;
                let tys = Self::arg_types(info, ty.as_ref());
                self.push(Task::EqFalseSome(xs.to_vec(), ys.to_vec(), tys));
                Ok(Flow::Go)
            }
            (Term::Int(_), Term::Ctor(..)) | (Term::Ctor(..), Term::Int(_)) => Ok(Flow::Go),
            _ => Err(runtime(format!(
                "`eq` cannot compare {} and {}",
                self.show(&a),
                self.show(&b)
            ))),
        }
    }

    /// Some argument position differs: earlier positions equal, position i unequal.
    fn eq_false_some(&mut self, xs: &[Term], ys: &[Term], tys: &[Option<Type>]) -> Result<Flow, SolveError> {
        let branch = |i: usize| {
            let mut tasks = Vec::new();
            if i > 0 {
                tasks.push(Task::Unify(xs[..i].iter().cloned().zip(ys[..i].iter().cloned()).collect()));
            }
            tasks.push(Task::EqFalse(xs[i].clone(), ys[i].clone(), tys.get(i).cloned().flatten()));
            (1, tasks)
        };
        match xs.len() {
            0 => Ok(Flow::Fail),
            1 => {
                if !self.charge(1)? {
                    return Ok(Flow::Fail);
                }
                let (_, tasks) = branch(0);
                self.push_seq(tasks.into_iter());
                Ok(Flow::Go)
            }
            n => {
                let items = (0..n).map(branch).collect();
                Ok(self.push_choice(Alt::Branches { items, next: 0 }))
            }
        }
    }

    fn apply(&mut self, app: &Arc<FunApp>) -> Result<Flow, SolveError> {
        if self.st.is_bound(app.memo) {
            return Ok(Flow::Go);
        }
        let f = resolve(&app.args[0], &self.st).clone();
        let Term::Lambda(_) = &f else {
            let what = match f {
                Term::Var(_) => "an unbound variable".to_owned(),
                other => self.show(&other),
            };
            return Err(runtime(format!(
                "`apply` needs a function or lambda as first argument, got {what} (no higher-order unification)"
            )));
        };
        let mut items = Vec::new();
        let mut cur = resolve(&app.args[1], &self.st).clone();
        let wk = well_known();
        loop {
            match cur {
                Term::Ctor(c, args) if c == wk.cons && args.len() == 2 => {
                    items.push(args[0].clone());
                    cur = resolve(&args[1], &self.st).clone();
                }
                Term::Ctor(c, _) if c == wk.nil => break,
                _ => return Err(runtime("`apply` needs a list literal of arguments")),
            }
        }
        if !self.charge(1)? {
            return Ok(Flow::Fail);
        }
        let Term::Lambda(l) = copy_fresh(&f, &mut HashMap::new(), &mut self.st) else {
            unreachable!()
        };
        if l.params.len() != items.len() {
            return Err(runtime(format!(
                "`apply` of a {}-argument function to {} argument(s)",
                l.params.len(),
                items.len()
            )));
        }
        for (p, a) in l.params.iter().zip(items) {
            self.st.bind(*p, a);
        }
        self.st.bind(app.memo, l.body.clone());
        Ok(Flow::Go)
    }
}

/// True if a rule or clause head cannot match because of a different
/// principal constructor or integer in some argument.
fn first_level_clash(args: &[Term], pats: &[Term], st: &BindingState) -> bool {
    args.iter().zip(pats).any(|(a, p)| match (resolve(a, st), p) {
        (Term::Ctor(f, xs), Term::Ctor(g, ys)) => f != g || xs.len() != ys.len(),
        (Term::Int(x), Term::Int(y)) => x != y,
        (Term::Int(_), Term::Ctor(..)) | (Term::Ctor(..), Term::Int(_)) => true,
        _ => false,
    })
}

/// Pull-driven answer stream for one query.
pub struct Solver<'db> {
    m: Machine<'db>,
    goals: Vec<Term>,
    kinds: Arc<[bool]>,
    cfg: SearchConfig,
    limit: u64,
    status: SearchStatus,
    in_iteration: bool,
    iterations: u32,
}

impl<'db> Solver<'db> {
    pub fn new(db: &'db Database, query: ConvertedQuery, cfg: SearchConfig) -> Self {
        let mut m = Machine::new(db, BindingState::new());
        m.query_vars = query.vars;
        m.max_rewrites = cfg.max_rewrites;
        let limit = match cfg.max_depth {
            Some(max) => cfg.depth_init.min(max),
            None => cfg.depth_init,
        };
        Solver {
            m,
            goals: query.goals,
            kinds: query.kinds,
            cfg,
            limit,
            status: SearchStatus::Searching,
            in_iteration: false,
            iterations: 0,
        }
    }

    /// Parses, converts and type-checks a query (`solve(G).`, `?- G.` or `G.`).
    pub fn from_text(db: &'db Database, text: &str, cfg: SearchConfig) -> Result<Self, QueryError> {
        let q = parse_query(text, &db.ops)?;
        let mut conv = db.convert_query(&q.goals, &q.var_names).map_err(QueryError::Convert)?;
        let typing = check_goals(&conv.goals, conv.kinds.len(), &conv.vars, db)?;
        conv.goals = conv.goals.iter().map(|g| annotate(g, &typing)).collect();
        Ok(Solver::new(db, conv, cfg))
    }

    /// Sink for `write`/`nl` output (discarded by default).
    pub fn with_output(mut self, out: Box<dyn Write + 'db>) -> Self {
        self.m.set_output(out);
        self
    }

    pub fn status(&self) -> SearchStatus {
        self.status
    }

    /// Depth limit of the current (or last) iteration.
    pub fn depth_limit(&self) -> u64 {
        self.limit
    }

    pub fn iterations(&self) -> u32 {
        self.iterations
    }

    fn start_iteration(&mut self) {
        let mut st = BindingState::new();
        st.alloc_kinds(&self.kinds);
        st.depth_limit = self.limit;
        self.m.reset(st);
        self.m.push(Task::Solution);
        let calls: Vec<Task> = self.goals.iter().cloned().map(Task::Call).collect();
        self.m.push_seq(calls.into_iter());
        self.iterations += 1;
    }

    pub fn next_answer(&mut self) -> Result<Option<Answer>, SolveError> {
        loop {
            if self.status != SearchStatus::Searching {
                return Ok(None);
            }
            let r = if self.in_iteration {
                self.m.resume()
            } else {
                self.start_iteration();
                self.in_iteration = true;
                self.m.run()
            };
            match r {
                Err(e) => {
                    self.status = SearchStatus::Failed;
                    return Err(e);
                }
                Ok(Some(a)) => return Ok(Some(a)),
                Ok(None) => {
                    self.in_iteration = false;
                    if !self.m.st.limit_hit {
                        self.status = SearchStatus::Exhausted;
                        return Ok(None);
                    }
                    let mut next = self.limit + self.cfg.depth_step.max(1);
                    if let Some(max) = self.cfg.max_depth {
                        if self.limit >= max {
                            self.status = SearchStatus::DepthLimit;
                            return Ok(None);
                        }
                        next = next.min(max);
                    }
                    self.m.prev_limit = Some(self.limit);
                    self.limit = next;
                }
            }
        }
    }

    /// Up to `n` answers.
    pub fn take_answers(&mut self, n: usize) -> Result<Vec<Answer>, SolveError> {
        let mut out = Vec::new();
        while out.len() < n {
            match self.next_answer()? {
                Some(a) => out.push(a),
                None => break,
            }
        }
        Ok(out)
    }
}

impl Iterator for Solver<'_> {
    type Item = Result<Answer, SolveError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_answer().transpose()
    }
}
