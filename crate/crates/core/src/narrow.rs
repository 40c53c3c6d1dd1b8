//! Semantic unification, lazy outer narrowing and answer normalization.
//!
//! Unification works through a local list of disagreement pairs. A pair
//! that needs a rewrite first (a function application against anything but
//! an unbound variable) suspends the rest of the list behind a narrowing
//! task on the machine, so rewriting is outermost and happens only on demand.

use crate::program::Database;
use crate::solver::{Machine, SolveError, Task};
use crate::terms::{occurs_in, resolve, BindingState, Term, VarId};

impl Machine<'_> {
    /// Unifies the pairs left to right, modulo the rewrite rules. Returns
    /// `false` on a constructor clash; suspended work goes onto the task list.
    pub(crate) fn unify(&mut self, pairs: Vec<(Term, Term)>) -> Result<bool, SolveError> {
        let mut work = pairs;
        work.reverse();
        let mut deferred: Vec<(Term, Term)> = Vec::new();
        while let Some((a, b)) = work.pop() {
            let a = resolve(&a, &self.st).clone();
            let b = resolve(&b, &self.st).clone();
            let demand = match (&a, &b) {
                (Term::Var(x), Term::Var(y)) => {
                    if x != y {
                        let (old, young) = if x < y { (*x, *y) } else { (*y, *x) };
                        self.st.bind(young, Term::Var(old));
                    }
                    None
                }
                (Term::Var(x), t) | (t, Term::Var(x)) => {
                    let demand = match t {
                        Term::Fun(app) if occurs_in(*x, t, &self.st) => Some(Task::Narrow(app.clone())),
                        Term::Eta(e) if occurs_in(*x, t, &self.st) => Some(Task::EtaStep(e.clone())),
                        _ => None,
                    };
                    if demand.is_none() {
                        match extended_occurs(*x, t, &mut self.st) {
                            None => return Ok(false),
                            Some((t2, extra)) => {
                                self.st.bind(*x, t2);
                                deferred.extend(extra.into_iter().map(|(v, app)| (Term::Var(v), app)));
                            }
                        }
                    }
                    demand
                }
                (Term::Fun(app), _) | (_, Term::Fun(app)) => Some(Task::Narrow(app.clone())),
                (Term::Eta(e), _) | (_, Term::Eta(e)) => Some(Task::EtaStep(e.clone())),
                (Term::Int(x), Term::Int(y)) => {
                    if x != y {
                        return Ok(false);
                    }
                    None
                }
                (Term::Ctor(f, xs), Term::Ctor(g, ys)) => {
                    if f != g || xs.len() != ys.len() {
                        return Ok(false);
                    }
                    work.extend(xs.iter().cloned().zip(ys.iter().cloned()).rev());
                    None
                }
                (Term::Lambda(l), Term::Lambda(m)) => {
                    if l == m {
                        None
                    } else {
                        return Err(SolveError::Runtime(
                            "cannot unify two different functions (no higher-order unification)".into(),
                        ));
                    }
                }
                _ => return Ok(false),
            };
            if let Some(task) = demand {
                let mut rest = vec![(a, b)];
                rest.extend(work.into_iter().rev());
                rest.extend(deferred);
                self.push(Task::Unify(rest));
                self.push(task);
                return Ok(true);
            }
        }
        if !deferred.is_empty() {
            self.push(Task::Unify(deferred));
        }
        Ok(true)
    }
}

/// Occurs check that tolerates occurrences of `v` inside function
/// applications: each application containing `v` is replaced by a fresh
/// variable and returned as a pair to solve later. Fails if `v` occurs
/// outside any application.
pub fn extended_occurs(v: VarId, t: &Term, st: &mut BindingState) -> Option<(Term, Vec<(VarId, Term)>)> {
    if !occurs_in(v, t, st) {
        return Some((t.clone(), Vec::new()));
    }
    let mut pairs = Vec::new();
    let t2 = replace_apps(v, t, st, &mut pairs)?;
    Some((t2, pairs))
}

fn replace_apps(v: VarId, t: &Term, st: &mut BindingState, pairs: &mut Vec<(VarId, Term)>) -> Option<Term> {
    let r = resolve(t, st).clone();
    match &r {
        Term::Var(u) => (*u != v).then_some(r),
        Term::Int(_) => Some(r),
        Term::Ctor(f, args) => {
            let mut out = Vec::with_capacity(args.len());
            for a in args.iter() {
                out.push(replace_apps(v, a, st, pairs)?);
            }
            Some(Term::ctor(*f, out))
        }
        Term::Fun(_) | Term::Eta(_) => {
            if occurs_in(v, &r, st) {
                let f = st.fresh_var();
                pairs.push((f, r));
                Some(Term::Var(f))
            } else {
                Some(r)
            }
        }
        Term::Lambda(_) => (!occurs_in(v, &r, st)).then_some(r),
    }
}

fn collect(m: &mut Machine<'_>, max: usize) -> Result<Vec<(Term, BindingState)>, SolveError> {
    m.capture_max = max;
    m.run()?;
    Ok(std::mem::take(&mut m.captured))
}

fn machine<'db>(db: &'db Database, s: &BindingState, depth_limit: u64) -> Machine<'db> {
    let mut st = s.clone();
    st.depth_used = 0;
    st.depth_limit = depth_limit;
    st.limit_hit = false;
    Machine::new(db, st)
}

/// Up to `max` states in which `a` and `b` are equal modulo the rules, in
/// search order, exploring rewrites up to `depth_limit`.
pub fn semantic_unify(
    db: &Database,
    a: &Term,
    b: &Term,
    s: &BindingState,
    depth_limit: u64,
    max: usize,
) -> Result<Vec<BindingState>, SolveError> {
    let mut m = machine(db, s, depth_limit);
    m.push(Task::Capture(Term::Int(0)));
    m.push(Task::Unify(vec![(a.clone(), b.clone())]));
    Ok(collect(&mut m, max)?.into_iter().map(|(_, st)| st).collect())
}

/// The results of one narrowing step on the application `f`: each rule
/// alternative's right side (with arguments unified as far as needed) and
/// the extended state.
pub fn narrow_step(
    db: &Database,
    f: &Term,
    s: &BindingState,
    depth_limit: u64,
    max: usize,
) -> Result<Vec<(Term, BindingState)>, SolveError> {
    let Term::Fun(app) = resolve(f, s).clone() else {
        return Ok(vec![(f.clone(), s.clone())]);
    };
    let mut m = machine(db, s, depth_limit);
    m.push(Task::Capture(Term::Var(app.memo)));
    m.push(Task::Narrow(app));
    let results = collect(&mut m, max)?;
    Ok(results
        .into_iter()
        .map(|(t, st)| {
            // the memo holds the right side; show it one level deep
            let shown = resolve(&t, &st).clone();
            (crate::terms::deep_resolve(&shown, &st), st)
        })
        .collect())
}

/// Normal forms of `t` (no function applications left), at most `max` of them.
pub fn normalize(
    db: &Database,
    t: &Term,
    s: &BindingState,
    max_rewrites: u64,
    max: usize,
) -> Result<Vec<Term>, SolveError> {
    let mut m = machine(db, s, u64::MAX);
    m.normalizing = true;
    m.max_rewrites = max_rewrites;
    m.push(Task::Capture(t.clone()));
    m.push(Task::Normalize(t.clone()));
    Ok(collect(&mut m, max)?.into_iter().map(|(t, _)| t).collect())
}
