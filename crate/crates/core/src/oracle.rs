//! Least fixed points of finite ground rule sets.
//!
//! A rule set is a finite collection of rules `p <- P` over ground atoms.
//! Its inductively defined set is the least set closed under the rules,
//! computed here by iterating the immediate-consequence operator from the
//! empty set. [`ground_instances`] turns a clause database into such a
//! rule set by instantiating clause variables with ground values of bounded
//! depth and evaluating every function application.

use std::collections::{BTreeSet, HashMap};

use crate::display::{term_text, VarNamer};
use crate::narrow::normalize;
use crate::program::{Clause, Database};
use crate::solver::SolveError;
use crate::terms::{well_known, BindingState, Term, VarId};
use crate::typecheck::check_clause;
use crate::types::Type;

pub type AtomSet = BTreeSet<usize>;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct GroundRule {
    pub premises: AtomSet,
    pub conclusion: usize,
}

/// Rules over atoms numbered by their position in `universe`.
#[derive(Clone, Debug, Default)]
pub struct GroundRuleSet {
    universe: Vec<String>,
    terms: Vec<Option<Term>>,
    index: HashMap<String, usize>,
    rules: BTreeSet<GroundRule>,
}

impl GroundRuleSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of an atom, adding it to the universe if new.
    pub fn atom(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        self.universe.push(name.to_owned());
        self.terms.push(None);
        self.index.insert(name.to_owned(), self.universe.len() - 1);
        self.universe.len() - 1
    }

    fn atom_term(&mut self, name: String, t: Term) -> usize {
        let i = self.atom(&name);
        self.terms[i] = Some(t);
        i
    }

    pub fn add_rule(&mut self, premises: &[&str], conclusion: &str) {
        let premises = premises.iter().map(|p| self.atom(p)).collect();
        let conclusion = self.atom(conclusion);
        self.rules.insert(GroundRule { premises, conclusion });
    }

    pub fn rules(&self) -> impl Iterator<Item = &GroundRule> {
        self.rules.iter()
    }

    pub fn rule_count(&self) -> usize {
        self.rules.len()
    }

    pub fn universe(&self) -> &[String] {
        &self.universe
    }

    pub fn name(&self, i: usize) -> &str {
        &self.universe[i]
    }

    pub fn lookup(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// The runtime term of an atom produced by [`ground_instances`].
    pub fn term(&self, i: usize) -> Option<&Term> {
        self.terms[i].as_ref()
    }

    /// Atom names of a set, sorted.
    pub fn names(&self, set: &AtomSet) -> Vec<String> {
        let mut v: Vec<String> = set.iter().map(|&i| self.universe[i].clone()).collect();
        v.sort();
        v
    }
}

/// Conclusions of all rules whose premises lie in `y`.
pub fn phi_step(rs: &GroundRuleSet, y: &AtomSet) -> AtomSet {
    rs.rules
        .iter()
        .filter(|r| r.premises.is_subset(y))
        .map(|r| r.conclusion)
        .collect()
}

/// Least fixed point together with the number of iterations taken.
pub fn lfp_with_steps(rs: &GroundRuleSet) -> (AtomSet, usize) {
    let mut cur = AtomSet::new();
    let mut steps = 0;
    loop {
        let mut next = phi_step(rs, &cur);
        next.extend(cur.iter().copied());
        if next.len() == cur.len() {
            return (cur, steps);
        }
        cur = next;
        steps += 1;
    }
}

pub fn lfp(rs: &GroundRuleSet) -> AtomSet {
    lfp_with_steps(rs).0
}

pub fn is_closed(rs: &GroundRuleSet, set: &AtomSet) -> bool {
    phi_step(rs, set).is_subset(set)
}

/// Intersection of every closed subset of the universe, by enumerating all
/// of them; `None` when the universe has more than `max_atoms` atoms.
pub fn closed_set_intersection(rs: &GroundRuleSet, max_atoms: usize) -> Option<AtomSet> {
    let n = rs.universe.len();
    if n > max_atoms || n >= 32 {
        return None;
    }
    let mut acc: AtomSet = (0..n).collect();
    for mask in 0u64..(1u64 << n) {
        let set: AtomSet = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        if is_closed(rs, &set) {
            acc = acc.intersection(&set).copied().collect();
        }
    }
    Some(acc)
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Ground values of `ty` whose constructor nesting is at most `depth`,
/// integers limited to `[-range, range]`. `None` for types with no finite
/// enumeration (type variables and functions).
pub fn ground_values(db: &Database, ty: &Type, depth: u32, range: i64) -> Option<Vec<Term>> {
    match ty {
        Type::Int => Some((-range..=range).map(Term::Int).collect()),
        Type::Bool => Some(vec![Term::boolean(true), Term::boolean(false)]),
        Type::Var(_) | Type::Fun(..) => None,
        Type::App(name, params) => {
            let mut out = Vec::new();
            for c in db.ctors_of(*name) {
                if c.args.is_empty() {
                    out.push(Term::atom(c.name));
                    continue;
                }
                if depth == 0 {
                    continue;
                }
                let mut combos: Vec<Vec<Term>> = vec![Vec::new()];
                for a in &c.args {
                    let vals = ground_values(db, &a.instantiate(params), depth - 1, range)?;
                    combos = combos
                        .into_iter()
                        .flat_map(|prefix| {
                            vals.iter().map(move |v| {
                                let mut p = prefix.clone();
                                p.push(v.clone());
                                p
                            })
                        })
                        .collect();
                }
                out.extend(combos.into_iter().map(|args| Term::ctor(c.name, args)));
            }
            Some(out)
        }
    }
}

/// What happened to the instances of one clause.
enum Instance {
    Rule(Vec<Term>, Term),
    /// A builtin premise is false, so the instance never fires.
    Never,
}

/// Ground instances of every clause with functions evaluated. Clauses
/// outside the fragment (polymorphic variables, function-typed variables,
/// divergent function calls) are dropped and reported in the warnings.
pub fn ground_instances(db: &Database, depth: u32, range: i64) -> Result<(GroundRuleSet, Vec<String>), OracleError> {
    let mut rs = GroundRuleSet::new();
    let mut warnings = Vec::new();
    for pred in &db.pred_order {
        for c in db.clauses_for(*pred) {
            instantiate_clause(db, c, depth, range, &mut rs, &mut warnings)?;
        }
    }
    Ok((rs, warnings))
}

fn instantiate_clause(
    db: &Database,
    c: &Clause,
    depth: u32,
    range: i64,
    rs: &mut GroundRuleSet,
    warnings: &mut Vec<String>,
) -> Result<(), OracleError> {
    let typing = match check_clause(c, db) {
        Ok(t) => t,
        Err(e) => {
            warnings.push(format!("dropped `{}`: {e}", c.text));
            return Ok(());
        }
    };
    let vars: Vec<VarId> = (0..c.kinds.len() as u32)
        .filter(|&i| !c.kinds[i as usize])
        .map(VarId)
        .collect();
    let mut domains = Vec::new();
    for v in &vars {
        match typing.var_types.get(v.index()).and_then(|t| ground_values(db, t, depth, range)) {
            Some(d) => domains.push(d),
            None => {
                warnings.push(format!("dropped `{}`: a variable has no finite ground enumeration", c.text));
                return Ok(());
            }
        }
    }
    let mut choice = vec![0usize; vars.len()];
    if domains.iter().any(Vec::is_empty) {
        return Ok(());
    }
    loop {
        let mut st = BindingState::new();
        st.alloc_kinds(&c.kinds);
        for (i, v) in vars.iter().enumerate() {
            st.bind(*v, domains[i][choice[i]].clone());
        }
        match ground_clause(db, c, &st) {
            Ok(Some(Instance::Rule(premises, head))) => {
                let mut namer = VarNamer::new();
                let mut text = |t: &Term| term_text(t, &db.ops, &mut namer);
                let ps: AtomSet = premises
                    .into_iter()
                    .map(|p| {
                        let n = text(&p);
                        rs.atom_term(n, p)
                    })
                    .collect();
                let hn = text(&head);
                let conclusion = rs.atom_term(hn, head);
                rs.rules.insert(GroundRule { premises: ps, conclusion });
            }
            Ok(Some(Instance::Never)) | Ok(None) => {}
            Err(SolveError::RewriteCap(_)) => {
                warnings.push(format!("dropped an instance of `{}`: function call did not terminate", c.text));
            }
            Err(e) => return Err(e.into()),
        }
        // next assignment, last variable fastest
        let mut k = vars.len();
        loop {
            if k == 0 {
                return Ok(());
            }
            k -= 1;
            choice[k] += 1;
            if choice[k] < domains[k].len() {
                break;
            }
            choice[k] = 0;
        }
    }
}

const ORACLE_REWRITES: u64 = 10_000;

fn value(db: &Database, t: &Term, st: &BindingState) -> Result<Option<Term>, SolveError> {
    Ok(normalize(db, t, st, ORACLE_REWRITES, 1)?.into_iter().next())
}

/// `None` when some function has no value on this instance.
fn ground_clause(db: &Database, c: &Clause, st: &BindingState) -> Result<Option<Instance>, SolveError> {
    let wk = well_known();
    let head = Term::ctor(c.pred, c.args.clone());
    let Some(head) = value(db, &head, st)? else {
        return Ok(None);
    };
    let mut premises = Vec::new();
    let mut pending: Vec<Term> = c.body.iter().rev().cloned().collect();
    while let Some(g) = pending.pop() {
        let Term::Ctor(name, args) = &g else {
            return Ok(None);
        };
        match args.len() {
            2 if *name == wk.conj => {
                pending.push(args[1].clone());
                pending.push(args[0].clone());
            }
            2 if *name == wk.unify => {
                let (Some(a), Some(b)) = (value(db, &args[0], st)?, value(db, &args[1], st)?) else {
                    return Ok(None);
                };
                if a != b {
                    return Ok(Some(Instance::Never));
                }
            }
            0 if *name == wk.true_ || *name == wk.nl => {}
            1 if *name == wk.write => {}
            0 if *name == wk.fail => return Ok(Some(Instance::Never)),
            _ => match value(db, &g, st)? {
                Some(p) => premises.push(p),
                None => return Ok(None),
            },
        }
    }
    Ok(Some(Instance::Rule(premises, head)))
}
