//! Property checks shared by the core test suite and the acceptance runner.
//! Each check returns `Err` with a description of the first counterexample.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};
use std::path::PathBuf;

use narrowlog::checks::{check_exhaustive, Pat};
use narrowlog::oracle::{closed_set_intersection, ground_values, is_closed, lfp_with_steps, phi_step, AtomSet};
use narrowlog::terms::occurs_in;
use narrowlog::typecheck::{check_goals, value_has_type};
use narrowlog::{
    load_source, parse_query, Answer, BindingState, Database, GroundRuleSet, SearchConfig, SearchStatus, Solver, Sym,
    Term, Type, VarId,
};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn corpus(name: &str) -> Database {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../programs").join(name);
    load_source(&std::fs::read_to_string(p).unwrap()).unwrap().0
}

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

// ---- binding state -------------------------------------------------------

#[derive(Clone, Debug)]
pub enum Op {
    Mark,
    Fresh,
    Bind(usize, TermShape),
    Undo,
}

#[derive(Clone, Debug)]
pub enum TermShape {
    Var(usize),
    Int(i64),
    Atom,
    Pair(Box<TermShape>, Box<TermShape>),
}

pub fn shape() -> impl Strategy<Value = TermShape> {
    let leaf = prop_oneof![
        (0usize..16).prop_map(TermShape::Var),
        (-3i64..3).prop_map(TermShape::Int),
        Just(TermShape::Atom),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        (inner.clone(), inner).prop_map(|(a, b)| TermShape::Pair(Box::new(a), Box::new(b)))
    })
}

pub fn build(s: &TermShape, nvars: u32) -> Term {
    match s {
        TermShape::Var(i) => Term::Var(VarId(*i as u32 % nvars)),
        TermShape::Int(i) => Term::Int(*i),
        TermShape::Atom => Term::atom(Sym::intern("a")),
        TermShape::Pair(a, b) => Term::ctor(Sym::intern("f"), vec![build(a, nvars), build(b, nvars)]),
    }
}

pub fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        1 => Just(Op::Mark),
        1 => Just(Op::Fresh),
        3 => (0usize..64, shape()).prop_map(|(v, t)| Op::Bind(v, t)),
        1 => Just(Op::Undo),
    ]
}

pub fn ops() -> impl Strategy<Value = Vec<Op>> {
    prop::collection::vec(op(), 1..40)
}

/// Applies a binding, skipping bound targets and cyclic ones.
pub fn try_bind(st: &mut BindingState, v: usize, t: &TermShape) {
    let n = st.var_count();
    let v = VarId(v as u32 % n);
    let t = build(t, n);
    if !st.is_bound(v) && !occurs_in(v, &t, st) {
        st.bind(v, t);
    }
}

/// Undoing to any checkpoint restores the state recorded there exactly.
pub fn trail_round_trip(ops: &[Op]) -> Result<(), String> {
    let mut st = BindingState::new();
    st.alloc(4, 0);
    let start = st.snapshot();
    let base = st.checkpoint();
    let mut marks = Vec::new();
    for o in ops {
        match o {
            Op::Mark => marks.push((st.checkpoint(), st.snapshot())),
            Op::Fresh => {
                st.fresh_var();
            }
            Op::Bind(v, t) => try_bind(&mut st, *v, t),
            Op::Undo => {
                if let Some((cp, snap)) = marks.pop() {
                    st.undo_to(cp);
                    ensure!(st.snapshot() == snap, "undo to {cp:?} did not restore the state");
                }
            }
        }
    }
    st.undo_to(base);
    ensure!(st.snapshot() == start && st.trail_len() == 0, "undo to the start left bindings");
    Ok(())
}

// ---- exhaustiveness against ground enumeration ---------------------------

/// Program text with one or two algebraic types and a function `f` over
/// them whose rules have random linear left sides.
pub fn random_signature(rng: &mut StdRng) -> String {
    let ntypes = rng.gen_range(1..=2);
    let mut text = String::new();
    let mut shapes: Vec<Vec<(String, Vec<usize>)>> = Vec::new();
    for t in 0..ntypes {
        let nctors = rng.gen_range(1..=3);
        let mut cs = Vec::new();
        for c in 0..nctors {
            let arity = if c == 0 { 0 } else { rng.gen_range(0..=2) };
            let args: Vec<usize> = (0..arity).map(|_| rng.gen_range(0..ntypes)).collect();
            cs.push((format!("c{t}{c}"), args));
        }
        let decl: Vec<String> = cs
            .iter()
            .map(|(n, args)| {
                if args.is_empty() {
                    n.clone()
                } else {
                    let a: Vec<String> = args.iter().map(|i| format!("t{i}")).collect();
                    format!("{n}({})", a.join(","))
                }
            })
            .collect();
        text.push_str(&format!("constructors t{t} => {}.\n", decl.join(", ")));
        shapes.push(cs);
    }
    let arity = rng.gen_range(1..=2);
    let arg_types: Vec<usize> = (0..arity).map(|_| rng.gen_range(0..ntypes)).collect();
    let tys: Vec<String> = arg_types.iter().map(|i| format!("t{i}")).collect();
    text.push_str(&format!("function f({}) =>> bool.\n", tys.join(",")));
    let mut var = 0;
    for _ in 0..rng.gen_range(1..=4) {
        let pats: Vec<String> = arg_types.iter().map(|&t| random_pattern(rng, &shapes, t, 2, &mut var)).collect();
        text.push_str(&format!("f({}) ->> true.\n", pats.join(",")));
    }
    text
}

fn random_pattern(rng: &mut StdRng, shapes: &[Vec<(String, Vec<usize>)>], ty: usize, depth: u32, var: &mut u32) -> String {
    if depth == 0 || rng.gen_bool(0.35) {
        *var += 1;
        return format!("V{var}");
    }
    let (name, args) = &shapes[ty][rng.gen_range(0..shapes[ty].len())];
    if args.is_empty() {
        return name.clone();
    }
    let a: Vec<String> = args.iter().map(|&t| random_pattern(rng, shapes, t, depth - 1, var)).collect();
    format!("{name}({})", a.join(","))
}

fn matches(value: &Term, pat: &Term) -> bool {
    match (value, pat) {
        (_, Term::Var(_)) => true,
        (Term::Ctor(f, xs), Term::Ctor(g, ys)) => {
            f == g && xs.len() == ys.len() && xs.iter().zip(ys.iter()).all(|(x, y)| matches(x, y))
        }
        _ => value == pat,
    }
}

fn pat_covers(p: &Pat, value: &Term) -> bool {
    match (p, value) {
        (Pat::Any(_), _) => true,
        (Pat::Int(i), Term::Int(j)) => i == j,
        (Pat::Ctor(f, xs), Term::Ctor(g, ys)) => {
            f == g && xs.len() == ys.len() && xs.iter().zip(ys.iter()).all(|(x, y)| pat_covers(x, y))
        }
        _ => false,
    }
}

fn smallest_instance(p: &Pat, db: &Database) -> Term {
    match p {
        Pat::Any(ty) => ground_values(db, ty, 0, 0).unwrap().into_iter().next().unwrap(),
        Pat::Int(i) => Term::Int(*i),
        Pat::Ctor(f, xs) => Term::ctor(*f, xs.iter().map(|x| smallest_instance(x, db)).collect()),
    }
}

fn tuples(db: &Database, tys: &[Type], depth: u32) -> Vec<Vec<Term>> {
    let mut out = vec![Vec::new()];
    for ty in tys {
        let vals = ground_values(db, ty, depth, 0).unwrap();
        out = out
            .into_iter()
            .flat_map(|p| {
                vals.iter().map(move |v| {
                    let mut p = p.clone();
                    p.push(v.clone());
                    p
                })
            })
            .collect();
    }
    out
}

/// On `count` random signatures, the missing patterns reported by the
/// instantiation procedure are exactly the ground argument tuples (up to
/// nesting depth 3) that no rule matches.
pub fn exhaustiveness_agrees(seed: u64, count: usize) -> Result<(), String> {
    let mut rng = StdRng::seed_from_u64(seed);
    for _ in 0..count {
        let text = random_signature(&mut rng);
        let (db, _) = load_source(&text).map_err(|e| format!("{e}\n{text}"))?;
        let f = Sym::intern("f");
        let lhs: Vec<Vec<Term>> = db.rules_for(f).iter().map(|r| r.lhs.clone()).collect();
        let missing = check_exhaustive(&db.funs[&f].args, &lhs, &db);
        for m in &missing {
            let witness: Vec<Term> = m.iter().map(|p| smallest_instance(p, &db)).collect();
            let covered = lhs.iter().any(|p| witness.iter().zip(p).all(|(v, q)| matches(v, q)));
            ensure!(!covered, "reported missing but covered: {m:?}\n{text}");
        }
        for t in tuples(&db, &db.funs[&f].args, 3) {
            let covered = lhs.iter().any(|p| t.iter().zip(p).all(|(v, q)| matches(v, q)));
            let reported = missing.iter().any(|m| m.iter().zip(&t).all(|(p, v)| pat_covers(p, v)));
            ensure!(covered != reported, "tuple {t:?}: covered={covered}, reported={reported}\n{text}");
        }
    }
    Ok(())
}

// ---- ground fixpoints ---------------------------------------------------

pub fn rule_set() -> impl Strategy<Value = GroundRuleSet> {
    (1usize..=12).prop_flat_map(|n| {
        prop::collection::vec((prop::collection::vec(0..n, 0..3), 0..n), 0..20).prop_map(move |rules| {
            let mut rs = GroundRuleSet::new();
            for i in 0..n {
                rs.atom(&format!("a{i}"));
            }
            for (prem, concl) in rules {
                let names: Vec<String> = prem.iter().map(|p| format!("a{p}")).collect();
                let refs: Vec<&str> = names.iter().map(String::as_str).collect();
                rs.add_rule(&refs, &format!("a{concl}"));
            }
            rs
        })
    })
}

fn subset(mask: u32, n: usize) -> AtomSet {
    (0..n).filter(|i| mask & (1 << i) != 0).collect()
}

pub fn phi_monotone(rs: &GroundRuleSet, a: u32, b: u32) -> Result<(), String> {
    let n = rs.universe().len();
    let y = subset(a, n);
    let y2: AtomSet = y.union(&subset(b, n)).copied().collect();
    ensure!(phi_step(rs, &y).is_subset(&phi_step(rs, &y2)), "phi not monotone on {y:?} <= {y2:?}");
    Ok(())
}

/// The iterated fixpoint is closed, reached within |universe| steps, and
/// equals the intersection of all closed sets.
pub fn lfp_is_least_closed(rs: &GroundRuleSet) -> Result<(), String> {
    let (least, steps) = lfp_with_steps(rs);
    ensure!(is_closed(rs, &least), "lfp not closed");
    ensure!(steps <= rs.universe().len() + 1, "{steps} steps for {} atoms", rs.universe().len());
    let meet = closed_set_intersection(rs, 12);
    ensure!(meet.as_ref() == Some(&least), "lfp {least:?} but closed-set intersection {meet:?}");
    Ok(())
}

// ---- answers from the corpus --------------------------------------------

pub fn answers(db: &Database, q: &str, max_depth: u64, cap: usize) -> Result<(Vec<Answer>, SearchStatus), String> {
    let cfg = SearchConfig { depth_init: 1, depth_step: 1, max_depth: Some(max_depth), ..SearchConfig::default() };
    let mut s = Solver::from_text(db, q, cfg).map_err(|e| e.to_string())?;
    let a = s.take_answers(cap).map_err(|e| e.to_string())?;
    Ok((a, s.status()))
}

fn rendered(db: &Database, a: &[Answer]) -> Vec<Vec<String>> {
    a.iter().map(|x| x.lines(&db.ops)).collect()
}

/// Corpus queries with the depth limit used for them.
pub const CORPUS: &[(&str, &str, u64)] = &[
    ("append.pl", "app(U,V)=[1,2,3].", 40),
    ("family.pl", "cousin(X,Y).", 40),
    ("queens.pl", "queens(4,B).", 200),
    ("nat.pl", "nat(X).", 40),
    ("wang.pl", "5=sizeof(T), proof([],[B],T).", 40),
    ("higher.pl", "X=map(lambda([Y],Y+1),L), L=[1,2].", 40),
];

/// Answer values contain no function applications and have the type the
/// query gives their variable.
pub fn answers_function_free_and_typed() -> Result<(), String> {
    for &(file, q, depth) in CORPUS {
        let db = corpus(file);
        let parsed = parse_query(q, &db.ops).map_err(|e| e.to_string())?;
        let conv = db.convert_query(&parsed.goals, &parsed.var_names)?;
        let typing = check_goals(&conv.goals, conv.kinds.len(), &conv.vars, &db).map_err(|e| e.to_string())?;
        let (ans, _) = answers(&db, q, depth, 40)?;
        ensure!(!ans.is_empty(), "{q}: no answers");
        for a in &ans {
            for (name, value) in &a.bindings {
                ensure!(!value.has_function(), "{q}: {name} has a function");
                let v = conv.vars.iter().find(|(n, _)| n == name).unwrap().1;
                ensure!(value_has_type(value, &typing.var_types[v.index()], &db), "{q}: {name} ill-typed");
            }
        }
    }
    Ok(())
}

/// The prover is left out: two derivations can build the same tree (for
/// instance `delmem` picking either of two equal formulas).
pub fn no_duplicate_answers() -> Result<(), String> {
    for &(file, q, depth) in CORPUS.iter().filter(|c| c.0 != "wang.pl") {
        let db = corpus(file);
        let (ans, _) = answers(&db, q, depth, 200)?;
        let lines = rendered(&db, &ans);
        let unique: HashSet<_> = lines.iter().collect();
        ensure!(unique.len() == lines.len(), "{q}: {} answers, {} distinct", lines.len(), unique.len());
    }
    Ok(())
}

/// Raising the depth limit never loses an answer.
pub fn answers_grow_with_depth() -> Result<(), String> {
    let cases = [
        ("append.pl", "app(U,V)=[1,2,3].", [2, 4, 8]),
        ("family.pl", "cousin(X,Y).", [4, 7, 12]),
        ("append.pl", "15=X+Y.", [3, 6, 9]),
    ];
    for (file, q, limits) in cases {
        let db = corpus(file);
        let mut sets: Vec<BTreeSet<Vec<String>>> = Vec::new();
        for l in limits {
            sets.push(rendered(&db, &answers(&db, q, l, 10_000)?.0).into_iter().collect());
        }
        ensure!(sets[0].is_subset(&sets[1]) && sets[1].is_subset(&sets[2]), "{q}: {sets:?}");
        ensure!(!sets[2].is_empty(), "{q}: no answers at depth {}", limits[2]);
    }
    Ok(())
}
