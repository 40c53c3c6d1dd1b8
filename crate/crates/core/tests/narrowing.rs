use std::path::PathBuf;

use narrowlog::terms::{deep_resolve, resolve};
use narrowlog::typecheck::{annotate, check_goals};
use narrowlog::{
    extended_occurs, load_source, narrow_step, normalize, parse_query, semantic_unify, term_text, BindingState,
    Database, SearchConfig, SolveError, Solver, Term, VarId, VarNamer,
};

fn corpus(name: &str) -> Database {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../programs").join(name);
    load_source(&std::fs::read_to_string(p).unwrap()).unwrap().0
}

/// The two sides of the query `l = r`, a state holding its variables, and
/// the variable names.
fn sides(db: &Database, text: &str) -> (Term, Term, BindingState, Vec<(String, VarId)>) {
    let q = parse_query(text, &db.ops).unwrap();
    let conv = db.convert_query(&q.goals, &q.var_names).unwrap();
    let typing = check_goals(&conv.goals, conv.kinds.len(), &conv.vars, db).unwrap();
    let goal = annotate(&conv.goals[0], &typing);
    let Term::Ctor(_, args) = goal else { panic!("not an equation: {text}") };
    let mut st = BindingState::new();
    st.alloc_kinds(&conv.kinds);
    (args[0].clone(), args[1].clone(), st, conv.vars.clone())
}

fn show(db: &Database, t: &Term, s: &BindingState) -> String {
    term_text(&deep_resolve(t, s), &db.ops, &mut VarNamer::new())
}

fn bindings(db: &Database, vars: &[(String, VarId)], s: &BindingState) -> Vec<String> {
    let mut namer = VarNamer::new();
    vars.iter()
        .map(|(n, v)| {
            let t = normalize(db, &Term::Var(*v), s, 10_000, 1).unwrap().remove(0);
            format!("{n}={}", term_text(&t, &db.ops, &mut namer))
        })
        .collect()
}

#[test]
fn append_inversion_states_in_order() {
    let db = corpus("append.pl");
    let (a, b, st, vars) = sides(&db, "app(U,V)=[1,2].");
    let states = semantic_unify(&db, &a, &b, &st, 50, 10).unwrap();
    let got: Vec<Vec<String>> = states.iter().map(|s| bindings(&db, &vars, s)).collect();
    assert_eq!(
        got,
        [["U=[]", "V=[1,2]"], ["U=[1]", "V=[2]"], ["U=[1,2]", "V=[]"]].map(|x| x.map(String::from).to_vec())
    );
}

#[test]
fn variable_with_itself() {
    let db = corpus("append.pl");
    let (a, _, st, _) = sides(&db, "X=[].");
    let states = semantic_unify(&db, &a, &a, &st, 5, 10).unwrap();
    assert_eq!(states.len(), 1);
    assert_eq!(states[0].bound_count(), 0);
}

#[test]
fn outer_narrowing_with_semantic_matching() {
    let db = corpus("outer.pl");
    let (a, b, st, vars) = sides(&db, "f(f(X,Y),Z)=b.");
    let states = semantic_unify(&db, &a, &b, &st, 10, 10).unwrap();
    assert!(!states.is_empty());
    assert!(states.iter().any(|s| bindings(&db, &vars, s)[1..] == ["Y=a", "Z=b"]));
    let (a, b, st, _) = sides(&db, "f(f(X,Y),Z)=a.");
    assert!(!semantic_unify(&db, &a, &b, &st, 10, 10).unwrap().is_empty());
}

#[test]
fn infinite_integer_stream() {
    let db = corpus("append.pl");
    let (a, b, st, vars) = sides(&db, "15=X+Y.");
    let states = semantic_unify(&db, &a, &b, &st, 40, 25).unwrap();
    assert_eq!(states.len(), 25);
    for s in &states {
        let x = deep_resolve(&Term::Var(vars[0].1), s);
        let y = deep_resolve(&Term::Var(vars[1].1), s);
        match (x, y) {
            (Term::Int(x), Term::Int(y)) => assert_eq!(x + y, 15),
            other => panic!("{other:?}"),
        }
    }
}

#[test]
fn narrow_step_on_ground_append_commits() {
    let db = corpus("append.pl");
    let (_, t, st, _) = sides(&db, "X=app([],[1,2]).");
    let alts = narrow_step(&db, &t, &st, 10, 10).unwrap();
    assert_eq!(alts.len(), 1);
    assert_eq!(show(&db, &alts[0].0, &alts[0].1), "[1,2]");
}

#[test]
fn narrow_step_on_open_append_has_two_alternatives() {
    let db = corpus("append.pl");
    let (_, t, st, vars) = sides(&db, "X=app(U,V).");
    let alts = narrow_step(&db, &t, &st, 10, 10).unwrap();
    assert_eq!(alts.len(), 2);
    let u = Term::Var(vars[1].1);
    assert_eq!(show(&db, &u, &alts[0].1), "[]");
    assert_eq!(alts[0].0, deep_resolve(&Term::Var(vars[2].1), &alts[0].1));
    let cell = deep_resolve(&u, &alts[1].1);
    assert!(matches!(&cell, Term::Ctor(n, a) if n.as_str() == "[|]" && a.len() == 2), "{cell:?}");
    let Term::Ctor(_, out) = &alts[1].0 else { panic!() };
    assert!(matches!(&out[1], Term::Fun(app) if app.name.as_str() == "app"));
}

#[test]
fn narrow_step_on_arithmetic() {
    let db = corpus("append.pl");
    let (_, t, st, _) = sides(&db, "X=0+1.");
    let alts = narrow_step(&db, &t, &st, 10, 10).unwrap();
    assert_eq!(alts.len(), 1);
    assert_eq!(alts[0].0, Term::Int(1));
}

#[test]
fn extended_occurs_check() {
    let db = corpus("append.pl");
    let (x, t, mut st, _) = sides(&db, "X=[1|X].");
    assert!(extended_occurs(x.as_var().unwrap(), &t, &mut st).is_none());

    let (x, t, mut st, _) = sides(&db, "X=0+X.");
    let (t2, pairs) = extended_occurs(x.as_var().unwrap(), &t, &mut st).unwrap();
    assert!(matches!(t2, Term::Var(_)));
    assert_eq!(pairs.len(), 1);
    assert_eq!(Term::Var(pairs[0].0), t2);

    let (x, t, mut st, _) = sides(&db, "X=[1,2].");
    let (t2, pairs) = extended_occurs(x.as_var().unwrap(), &t, &mut st).unwrap();
    assert_eq!((t2, pairs.len()), (t, 0));
}

#[test]
fn semantic_occurs_solved_form() {
    let db = corpus("append.pl");
    let (a, b, st, vars) = sides(&db, "X=0+X.");
    let states = semantic_unify(&db, &a, &b, &st, 10, 1).unwrap();
    assert_eq!(bindings(&db, &vars, &states[0]), ["X=0"]);
}

#[test]
fn normal_forms() {
    let db = corpus("higher.pl");
    let (_, t, st, _) = sides(&db, "X=map(lambda([Y],Y*Y),[1,2,3]).");
    let n = normalize(&db, &t, &st, 1000, 2).unwrap();
    assert_eq!(n.len(), 1);
    assert_eq!(term_text(&n[0], &db.ops, &mut VarNamer::new()), "[1,4,9]");

    let (_, t, st, _) = sides(&db, "X=[1,2].");
    assert_eq!(normalize(&db, &t, &st, 10, 2).unwrap(), [t]);

    let db = corpus("wang.pl");
    let (_, t, st, _) = sides(&db, "N=sizeof(node(basic(p),[])).");
    assert_eq!(normalize(&db, &t, &st, 100, 2).unwrap(), [Term::Int(1)]);
}

#[test]
fn normalization_cap_is_an_error() {
    let db = load_source(
        "function loop(int) =>> int.
         loop(N) ->> loop(N+1).",
    )
    .unwrap()
    .0;
    let (_, t, st, _) = sides(&db, "X=loop(0).");
    assert_eq!(normalize(&db, &t, &st, 50, 1), Err(SolveError::RewriteCap(50)));
}

#[test]
fn unification_is_lazy() {
    let db = corpus("append.pl");
    let (x, t, st, _) = sides(&db, "X=app([1],[2]).");
    let states = semantic_unify(&db, &x, &t, &st, 10, 2).unwrap();
    assert_eq!(states.len(), 1);
    let bound = resolve(&x, &states[0]);
    let Term::Fun(app) = bound else { panic!("expected the application itself, got {bound:?}") };
    assert!(!states[0].is_bound(app.memo));
}

#[test]
fn resolve_through_a_filled_memo() {
    let db = corpus("append.pl");
    let (_, t, st, _) = sides(&db, "X=app([],[1,2]).");
    let (_, s) = narrow_step(&db, &t, &st, 10, 1).unwrap().remove(0);
    assert_eq!(show(&db, resolve(&t, &s), &s), "[1,2]");
}

#[test]
fn eta_descriptions() {
    let db = corpus("higher.pl");
    let first = |q: &str| {
        let mut s = Solver::from_text(&db, q, SearchConfig { max_depth: Some(30), ..SearchConfig::default() }).unwrap();
        s.take_answers(3).unwrap().into_iter().map(|a| a.lines(&db.ops)).collect::<Vec<_>>()
    };
    assert_eq!(first("Z=eta(X, app(X,[2])=[1,2])."), [["Z=[1]"]]);
    assert_eq!(first("Z=eta(X, true), Z=[7]."), [["Z=[7]"]]);
    assert!(first("Z=eta(X, (X=[1], fail)).").is_empty());
}

#[test]
fn apply_needs_a_known_function() {
    let db = corpus("higher.pl");
    let mut s = Solver::from_text(&db, "Z=apply(Y,[1]), Z=2.", SearchConfig::default()).unwrap();
    assert!(matches!(s.next_answer(), Err(SolveError::Runtime(_))));
    let mut s = Solver::from_text(&db, "Z=apply(+,[1,2]).", SearchConfig::default()).unwrap();
    assert_eq!(s.next_answer().unwrap().unwrap().lines(&db.ops), ["Z=3"]);
}

#[test]
fn renaming_apart_shares_no_variables() {
    let db = corpus("append.pl");
    let rule = db.rules_for(narrowlog::Sym::intern("app"))[1].clone();
    let mut st = BindingState::new();
    let mut copy = || {
        let base = st.alloc_kinds(&rule.kinds);
        let mut vs = Vec::new();
        for t in &rule.lhs {
            t.offset(base.0).visit_vars(&mut |v| vs.push(v));
        }
        vs
    };
    let a = copy();
    let b = copy();
    assert_eq!(a.len(), 3);
    assert!(a.iter().all(|v| !b.contains(v)));

    let ground = &db.clauses_for(narrowlog::Sym::intern("app"));
    assert!(ground.is_empty());
    let t = Term::list(vec![Term::Int(1)]);
    assert_eq!(t.offset(7), t);
}

#[test]
fn unified_sides_have_a_common_normal_form() {
    let cases = [
        ("append.pl", "app(U,V)=[1,2,3]."),
        ("append.pl", "app(U,[3])=app([1],V)."),
        ("outer.pl", "f(f(X,Y),Z)=b."),
        ("wang.pl", "3=sizeof(T)."),
    ];
    for (file, q) in cases {
        let db = corpus(file);
        let (a, b, st, _) = sides(&db, q);
        let states = semantic_unify(&db, &a, &b, &st, 20, 10).unwrap();
        assert!(!states.is_empty(), "{q}");
        for s in &states {
            let na = normalize(&db, &a, s, 10_000, 1).unwrap();
            let nb = normalize(&db, &b, s, 10_000, 1).unwrap();
            assert_eq!(na, nb, "{q}");
        }
    }
}
