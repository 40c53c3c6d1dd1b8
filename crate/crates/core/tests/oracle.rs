use narrowlog::oracle::{closed_set_intersection, ground_instances, lfp, lfp_with_steps, phi_step, AtomSet};
use narrowlog::program::{load_source, ConvertedQuery, Database};
use narrowlog::solver::{SearchConfig, SearchStatus, Solver};

fn program(name: &str) -> Database {
    let path = format!("{}/../../programs/{name}", env!("CARGO_MANIFEST_DIR"));
    load_source(&std::fs::read_to_string(path).unwrap()).unwrap().0
}

#[test]
fn family_fixpoint() {
    let db = program("family.pl");
    let (rs, warnings) = ground_instances(&db, 2, 0).unwrap();
    assert!(warnings.is_empty(), "{warnings:?}");
    // 5 facts plus 7^3 instances of each schematic rule
    assert_eq!(rs.rule_count(), 5 + 343 + 343);
    let fix = lfp(&rs);
    let names = rs.names(&fix);
    assert!(names.contains(&"cousin(henry,beatrice)".to_owned()));
    assert!(names.contains(&"grandparent(elizabeth,william)".to_owned()));
    assert!(!names.contains(&"cousin(elizabeth,asterix)".to_owned()));
    let facts = rs.names(&phi_step(&rs, &AtomSet::new()));
    assert_eq!(facts.len(), 5);
    assert!(facts.iter().all(|f| f.starts_with("parent(")));
}

#[test]
fn nat_fixpoints() {
    let db = program("nat.pl");
    let (rs, _) = ground_instances(&db, 3, 0).unwrap();
    let (fix, steps) = lfp_with_steps(&rs);
    assert_eq!(
        rs.names(&fix),
        ["nat(s(s(s(s(zero)))))", "nat(s(s(s(zero))))", "nat(s(s(zero)))", "nat(s(zero))", "nat(zero)"]
    );
    assert!(steps <= rs.universe().len());
    assert_eq!(closed_set_intersection(&rs, 12), Some(fix));

    let db = program("nat-bad.pl");
    for d in 0..5 {
        let (rs, _) = ground_instances(&db, d, 0).unwrap();
        assert!(lfp(&rs).is_empty());
        if let Some(meet) = closed_set_intersection(&rs, 12) {
            assert!(meet.is_empty());
        }
    }
}

/// Runs a ground goal and reports whether it succeeded.
fn provable(db: &Database, atom: &narrowlog::Term, max_depth: u64) -> (bool, SearchStatus) {
    let q = ConvertedQuery {
        goals: vec![atom.clone()],
        vars: Vec::new(),
        kinds: Vec::new().into(),
    };
    let cfg = SearchConfig {
        max_depth: Some(max_depth),
        ..SearchConfig::default()
    };
    let mut s = Solver::new(db, q, cfg);
    let found = s.next_answer().unwrap().is_some();
    (found, s.status())
}

#[test]
fn solver_agrees_with_fixpoint() {
    for (name, depth) in [("family.pl", 2), ("nat.pl", 3), ("nat-bad.pl", 3)] {
        let db = program(name);
        let (rs, _) = ground_instances(&db, depth, 0).unwrap();
        let fix = lfp(&rs);
        for i in 0..rs.universe().len() {
            let atom = rs.term(i).unwrap();
            let (found, status) = provable(&db, atom, 60);
            assert_eq!(found, fix.contains(&i), "{name}: {}", rs.name(i));
            if !found && name == "nat-bad.pl" {
                assert_eq!(status, SearchStatus::DepthLimit);
            }
        }
    }
}
