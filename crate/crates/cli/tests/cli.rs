use std::collections::HashMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn program(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../programs").join(name)
}

fn golden(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(p).unwrap()
}

fn run(args: &[&str], stdin: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_narrowlog"));
    cmd.args(args).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped());
    let mut child = cmd.spawn().unwrap();
    let mut input = child.stdin.take().unwrap();
    if let Some(text) = stdin {
        input.write_all(text.as_bytes()).unwrap();
    }
    drop(input);
    child.wait_with_output().unwrap()
}

fn batch(file: &str, query: &str, answers: usize) -> Output {
    let p = program(file);
    run(&["batch", p.to_str().unwrap(), "-q", query, "--answers", &answers.to_string()], None)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Renumbers `_k` variables by order of first appearance.
fn canonical(text: &str) -> String {
    let mut names: HashMap<String, usize> = HashMap::new();
    let mut out = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '_' && chars.peek().is_some_and(|d| d.is_ascii_digit()) {
            let mut digits = String::new();
            while let Some(d) = chars.peek().filter(|d| d.is_ascii_digit()) {
                digits.push(*d);
                chars.next();
            }
            let n = names.len() + 1;
            let k = *names.entry(digits).or_insert(n);
            out.push_str(&format!("_{k}"));
        } else {
            out.push(c);
        }
    }
    out
}

#[test]
fn append_transcript() {
    let o = batch("append.pl", "app(U,V)=[1,2]", 10);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(canonical(&stdout(&o)), canonical(&golden("append.txt")));
}

#[test]
fn queens_transcript() {
    let o = batch("queens.pl", "solve(queens(8,B)).", 3);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), golden("queens.txt"));
}

#[test]
fn wang_transcripts() {
    let o = batch("wang.pl", "solve((proof([], [p & (q & r) --> (p & q) & r], T), N=sizeof(T))).", 1);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), golden("wang_forward.txt"));
    let o = batch("wang.pl", "solve((5=sizeof(T), proof([], [B], T))).", 4);
    assert_eq!(canonical(&stdout(&o)), canonical(&golden("wang_inverted.txt")));
}

#[test]
fn repl_transcript() {
    let p = program("append.pl");
    let input = "solve(app(U,V)=[1,2]).\n;\n;\n;\n\nsolve(app([1],[2])=L).\n\nhalt.\n";
    let o = run(&[p.to_str().unwrap()], Some(input));
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), golden("repl_append.txt"));
}

#[test]
fn repl_recovers_from_syntax_errors() {
    let p = program("append.pl");
    let o = run(&["repl", p.to_str().unwrap()], Some("app(.\napp([],[])=L.\n\n"));
    let text = stdout(&o);
    assert!(text.contains("syntax error"), "{text}");
    assert!(text.contains("L=[]"), "{text}");
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn exit_codes() {
    assert_eq!(batch("append.pl", "app(U,V)=[1,2], fail", 10).status.code(), Some(1));
    assert_eq!(stdout(&batch("append.pl", "app(U,V)=[1,2], fail", 10)), "no\n");
    assert_eq!(batch("append.pl", "app(U,V)=[1,2", 10).status.code(), Some(2));
    assert_eq!(batch("append.pl", "app(U,V)=3", 10).status.code(), Some(2));
    let o = run(&["batch", "/nonexistent.pl", "-q", "true"], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn ground_query_answers_yes() {
    let o = batch("family.pl", "cousin(henry,beatrice)", 10);
    assert_eq!((o.status.code(), stdout(&o).as_str()), (Some(0), "yes\n"));
    let o = batch("family.pl", "cousin(elizabeth,asterix)", 10);
    assert_eq!((o.status.code(), stdout(&o).as_str()), (Some(1), "no\n"));
}

#[test]
fn depth_cap_is_reported() {
    let p = program("nat-bad.pl");
    let o = run(&["batch", p.to_str().unwrap(), "-q", "nat(zero)", "--max-depth", "20"], None);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o), "no (incomplete: depth limit reached)\n");
}

#[test]
fn oracle_subcommand() {
    let p = program("family.pl");
    let o = run(&["oracle", p.to_str().unwrap()], None);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines.contains(&"cousin(henry,beatrice)"));
    assert!(lines.contains(&"grandparent(elizabeth,william)"));
    assert!(!lines.contains(&"cousin(elizabeth,asterix)"));
    let mut sorted = lines.clone();
    sorted.sort();
    assert_eq!(lines, sorted);

    let p = program("nat-bad.pl");
    let o = run(&["oracle", p.to_str().unwrap(), "--oracle-depth", "4"], None);
    assert_eq!((o.status.code(), stdout(&o).as_str()), (Some(0), ""));

    let empty = std::env::temp_dir().join("narrowlog-empty.pl");
    std::fs::write(&empty, "").unwrap();
    let o = run(&["oracle", empty.to_str().unwrap()], None);
    assert_eq!((o.status.code(), stdout(&o).as_str()), (Some(0), ""));
}

#[test]
fn diagnostics_go_to_stderr() {
    let o = batch("outer.pl", "f(f(X,Y),Z)=b", 1);
    let err = String::from_utf8(o.stderr.clone()).unwrap();
    assert!(err.contains("warning(exhaustiveness)"), "{err}");
    assert!(stdout(&o).contains("Z=b"));
}
