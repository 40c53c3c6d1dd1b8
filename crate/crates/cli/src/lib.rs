//! Batch, interactive and oracle front ends for the interpreter.

use std::cell::RefCell;
use std::io::{self, BufRead, Write};
use std::path::PathBuf;
use std::rc::Rc;

use narrowlog::oracle::{ground_instances, lfp};
use narrowlog::{load_sources, Answer, Database, SearchConfig, SearchStatus, Solver};

pub const PROMPT: &str = "| ?- ";

/// Exit statuses: at least one answer, none, or an error.
pub const EXIT_ANSWERS: i32 = 0;
pub const EXIT_NO_ANSWERS: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

/// A writer handle that can be given to the solver (for `write`/`nl`) and
/// kept by the caller at the same time.
pub struct Shared<W>(Rc<RefCell<W>>);

impl<W> Clone for Shared<W> {
    fn clone(&self) -> Self {
        Shared(self.0.clone())
    }
}

impl<W> Shared<W> {
    pub fn new(w: W) -> Self {
        Shared(Rc::new(RefCell::new(w)))
    }

    pub fn with<R>(&self, f: impl FnOnce(&W) -> R) -> R {
        f(&self.0.borrow())
    }
}

impl<W: Write> Write for Shared<W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.0.borrow_mut().write(buf)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.0.borrow_mut().flush()
    }
}

/// Reads and loads program files, printing diagnostics to `err`.
pub fn load_files(files: &[PathBuf], err: &mut dyn Write) -> Result<Database, String> {
    let mut texts = Vec::new();
    for f in files {
        let t = std::fs::read_to_string(f).map_err(|e| format!("cannot read {}: {e}", f.display()))?;
        texts.push(t);
    }
    let (db, diags) = load_sources(texts.iter().map(String::as_str)).map_err(|e| e.to_string())?;
    for d in diags {
        let _ = writeln!(err, "{d}");
    }
    Ok(db)
}

fn print_answer(out: &mut dyn Write, db: &Database, a: &Answer) -> io::Result<()> {
    let lines = a.lines(&db.ops);
    for (i, l) in lines.iter().enumerate() {
        if i > 0 {
            writeln!(out)?;
        }
        write!(out, "{l}")?;
    }
    Ok(())
}

fn end_message(status: SearchStatus) -> &'static str {
    match status {
        SearchStatus::DepthLimit => "no (incomplete: depth limit reached)",
        _ => "no",
    }
}

/// Runs one query, printing up to `max_answers` answers in the
/// interactive format as if `;` had been typed after each one.
pub fn batch<W: Write + 'static>(
    db: &Database,
    query: &str,
    max_answers: usize,
    cfg: SearchConfig,
    out: Shared<W>,
    err: &mut dyn Write,
) -> i32 {
    let mut o = out.clone();
    match run_batch(db, query, max_answers, cfg, out, &mut o) {
        Ok(0) => EXIT_NO_ANSWERS,
        Ok(_) => EXIT_ANSWERS,
        Err(e) => {
            let _ = o.flush();
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}

fn run_batch<W: Write + 'static>(
    db: &Database,
    query: &str,
    max_answers: usize,
    cfg: SearchConfig,
    sink: Shared<W>,
    out: &mut dyn Write,
) -> Result<usize, String> {
    let query = complete_query(query);
    let mut solver = Solver::from_text(db, &query, cfg)
        .map_err(|e| e.to_string())?
        .with_output(Box::new(sink));
    let mut count = 0;
    let mut pending = false;
    loop {
        if count == max_answers {
            writeln!(out, "\nyes").map_err(|e| e.to_string())?;
            break;
        }
        match solver.next_answer().map_err(|e| e.to_string())? {
            Some(a) => {
                if pending {
                    writeln!(out, "\n").map_err(|e| e.to_string())?;
                }
                count += 1;
                if a.bindings.is_empty() {
                    writeln!(out, "yes").map_err(|e| e.to_string())?;
                    break;
                }
                print_answer(out, db, &a).map_err(|e| e.to_string())?;
                pending = true;
                if count < max_answers {
                    write!(out, " ;").map_err(|e| e.to_string())?;
                }
            }
            None => {
                if pending {
                    writeln!(out).map_err(|e| e.to_string())?;
                }
                writeln!(out, "{}", end_message(solver.status())).map_err(|e| e.to_string())?;
                break;
            }
        }
    }
    out.flush().map_err(|e| e.to_string())?;
    Ok(count)
}

/// Adds the terminating `.` when the query text lacks one.
pub fn complete_query(q: &str) -> String {
    let t = q.trim_end();
    if t.ends_with('.') {
        t.to_string()
    } else {
        format!("{t}.")
    }
}

/// Reads one query (up to a line ending in `.`) from `input`, prompting
/// on `out`. `None` at end of input.
fn read_query(input: &mut dyn BufRead, out: &mut dyn Write, echo: bool) -> io::Result<Option<String>> {
    let mut text = String::new();
    write!(out, "{PROMPT}")?;
    out.flush()?;
    loop {
        let mut line = String::new();
        if input.read_line(&mut line)? == 0 {
            return Ok(if text.trim().is_empty() { None } else { Some(text) });
        }
        if echo {
            write!(out, "{}", line.trim_end())?;
            writeln!(out)?;
        }
        text.push_str(&line);
        let t = text.trim();
        if t.is_empty() {
            text.clear();
            write!(out, "{PROMPT}")?;
            out.flush()?;
            continue;
        }
        if t.ends_with('.') {
            return Ok(Some(text));
        }
    }
}

/// Interactive loop: `;` asks for another answer, an empty line or `.`
/// accepts the current one. `halt.` or end of input leaves. With `echo`
/// set, input lines are copied to the output, which makes a transcript
/// when input does not come from a terminal.
pub fn repl<W: Write + 'static>(
    db: &Database,
    cfg: SearchConfig,
    input: &mut dyn BufRead,
    out: Shared<W>,
    echo: bool,
) -> i32 {
    let mut o = out.clone();
    loop {
        let q = match read_query(input, &mut o, echo) {
            Ok(Some(q)) => q,
            Ok(None) => {
                let _ = writeln!(o);
                return EXIT_ANSWERS;
            }
            Err(_) => return EXIT_ERROR,
        };
        if q.trim() == "halt." {
            return EXIT_ANSWERS;
        }
        if let Err(e) = session(db, &q, cfg.clone(), input, out.clone(), &mut o, echo) {
            let _ = writeln!(o, "{e}");
        }
    }
}

fn session<W: Write + 'static>(
    db: &Database,
    query: &str,
    cfg: SearchConfig,
    input: &mut dyn BufRead,
    sink: Shared<W>,
    out: &mut dyn Write,
    echo: bool,
) -> Result<(), String> {
    let io = |e: io::Error| e.to_string();
    let mut solver = Solver::from_text(db, query, cfg)
        .map_err(|e| e.to_string())?
        .with_output(Box::new(sink));
    let mut first = true;
    loop {
        match solver.next_answer().map_err(|e| format!("error: {e}"))? {
            Some(a) => {
                if a.bindings.is_empty() {
                    writeln!(out, "yes").map_err(io)?;
                    return Ok(());
                }
                if !first {
                    writeln!(out).map_err(io)?;
                }
                first = false;
                print_answer(out, db, &a).map_err(io)?;
                write!(out, " ").map_err(io)?;
                out.flush().map_err(io)?;
                let mut reply = String::new();
                let n = input.read_line(&mut reply).map_err(io)?;
                if echo || n == 0 {
                    writeln!(out, "{}", reply.trim()).map_err(io)?;
                }
                if reply.trim() != ";" {
                    writeln!(out, "yes").map_err(io)?;
                    return Ok(());
                }
            }
            None => {
                writeln!(out, "{}", end_message(solver.status())).map_err(io)?;
                return Ok(());
            }
        }
    }
}

/// Prints the least fixed point of the program's ground instances, one
/// atom per line in sorted order.
pub fn oracle_cmd(db: &Database, depth: u32, range: i64, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match ground_instances(db, depth, range) {
        Ok((rs, warnings)) => {
            for w in warnings {
                let _ = writeln!(err, "warning: {w}");
            }
            for name in rs.names(&lfp(&rs)) {
                let _ = writeln!(out, "{name}");
            }
            EXIT_ANSWERS
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}
