//! Shared setup for the engine benchmarks in `benches/`.

use narrowlog::{load_source, Answer, Database, SearchConfig, Solver};

/// Loads a program from the workspace `programs/` directory.
pub fn corpus(name: &str) -> Database {
    let path = format!("{}/../../programs/{name}", env!("CARGO_MANIFEST_DIR"));
    load_source(&std::fs::read_to_string(path).unwrap()).unwrap().0
}

/// The first `n` answers of `query` under the default search settings.
pub fn first_answers(db: &Database, query: &str, n: usize) -> Vec<Answer> {
    Solver::from_text(db, query, SearchConfig::default()).unwrap().take_answers(n).unwrap()
}
