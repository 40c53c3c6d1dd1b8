//! A statically typed logic programming language whose equality is
//! semantic: function applications in goals are rewritten lazily, by
//! outermost narrowing, whenever unification needs their value.
//!
//! Typical use:
//!
//! ```
//! use narrowlog::{load_source, SearchConfig, Solver};
//!
//! let src = "function app(list(A),list(A)) =>> list(A).
//!            app([],V) ->> V.
//!            app([X|U],V) ->> [X|app(U,V)].";
//! let (db, warnings) = load_source(src).unwrap();
//! assert!(warnings.is_empty());
//! let mut solver = Solver::from_text(&db, "app(U,V)=[1,2].", SearchConfig::default()).unwrap();
//! let first = solver.next_answer().unwrap().unwrap();
//! assert_eq!(first.lines(&db.ops), ["U=[]", "V=[1,2]"]);
//! ```

pub mod checks;
pub mod display;
pub mod narrow;
pub mod oracle;
pub mod program;
pub mod reader;
pub mod solver;
pub mod terms;
pub mod typecheck;
pub mod types;

pub use display::{term_text, VarNamer};
pub use narrow::{extended_occurs, narrow_step, normalize, semantic_unify};
pub use oracle::{ground_instances, lfp, phi_step, GroundRule, GroundRuleSet};
pub use program::{load, load_source, load_sources, Database, Diagnostic, LoadError, Severity};
pub use reader::{parse_program, parse_query, OperatorTable, ParseError, ProgramItem};
pub use solver::{Answer, QueryError, SearchConfig, SearchStatus, SolveError, Solver};
pub use terms::{BindingState, Sym, Term, VarId};
pub use typecheck::TypeError;
pub use types::Type;
