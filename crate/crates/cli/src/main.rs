use std::io::{self, IsTerminal, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use narrowlog::SearchConfig;
use narrowlog_cli::{batch, load_files, oracle_cmd, repl, Shared, EXIT_ERROR};

#[derive(Parser)]
#[command(name = "narrowlog", version, about = "Typed logic programming with lazy narrowing")]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    /// Program files to load for the interactive loop.
    files: Vec<PathBuf>,

    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Subcommand)]
enum Command {
    /// Interactive query loop.
    Repl {
        files: Vec<PathBuf>,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Run one query and print its answers.
    Batch {
        files: Vec<PathBuf>,
        /// Query text, with or without `solve(...)` and the final `.`.
        #[arg(short, long)]
        query: String,
        /// Stop after this many answers.
        #[arg(long, default_value_t = 10)]
        answers: usize,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Print the least fixed point of the ground instances.
    Oracle {
        files: Vec<PathBuf>,
        /// Term depth of the ground universe.
        #[arg(long, default_value_t = 3)]
        oracle_depth: u32,
        /// Integers range over -R..=R.
        #[arg(long, default_value_t = 2)]
        oracle_int_range: i64,
    },
}

#[derive(Args, Clone)]
struct SearchArgs {
    #[arg(long, default_value_t = SearchConfig::default().depth_init)]
    depth_init: u64,
    #[arg(long, default_value_t = SearchConfig::default().depth_step)]
    depth_step: u64,
    /// Give up (reporting an incomplete search) past this depth.
    #[arg(long)]
    max_depth: Option<u64>,
    #[arg(long, default_value_t = SearchConfig::default().max_rewrites)]
    max_rewrites: u64,
}

impl SearchArgs {
    fn config(&self) -> SearchConfig {
        SearchConfig {
            depth_init: self.depth_init,
            depth_step: self.depth_step.max(1),
            max_depth: self.max_depth,
            max_rewrites: self.max_rewrites,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut err = io::stderr();
    let code = match cli.command {
        None => run_repl(&cli.files, &cli.search, &mut err),
        Some(Command::Repl { files, search }) => run_repl(&files, &search, &mut err),
        Some(Command::Batch { files, query, answers, search }) => match load_files(&files, &mut err) {
            Ok(db) => batch(&db, &query, answers, search.config(), Shared::new(io::stdout()), &mut err),
            Err(e) => fail(&mut err, &e),
        },
        Some(Command::Oracle { files, oracle_depth, oracle_int_range }) => match load_files(&files, &mut err) {
            Ok(db) => oracle_cmd(&db, oracle_depth, oracle_int_range, &mut io::stdout(), &mut err),
            Err(e) => fail(&mut err, &e),
        },
    };
    ExitCode::from(code as u8)
}

fn run_repl(files: &[PathBuf], search: &SearchArgs, err: &mut dyn Write) -> i32 {
    let db = match load_files(files, err) {
        Ok(db) => db,
        Err(e) => return fail(err, &e),
    };
    if io::stdin().is_terminal() {
        let _ = writeln!(err, "type a query ending in `.`; `;` asks for more answers, `halt.` leaves");
    }
    let echo = !io::stdin().is_terminal();
    repl(&db, search.config(), &mut io::stdin().lock(), Shared::new(io::stdout()), echo)
}

fn fail(err: &mut dyn Write, msg: &str) -> i32 {
    let _ = writeln!(err, "error: {msg}");
    EXIT_ERROR
}
