//! Edinburgh-style reader: tokens, operator-precedence parsing, program
//! items and queries, and the matching printer.

mod ast;
mod lexer;
mod ops;
mod parser;

pub use ast::{atom_text, print_ast, print_op_decl, Ast, AstDisplay};
pub use ops::{Fixity, OpClass, OpDef, OperatorTable};

use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("syntax error at {line}:{col}: {message} (found {found})")]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub found: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProgramItem {
    Clause {
        head: Ast,
        body: Vec<Ast>,
    },
    Rule {
        lhs: Ast,
        rhs: Ast,
    },
    PredDecl {
        name: String,
        arg_types: Vec<Ast>,
    },
    CtorDecl {
        ty: Ast,
        ctors: Vec<Ast>,
    },
    FunDecl {
        name: String,
        arg_types: Vec<Ast>,
        result: Ast,
        /// Written with `==>` rather than `=>>`.
        legacy_arrow: bool,
    },
    OpDecl {
        priority: u16,
        fixity: Fixity,
        name: String,
    },
    Comment(String),
}

/// A parsed query: its goals in order and its named variables in order of
/// first appearance.
#[derive(Clone, Debug, PartialEq)]
pub struct Query {
    pub goals: Vec<Ast>,
    pub var_names: Vec<String>,
}

/// Parses a whole program starting from the default operator table.
pub fn parse_program(text: &str) -> Result<Vec<ProgramItem>, ParseError> {
    parse_program_with(text, &mut OperatorTable::default())
}

/// Parses a program; operator declarations update `ops` as they are read.
pub fn parse_program_with(text: &str, ops: &mut OperatorTable) -> Result<Vec<ProgramItem>, ParseError> {
    let (toks, comments) = parser::tokenize(text)?;
    let mut comments = comments.into_iter().peekable();
    let mut p = parser::Parser::new(toks, ops);
    let mut items = Vec::new();
    loop {
        let start = p.offset();
        while let Some(c) = comments.next_if(|c| c.offset < start) {
            items.push(ProgramItem::Comment(c.text));
        }
        if p.at_eof() {
            break;
        }
        let start_tok = p.peek_token();
        let ast = p.read_clause()?;
        let item = parser::classify(ast, p.ops).map_err(|message| ParseError {
            line: start_tok.line,
            col: start_tok.col,
            found: start_tok.tok.describe(),
            message,
        })?;
        items.push(item);
    }
    items.extend(comments.map(|c| ProgramItem::Comment(c.text)));
    Ok(items)
}

/// Parses `solve(G).` or a bare `G.`; conjunctions become goal lists.
pub fn parse_query(text: &str, ops: &OperatorTable) -> Result<Query, ParseError> {
    let (toks, _) = parser::tokenize(text)?;
    let mut ops = ops.clone();
    let mut p = parser::Parser::new(toks, &mut ops);
    let ast = p.read_clause()?;
    if !p.at_eof() {
        let t = p.peek_token();
        return Err(ParseError {
            line: t.line,
            col: t.col,
            found: t.tok.describe(),
            message: "expected a single query".into(),
        });
    }
    Ok(parser::query(ast))
}

/// Parses a single term (no trailing `.` needed).
pub fn parse_term(text: &str, ops: &OperatorTable) -> Result<Ast, ParseError> {
    let mut src = text.trim_end().to_owned();
    if !src.ends_with('.') || src.ends_with("..") {
        src.push_str(" .");
    } else {
        src.push(' ');
    }
    let (toks, _) = parser::tokenize(&src)?;
    let mut ops = ops.clone();
    parser::Parser::new(toks, &mut ops).read_clause()
}

/// Prints an item so that reading it back yields the same item.
pub struct ItemDisplay<'a> {
    pub item: &'a ProgramItem,
    pub ops: &'a OperatorTable,
}

impl ProgramItem {
    pub fn display<'a>(&'a self, ops: &'a OperatorTable) -> ItemDisplay<'a> {
        ItemDisplay { item: self, ops }
    }
}

fn args_text(args: &[Ast], ops: &OperatorTable) -> String {
    args.iter()
        .map(|a| print_ast(a, ops))
        .collect::<Vec<_>>()
        .join(",")
}

fn sig_text(name: &str, args: &[Ast], ops: &OperatorTable) -> String {
    if args.is_empty() {
        atom_text(name)
    } else {
        format!("{}({})", atom_text(name), args_text(args, ops))
    }
}

impl fmt::Display for ItemDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ops = self.ops;
        let arg = |a: &Ast, max: u16| {
            let s = print_ast(a, ops);
            let needs = match a {
                Ast::Compound(n, xs) => {
                    (xs.len() == 2 && ops.infix(n).is_some_and(|d| d.priority > max))
                        || (xs.len() == 1 && ops.prefix(n).is_some_and(|d| d.priority > max))
                }
                _ => false,
            };
            if needs {
                format!("({s})")
            } else {
                s
            }
        };
        match self.item {
            ProgramItem::Clause { head, body } if body.is_empty() => write!(f, "{}.", arg(head, 1199)),
            ProgramItem::Clause { head, body } => {
                let goals: Vec<String> = body.iter().map(|g| arg(g, 999)).collect();
                write!(f, "{} :- {}.", arg(head, 1199), goals.join(", "))
            }
            ProgramItem::Rule { lhs, rhs } => write!(f, "{} ->> {}.", arg(lhs, 1099), arg(rhs, 1099)),
            ProgramItem::PredDecl { name, arg_types } => {
                write!(f, "pred {}.", sig_text(name, arg_types, ops))
            }
            ProgramItem::CtorDecl { ty, ctors } => {
                let cs: Vec<String> = ctors.iter().map(|c| arg(c, 999)).collect();
                write!(f, "constructors {} => {}.", arg(ty, 1099), cs.join(", "))
            }
            ProgramItem::FunDecl {
                name,
                arg_types,
                result,
                ..
            } => write!(f, "function {} =>> {}.", sig_text(name, arg_types, ops), arg(result, 699)),
            ProgramItem::OpDecl {
                priority,
                fixity,
                name,
            } => write!(f, "{}.", ast::print_op_decl(*priority, *fixity, name)),
            ProgramItem::Comment(text) => f.write_str(text),
        }
    }
}
