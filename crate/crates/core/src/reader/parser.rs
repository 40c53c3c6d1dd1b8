use super::ast::Ast;
use super::lexer::{Comment, Lexer, Tok, Token};
use super::ops::{Fixity, OperatorTable};
use super::{ParseError, ProgramItem, Query};

pub(super) fn tokenize(text: &str) -> Result<(Vec<Token>, Vec<Comment>), ParseError> {
    let mut lexer = Lexer::new(text);
    let mut toks = Vec::new();
    let mut prev_name = false;
    loop {
        let t = lexer.next_token(prev_name)?;
        prev_name = matches!(t.tok, Tok::Atom(_));
        let eof = t.tok == Tok::Eof;
        toks.push(t);
        if eof {
            break;
        }
    }
    Ok((toks, lexer.comments))
}

pub(super) struct Parser<'o> {
    toks: Vec<Token>,
    pos: usize,
    pub ops: &'o mut OperatorTable,
}

impl<'o> Parser<'o> {
    pub fn new(toks: Vec<Token>, ops: &'o mut OperatorTable) -> Self {
        Parser { toks, pos: 0, ops }
    }

    fn peek(&self) -> &Token {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    fn peek_at(&self, n: usize) -> &Token {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)]
    }

    fn advance(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    pub fn peek_token(&self) -> Token {
        self.peek().clone()
    }

    pub fn at_eof(&self) -> bool {
        self.peek().tok == Tok::Eof
    }

    pub fn offset(&self) -> usize {
        self.peek().offset
    }

    fn error_at(&self, t: &Token, message: impl Into<String>) -> ParseError {
        ParseError {
            line: t.line,
            col: t.col,
            found: t.tok.describe(),
            message: message.into(),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        let t = self.peek().clone();
        if t.tok == tok {
            self.advance();
            Ok(())
        } else {
            Err(self.error_at(&t, format!("expected {what}")))
        }
    }

    /// Reads one clause-level term terminated by `.`.
    pub fn read_clause(&mut self) -> Result<Ast, ParseError> {
        let t = self.parse(1200)?.0;
        let next = self.peek().clone();
        match &next.tok {
            Tok::End => {
                self.advance();
                Ok(t)
            }
            Tok::Eof => Err(self.error_at(&next, "unterminated clause (missing `.`)")),
            Tok::Atom(a) if !self.ops.is_op(a) => {
                Err(self.error_at(&next, format!("unknown operator `{a}` used as operator")))
            }
            Tok::Atom(_) => Err(self.error_at(&next, "operator priority clash")),
            _ => Err(self.error_at(&next, "expected operator or `.`")),
        }
    }

    fn is_terminator(tok: &Tok) -> bool {
        matches!(
            tok,
            Tok::Close | Tok::Comma | Tok::Bar | Tok::CloseList | Tok::CloseCurly | Tok::End | Tok::Eof
        )
    }

    fn parse(&mut self, max: u16) -> Result<(Ast, u16), ParseError> {
        let (left, lp) = self.parse_primary(max)?;
        self.parse_infix(left, lp, max)
    }

    fn parse_infix(&mut self, mut left: Ast, mut lp: u16, max: u16) -> Result<(Ast, u16), ParseError> {
        loop {
            let name = match &self.peek().tok {
                Tok::Atom(a) => a.clone(),
                Tok::Comma => ",".to_owned(),
                _ => break,
            };
            if let Some(def) = self.ops.infix(&name) {
                let (la, ra) = def.operand_limits();
                if def.priority <= max && lp <= la {
                    self.advance();
                    let (right, _) = self.parse(ra)?;
                    left = Ast::Compound(name, vec![left, right]);
                    lp = def.priority;
                    continue;
                }
            }
            if let Some(def) = self.ops.postfix(&name) {
                let (la, _) = def.operand_limits();
                if def.priority <= max && lp <= la {
                    self.advance();
                    left = Ast::Compound(name, vec![left]);
                    lp = def.priority;
                    continue;
                }
            }
            break;
        }
        Ok((left, lp))
    }

    fn parse_arglist(&mut self) -> Result<Vec<Ast>, ParseError> {
        let mut args = vec![self.parse(999)?.0];
        loop {
            let t = self.advance();
            match t.tok {
                Tok::Comma => args.push(self.parse(999)?.0),
                Tok::Close => return Ok(args),
                _ => return Err(self.error_at(&t, "expected `,` or `)` in argument list")),
            }
        }
    }

    fn parse_primary(&mut self, max: u16) -> Result<(Ast, u16), ParseError> {
        let t = self.advance();
        match t.tok {
            Tok::Int(n) => Ok((Ast::Int(n), 0)),
            Tok::Var(v) => Ok((Ast::Var(v), 0)),
            Tok::Open | Tok::FunctorOpen => {
                let (inner, _) = self.parse(1200)?;
                self.expect(Tok::Close, "`)`")?;
                Ok((inner, 0))
            }
            Tok::OpenList => {
                if self.peek().tok == Tok::CloseList {
                    self.advance();
                    return self.after_name("[]".to_owned(), max);
                }
                let mut items = vec![self.parse(999)?.0];
                let mut tail = Ast::nil();
                loop {
                    let n = self.advance();
                    match n.tok {
                        Tok::Comma => items.push(self.parse(999)?.0),
                        Tok::Bar => {
                            tail = self.parse(999)?.0;
                            self.expect(Tok::CloseList, "`]`")?;
                            break;
                        }
                        Tok::CloseList => break,
                        _ => return Err(self.error_at(&n, "expected `,`, `|` or `]` in list")),
                    }
                }
                Ok((Ast::list(items, tail), 0))
            }
            Tok::OpenCurly => {
                if self.peek().tok == Tok::CloseCurly {
                    self.advance();
                    return self.after_name("{}".to_owned(), max);
                }
                let (inner, _) = self.parse(1200)?;
                self.expect(Tok::CloseCurly, "`}`")?;
                Ok((Ast::app("{}", vec![inner]), 0))
            }
            Tok::Atom(name) => self.after_name(name, max),
            _ => Err(self.error_at(&t, "expected a term")),
        }
    }

    fn after_name(&mut self, name: String, max: u16) -> Result<(Ast, u16), ParseError> {
        let next = self.peek().clone();
        if next.tok == Tok::FunctorOpen {
            self.advance();
            let args = self.parse_arglist()?;
            return Ok((Ast::Compound(name, args), 0));
        }
        if name == "-" && !next.layout_before {
            if let Tok::Int(n) = next.tok {
                self.advance();
                return Ok((Ast::Int(-n), 0));
            }
        }
        if let Some(def) = self.ops.prefix(&name) {
            let operand_follows = !Self::is_terminator(&next.tok)
                && !matches!(&next.tok, Tok::Atom(a)
                    if (self.ops.infix(a).is_some() || self.ops.postfix(a).is_some())
                        && self.ops.prefix(a).is_none()
                        && self.peek_at(1).tok != Tok::FunctorOpen);
            if operand_follows {
                let (_, amax) = def.operand_limits();
                if def.priority > max {
                    return Err(self.error_at(&next, format!("operator `{name}` priority clash")));
                }
                let (arg, _) = self.parse(amax)?;
                return Ok((Ast::Compound(name, vec![arg]), def.priority));
            }
        }
        Ok((Ast::Compound(name, Vec::new()), 0))
    }
}

fn op_decl(ast: &Ast) -> Option<Result<(u16, Fixity, String), String>> {
    let Ast::Compound(n, args) = ast else {
        return None;
    };
    if n != "op" || args.len() != 3 {
        return None;
    }
    let priority = match args[0] {
        Ast::Int(p) if (0..=1200).contains(&p) => p as u16,
        _ => return Some(Err("op/3 priority must be an integer in 0..1200".into())),
    };
    let fixity = match args[1].name().and_then(|f| f.parse::<Fixity>().ok()) {
        Some(f) if args[1].args().is_empty() => f,
        _ => return Some(Err("op/3 type must be one of xfx, xfy, yfx, fy, fx, xf, yf".into())),
    };
    match &args[2] {
        Ast::Compound(sym, a) if a.is_empty() => Some(Ok((priority, fixity, sym.clone()))),
        _ => Some(Err("op/3 name must be an atom".into())),
    }
}

/// Classifies a clause-level term.
pub(super) fn classify(ast: Ast, ops: &mut OperatorTable) -> Result<ProgramItem, String> {
    let directive = match &ast {
        Ast::Compound(n, a) if n == ":-" && a.len() == 1 => Some(a[0].clone()),
        _ => None,
    };
    let target = directive.as_ref().unwrap_or(&ast);
    if let Some(decl) = op_decl(target) {
        let (priority, fixity, name) = decl?;
        ops.add(priority, fixity, &name);
        return Ok(ProgramItem::OpDecl {
            priority,
            fixity,
            name,
        });
    }
    if directive.is_some() {
        return Err("only op/3 directives are supported".into());
    }
    let Ast::Compound(name, mut args) = ast else {
        return Err("a variable or number cannot be a clause".into());
    };
    match (name.as_str(), args.len()) {
        ("pred", 1) => {
            let sig = args.pop().unwrap();
            match sig {
                Ast::Compound(p, tys) => Ok(ProgramItem::PredDecl { name: p, arg_types: tys }),
                _ => Err("pred declaration needs a predicate signature".into()),
            }
        }
        ("constructors", 1) => match args.pop().unwrap() {
            Ast::Compound(arrow, mut parts) if arrow == "=>" && parts.len() == 2 => {
                let ctors = parts.pop().unwrap().conjuncts();
                let ty = parts.pop().unwrap();
                Ok(ProgramItem::CtorDecl { ty, ctors })
            }
            _ => Err("constructors declaration must have the form `constructors type => c1, c2, ...`".into()),
        },
        ("function", 1) => match args.pop().unwrap() {
            Ast::Compound(arrow, mut parts) if (arrow == "=>>" || arrow == "==>") && parts.len() == 2 => {
                let result = parts.pop().unwrap();
                match parts.pop().unwrap() {
                    Ast::Compound(f, arg_types) => Ok(ProgramItem::FunDecl {
                        name: f,
                        arg_types,
                        result,
                        legacy_arrow: arrow == "==>",
                    }),
                    _ => Err("function declaration needs a function signature".into()),
                }
            }
            _ => Err("function declaration must have the form `function f(types) =>> type`".into()),
        },
        ("->>", 2) => {
            let rhs = args.pop().unwrap();
            let lhs = args.pop().unwrap();
            if matches!(lhs, Ast::Compound(..)) {
                Ok(ProgramItem::Rule { lhs, rhs })
            } else {
                Err("rule left side must be a function application".into())
            }
        }
        (":-", 2) => {
            let body = args.pop().unwrap();
            let head = args.pop().unwrap();
            if !matches!(head, Ast::Compound(..)) {
                return Err("clause head must be an atom".into());
            }
            Ok(ProgramItem::Clause {
                head,
                body: body.conjuncts(),
            })
        }
        _ => Ok(ProgramItem::Clause {
            head: Ast::Compound(name, args),
            body: Vec::new(),
        }),
    }
}

pub(super) fn query(ast: Ast) -> Query {
    let goal = match ast {
        Ast::Compound(n, mut a) if (n == "solve" || n == "?-") && a.len() == 1 => a.pop().unwrap(),
        other => other,
    };
    let goals = goal.conjuncts();
    let mut var_names = Vec::new();
    for g in &goals {
        g.free_var_names(&mut var_names);
    }
    Query { goals, var_names }
}
