use super::ParseError;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Atom(String),
    Var(String),
    Int(i64),
    /// `(` directly after a name, opening an argument list.
    FunctorOpen,
    Open,
    Close,
    OpenList,
    CloseList,
    OpenCurly,
    CloseCurly,
    Comma,
    Bar,
    End,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Atom(a) => format!("atom `{a}`"),
            Tok::Var(v) => format!("variable `{v}`"),
            Tok::Int(i) => format!("integer `{i}`"),
            Tok::FunctorOpen | Tok::Open => "`(`".into(),
            Tok::Close => "`)`".into(),
            Tok::OpenList => "`[`".into(),
            Tok::CloseList => "`]`".into(),
            Tok::OpenCurly => "`{`".into(),
            Tok::CloseCurly => "`}`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Bar => "`|`".into(),
            Tok::End => "end of clause".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub line: u32,
    pub col: u32,
    /// Whitespace or a comment precedes this token.
    pub layout_before: bool,
    pub offset: usize,
}

#[derive(Clone, Debug)]
pub struct Comment {
    pub text: String,
    pub offset: usize,
}

pub fn is_symbol_char(c: char) -> bool {
    "+-*/\\^<>=~:.?@#&$".contains(c)
}

fn is_alnum(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

pub struct Lexer<'a> {
    src: &'a str,
    chars: Vec<(usize, char)>,
    pos: usize,
    line: u32,
    col: u32,
    pub comments: Vec<Comment>,
}

impl<'a> Lexer<'a> {
    pub fn new(src: &'a str) -> Self {
        Lexer {
            src,
            chars: src.char_indices().collect(),
            pos: 0,
            line: 1,
            col: 1,
            comments: Vec::new(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|&(_, c)| c)
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.chars.get(self.pos + n).map(|&(_, c)| c)
    }

    fn offset(&self) -> usize {
        self.chars.get(self.pos).map_or(self.src.len(), |&(o, _)| o)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            col: self.col,
            found: self.peek().map_or("end of input".into(), |c| format!("`{c}`")),
            message: message.into(),
        }
    }

    /// Skips layout and comments; returns whether anything was skipped.
    fn skip_layout(&mut self) -> Result<bool, ParseError> {
        let start = self.pos;
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('%') => {
                    let offset = self.offset();
                    let mut text = String::new();
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        text.push(c);
                        self.bump();
                    }
                    self.comments.push(Comment { text, offset });
                }
                Some('/') if self.peek_at(1) == Some('*') => {
                    let offset = self.offset();
                    let mut text = String::new();
                    loop {
                        match self.peek() {
                            None => return Err(self.error("unterminated block comment")),
                            Some('*') if self.peek_at(1) == Some('/') => {
                                text.push_str("*/");
                                self.bump();
                                self.bump();
                                break;
                            }
                            Some(c) => {
                                text.push(c);
                                self.bump();
                            }
                        }
                    }
                    self.comments.push(Comment { text, offset });
                }
                _ => break,
            }
        }
        Ok(self.pos != start)
    }

    pub fn next_token(&mut self, prev_was_name: bool) -> Result<Token, ParseError> {
        let layout_before = self.skip_layout()?;
        let (line, col, offset) = (self.line, self.col, self.offset());
        let make = |tok| Token {
            tok,
            line,
            col,
            layout_before,
            offset,
        };
        let Some(c) = self.peek() else {
            return Ok(make(Tok::Eof));
        };
        let tok = match c {
            '(' => {
                self.bump();
                if prev_was_name && !layout_before {
                    Tok::FunctorOpen
                } else {
                    Tok::Open
                }
            }
            ')' => {
                self.bump();
                Tok::Close
            }
            '[' => {
                self.bump();
                Tok::OpenList
            }
            ']' => {
                self.bump();
                Tok::CloseList
            }
            '{' => {
                self.bump();
                Tok::OpenCurly
            }
            '}' => {
                self.bump();
                Tok::CloseCurly
            }
            ',' => {
                self.bump();
                Tok::Comma
            }
            '|' => {
                self.bump();
                Tok::Bar
            }
            '!' | ';' => {
                self.bump();
                Tok::Atom(c.to_string())
            }
            '.' if self.peek_at(1).is_none_or(|n| n.is_whitespace() || n == '%') => {
                self.bump();
                Tok::End
            }
            '\'' => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => return Err(self.error("unterminated quoted atom")),
                        Some('\'') if self.peek() == Some('\'') => {
                            self.bump();
                            s.push('\'');
                        }
                        Some('\'') => break,
                        Some('\\') => match self.bump() {
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            Some(other) => s.push(other),
                            None => return Err(self.error("unterminated quoted atom")),
                        },
                        Some(ch) => s.push(ch),
                    }
                }
                Tok::Atom(s)
            }
            c if c.is_ascii_digit() => {
                let mut s = String::new();
                while let Some(d) = self.peek().filter(|d| d.is_ascii_digit()) {
                    s.push(d);
                    self.bump();
                }
                let n = s.parse::<i64>().map_err(|_| self.error("integer literal out of range"))?;
                Tok::Int(n)
            }
            c if c == '_' || c.is_uppercase() => {
                let mut s = String::new();
                while let Some(d) = self.peek().filter(|d| is_alnum(*d)) {
                    s.push(d);
                    self.bump();
                }
                Tok::Var(s)
            }
            c if c.is_alphabetic() => {
                let mut s = String::new();
                while let Some(d) = self.peek().filter(|d| is_alnum(*d)) {
                    s.push(d);
                    self.bump();
                }
                Tok::Atom(s)
            }
            c if is_symbol_char(c) => {
                let mut s = String::new();
                while let Some(d) = self.peek().filter(|d| is_symbol_char(*d)) {
                    // a trailing `.` followed by layout ends the clause
                    if d == '.' && self.peek_at(1).is_none_or(|n| n.is_whitespace() || n == '%') && !s.is_empty() {
                        break;
                    }
                    s.push(d);
                    self.bump();
                }
                Tok::Atom(s)
            }
            other => return Err(self.error(format!("unexpected character `{other}`"))),
        };
        Ok(make(tok))
    }
}
