use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Fixity {
    Xfx,
    Xfy,
    Yfx,
    Fy,
    Fx,
    Xf,
    Yf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum OpClass {
    Prefix,
    Infix,
    Postfix,
}

impl Fixity {
    pub fn class(self) -> OpClass {
        match self {
            Fixity::Xfx | Fixity::Xfy | Fixity::Yfx => OpClass::Infix,
            Fixity::Fy | Fixity::Fx => OpClass::Prefix,
            Fixity::Xf | Fixity::Yf => OpClass::Postfix,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Fixity::Xfx => "xfx",
            Fixity::Xfy => "xfy",
            Fixity::Yfx => "yfx",
            Fixity::Fy => "fy",
            Fixity::Fx => "fx",
            Fixity::Xf => "xf",
            Fixity::Yf => "yf",
        }
    }
}

impl fmt::Display for Fixity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Fixity {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Ok(match s {
            "xfx" => Fixity::Xfx,
            "xfy" => Fixity::Xfy,
            "yfx" => Fixity::Yfx,
            "fy" => Fixity::Fy,
            "fx" => Fixity::Fx,
            "xf" => Fixity::Xf,
            "yf" => Fixity::Yf,
            _ => return Err(()),
        })
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct OpDef {
    pub priority: u16,
    pub fixity: Fixity,
}

impl OpDef {
    /// Maximum priorities of the left and right operands.
    pub fn operand_limits(self) -> (u16, u16) {
        let p = self.priority;
        match self.fixity {
            Fixity::Xfx => (p - 1, p - 1),
            Fixity::Xfy => (p - 1, p),
            Fixity::Yfx => (p, p - 1),
            Fixity::Fy => (0, p),
            Fixity::Fx => (0, p - 1),
            Fixity::Xf => (p - 1, 0),
            Fixity::Yf => (p, 0),
        }
    }
}

/// Operator definitions, one per (symbol, prefix|infix|postfix).
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorTable {
    prefix: HashMap<String, OpDef>,
    infix: HashMap<String, OpDef>,
    postfix: HashMap<String, OpDef>,
}

impl Default for OperatorTable {
    fn default() -> Self {
        let mut t = OperatorTable::empty();
        for (p, fx, names) in [
            (1200, Fixity::Xfx, &[":-"][..]),
            (1200, Fixity::Fx, &[":-", "?-"][..]),
            (1150, Fixity::Fx, &["pred", "constructors", "function"][..]),
            (1100, Fixity::Xfx, &["->>", "=>"][..]),
            (1000, Fixity::Xfy, &[","][..]),
            (740, Fixity::Xfy, &["or"][..]),
            (720, Fixity::Xfy, &["and"][..]),
            (
                700,
                Fixity::Xfx,
                &["=", "eq", "<", ">", "=<", ">=", "<=", "=>>", "==>"][..],
            ),
            (500, Fixity::Yfx, &["+", "-"][..]),
            (400, Fixity::Yfx, &["*", "div", "mod"][..]),
            (200, Fixity::Fy, &["-"][..]),
        ] {
            for name in names {
                t.add(p, fx, name);
            }
        }
        t
    }
}

impl OperatorTable {
    pub fn empty() -> Self {
        OperatorTable {
            prefix: HashMap::new(),
            infix: HashMap::new(),
            postfix: HashMap::new(),
        }
    }

    /// Adds or replaces a definition; priority 0 removes it.
    pub fn add(&mut self, priority: u16, fixity: Fixity, name: &str) {
        let table = match fixity.class() {
            OpClass::Prefix => &mut self.prefix,
            OpClass::Infix => &mut self.infix,
            OpClass::Postfix => &mut self.postfix,
        };
        if priority == 0 {
            table.remove(name);
        } else {
            table.insert(name.to_owned(), OpDef { priority, fixity });
        }
    }

    pub fn prefix(&self, name: &str) -> Option<OpDef> {
        self.prefix.get(name).copied()
    }

    pub fn infix(&self, name: &str) -> Option<OpDef> {
        self.infix.get(name).copied()
    }

    pub fn postfix(&self, name: &str) -> Option<OpDef> {
        self.postfix.get(name).copied()
    }

    pub fn is_op(&self, name: &str) -> bool {
        self.prefix.contains_key(name) || self.infix.contains_key(name) || self.postfix.contains_key(name)
    }
}
