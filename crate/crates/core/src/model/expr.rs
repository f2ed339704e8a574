//! State predicates and clock constraints.
//!
//! Grammar (loosest binding first):
//!
//! ```text
//! or      := and (("|" | "||" | "∨") and)*
//! and     := unary (("&" | "&&" | "∧") unary)*
//! unary   := ("!" | "¬") unary | primary
//! primary := "(" or ")" | "true" | "false"
//!          | ident [ "-" ident ] cmp int      clock or diagonal constraint
//!          | int cmp ident                     constraint written right to left
//!          | ident                             location atom
//! cmp     := "<" | "<=" | "≤" | "=" | "==" | ">=" | "≥" | ">"
//! ```

use std::fmt;

/// Comparison operator of a constraint or threshold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Cmp {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl Cmp {
    pub fn as_str(self) -> &'static str {
        match self {
            Cmp::Lt => "<",
            Cmp::Le => "<=",
            Cmp::Eq => "=",
            Cmp::Ge => ">=",
            Cmp::Gt => ">",
        }
    }

    pub fn is_strict(self) -> bool {
        matches!(self, Cmp::Lt | Cmp::Gt)
    }

    /// The operator with its operands swapped (`a < b` iff `b > a`).
    pub fn flipped(self) -> Cmp {
        match self {
            Cmp::Lt => Cmp::Gt,
            Cmp::Le => Cmp::Ge,
            Cmp::Eq => Cmp::Eq,
            Cmp::Ge => Cmp::Le,
            Cmp::Gt => Cmp::Lt,
        }
    }

    pub fn holds<T: PartialOrd>(self, a: &T, b: &T) -> bool {
        match self {
            Cmp::Lt => a < b,
            Cmp::Le => a <= b,
            Cmp::Eq => a == b,
            Cmp::Ge => a >= b,
            Cmp::Gt => a > b,
        }
    }
}

impl fmt::Display for Cmp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `clock - minus cmp value`, or `clock cmp value` without `minus`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Constraint {
    pub clock: String,
    pub minus: Option<String>,
    pub cmp: Cmp,
    pub value: i64,
}

impl Constraint {
    pub fn simple(clock: &str, cmp: Cmp, value: i64) -> Constraint {
        Constraint { clock: clock.to_string(), minus: None, cmp, value }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.minus {
            Some(y) => write!(f, "{} - {} {} {}", self.clock, y, self.cmp, self.value),
            None => write!(f, "{} {} {}", self.clock, self.cmp, self.value),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    True,
    False,
    Location(String),
    Constraint(Constraint),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn and(a: Expr, b: Expr) -> Expr {
        match (a, b) {
            (Expr::True, e) | (e, Expr::True) => e,
            (a, b) => Expr::And(Box::new(a), Box::new(b)),
        }
    }

    pub fn or(a: Expr, b: Expr) -> Expr {
        Expr::Or(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: Expr) -> Expr {
        Expr::Not(Box::new(e))
    }

    pub fn parse(text: &str) -> Result<Expr, (usize, String)> {
        let tokens = lex(text)?;
        let mut p = Parser { tokens: &tokens, pos: 0, end: text.chars().count() + 1 };
        let e = p.expr()?;
        p.finish()?;
        Ok(e)
    }

    /// Top-level conjuncts, left to right.
    pub fn conjuncts(&self) -> Vec<&Expr> {
        match self {
            Expr::And(a, b) => {
                let mut v = a.conjuncts();
                v.extend(b.conjuncts());
                v
            }
            e => vec![e],
        }
    }

    /// Rebuilds a conjunction, `true` when empty.
    pub fn conjoin(parts: impl IntoIterator<Item = Expr>) -> Expr {
        parts.into_iter().fold(Expr::True, Expr::and)
    }

    /// Calls `f` on every constraint with its polarity (`true` when it occurs
    /// under an even number of negations).
    pub fn visit_constraints(&self, f: &mut impl FnMut(&Constraint, bool)) {
        self.visit_inner(true, f);
    }

    fn visit_inner(&self, positive: bool, f: &mut impl FnMut(&Constraint, bool)) {
        match self {
            Expr::True | Expr::False | Expr::Location(_) => {}
            Expr::Constraint(c) => f(c, positive),
            Expr::Not(e) => e.visit_inner(!positive, f),
            Expr::And(a, b) | Expr::Or(a, b) => {
                a.visit_inner(positive, f);
                b.visit_inner(positive, f);
            }
        }
    }

    pub fn visit_locations(&self, f: &mut impl FnMut(&str)) {
        match self {
            Expr::Location(l) => f(l),
            Expr::Not(e) => e.visit_locations(f),
            Expr::And(a, b) | Expr::Or(a, b) => {
                a.visit_locations(f);
                b.visit_locations(f);
            }
            _ => {}
        }
    }

    /// Whether the predicate describes a closed set: no strict comparison
    /// after pushing negations inward.
    pub fn is_closed(&self) -> bool {
        let mut closed = true;
        self.visit_constraints(&mut |c, positive| {
            let strict = match c.cmp {
                Cmp::Eq => !positive,
                cmp => cmp.is_strict() == positive,
            };
            closed &= !strict;
        });
        closed
    }

    pub fn is_diagonal_free(&self) -> bool {
        let mut free = true;
        self.visit_constraints(&mut |c, _| free &= c.minus.is_none());
        free
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Or(..) => 1,
            Expr::And(..) => 2,
            _ => 3,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
            if e.precedence() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            Expr::True => f.write_str("true"),
            Expr::False => f.write_str("false"),
            Expr::Location(l) => f.write_str(l),
            Expr::Constraint(c) => write!(f, "{c}"),
            Expr::Not(e) => {
                f.write_str("!")?;
                child(f, e, 3)
            }
            Expr::And(a, b) => {
                child(f, a, 2)?;
                f.write_str(" & ")?;
                child(f, b, 3)
            }
            Expr::Or(a, b) => {
                child(f, a, 1)?;
                f.write_str(" | ")?;
                child(f, b, 2)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Num(String),
    Cmp(Cmp),
    Minus,
    And,
    Or,
    Not,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Dot,
    Diamond,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Num(s) => write!(f, "`{s}`"),
            Tok::Cmp(c) => write!(f, "`{c}`"),
            Tok::Minus => f.write_str("`-`"),
            Tok::And => f.write_str("`&`"),
            Tok::Or => f.write_str("`|`"),
            Tok::Not => f.write_str("`!`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBracket => f.write_str("`[`"),
            Tok::RBracket => f.write_str("`]`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Diamond => f.write_str("`<>`"),
        }
    }
}

/// Tokens with their 1-based character column.
pub(crate) fn lex(text: &str) -> Result<Vec<(usize, Tok)>, (usize, String)> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        let next = chars.get(i + 1).copied();
        let (tok, len) = match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push((col, Tok::Ident(chars[start..i].iter().collect())));
                continue;
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.' || chars[i] == '/') {
                    i += 1;
                }
                out.push((col, Tok::Num(chars[start..i].iter().collect())));
                continue;
            }
            '<' if next == Some('=') => (Tok::Cmp(Cmp::Le), 2),
            '<' if next == Some('>') => (Tok::Diamond, 2),
            '<' => (Tok::Cmp(Cmp::Lt), 1),
            '>' if next == Some('=') => (Tok::Cmp(Cmp::Ge), 2),
            '>' => (Tok::Cmp(Cmp::Gt), 1),
            '=' if next == Some('=') => (Tok::Cmp(Cmp::Eq), 2),
            '=' => (Tok::Cmp(Cmp::Eq), 1),
            '≤' => (Tok::Cmp(Cmp::Le), 1),
            '≥' => (Tok::Cmp(Cmp::Ge), 1),
            '-' => (Tok::Minus, 1),
            '&' if next == Some('&') => (Tok::And, 2),
            '&' | '∧' => (Tok::And, 1),
            '|' if next == Some('|') => (Tok::Or, 2),
            '|' | '∨' => (Tok::Or, 1),
            '!' | '¬' => (Tok::Not, 1),
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            '[' => (Tok::LBracket, 1),
            ']' => (Tok::RBracket, 1),
            '.' => (Tok::Dot, 1),
            '◇' => (Tok::Diamond, 1),
            other => return Err((col, format!("unexpected character `{other}`"))),
        };
        out.push((col, tok));
        i += len;
    }
    Ok(out)
}

pub(crate) struct Parser<'a> {
    pub(crate) tokens: &'a [(usize, Tok)],
    pub(crate) pos: usize,
    /// Column reported for errors at end of input.
    pub(crate) end: usize,
}

impl Parser<'_> {
    pub(crate) fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.1)
    }

    pub(crate) fn peek_at(&self, offset: usize) -> Option<&Tok> {
        self.tokens.get(self.pos + offset).map(|t| &t.1)
    }

    pub(crate) fn column(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |t| t.0)
    }

    pub(crate) fn bump(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).map(|t| t.1.clone());
        self.pos += 1;
        t
    }

    pub(crate) fn error<T>(&self, message: impl Into<String>) -> Result<T, (usize, String)> {
        Err((self.column(), message.into()))
    }

    pub(crate) fn unexpected<T>(&self, wanted: &str) -> Result<T, (usize, String)> {
        match self.peek() {
            Some(t) => self.error(format!("expected {wanted}, found {t}")),
            None => self.error(format!("expected {wanted}, found end of input")),
        }
    }

    pub(crate) fn expect(&mut self, tok: Tok, wanted: &str) -> Result<(), (usize, String)> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            self.unexpected(wanted)
        }
    }

    pub(crate) fn finish(&self) -> Result<(), (usize, String)> {
        match self.peek() {
            None => Ok(()),
            Some(t) => self.error(format!("unexpected {t} after expression")),
        }
    }

    pub(crate) fn expr(&mut self) -> Result<Expr, (usize, String)> {
        let mut e = self.conjunction()?;
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            e = Expr::or(e, self.conjunction()?);
        }
        Ok(e)
    }

    fn conjunction(&mut self) -> Result<Expr, (usize, String)> {
        let mut e = self.unary()?;
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            e = Expr::And(Box::new(e), Box::new(self.unary()?));
        }
        Ok(e)
    }

    fn unary(&mut self) -> Result<Expr, (usize, String)> {
        if self.peek() == Some(&Tok::Not) {
            self.pos += 1;
            return Ok(Expr::not(self.unary()?));
        }
        self.primary()
    }

    fn integer(&mut self) -> Result<i64, (usize, String)> {
        let negative = if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            true
        } else {
            false
        };
        match self.peek() {
            Some(Tok::Num(n)) => match n.parse::<i64>() {
                Ok(v) => {
                    self.pos += 1;
                    Ok(if negative { -v } else { v })
                }
                Err(_) => self.error(format!("`{n}` is not an integer constant")),
            },
            _ => self.unexpected("an integer constant"),
        }
    }

    fn ident(&mut self) -> Result<String, (usize, String)> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.unexpected("a clock name"),
        }
    }

    fn primary(&mut self) -> Result<Expr, (usize, String)> {
        let start = self.column();
        match self.bump() {
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Some(Tok::Ident(s)) if s == "true" => Ok(Expr::True),
            Some(Tok::Ident(s)) if s == "false" => Ok(Expr::False),
            Some(Tok::Ident(clock)) => {
                let minus = if self.peek() == Some(&Tok::Minus) {
                    self.pos += 1;
                    Some(self.ident()?)
                } else {
                    None
                };
                let cmp = match self.peek() {
                    Some(Tok::Cmp(c)) => *c,
                    _ if minus.is_none() => return Ok(Expr::Location(clock)),
                    _ => return self.unexpected("a comparison"),
                };
                self.pos += 1;
                let col = self.column();
                let value = self.integer()?;
                if value < 0 && minus.is_none() {
                    return Err((col, "clock constants must be non-negative".into()));
                }
                Ok(Expr::Constraint(Constraint { clock, minus, cmp, value }))
            }
            Some(Tok::Num(_)) | Some(Tok::Minus) => {
                self.pos -= 1;
                let col = self.column();
                let value = self.integer()?;
                if value < 0 {
                    return Err((col, "clock constants must be non-negative".into()));
                }
                let cmp = match self.bump() {
                    Some(Tok::Cmp(c)) => c.flipped(),
                    _ => {
                        self.pos -= 1;
                        return self.unexpected("a comparison");
                    }
                };
                let clock = self.ident()?;
                Ok(Expr::Constraint(Constraint { clock, minus: None, cmp, value }))
            }
            Some(_) => {
                self.pos -= 1;
                Err((start, format!("expected an expression, found {}", self.peek().unwrap())))
            }
            None => Err((start, "expected an expression, found end of input".into())),
        }
    }
}
