//! Small arithmetic expression language for initial profiles and forcings.
//!
//! Grammar (usual precedence, `^` right-associative and binding tighter than unary minus):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := ('-' | '+') unary | power
//! power  := atom ('^' unary)?
//! atom   := number | name | name '(' expr ')' | '(' expr ')'
//! ```
//!
//! Variables are `x`, `y`, `t`; constants `pi` and `e`; functions
//! `sin cos tan exp log sqrt abs tanh cosh sinh`.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
    T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
    Tanh,
    Cosh,
    Sinh,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "tanh" => Func::Tanh,
            "cosh" => Func::Cosh,
            "sinh" => Func::Sinh,
            _ => return None,
        })
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Tan => v.tan(),
            Func::Exp => v.exp(),
            Func::Log => v.ln(),
            Func::Sqrt => v.sqrt(),
            Func::Abs => v.abs(),
            Func::Tanh => v.tanh(),
            Func::Cosh => v.cosh(),
            Func::Sinh => v.sinh(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(Var),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    fn eval(&self, x: f64, y: f64, t: f64) -> f64 {
        match self {
            Node::Num(v) => *v,
            Node::Var(Var::X) => x,
            Node::Var(Var::Y) => y,
            Node::Var(Var::T) => t,
            Node::Neg(a) => -a.eval(x, y, t),
            Node::Add(a, b) => a.eval(x, y, t) + b.eval(x, y, t),
            Node::Sub(a, b) => a.eval(x, y, t) - b.eval(x, y, t),
            Node::Mul(a, b) => a.eval(x, y, t) * b.eval(x, y, t),
            Node::Div(a, b) => a.eval(x, y, t) / b.eval(x, y, t),
            Node::Pow(a, b) => {
                let base = a.eval(x, y, t);
                match **b {
                    Node::Num(p) if p.fract() == 0.0 && p.abs() < 64.0 => base.powi(p as i32),
                    _ => base.powf(b.eval(x, y, t)),
                }
            }
            Node::Call(f, a) => f.apply(a.eval(x, y, t)),
        }
    }

    fn uses(&self, v: Var) -> bool {
        match self {
            Node::Num(_) => false,
            Node::Var(w) => *w == v,
            Node::Neg(a) | Node::Call(_, a) => a.uses(v),
            Node::Add(a, b)
            | Node::Sub(a, b)
            | Node::Mul(a, b)
            | Node::Div(a, b)
            | Node::Pow(a, b) => a.uses(v) || b.uses(v),
        }
    }

    /// Folds variable-free subtrees into numbers.
    fn fold(self) -> Node {
        let folded = match self {
            Node::Neg(a) => Node::Neg(Box::new(a.fold())),
            Node::Add(a, b) => Node::Add(Box::new(a.fold()), Box::new(b.fold())),
            Node::Sub(a, b) => Node::Sub(Box::new(a.fold()), Box::new(b.fold())),
            Node::Mul(a, b) => Node::Mul(Box::new(a.fold()), Box::new(b.fold())),
            Node::Div(a, b) => Node::Div(Box::new(a.fold()), Box::new(b.fold())),
            Node::Pow(a, b) => Node::Pow(Box::new(a.fold()), Box::new(b.fold())),
            Node::Call(f, a) => Node::Call(f, Box::new(a.fold())),
            leaf => leaf,
        };
        if !matches!(folded, Node::Num(_))
            && !folded.uses(Var::X)
            && !folded.uses(Var::Y)
            && !folded.uses(Var::T)
        {
            Node::Num(folded.eval(0.0, 0.0, 0.0))
        } else {
            folded
        }
    }
}

/// A parsed expression in `(x, y, t)`, keeping its source text for echoing.
#[derive(Debug, Clone)]
pub struct Expr {
    source: String,
    root: Node,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl std::str::FromStr for Expr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Expr::parse(s)
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self> {
        let tokens = lex(src)?;
        let mut p = Parser { tokens, pos: 0 };
        let root = p.expr()?;
        if let Some(tok) = p.tokens.get(p.pos) {
            return Err(Error::Expr {
                pos: tok.pos,
                msg: format!("unexpected {}", tok.kind),
            });
        }
        Ok(Self {
            source: src.trim().to_string(),
            root: root.fold(),
        })
    }

    pub fn constant(c: f64) -> Self {
        Self {
            source: format!("{c:?}"),
            root: Node::Num(c),
        }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, x: f64, y: f64, t: f64) -> f64 {
        self.root.eval(x, y, t)
    }

    pub fn uses(&self, v: Var) -> bool {
        self.root.uses(v)
    }

    /// The value if the expression folded to a constant.
    pub fn as_constant(&self) -> Option<f64> {
        match self.root {
            Node::Num(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::Num(v) => write!(f, "number {v}"),
            Kind::Ident(s) => write!(f, "name `{s}`"),
            Kind::Op(c) => write!(f, "`{c}`"),
            Kind::LParen => f.write_str("`(`"),
            Kind::RParen => f.write_str("`)`"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: Kind,
    pos: usize,
}

fn lex(src: &str) -> Result<Vec<Token>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == '.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| Error::Expr {
                pos: start,
                msg: format!("bad number `{text}`"),
            })?;
            out.push(Token {
                kind: Kind::Num(v),
                pos: start,
            });
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                kind: Kind::Ident(src[start..i].to_string()),
                pos: start,
            });
        } else {
            let kind = match c {
                '+' | '-' | '*' | '/' | '^' => Kind::Op(c),
                '(' => Kind::LParen,
                ')' => Kind::RParen,
                _ => {
                    return Err(Error::Expr {
                        pos: start,
                        msg: format!("unexpected character `{c}`"),
                    })
                }
            };
            i += c.len_utf8();
            out.push(Token { kind, pos: start });
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Kind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn end_pos(&self) -> usize {
        self.tokens.last().map(|t| t.pos + 1).unwrap_or(0)
    }

    fn here(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|t| t.pos)
            .unwrap_or_else(|| self.end_pos())
    }

    fn eat_op(&mut self, ops: &[char]) -> Option<char> {
        match self.peek() {
            Some(Kind::Op(c)) if ops.contains(c) => {
                let c = *c;
                self.pos += 1;
                Some(c)
            }
            _ => None,
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(op) = self.eat_op(&['+', '-']) {
            let rhs = self.term()?;
            lhs = if op == '+' {
                Node::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Node::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.eat_op(&['*', '/']) {
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Node::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Node::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        match self.eat_op(&['-', '+']) {
            Some('-') => Ok(Node::Neg(Box::new(self.unary()?))),
            Some(_) => self.unary(),
            None => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.eat_op(&['^']).is_some() {
            let exp = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn expect_rparen(&mut self) -> Result<()> {
        match self.peek() {
            Some(Kind::RParen) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(Error::Expr {
                pos: self.here(),
                msg: "expected `)`".into(),
            }),
        }
    }

    fn atom(&mut self) -> Result<Node> {
        let pos = self.here();
        let Some(tok) = self.tokens.get(self.pos).cloned() else {
            return Err(Error::Expr {
                pos,
                msg: "unexpected end of expression".into(),
            });
        };
        self.pos += 1;
        match tok.kind {
            Kind::Num(v) => Ok(Node::Num(v)),
            Kind::LParen => {
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Kind::Ident(name) => {
                if let Some(f) = Func::from_name(&name) {
                    if self.peek() != Some(&Kind::LParen) {
                        return Err(Error::Expr {
                            pos: self.here(),
                            msg: format!("function `{name}` needs `(`"),
                        });
                    }
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Node::Call(f, Box::new(arg)));
                }
                match name.as_str() {
                    "x" => Ok(Node::Var(Var::X)),
                    "y" => Ok(Node::Var(Var::Y)),
                    "t" => Ok(Node::Var(Var::T)),
                    "pi" => Ok(Node::Num(std::f64::consts::PI)),
                    "e" => Ok(Node::Num(std::f64::consts::E)),
                    _ => Err(Error::Expr {
                        pos: tok.pos,
                        msg: format!("unknown name `{name}`"),
                    }),
                }
            }
            other => Err(Error::Expr {
                pos: tok.pos,
                msg: format!("unexpected {other}"),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ev(s: &str, x: f64) -> f64 {
        Expr::parse(s).unwrap().eval(x, 0.0, 0.0)
    }

    #[test]
    fn precedence() {
        assert_eq!(ev("1 + 2 * 3", 0.0), 7.0);
        assert_eq!(ev("(1 + 2) * 3", 0.0), 9.0);
        assert_eq!(ev("2 ^ 3 ^ 2", 0.0), 512.0);
        assert_eq!(ev("-2 ^ 2", 0.0), -4.0);
        assert_eq!(ev("2 ^ -1", 0.0), 0.5);
        assert_eq!(ev("8 / 2 / 2", 0.0), 2.0);
        assert_eq!(ev("1.5e2 + 2E-1", 0.0), 150.2);
    }

    #[test]
    fn functions_and_variables() {
        let x = 0.3;
        let v = ev("1 + 0.3*sin(2*pi*x)", x);
        assert!((v - (1.0 + 0.3 * (2.0 * PI * x).sin())).abs() < 1e-15);
        let e = Expr::parse("y*(y-1) + t*exp(x)").unwrap();
        assert_eq!(e.eval(0.0, 0.5, 2.0), -0.25 + 2.0);
        assert!(e.uses(Var::T) && e.uses(Var::Y) && e.uses(Var::X));
    }

    #[test]
    fn folds_constants() {
        let e = Expr::parse("12 * cos(0) + 2^2").unwrap();
        assert_eq!(e.as_constant(), Some(16.0));
        assert!(Expr::parse("x + 1").unwrap().as_constant().is_none());
    }

    #[test]
    fn reports_positions() {
        match Expr::parse("1 + * 2") {
            Err(Error::Expr { pos, .. }) => assert_eq!(pos, 4),
            other => panic!("{other:?}"),
        }
        assert!(Expr::parse("sin x").is_err());
        assert!(Expr::parse("foo(1)").is_err());
        assert!(Expr::parse("(1 + 2").is_err());
        assert!(Expr::parse("1 2").is_err());
        assert!(Expr::parse("").is_err());
        assert!(Expr::parse("3 $ 4").is_err());
    }
}
