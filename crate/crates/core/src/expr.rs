//! A tiny arithmetic language for metric components.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := unary ('^' factor)?
//! unary  := '-'? atom
//! atom   := number | ident '(' expr ')' | var | '(' expr ')'
//! var    := 'x' digit+
//! ```
//!
//! Functions: `sin cos exp sqrt abs`. Angles are radians. Variables are
//! 1-based (`x1` is the first coordinate).

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("unknown function '{name}' at {position}")]
    UnknownFunction { name: String, position: usize },

    #[error("variable x{index} at {position} is out of range for dimension {dim}")]
    VariableOutOfRange { index: usize, dim: usize, position: usize },

    #[error("cannot evaluate {op} with operands {operands:?}")]
    Eval { op: String, operands: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// 1-based coordinate index.
    Var(usize),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    /// Largest variable index referenced (0 if none).
    pub fn max_var(&self) -> usize {
        match self {
            Expr::Num(_) => 0,
            Expr::Var(i) => *i,
            Expr::Neg(e) | Expr::Call(_, e) => e.max_var(),
            Expr::Binary(_, a, b) => a.max_var().max(b.max_var()),
        }
    }

    fn level(&self) -> u8 {
        match self {
            Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Binary(BinOp::Pow, ..) => 3,
            Expr::Neg(_) => 4,
            Expr::Num(v) if v.is_sign_negative() => 0,
            _ => 5,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min_level: u8) -> fmt::Result {
        if self.level() < min_level {
            write!(f, "(")?;
            self.write_at(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(i) => write!(f, "x{i}"),
            Expr::Neg(e) => {
                write!(f, "-")?;
                e.write_at(f, 5)
            }
            Expr::Call(func, e) => {
                write!(f, "{}(", func.name())?;
                e.write_at(f, 0)?;
                write!(f, ")")
            }
            Expr::Binary(op, a, b) => {
                let (left, right) = match op {
                    BinOp::Add | BinOp::Sub => (1, 2),
                    BinOp::Mul | BinOp::Div => (2, 3),
                    BinOp::Pow => (4, 3),
                };
                a.write_at(f, left)?;
                write!(f, "{}", op.symbol())?;
                b.write_at(f, right)
            }
        }
    }
}

/// Canonical form: minimal parentheses, numbers in shortest round-trip form.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokenize(src: &'a str) -> Result<Vec<(Tok, usize)>, ExprError> {
        let mut lx = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        loop {
            let t = lx.next()?;
            let done = t.0 == Tok::End;
            out.push(t);
            if done {
                return Ok(out);
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn next(&mut self) -> Result<(Tok, usize), ExprError> {
        while matches!(self.peek(), Some(c) if c.is_ascii_whitespace()) {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(c) = self.peek() else {
            return Ok((Tok::End, start));
        };
        if c.is_ascii_digit() || c == '.' {
            return self.number(start);
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                self.pos += 1;
            }
            return Ok((Tok::Ident(self.src[start..self.pos].to_string()), start));
        }
        if "+-*/^()".contains(c) {
            self.pos += 1;
            return Ok((Tok::Sym(c), start));
        }
        Err(ExprError::Syntax { position: start, message: format!("unexpected character '{c}'") })
    }

    fn number(&mut self, start: usize) -> Result<(Tok, usize), ExprError> {
        let bytes = self.src.as_bytes();
        let digits = |pos: &mut usize| {
            let s = *pos;
            while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
                *pos += 1;
            }
            *pos - s
        };
        let mut pos = self.pos;
        let mut count = digits(&mut pos);
        if pos < bytes.len() && bytes[pos] == b'.' {
            pos += 1;
            count += digits(&mut pos);
        }
        if count == 0 {
            return Err(ExprError::Syntax { position: start, message: "malformed number".into() });
        }
        if pos < bytes.len() && (bytes[pos] == b'e' || bytes[pos] == b'E') {
            pos += 1;
            if pos < bytes.len() && (bytes[pos] == b'+' || bytes[pos] == b'-') {
                pos += 1;
            }
            if digits(&mut pos) == 0 {
                return Err(ExprError::Syntax { position: start, message: "malformed exponent".into() });
            }
        }
        self.pos = pos;
        let text = &self.src[start..pos];
        let v: f64 = text
            .parse()
            .map_err(|_| ExprError::Syntax { position: start, message: format!("bad number '{text}'") })?;
        if !v.is_finite() {
            return Err(ExprError::Syntax { position: start, message: format!("number '{text}' overflows") });
        }
        Ok((Tok::Num(v), start))
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
    dim: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, c: char) -> Result<(), ExprError> {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            Ok(())
        } else {
            Err(ExprError::Syntax { position: self.pos(), message: format!("expected '{c}'") })
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('+') => BinOp::Add,
                Tok::Sym('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('*') => BinOp::Mul,
                Tok::Sym('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr, ExprError> {
        let base = self.unary()?;
        if *self.peek() == Tok::Sym('^') {
            self.bump();
            let exp = self.factor()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if *self.peek() == Tok::Sym('-') {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.atom()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let position = self.pos();
        match self.bump() {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::Sym('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::Sym('(') {
                    let func = Func::from_name(&name)
                        .ok_or(ExprError::UnknownFunction { name: name.clone(), position })?;
                    self.bump();
                    let arg = self.expr()?;
                    self.expect(')')?;
                    return Ok(Expr::Call(func, Box::new(arg)));
                }
                let digits = name.strip_prefix('x').filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()));
                match digits {
                    Some(d) => {
                        let index: usize = d.parse().unwrap_or(usize::MAX);
                        if index == 0 || index > self.dim {
                            Err(ExprError::VariableOutOfRange { index, dim: self.dim, position })
                        } else {
                            Ok(Expr::Var(index))
                        }
                    }
                    None => Err(ExprError::Syntax { position, message: format!("unknown identifier '{name}'") }),
                }
            }
            Tok::End => Err(ExprError::Syntax { position, message: "unexpected end of input".into() }),
            Tok::Sym(c) => Err(ExprError::Syntax { position, message: format!("unexpected '{c}'") }),
        }
    }
}

/// Parses `src` as an expression over `x1..x{dim}`.
pub fn parse(src: &str, dim: usize) -> Result<Expr, ExprError> {
    let toks = Lexer::tokenize(src)?;
    let mut p = Parser { toks, at: 0, dim };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(ExprError::Syntax { position: p.pos(), message: "trailing input".into() });
    }
    Ok(e)
}

/// Evaluates `e` at coordinates `x` (`x[0]` is `x1`).
pub fn eval(e: &Expr, x: &[f64]) -> Result<f64, ExprError> {
    let fail = |op: &str, operands: Vec<f64>| ExprError::Eval { op: op.to_string(), operands };
    let v = match e {
        Expr::Num(v) => *v,
        Expr::Var(i) => *x.get(i - 1).ok_or_else(|| fail(&format!("x{i}"), x.to_vec()))?,
        Expr::Neg(a) => -eval(a, x)?,
        Expr::Call(func, a) => {
            let v = eval(a, x)?;
            match func {
                Func::Sin => v.sin(),
                Func::Cos => v.cos(),
                Func::Exp => v.exp(),
                Func::Abs => v.abs(),
                Func::Sqrt => {
                    if v < 0.0 {
                        return Err(fail("sqrt", vec![v]));
                    }
                    v.sqrt()
                }
            }
        }
        Expr::Binary(op, a, b) => {
            let (l, r) = (eval(a, x)?, eval(b, x)?);
            let v = match op {
                BinOp::Add => l + r,
                BinOp::Sub => l - r,
                BinOp::Mul => l * r,
                BinOp::Div => {
                    if r == 0.0 {
                        return Err(fail("/", vec![l, r]));
                    }
                    l / r
                }
                BinOp::Pow => l.powf(r),
            };
            if !v.is_finite() {
                return Err(fail(&op.symbol().to_string(), vec![l, r]));
            }
            v
        }
    };
    if !v.is_finite() {
        return Err(fail("evaluation", x.to_vec()));
    }
    Ok(v)
}
