//! A small expression language for payoffs over path features.
//!
//! ```text
//! expr    := sum (("<" | "<=" | "≤" | ">" | ">=" | "≥" | "=") sum)*
//! sum     := product (("+" | "-") product)*
//! product := unary (("*" | "/") unary)*
//! unary   := "-" unary | power
//! power   := primary ("^" unary)?
//! primary := number | "(" expr ")" | name | name "(" args ")"
//! ```
//!
//! Names: the variables `B` (terminal value), `QV` (terminal realized
//! quadratic variation), `MAXB` (running maximum, including `B_0 = 0`);
//! the step-indexed `B_at(k)`, `QV_at(k)`, `AHAT_at(k)`; the functions
//! `max`, `min` (two arguments) and `abs`, `exp`, `ind`, `neg` (one); the
//! constants `inf` and `ninf`. Comparisons evaluate to 0 or 1. Arithmetic
//! follows [`crate::ext`].

use std::fmt;

use thiserror::Error;

use crate::ext;
use crate::measure::realized_qv;
use crate::pathspace::{Lattice, PathId, RandomVariable};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DslError {
    #[error("syntax error at byte {offset}: expected {}", expected.join(" or "))]
    Syntax {
        offset: usize,
        expected: Vec<String>,
    },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("`{name}` at byte {offset} takes {expected} argument(s), got {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
        offset: usize,
    },

    #[error("`{name}({index})` is outside the lattice (valid {min}..={max})")]
    IndexOutOfRange {
        name: String,
        index: usize,
        min: usize,
        max: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    B,
    Qv,
    MaxB,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Series {
    B,
    Qv,
    AHat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Max,
    Min,
    Abs,
    Exp,
    Ind,
    Neg,
}

impl Func {
    fn arity(self) -> usize {
        match self {
            Func::Max | Func::Min => 2,
            _ => 1,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Func::Max => "max",
            Func::Min => "min",
            Func::Abs => "abs",
            Func::Exp => "exp",
            Func::Ind => "ind",
            Func::Neg => "neg",
        }
    }
}

impl Series {
    fn name(self) -> &'static str {
        match self {
            Series::B => "B_at",
            Series::Qv => "QV_at",
            Series::AHat => "AHAT_at",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    At(Series, usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(&'static str),
    End,
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, DslError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
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
            let v: f64 = src[start..i].parse().map_err(|_| DslError::Syntax {
                offset: start,
                expected: vec!["number".into()],
            })?;
            out.push((Tok::Num(v), start));
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
            continue;
        }
        let rest = &src[i..];
        let sym = [
            "<=", ">=", "≤", "≥", "+", "-", "*", "/", "^", "(", ")", ",", "<", ">", "=",
        ]
        .into_iter()
        .find(|s| rest.starts_with(s));
        match sym {
            Some(s) => {
                i += s.len();
                let canon = match s {
                    "≤" => "<=",
                    "≥" => ">=",
                    other => other,
                };
                out.push((Tok::Sym(canon), start));
            }
            None => {
                return Err(DslError::Syntax {
                    offset: start,
                    expected: vec!["a number, name, operator or parenthesis".into()],
                })
            }
        }
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, sym: &str) -> bool {
        if matches!(self.peek(), Tok::Sym(s) if *s == sym) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, sym: &str) -> Result<(), DslError> {
        if self.eat(sym) {
            Ok(())
        } else {
            Err(self.error(&[sym]))
        }
    }

    fn error(&self, expected: &[&str]) -> DslError {
        DslError::Syntax {
            offset: self.offset(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn expr(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.sum()?;
        loop {
            let op = match self.peek() {
                Tok::Sym("<") => CmpOp::Lt,
                Tok::Sym("<=") => CmpOp::Le,
                Tok::Sym(">") => CmpOp::Gt,
                Tok::Sym(">=") => CmpOp::Ge,
                Tok::Sym("=") => CmpOp::Eq,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.sum()?;
            lhs = Expr::Cmp(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn sum(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Tok::Sym("+") => BinOp::Add,
                Tok::Sym("-") => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.product()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn product(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Sym("*") => BinOp::Mul,
                Tok::Sym("/") => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, DslError> {
        if self.eat("-") {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, DslError> {
        let base = self.primary()?;
        if self.eat("^") {
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, DslError> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let offset = self.offset();
                self.bump();
                self.named(name, offset)
            }
            _ => Err(self.error(&["number", "name", "(", "-"])),
        }
    }

    fn named(&mut self, name: String, offset: usize) -> Result<Expr, DslError> {
        let simple = match name.as_str() {
            "B" => Some(Expr::Var(Var::B)),
            "QV" => Some(Expr::Var(Var::Qv)),
            "MAXB" => Some(Expr::Var(Var::MaxB)),
            "inf" => Some(Expr::Num(ext::POS_INF)),
            "ninf" => Some(Expr::Num(ext::NEG_INF)),
            _ => None,
        };
        if let Some(e) = simple {
            return Ok(e);
        }
        let series = match name.as_str() {
            "B_at" => Some(Series::B),
            "QV_at" => Some(Series::Qv),
            "AHAT_at" => Some(Series::AHat),
            _ => None,
        };
        if let Some(s) = series {
            self.expect("(")?;
            let at = self.offset();
            let k = match self.peek() {
                Tok::Num(v) if v.fract() == 0.0 && *v >= 0.0 && *v < 1e9 => *v as usize,
                _ => {
                    return Err(DslError::Syntax {
                        offset: at,
                        expected: vec!["step index".into()],
                    })
                }
            };
            self.bump();
            if matches!(self.peek(), Tok::Sym(",")) {
                return Err(DslError::Arity {
                    name,
                    expected: 1,
                    found: 2,
                    offset,
                });
            }
            self.expect(")")?;
            return Ok(Expr::At(s, k));
        }
        let func = match name.as_str() {
            "max" => Func::Max,
            "min" => Func::Min,
            "abs" => Func::Abs,
            "exp" => Func::Exp,
            "ind" => Func::Ind,
            "neg" => Func::Neg,
            _ => return Err(DslError::UnknownIdentifier { name, offset }),
        };
        self.expect("(")?;
        let mut args = Vec::new();
        if !self.eat(")") {
            loop {
                args.push(self.expr()?);
                if self.eat(")") {
                    break;
                }
                if !self.eat(",") {
                    return Err(self.error(&[",", ")"]));
                }
            }
        }
        if args.len() != func.arity() {
            return Err(DslError::Arity {
                name,
                expected: func.arity(),
                found: args.len(),
                offset,
            });
        }
        Ok(Expr::Call(func, args))
    }
}

pub fn parse(src: &str) -> Result<Expr, DslError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.error(&["operator", "end of input"]));
    }
    Ok(e)
}

/// Fully parenthesized; parsing the output gives back the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) if *v == ext::POS_INF => write!(f, "inf"),
            Expr::Num(v) if *v == ext::NEG_INF => write!(f, "ninf"),
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(Var::B) => write!(f, "B"),
            Expr::Var(Var::Qv) => write!(f, "QV"),
            Expr::Var(Var::MaxB) => write!(f, "MAXB"),
            Expr::At(s, k) => write!(f, "{}({k})", s.name()),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Bin(op, a, b) => {
                let s = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a} {s} {b})")
            }
            Expr::Cmp(op, a, b) => {
                let s = match op {
                    CmpOp::Lt => "<",
                    CmpOp::Le => "<=",
                    CmpOp::Gt => ">",
                    CmpOp::Ge => ">=",
                    CmpOp::Eq => "=",
                };
                write!(f, "({a} {s} {b})")
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Everything an expression can read from one path.
#[derive(Debug, Clone)]
pub struct PathFeatures {
    values: Vec<f64>,
    qv: Vec<f64>,
    rate: Vec<f64>,
    max_value: f64,
}

impl PathFeatures {
    pub fn new(lattice: &Lattice, path: &PathId) -> Self {
        let values = lattice.values(path);
        let q = realized_qv(lattice, path);
        let max_value = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        PathFeatures {
            values,
            qv: q.qv,
            rate: q.rate,
            max_value,
        }
    }
}

impl Expr {
    /// Checks every step index against a horizon of `num_steps`.
    pub fn check_indices(&self, num_steps: usize) -> Result<(), DslError> {
        match self {
            Expr::At(s, k) => {
                let min = if *s == Series::AHat { 1 } else { 0 };
                if *k < min || *k > num_steps {
                    return Err(DslError::IndexOutOfRange {
                        name: s.name().into(),
                        index: *k,
                        min,
                        max: num_steps,
                    });
                }
                Ok(())
            }
            Expr::Num(_) | Expr::Var(_) => Ok(()),
            Expr::Neg(e) => e.check_indices(num_steps),
            Expr::Bin(_, a, b) | Expr::Cmp(_, a, b) => {
                a.check_indices(num_steps)?;
                b.check_indices(num_steps)
            }
            Expr::Call(_, args) => args.iter().try_for_each(|a| a.check_indices(num_steps)),
        }
    }

    /// Evaluates on one path. Indices must already be checked.
    pub fn eval(&self, x: &PathFeatures) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(Var::B) => *x.values.last().unwrap(),
            Expr::Var(Var::Qv) => *x.qv.last().unwrap(),
            Expr::Var(Var::MaxB) => x.max_value,
            Expr::At(Series::B, k) => x.values[*k],
            Expr::At(Series::Qv, k) => x.qv[*k],
            Expr::At(Series::AHat, k) => x.rate[*k - 1],
            Expr::Neg(e) => -e.eval(x),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(x), b.eval(x));
                match op {
                    BinOp::Add => ext::add(a, b),
                    BinOp::Sub => ext::sub(a, b),
                    BinOp::Mul => ext::mul(a, b),
                    BinOp::Div => ext::div(a, b),
                    BinOp::Pow => ext::pow(a, b),
                }
            }
            Expr::Cmp(op, a, b) => {
                let (a, b) = (a.eval(x), b.eval(x));
                let holds = match op {
                    CmpOp::Lt => a < b,
                    CmpOp::Le => a <= b,
                    CmpOp::Gt => a > b,
                    CmpOp::Ge => a >= b,
                    CmpOp::Eq => a == b,
                };
                if holds {
                    1.0
                } else {
                    0.0
                }
            }
            Expr::Call(func, args) => {
                let a = args[0].eval(x);
                match func {
                    Func::Max => a.max(args[1].eval(x)),
                    Func::Min => a.min(args[1].eval(x)),
                    Func::Abs => a.abs(),
                    Func::Exp => ext::exp(a),
                    Func::Ind => a,
                    Func::Neg => -a,
                }
            }
        }
    }

    pub fn evaluate(&self, lattice: &Lattice, path: &PathId) -> Result<f64, DslError> {
        self.check_indices(lattice.num_steps())?;
        Ok(self.eval(&PathFeatures::new(lattice, path)))
    }

    pub fn to_random_variable(&self, lattice: &Lattice) -> Result<RandomVariable, DslError> {
        self.check_indices(lattice.num_steps())?;
        Ok(RandomVariable::from_fn(lattice, |p| {
            self.eval(&PathFeatures::new(lattice, p))
        }))
    }
}
