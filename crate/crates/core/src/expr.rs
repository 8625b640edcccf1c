//! Closed-form complex seed functions.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' '-'? INT)*
//! atom   := NUMBER | NUMBER 'i' | 'i' | 'z' | ('exp' | 'conj') '(' expr ')' | '(' expr ')'
//! ```
//!
//! A parsed [`SeedExpr`] keeps the tree for printing and polynomial
//! extraction, and a flattened postfix program for evaluation.

use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("empty expression")]
    Empty,
    #[error("unexpected character {ch:?} at offset {offset}")]
    Lexical { offset: usize, ch: char },
    #[error("malformed number at offset {offset}")]
    BadNumber { offset: usize },
    #[error("unbalanced parentheses at offset {offset}")]
    Unbalanced { offset: usize },
    #[error("unknown identifier {name:?} at offset {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("syntax error at offset {offset}: {msg}")]
    Syntax { offset: usize, msg: String },
    #[error("division by zero at z = {z}")]
    DivisionByZero { z: Complex64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Conj,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Conj => "conj",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Lit(Complex64),
    Z,
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
    Call(Func, Box<Node>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Push(Complex64),
    Z,
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Pow(i32),
    Exp,
    Conj,
}

#[derive(Debug, Clone)]
pub struct SeedExpr {
    root: Node,
    program: Vec<Op>,
}

impl PartialEq for SeedExpr {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root
    }
}

impl SeedExpr {
    pub fn parse(src: &str) -> Result<Self, ExprError> {
        let tokens = lex(src)?;
        if tokens.is_empty() {
            return Err(ExprError::Empty);
        }
        let mut p = Parser { tokens: &tokens, pos: 0, end: src.len() };
        let root = p.expr()?;
        if let Some(t) = p.peek() {
            return Err(match t.kind {
                Tok::RParen => ExprError::Unbalanced { offset: t.offset },
                _ => ExprError::Syntax { offset: t.offset, msg: "trailing input".into() },
            });
        }
        Ok(Self::from_node(root))
    }

    pub fn from_node(root: Node) -> Self {
        let mut program = Vec::new();
        compile(&root, &mut program);
        SeedExpr { root, program }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::from_node(Node::Lit(c))
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64, ExprError> {
        let mut stack: Vec<Complex64> = Vec::with_capacity(8);
        for op in &self.program {
            match *op {
                Op::Push(c) => stack.push(c),
                Op::Z => stack.push(z),
                Op::Neg => {
                    let a = stack.pop().expect("stack underflow");
                    stack.push(-a);
                }
                Op::Exp | Op::Conj => {
                    let a = stack.pop().expect("stack underflow");
                    stack.push(if *op == Op::Exp { a.exp() } else { a.conj() });
                }
                Op::Pow(n) => {
                    let a = stack.pop().expect("stack underflow");
                    if n < 0 && a == Complex64::new(0.0, 0.0) {
                        return Err(ExprError::DivisionByZero { z });
                    }
                    stack.push(a.powi(n));
                }
                Op::Add | Op::Sub | Op::Mul | Op::Div => {
                    let b = stack.pop().expect("stack underflow");
                    let a = stack.pop().expect("stack underflow");
                    stack.push(match op {
                        Op::Add => a + b,
                        Op::Sub => a - b,
                        Op::Mul => a * b,
                        _ => {
                            if b == Complex64::new(0.0, 0.0) {
                                return Err(ExprError::DivisionByZero { z });
                            }
                            a / b
                        }
                    });
                }
            }
        }
        Ok(stack.pop().expect("empty program"))
    }

    /// Coefficients (lowest degree first) when the expression is a
    /// polynomial in `z` with no `conj`/`exp` of non-constant arguments and
    /// no division by non-constants.
    pub fn as_polynomial(&self) -> Option<Polynomial> {
        to_poly(&self.root)
    }

    /// True when `conj` never appears, so the expression is holomorphic
    /// wherever it is defined.
    pub fn is_holomorphic(&self) -> bool {
        !self.program.contains(&Op::Conj)
    }

    /// True when every node is a literal: the expression is a constant.
    pub fn is_constant(&self) -> bool {
        fn rec(n: &Node) -> bool {
            match n {
                Node::Lit(_) => true,
                Node::Z => false,
                Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => rec(a),
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => rec(a) && rec(b),
            }
        }
        rec(&self.root)
    }
}

impl fmt::Display for SeedExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(&self.root, f)
    }
}

impl std::str::FromStr for SeedExpr {
    type Err = ExprError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SeedExpr::parse(s)
    }
}

fn write_node(n: &Node, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match n {
        Node::Lit(c) => {
            if c.im == 0.0 {
                write!(f, "{:?}", c.re)
            } else if c.re == 0.0 {
                write!(f, "{:?}i", c.im)
            } else {
                write!(f, "({:?}+{:?}i)", c.re, c.im)
            }
        }
        Node::Z => write!(f, "z"),
        Node::Neg(a) => {
            write!(f, "(-")?;
            write_node(a, f)?;
            write!(f, ")")
        }
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
            let sym = match n {
                Node::Add(..) => "+",
                Node::Sub(..) => "-",
                Node::Mul(..) => "*",
                _ => "/",
            };
            write!(f, "(")?;
            write_node(a, f)?;
            write!(f, " {sym} ")?;
            write_node(b, f)?;
            write!(f, ")")
        }
        Node::Pow(a, k) => {
            write!(f, "(")?;
            write_node(a, f)?;
            write!(f, ")^{k}")
        }
        Node::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_node(a, f)?;
            write!(f, ")")
        }
    }
}

fn compile(n: &Node, out: &mut Vec<Op>) {
    match n {
        Node::Lit(c) => out.push(Op::Push(*c)),
        Node::Z => out.push(Op::Z),
        Node::Neg(a) => {
            compile(a, out);
            out.push(Op::Neg);
        }
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
            compile(a, out);
            compile(b, out);
            out.push(match n {
                Node::Add(..) => Op::Add,
                Node::Sub(..) => Op::Sub,
                Node::Mul(..) => Op::Mul,
                _ => Op::Div,
            });
        }
        Node::Pow(a, k) => {
            compile(a, out);
            out.push(Op::Pow(*k));
        }
        Node::Call(func, a) => {
            compile(a, out);
            out.push(match func {
                Func::Exp => Op::Exp,
                Func::Conj => Op::Conj,
            });
        }
    }
}

// ---- lexer ----

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Real(f64),
    Imag(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

#[derive(Debug, Clone)]
struct Token {
    kind: Tok,
    offset: usize,
    /// Raw digits for number tokens; used when a token must be an integer exponent.
    text: String,
}

fn lex(src: &str) -> Result<Vec<Token>, ExprError> {
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut out = Vec::new();
    let mut k = 0;
    while k < chars.len() {
        let (off, ch) = chars[k];
        if ch.is_whitespace() {
            k += 1;
            continue;
        }
        let single = match ch {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(kind) = single {
            out.push(Token { kind, offset: off, text: ch.to_string() });
            k += 1;
            continue;
        }
        if ch.is_ascii_digit() || ch == '.' {
            let start = k;
            while k < chars.len() && (chars[k].1.is_ascii_digit() || chars[k].1 == '.') {
                k += 1;
            }
            // exponent part only when followed by a digit (optionally signed)
            if k < chars.len() && (chars[k].1 == 'e' || chars[k].1 == 'E') {
                let mut j = k + 1;
                if j < chars.len() && (chars[j].1 == '+' || chars[j].1 == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].1.is_ascii_digit() {
                    k = j;
                    while k < chars.len() && chars[k].1.is_ascii_digit() {
                        k += 1;
                    }
                }
            }
            let text: String = chars[start..k].iter().map(|&(_, c)| c).collect();
            let value: f64 = text.parse().map_err(|_| ExprError::BadNumber { offset: off })?;
            let imag = k < chars.len()
                && chars[k].1 == 'i'
                && !chars.get(k + 1).is_some_and(|&(_, c)| c.is_alphanumeric() || c == '_');
            if imag {
                k += 1;
                out.push(Token { kind: Tok::Imag(value), offset: off, text });
            } else {
                out.push(Token { kind: Tok::Real(value), offset: off, text });
            }
            continue;
        }
        if ch.is_alphabetic() || ch == '_' {
            let start = k;
            while k < chars.len() && (chars[k].1.is_alphanumeric() || chars[k].1 == '_') {
                k += 1;
            }
            let name: String = chars[start..k].iter().map(|&(_, c)| c).collect();
            out.push(Token { kind: Tok::Ident(name.clone()), offset: off, text: name });
            continue;
        }
        return Err(ExprError::Lexical { offset: off, ch });
    }
    Ok(out)
}

// ---- parser ----

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn offset(&self) -> usize {
        self.peek().map_or(self.end, |t| t.offset)
    }

    fn eat(&mut self, kind: &Tok) -> bool {
        if self.peek().is_some_and(|t| &t.kind == kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(&Tok::Plus) {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(&Tok::Minus) {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(&Tok::Star) {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(&Tok::Slash) {
                lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        if self.eat(&Tok::Minus) {
            return Ok(match self.unary()? {
                Node::Lit(c) => Node::Lit(-c),
                other => Node::Neg(Box::new(other)),
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let mut base = self.atom()?;
        while self.eat(&Tok::Caret) {
            let negative = self.eat(&Tok::Minus);
            let off = self.offset();
            let k = match self.peek() {
                Some(Token { kind: Tok::Real(_), text, .. }) if text.chars().all(|c| c.is_ascii_digit()) => {
                    text.parse::<i32>().map_err(|_| ExprError::BadNumber { offset: off })?
                }
                _ => {
                    return Err(ExprError::Syntax { offset: off, msg: "exponent must be an integer literal".into() })
                }
            };
            self.pos += 1;
            base = Node::Pow(Box::new(base), if negative { -k } else { k });
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        let off = self.offset();
        let Some(tok) = self.peek().cloned() else {
            return Err(ExprError::Syntax { offset: off, msg: "unexpected end of input".into() });
        };
        self.pos += 1;
        match tok.kind {
            Tok::Real(v) => Ok(Node::Lit(Complex64::new(v, 0.0))),
            Tok::Imag(v) => Ok(Node::Lit(Complex64::new(0.0, v))),
            Tok::LParen => {
                let inner = self.expr()?;
                if !self.eat(&Tok::RParen) {
                    return Err(ExprError::Unbalanced { offset: tok.offset });
                }
                Ok(inner)
            }
            Tok::RParen => Err(ExprError::Unbalanced { offset: tok.offset }),
            Tok::Ident(name) => match name.as_str() {
                "z" => Ok(Node::Z),
                "i" => Ok(Node::Lit(Complex64::new(0.0, 1.0))),
                "exp" | "conj" => {
                    let func = if name == "exp" { Func::Exp } else { Func::Conj };
                    let open = self.offset();
                    if !self.eat(&Tok::LParen) {
                        return Err(ExprError::Syntax { offset: open, msg: format!("expected '(' after {name}") });
                    }
                    let arg = self.expr()?;
                    if !self.eat(&Tok::RParen) {
                        return Err(ExprError::Unbalanced { offset: open });
                    }
                    Ok(Node::Call(func, Box::new(arg)))
                }
                _ => Err(ExprError::UnknownIdentifier { offset: tok.offset, name }),
            },
            _ => Err(ExprError::Syntax { offset: tok.offset, msg: format!("unexpected {:?}", tok.text) }),
        }
    }
}

// ---- polynomials ----

/// Dense polynomial in `z`, coefficients lowest degree first.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial(pub Vec<Complex64>);

impl Polynomial {
    pub fn constant(c: Complex64) -> Self {
        Polynomial(vec![c])
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.0.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = vec![Complex64::new(0.0, 0.0); self.0.len() + other.0.len() - 1];
        for (i, &a) in self.0.iter().enumerate() {
            for (j, &b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial(out)
    }

    fn add_scaled(&self, other: &Polynomial, s: f64) -> Polynomial {
        let n = self.0.len().max(other.0.len());
        let zero = Complex64::new(0.0, 0.0);
        Polynomial(
            (0..n)
                .map(|k| *self.0.get(k).unwrap_or(&zero) + s * *other.0.get(k).unwrap_or(&zero))
                .collect(),
        )
    }

    /// Antiderivative vanishing at the origin.
    pub fn antiderivative(&self) -> Polynomial {
        let mut out = vec![Complex64::new(0.0, 0.0)];
        out.extend(self.0.iter().enumerate().map(|(k, &c)| c / (k as f64 + 1.0)));
        Polynomial(out)
    }

    fn as_constant(&self) -> Option<Complex64> {
        self.0.iter().skip(1).all(|c| *c == Complex64::new(0.0, 0.0)).then_some(self.0[0])
    }
}

fn to_poly(n: &Node) -> Option<Polynomial> {
    let one = Complex64::new(1.0, 0.0);
    Some(match n {
        Node::Lit(c) => Polynomial::constant(*c),
        Node::Z => Polynomial(vec![Complex64::new(0.0, 0.0), one]),
        Node::Neg(a) => {
            let p = to_poly(a)?;
            Polynomial(p.0.into_iter().map(|c| -c).collect())
        }
        Node::Add(a, b) => to_poly(a)?.add_scaled(&to_poly(b)?, 1.0),
        Node::Sub(a, b) => to_poly(a)?.add_scaled(&to_poly(b)?, -1.0),
        Node::Mul(a, b) => to_poly(a)?.mul(&to_poly(b)?),
        Node::Div(a, b) => {
            let d = to_poly(b)?.as_constant()?;
            if d == Complex64::new(0.0, 0.0) {
                return None;
            }
            let p = to_poly(a)?;
            Polynomial(p.0.into_iter().map(|c| c / d).collect())
        }
        Node::Pow(a, k) => {
            let p = to_poly(a)?;
            if *k < 0 {
                let c = p.as_constant()?;
                if c == Complex64::new(0.0, 0.0) {
                    return None;
                }
                return Some(Polynomial::constant(c.powi(*k)));
            }
            (0..*k).fold(Polynomial::constant(one), |acc, _| acc.mul(&p))
        }
        Node::Call(func, a) => {
            let c = to_poly(a)?.as_constant()?;
            Polynomial::constant(match func {
                Func::Exp => c.exp(),
                Func::Conj => c.conj(),
            })
        }
    })
}
