//! A small expression language for one-variable maps.
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := factor (("*" | "/") factor)*
//! factor := "-" factor | power
//! power  := atom ("^" factor)?
//! atom   := number | ident | ident "(" expr ")" | "(" expr ")"
//! ```
//!
//! `x` is the free variable, `pi` is a constant, `sin cos exp log sqrt tanh`
//! are functions and every other identifier is a parameter that must be bound
//! when a [`MapSpec`] is built. Exponents may not depend on `x`.
//!
//! Evaluation is generic over [`Scalar`], implemented for `f64` and
//! [`Jet3`]; both follow the same operation order so the jet's value
//! component is bit-identical to plain evaluation.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::jet::{Elementary, Jet3};

pub type Params = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("illegal character {ch:?} at offset {offset}")]
    IllegalCharacter { offset: usize, ch: char },
    #[error("syntax error at offset {offset}: expected {expected}")]
    Syntax { offset: usize, expected: String },
    #[error("unknown function {name:?} at offset {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("exponent at offset {offset} depends on x")]
    NonConstantExponent { offset: usize },
    #[error("unbound parameter {0:?}")]
    UnboundParameter(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Token {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Mul,
    Div,
    Pow,
    LParen,
    RParen,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spanned {
    pub token: Token,
    pub offset: usize,
}

pub fn tokenize(source: &str) -> Result<Vec<Spanned>, ParseError> {
    let bytes = source.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let single = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Some(Token::Plus),
            b'-' => Some(Token::Minus),
            b'*' => Some(Token::Mul),
            b'/' => Some(Token::Div),
            b'^' => Some(Token::Pow),
            b'(' => Some(Token::LParen),
            b')' => Some(Token::RParen),
            _ => None,
        };
        if let Some(token) = single {
            out.push(Spanned { token, offset: start });
            i += 1;
            continue;
        }
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
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let value = source[start..i]
                .parse::<f64>()
                .map_err(|_| ParseError::Syntax { offset: start, expected: "number".into() })?;
            out.push(Spanned { token: Token::Num(value), offset: start });
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Spanned { token: Token::Ident(source[start..i].to_string()), offset: start });
            continue;
        }
        let ch = source[start..].chars().next().unwrap_or('\u{fffd}');
        return Err(ParseError::IllegalCharacter { offset: start, ch });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Ast {
    Const(f64),
    Var,
    Param(String),
    Neg(Box<Ast>),
    Binary(BinOp, Box<Ast>, Box<Ast>),
    Call(Elementary, Box<Ast>),
}

impl Ast {
    pub fn binary(op: BinOp, l: Ast, r: Ast) -> Ast {
        Ast::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn depends_on_x(&self) -> bool {
        match self {
            Ast::Var => true,
            Ast::Const(_) | Ast::Param(_) => false,
            Ast::Neg(a) | Ast::Call(_, a) => a.depends_on_x(),
            Ast::Binary(_, l, r) => l.depends_on_x() || r.depends_on_x(),
        }
    }

    /// Parameter names in first-appearance order, without duplicates.
    pub fn parameters(&self) -> Vec<&str> {
        fn walk<'a>(a: &'a Ast, out: &mut Vec<&'a str>) {
            match a {
                Ast::Param(p) => {
                    if !out.contains(&p.as_str()) {
                        out.push(p);
                    }
                }
                Ast::Const(_) | Ast::Var => {}
                Ast::Neg(a) | Ast::Call(_, a) => walk(a, out),
                Ast::Binary(_, l, r) => {
                    walk(l, out);
                    walk(r, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    /// Generic evaluation with parameters looked up by name.
    pub fn eval<S: Scalar>(&self, params: &Params, x: S) -> Result<S> {
        Ok(match self {
            Ast::Const(c) => S::constant(*c),
            Ast::Var => x,
            Ast::Param(p) => S::constant(lookup(params, p)?),
            Ast::Neg(a) => -a.eval(params, x)?,
            Ast::Binary(BinOp::Pow, base, exp) => {
                let k = exp.eval(params, f64::NAN)?;
                base.eval(params, x)?.pow_const(k)
            }
            Ast::Binary(op, l, r) => {
                let (l, r) = (l.eval(params, x)?, r.eval(params, x)?);
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => l / r,
                    BinOp::Pow => unreachable!(),
                }
            }
            Ast::Call(f, a) => a.eval(params, x)?.apply(*f),
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            Ast::Const(_) | Ast::Var | Ast::Param(_) | Ast::Call(..) => 5,
            Ast::Binary(BinOp::Pow, ..) => 4,
            Ast::Neg(_) => 3,
            Ast::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
            Ast::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
        }
    }

    fn write_min(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

fn lookup(params: &Params, name: &str) -> Result<f64> {
    params.get(name).copied().ok_or_else(|| ParseError::UnboundParameter(name.to_string()).into())
}

impl fmt::Display for Ast {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ast::Const(c) => write!(f, "{c}"),
            Ast::Var => f.write_str("x"),
            Ast::Param(p) => f.write_str(p),
            Ast::Neg(a) => {
                f.write_str("-")?;
                a.write_min(f, 3)
            }
            Ast::Call(func, a) => write!(f, "{}({a})", func.name()),
            Ast::Binary(op, l, r) => {
                let (lmin, rmin, sep) = match op {
                    BinOp::Add | BinOp::Sub => (1, 2, true),
                    BinOp::Mul | BinOp::Div => (2, 3, true),
                    BinOp::Pow => (5, 3, false),
                };
                l.write_min(f, lmin)?;
                if sep {
                    write!(f, " {} ", op.symbol())?;
                } else {
                    f.write_str(op.symbol())?;
                }
                r.write_min(f, rmin)
            }
        }
    }
}

pub fn parse(tokens: &[Spanned]) -> Result<Ast, ParseError> {
    let end = tokens.last().map_or(0, |t| t.offset + 1);
    let mut p = Parser { tokens, pos: 0, end };
    let ast = p.expr()?;
    if let Some(t) = p.peek() {
        return Err(ParseError::Syntax { offset: t.offset, expected: "operator or end of input".into() });
    }
    Ok(ast)
}

/// Tokenizes and parses in one step.
pub fn parse_str(source: &str) -> Result<Ast, ParseError> {
    parse(&tokenize(source)?)
}

struct Parser<'t> {
    tokens: &'t [Spanned],
    pos: usize,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Spanned> {
        self.tokens.get(self.pos)
    }

    fn offset(&self) -> usize {
        self.peek().map_or(self.end, |t| t.offset)
    }

    fn eat(&mut self, tok: &Token) -> bool {
        if self.peek().is_some_and(|t| &t.token == tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Ast, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat(&Token::Plus) {
                BinOp::Add
            } else if self.eat(&Token::Minus) {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            lhs = Ast::binary(op, lhs, self.term()?);
        }
    }

    fn term(&mut self) -> Result<Ast, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = if self.eat(&Token::Mul) {
                BinOp::Mul
            } else if self.eat(&Token::Div) {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            lhs = Ast::binary(op, lhs, self.factor()?);
        }
    }

    fn factor(&mut self) -> Result<Ast, ParseError> {
        if self.eat(&Token::Minus) {
            return Ok(Ast::Neg(Box::new(self.factor()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Ast, ParseError> {
        let base = self.atom()?;
        if self.eat(&Token::Pow) {
            let offset = self.offset();
            let exponent = self.factor()?;
            if exponent.depends_on_x() {
                return Err(ParseError::NonConstantExponent { offset });
            }
            return Ok(Ast::binary(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Ast, ParseError> {
        let offset = self.offset();
        let Some(tok) = self.peek().map(|t| t.token.clone()) else {
            return Err(ParseError::Syntax { offset, expected: "expression".into() });
        };
        self.pos += 1;
        match tok {
            Token::Num(v) => Ok(Ast::Const(v)),
            Token::Ident(name) => {
                if self.eat(&Token::LParen) {
                    let func = Elementary::from_name(&name).ok_or(ParseError::UnknownFunction { name, offset })?;
                    let arg = self.expr()?;
                    self.close_paren()?;
                    return Ok(Ast::Call(func, Box::new(arg)));
                }
                Ok(match name.as_str() {
                    "x" => Ast::Var,
                    "pi" => Ast::Const(std::f64::consts::PI),
                    _ => Ast::Param(name),
                })
            }
            Token::LParen => {
                let inner = self.expr()?;
                self.close_paren()?;
                Ok(inner)
            }
            _ => Err(ParseError::Syntax { offset, expected: "expression".into() }),
        }
    }

    fn close_paren(&mut self) -> Result<(), ParseError> {
        if self.eat(&Token::RParen) {
            Ok(())
        } else {
            Err(ParseError::Syntax { offset: self.offset(), expected: "')'".into() })
        }
    }
}

/// Number types the evaluator can run over.
pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn constant(c: f64) -> Self;
    fn pow_const(self, k: f64) -> Self;
    fn apply(self, f: Elementary) -> Self;
}

impl Scalar for f64 {
    fn constant(c: f64) -> Self {
        c
    }
    fn pow_const(self, k: f64) -> Self {
        self.powf(k)
    }
    fn apply(self, f: Elementary) -> Self {
        f.eval(self)
    }
}

impl Scalar for Jet3 {
    fn constant(c: f64) -> Self {
        Jet3::constant(c)
    }
    fn pow_const(self, k: f64) -> Self {
        Jet3::pow_const(self, k)
    }
    fn apply(self, f: Elementary) -> Self {
        Jet3::apply(self, f)
    }
}

/// Evaluates `ast` at a real point. Non-finite results are reported as
/// [`Error::NonFinite`].
pub fn eval_real(ast: &Ast, params: &Params, x: f64) -> Result<f64> {
    let v = ast.eval(params, x)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { x })
    }
}

/// Evaluates `ast` over a jet; a non-finite component is reported as
/// [`Error::NonFinite`].
pub fn eval_jet(ast: &Ast, params: &Params, j: Jet3) -> Result<Jet3> {
    let v = ast.eval(params, j)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { x: j.v0 })
    }
}

/// Expression tree with parameter values and exponents resolved.
#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    Var,
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Pow(Box<Node>, f64),
    Call(Elementary, Box<Node>),
}

impl Node {
    fn bind(ast: &Ast, params: &Params) -> Result<Node> {
        Ok(match ast {
            Ast::Const(c) => Node::Const(*c),
            Ast::Var => Node::Var,
            Ast::Param(p) => Node::Const(lookup(params, p)?),
            Ast::Neg(a) => Node::Neg(Box::new(Node::bind(a, params)?)),
            Ast::Binary(BinOp::Pow, b, e) => Node::Pow(Box::new(Node::bind(b, params)?), e.eval(params, f64::NAN)?),
            Ast::Binary(op, l, r) => Node::Bin(*op, Box::new(Node::bind(l, params)?), Box::new(Node::bind(r, params)?)),
            Ast::Call(f, a) => Node::Call(*f, Box::new(Node::bind(a, params)?)),
        })
    }

    fn substitute(&self, inner: &Node) -> Node {
        match self {
            Node::Var => inner.clone(),
            Node::Const(c) => Node::Const(*c),
            Node::Neg(a) => Node::Neg(Box::new(a.substitute(inner))),
            Node::Bin(op, l, r) => Node::Bin(*op, Box::new(l.substitute(inner)), Box::new(r.substitute(inner))),
            Node::Pow(b, k) => Node::Pow(Box::new(b.substitute(inner)), *k),
            Node::Call(f, a) => Node::Call(*f, Box::new(a.substitute(inner))),
        }
    }

    fn eval<S: Scalar>(&self, x: S) -> S {
        match self {
            Node::Const(c) => S::constant(*c),
            Node::Var => x,
            Node::Neg(a) => -a.eval(x),
            Node::Bin(op, l, r) => {
                let (l, r) = (l.eval(x), r.eval(x));
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => l / r,
                    BinOp::Pow => unreachable!("powers are bound as Node::Pow"),
                }
            }
            Node::Pow(b, k) => b.eval(x).pow_const(*k),
            Node::Call(f, a) => a.eval(x).apply(*f),
        }
    }
}

/// A map `f: I -> I` given by an expression, its parameter bindings and a
/// domain. Immutable once built.
#[derive(Debug, Clone)]
pub struct MapSpec {
    label: String,
    ast: Ast,
    params: Params,
    domain: Interval,
    node: Node,
}

impl MapSpec {
    pub fn new(ast: Ast, params: Params, domain: Interval) -> Result<Self> {
        let node = Node::bind(&ast, &params)?;
        Ok(MapSpec { label: ast.to_string(), ast, params, domain, node })
    }

    pub fn parse(source: &str, params: &[(&str, f64)], domain: Interval) -> Result<Self> {
        let ast = parse_str(source)?;
        let params = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        Self::new(ast, params, domain)
    }

    /// `h ∘ g` on the domain of `g`, evaluated through one substituted tree.
    pub fn compose(h: &MapSpec, g: &MapSpec) -> MapSpec {
        MapSpec {
            label: format!("({}) o ({})", h.label, g.label),
            ast: h.ast.clone(),
            params: h.params.clone(),
            domain: g.domain,
            node: h.node.substitute(&g.node),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn ast(&self) -> &Ast {
        &self.ast
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn domain(&self) -> &Interval {
        &self.domain
    }

    /// Raw evaluation; NaN and infinities propagate.
    pub fn value(&self, x: f64) -> f64 {
        self.node.eval(x)
    }

    pub fn jet(&self, j: Jet3) -> Jet3 {
        self.node.eval(j)
    }

    pub fn apply(&self, x: f64) -> Result<f64> {
        let y = self.value(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::NonFinite { x })
        }
    }

    /// Jet of `f` at `x`.
    pub fn jet_at(&self, x: f64) -> Result<Jet3> {
        let j = self.jet(Jet3::var(x));
        if j.is_finite() {
            Ok(j)
        } else {
            Err(Error::NonFinite { x })
        }
    }

    /// `f^n(x)`, failing if the orbit leaves the closure of the domain.
    pub fn iterate(&self, x: f64, n: usize) -> Result<f64> {
        let mut y = x;
        for step in 0..n {
            if !self.domain.contains_closure(y) {
                return Err(Error::Escaped { x: y, step });
            }
            y = self.apply(y)?;
        }
        Ok(y)
    }
}
