//! Closed-form expressions in `x, y, z` with symbolic differentiation.
//!
//! Grammar: `+ - * / ^`, unary minus, parentheses, numbers, the constant
//! `pi`, and `sin`, `cos`, `exp`. Exponents must be constant.

use std::fmt;

use crate::error::{Error, Result};
use crate::field::{check_order, ScalarField};
use crate::geom::Point3;
use crate::lattice::MultiIndex;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, f64),
    Call(Func, Box<Expr>),
}

use Expr::*;

fn num(e: &Expr) -> Option<f64> {
    match e {
        Num(v) => Some(*v),
        _ => None,
    }
}

// Smart constructors fold constants and drop identities so that repeated
// differentiation stays small.
fn add(a: Expr, b: Expr) -> Expr {
    match (num(&a), num(&b)) {
        (Some(x), Some(y)) => Num(x + y),
        (Some(x), _) if x == 0.0 => b,
        (_, Some(y)) if y == 0.0 => a,
        _ => Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (num(&a), num(&b)) {
        (Some(x), Some(y)) => Num(x - y),
        (Some(x), _) if x == 0.0 => neg(b),
        (_, Some(y)) if y == 0.0 => a,
        _ => Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (num(&a), num(&b)) {
        (Some(x), Some(y)) => Num(x * y),
        (Some(x), _) | (_, Some(x)) if x == 0.0 => Num(0.0),
        (Some(x), _) if x == 1.0 => b,
        (_, Some(y)) if y == 1.0 => a,
        _ => Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (num(&a), num(&b)) {
        (Some(x), Some(y)) => Num(x / y),
        (Some(x), _) if x == 0.0 => Num(0.0),
        (_, Some(y)) if y == 1.0 => a,
        _ => Div(Box::new(a), Box::new(b)),
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Num(v) => Num(-v),
        Neg(inner) => *inner,
        other => Neg(Box::new(other)),
    }
}

fn pow(a: Expr, e: f64) -> Expr {
    if e == 0.0 {
        return Num(1.0);
    }
    if e == 1.0 {
        return a;
    }
    match a {
        Num(v) => Num(v.powf(e)),
        other => Pow(Box::new(other), e),
    }
}

fn call(f: Func, a: Expr) -> Expr {
    match a {
        Num(v) => Num(f.apply(v)),
        other => Call(f, Box::new(other)),
    }
}

impl Func {
    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
        }
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let mut p = Parser {
            src: src.as_bytes(),
            pos: 0,
        };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos < p.src.len() {
            return Err(p.error(format!("unexpected '{}'", p.src[p.pos] as char)));
        }
        Ok(e)
    }

    pub fn eval(&self, p: &Point3) -> f64 {
        match self {
            Num(v) => *v,
            Var(i) => p[*i],
            Neg(a) => -a.eval(p),
            Add(a, b) => a.eval(p) + b.eval(p),
            Sub(a, b) => a.eval(p) - b.eval(p),
            Mul(a, b) => a.eval(p) * b.eval(p),
            Div(a, b) => a.eval(p) / b.eval(p),
            Pow(a, e) => pow_eval(a.eval(p), *e),
            Call(f, a) => f.apply(a.eval(p)),
        }
    }

    /// Symbolic derivative with respect to variable `axis`.
    pub fn diff(&self, axis: usize) -> Expr {
        match self {
            Num(_) => Num(0.0),
            Var(i) => Num(if *i == axis { 1.0 } else { 0.0 }),
            Neg(a) => neg(a.diff(axis)),
            Add(a, b) => add(a.diff(axis), b.diff(axis)),
            Sub(a, b) => sub(a.diff(axis), b.diff(axis)),
            Mul(a, b) => add(
                mul(a.diff(axis), (**b).clone()),
                mul((**a).clone(), b.diff(axis)),
            ),
            Div(a, b) => div(
                sub(
                    mul(a.diff(axis), (**b).clone()),
                    mul((**a).clone(), b.diff(axis)),
                ),
                pow((**b).clone(), 2.0),
            ),
            Pow(a, e) => mul(mul(Num(*e), pow((**a).clone(), e - 1.0)), a.diff(axis)),
            Call(f, a) => {
                let outer = match f {
                    Func::Sin => call(Func::Cos, (**a).clone()),
                    Func::Cos => neg(call(Func::Sin, (**a).clone())),
                    Func::Exp => self.clone(),
                };
                mul(outer, a.diff(axis))
            }
        }
    }

    pub fn derivative(&self, gamma: MultiIndex) -> Expr {
        let mut e = self.clone();
        for axis in 0..3 {
            for _ in 0..gamma.0[axis] {
                e = e.diff(axis);
            }
        }
        e
    }

    /// Replace each variable by an expression.
    pub fn substitute(&self, vars: &[Expr; 3]) -> Expr {
        match self {
            Num(v) => Num(*v),
            Var(i) => vars[*i].clone(),
            Neg(a) => neg(a.substitute(vars)),
            Add(a, b) => add(a.substitute(vars), b.substitute(vars)),
            Sub(a, b) => sub(a.substitute(vars), b.substitute(vars)),
            Mul(a, b) => mul(a.substitute(vars), b.substitute(vars)),
            Div(a, b) => div(a.substitute(vars), b.substitute(vars)),
            Pow(a, e) => pow(a.substitute(vars), *e),
            Call(f, a) => call(*f, a.substitute(vars)),
        }
    }

    pub fn compile(&self) -> Program {
        let mut ops = Vec::new();
        self.emit(&mut ops);
        Program { ops }
    }

    fn emit(&self, ops: &mut Vec<Op>) {
        match self {
            Num(v) => ops.push(Op::Push(*v)),
            Var(i) => ops.push(Op::Var(*i)),
            Neg(a) => {
                a.emit(ops);
                ops.push(Op::Neg);
            }
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) => {
                a.emit(ops);
                b.emit(ops);
                ops.push(match self {
                    Add(..) => Op::Add,
                    Sub(..) => Op::Sub,
                    Mul(..) => Op::Mul,
                    _ => Op::Div,
                });
            }
            Pow(a, e) => {
                a.emit(ops);
                ops.push(Op::Pow(*e));
            }
            Call(f, a) => {
                a.emit(ops);
                ops.push(Op::Call(*f));
            }
        }
    }
}

fn pow_eval(b: f64, e: f64) -> f64 {
    if e.fract() == 0.0 && e.abs() < 64.0 {
        b.powi(e as i32)
    } else {
        b.powf(e)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Num(v) => write!(f, "{v}"),
            Var(i) => write!(f, "{}", ["x", "y", "z"][*i]),
            Neg(a) => write!(f, "(-{a})"),
            Add(a, b) => write!(f, "({a} + {b})"),
            Sub(a, b) => write!(f, "({a} - {b})"),
            Mul(a, b) => write!(f, "({a} * {b})"),
            Div(a, b) => write!(f, "({a} / {b})"),
            Pow(a, e) => write!(f, "({a}^{e})"),
            Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Push(f64),
    Var(usize),
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Pow(f64),
    Call(Func),
}

/// Postfix form of an expression.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    ops: Vec<Op>,
}

impl Program {
    pub fn eval(&self, p: &Point3) -> f64 {
        let mut stack: Vec<f64> = Vec::with_capacity(16);
        for op in &self.ops {
            match *op {
                Op::Push(v) => stack.push(v),
                Op::Var(i) => stack.push(p[i]),
                Op::Neg => {
                    let a = stack.pop().unwrap();
                    stack.push(-a);
                }
                Op::Pow(e) => {
                    let a = stack.pop().unwrap();
                    stack.push(pow_eval(a, e));
                }
                Op::Call(f) => {
                    let a = stack.pop().unwrap();
                    stack.push(f.apply(a));
                }
                Op::Add | Op::Sub | Op::Mul | Op::Div => {
                    let b = stack.pop().unwrap();
                    let a = stack.pop().unwrap();
                    stack.push(match op {
                        Op::Add => a + b,
                        Op::Sub => a - b,
                        Op::Mul => a * b,
                        _ => a / b,
                    });
                }
            }
        }
        stack.pop().unwrap_or(0.0)
    }
}

/// Source line with a caret under byte offset `position`.
pub fn caret_diagnostic(src: &str, position: usize, message: &str) -> String {
    format!("{src}\n{}^ {message}", " ".repeat(position.min(src.len())))
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: impl Into<String>) -> Error {
        Error::ExpressionParse {
            position: self.pos,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if c == b'+' { add(lhs, rhs) } else { sub(lhs, rhs) };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if c == b'*' { mul(lhs, rhs) } else { div(lhs, rhs) };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(neg(self.unary()?))
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let at = self.pos;
            let exponent = self.unary()?;
            return match num(&exponent) {
                Some(e) => Ok(pow(base, e)),
                None => Err(Error::ExpressionParse {
                    position: at,
                    message: "exponent must be a constant".into(),
                }),
            };
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
                let func = match name {
                    "x" => return Ok(Var(0)),
                    "y" => return Ok(Var(1)),
                    "z" => return Ok(Var(2)),
                    "pi" => return Ok(Num(std::f64::consts::PI)),
                    "sin" => Func::Sin,
                    "cos" => Func::Cos,
                    "exp" => Func::Exp,
                    _ => {
                        return Err(Error::ExpressionParse {
                            position: start,
                            message: format!("unknown identifier '{name}'"),
                        })
                    }
                };
                if self.peek() != Some(b'(') {
                    return Err(self.error(format!("expected '(' after {name}")));
                }
                self.pos += 1;
                let arg = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(call(func, arg))
            }
            Some(c) => Err(self.error(format!("unexpected '{}'", c as char))),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let s = self.src;
        let digits = |p: &mut usize| {
            while *p < s.len() && s[*p].is_ascii_digit() {
                *p += 1;
            }
        };
        digits(&mut self.pos);
        if self.pos < s.len() && s[self.pos] == b'.' {
            self.pos += 1;
            digits(&mut self.pos);
        }
        if self.pos < s.len() && (s[self.pos] == b'e' || s[self.pos] == b'E') {
            let mut p = self.pos + 1;
            if p < s.len() && (s[p] == b'+' || s[p] == b'-') {
                p += 1;
            }
            if p < s.len() && s[p].is_ascii_digit() {
                self.pos = p;
                digits(&mut self.pos);
            }
        }
        let text = std::str::from_utf8(&s[start..self.pos]).unwrap_or("");
        text.parse::<f64>().map(Num).map_err(|_| Error::ExpressionParse {
            position: start,
            message: format!("malformed number '{text}'"),
        })
    }
}

/// Field defined by an expression, with derivatives compiled up to `order`.
#[derive(Debug, Clone)]
pub struct ExprField {
    source: String,
    order: usize,
    programs: Vec<(MultiIndex, Program)>,
}

impl ExprField {
    pub fn parse(src: &str, order: usize) -> Result<Self> {
        Ok(Self::from_expr(src.to_string(), Expr::parse(src)?, order))
    }

    pub fn from_expr(source: String, e: Expr, order: usize) -> Self {
        let indices = MultiIndex::all_up_to(order);
        let mut exprs: Vec<(MultiIndex, Expr)> = Vec::with_capacity(indices.len());
        for g in indices {
            let d = if g.order() == 0 {
                e.clone()
            } else {
                // Differentiate the already-built parent to share work.
                let axis = (0..3).rev().find(|&i| g.0[i] > 0).unwrap();
                let parent = g.checked_sub(&MultiIndex::unit(axis)).unwrap();
                let pe = &exprs.iter().find(|(m, _)| *m == parent).unwrap().1;
                pe.diff(axis)
            };
            exprs.push((g, d));
        }
        ExprField {
            source,
            order,
            programs: exprs.into_iter().map(|(g, e)| (g, e.compile())).collect(),
        }
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

impl ScalarField for ExprField {
    fn order(&self) -> usize {
        self.order
    }

    fn eval(&self, p: &Point3) -> f64 {
        self.programs[0].1.eval(p)
    }

    fn partial(&self, gamma: MultiIndex, p: &Point3) -> Result<f64> {
        check_order(gamma.order(), self.order)?;
        let prog = self
            .programs
            .iter()
            .find(|(g, _)| *g == gamma)
            .map(|(_, prog)| prog)
            .ok_or(Error::DerivativeUnavailable {
                requested: gamma.order(),
                available: self.order,
            })?;
        Ok(prog.eval(p))
    }
}
