//! Arithmetic expressions for user-supplied nonlinearities, boundary data and
//! bound functions.
//!
//! Grammar (whitespace-insensitive, `#` starts a comment to end of line):
//!
//! ```text
//! expr   := term (("+"|"-") term)*
//! term   := factor (("*"|"/") factor)*
//! factor := "-" factor | power
//! power  := atom ("^" factor)?
//! atom   := NUMBER | IDENT | IDENT "(" expr ("," expr)* ")" | "(" expr ")"
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-x^2`
//! is `-(x^2)`.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::error::{Error, Result};
use crate::exec::Execution;

const MAX_DEPTH: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
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

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
    Tanh,
    Min,
    Max,
}

impl Func {
    pub const ALL: [Func; 10] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Abs,
        Func::Tanh,
        Func::Min,
        Func::Max,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Tanh => "tanh",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }

    fn lookup(name: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constant {
    Pi,
    E,
}

impl Constant {
    pub fn value(self) -> f64 {
        match self {
            Constant::Pi => std::f64::consts::PI,
            Constant::E => std::f64::consts::E,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Constant::Pi => "pi",
            Constant::E => "e",
        }
    }
}

/// Syntax tree node. Variables carry the slot of their name in the declared
/// variable list.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Const(Constant),
    Var { name: String, slot: usize },
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

impl fmt::Display for Node {
    /// Fully parenthesized form; re-parsing it yields the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Num(v) => write!(f, "{v}"),
            Node::Const(c) => f.write_str(c.name()),
            Node::Var { name, .. } => f.write_str(name),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Node::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown identifier `{name}` at {pos}")]
    UnknownIdentifier { pos: usize, name: String },
    #[error("`{name}` at {pos} takes {expected} argument(s), got {found}")]
    Arity { pos: usize, name: String, expected: usize, found: usize },
}

impl ParseError {
    pub fn pos(&self) -> usize {
        match self {
            ParseError::Syntax { pos, .. }
            | ParseError::UnknownIdentifier { pos, .. }
            | ParseError::Arity { pos, .. } => *pos,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error in `{node}`: {detail}")]
    Domain { node: String, detail: String },
    #[error("no binding for variable `{name}`")]
    MissingBinding { name: String },
}

/// A parsed expression together with its declared variable list.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    vars: Vec<String>,
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

impl Expr {
    /// Parses `source`, accepting only identifiers from `variables` (plus the
    /// constants `pi`, `e` and the built-in functions).
    pub fn parse(source: &str, variables: &[&str]) -> std::result::Result<Expr, ParseError> {
        let tokens = lex(source)?;
        let mut p = Parser { tokens, at: 0, vars: variables, depth: 0 };
        let root = p.expr()?;
        match p.peek() {
            Tok { kind: TokKind::End, .. } => {}
            t => {
                return Err(ParseError::Syntax { pos: t.pos, message: format!("unexpected {}", t.kind) });
            }
        }
        Ok(Expr { root, vars: variables.iter().map(|s| s.to_string()).collect() })
    }

    /// Wraps an already-built tree. Variable slots must index `variables`.
    pub fn from_node(root: Node, variables: &[&str]) -> Expr {
        Expr { root, vars: variables.iter().map(|s| s.to_string()).collect() }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    /// Evaluates with `args[k]` bound to the `k`-th declared variable.
    pub fn eval(&self, args: &[f64]) -> std::result::Result<f64, EvalError> {
        eval_node(&self.root, args)
    }

    /// Evaluates with bindings looked up by name.
    pub fn eval_map(&self, bindings: &HashMap<&str, f64>) -> std::result::Result<f64, EvalError> {
        let mut args = Vec::with_capacity(self.vars.len());
        for name in &self.vars {
            // only variables the tree references must be bound
            match bindings.get(name.as_str()) {
                Some(v) => args.push(*v),
                None if self.references(name) => return Err(EvalError::MissingBinding { name: name.clone() }),
                None => args.push(f64::NAN),
            }
        }
        self.eval(&args)
    }

    /// Whether the tree mentions variable `name`.
    pub fn references(&self, name: &str) -> bool {
        fn walk(n: &Node, name: &str) -> bool {
            match n {
                Node::Var { name: v, .. } => v == name,
                Node::Num(_) | Node::Const(_) => false,
                Node::Neg(a) => walk(a, name),
                Node::Bin(_, a, b) => walk(a, name) || walk(b, name),
                Node::Call(_, args) => args.iter().any(|a| walk(a, name)),
            }
        }
        walk(&self.root, name)
    }
}

fn domain(node: &Node, detail: impl Into<String>) -> EvalError {
    EvalError::Domain { node: node.to_string(), detail: detail.into() }
}

fn eval_node(node: &Node, args: &[f64]) -> std::result::Result<f64, EvalError> {
    let v = match node {
        Node::Num(v) => *v,
        Node::Const(c) => c.value(),
        Node::Var { name, slot } => match args.get(*slot) {
            Some(v) => *v,
            None => return Err(EvalError::MissingBinding { name: name.clone() }),
        },
        Node::Neg(a) => -eval_node(a, args)?,
        Node::Bin(op, a, b) => {
            let x = eval_node(a, args)?;
            let y = eval_node(b, args)?;
            match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div => {
                    if y == 0.0 {
                        return Err(domain(node, "division by zero"));
                    }
                    x / y
                }
                BinOp::Pow => x.powf(y),
            }
        }
        Node::Call(func, fargs) => {
            let x = eval_node(&fargs[0], args)?;
            match func {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Tan => x.tan(),
                Func::Exp => x.exp(),
                Func::Log => {
                    if x <= 0.0 {
                        return Err(domain(node, format!("log of non-positive {x}")));
                    }
                    x.ln()
                }
                Func::Sqrt => {
                    if x < 0.0 {
                        return Err(domain(node, format!("sqrt of negative {x}")));
                    }
                    x.sqrt()
                }
                Func::Abs => x.abs(),
                Func::Tanh => x.tanh(),
                Func::Min => x.min(eval_node(&fargs[1], args)?),
                Func::Max => x.max(eval_node(&fargs[1], args)?),
            }
        }
    };
    if v.is_finite() {
        Ok(v)
    } else if let Node::Var { .. } = node {
        Ok(v)
    } else {
        Err(domain(node, format!("non-finite result {v}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokKind {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

impl fmt::Display for TokKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokKind::Num(v) => write!(f, "number {v}"),
            TokKind::Ident(s) => write!(f, "identifier `{s}`"),
            TokKind::Plus => f.write_str("`+`"),
            TokKind::Minus => f.write_str("`-`"),
            TokKind::Star => f.write_str("`*`"),
            TokKind::Slash => f.write_str("`/`"),
            TokKind::Caret => f.write_str("`^`"),
            TokKind::LParen => f.write_str("`(`"),
            TokKind::RParen => f.write_str("`)`"),
            TokKind::Comma => f.write_str("`,`"),
            TokKind::End => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Tok {
    kind: TokKind,
    pos: usize,
}

fn lex(src: &str) -> std::result::Result<Vec<Tok>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let kind = match c {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
                continue;
            }
            b'#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
                continue;
            }
            b'+' => TokKind::Plus,
            b'-' => TokKind::Minus,
            b'*' => TokKind::Star,
            b'/' => TokKind::Slash,
            b'^' => TokKind::Caret,
            b'(' => TokKind::LParen,
            b')' => TokKind::RParen,
            b',' => TokKind::Comma,
            b'0'..=b'9' | b'.' => {
                let mut j = i;
                let mut digits = 0;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                    digits += 1;
                }
                if j < bytes.len() && bytes[j] == b'.' {
                    j += 1;
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                        digits += 1;
                    }
                }
                if digits == 0 {
                    return Err(ParseError::Syntax { pos: start, message: "malformed number".into() });
                }
                if j < bytes.len() && (bytes[j] == b'e' || bytes[j] == b'E') {
                    let mut k = j + 1;
                    if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                        k += 1;
                    }
                    if k < bytes.len() && bytes[k].is_ascii_digit() {
                        while k < bytes.len() && bytes[k].is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                }
                let text = &src[start..j];
                let value: f64 = text
                    .parse()
                    .map_err(|_| ParseError::Syntax { pos: start, message: format!("malformed number `{text}`") })?;
                if !value.is_finite() {
                    return Err(ParseError::Syntax { pos: start, message: format!("number `{text}` overflows") });
                }
                out.push(Tok { kind: TokKind::Num(value), pos: start });
                i = j;
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let mut j = i;
                while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                    j += 1;
                }
                out.push(Tok { kind: TokKind::Ident(src[start..j].to_string()), pos: start });
                i = j;
                continue;
            }
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax { pos: start, message: format!("unexpected character {ch:?}") });
            }
        };
        out.push(Tok { kind, pos: start });
        i += 1;
    }
    out.push(Tok { kind: TokKind::End, pos: src.len() });
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Tok>,
    at: usize,
    vars: &'a [&'a str],
    depth: usize,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.at]
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.at].clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, kind: TokKind) -> std::result::Result<(), ParseError> {
        let t = self.peek();
        if t.kind == kind {
            self.bump();
            Ok(())
        } else {
            Err(ParseError::Syntax { pos: t.pos, message: format!("expected {kind}, found {}", t.kind) })
        }
    }

    fn enter(&mut self) -> std::result::Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(ParseError::Syntax { pos: self.peek().pos, message: "expression nested too deeply".into() });
        }
        Ok(())
    }

    fn expr(&mut self) -> std::result::Result<Node, ParseError> {
        self.enter()?;
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().kind {
                TokKind::Plus => BinOp::Add,
                TokKind::Minus => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> std::result::Result<Node, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek().kind {
                TokKind::Star => BinOp::Mul,
                TokKind::Slash => BinOp::Div,
                _ => break,
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> std::result::Result<Node, ParseError> {
        self.enter()?;
        let node = if self.peek().kind == TokKind::Minus {
            self.bump();
            Node::Neg(Box::new(self.factor()?))
        } else {
            self.power()?
        };
        self.depth -= 1;
        Ok(node)
    }

    fn power(&mut self) -> std::result::Result<Node, ParseError> {
        let base = self.atom()?;
        if self.peek().kind == TokKind::Caret {
            self.bump();
            let exp = self.factor()?;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> std::result::Result<Node, ParseError> {
        let t = self.bump();
        match t.kind {
            TokKind::Num(v) => Ok(Node::Num(v)),
            TokKind::LParen => {
                let e = self.expr()?;
                self.expect(TokKind::RParen)?;
                Ok(e)
            }
            TokKind::Ident(name) => {
                if self.peek().kind == TokKind::LParen {
                    let func = Func::lookup(&name)
                        .ok_or_else(|| ParseError::UnknownIdentifier { pos: t.pos, name: name.clone() })?;
                    self.bump();
                    let mut args = vec![self.expr()?];
                    while self.peek().kind == TokKind::Comma {
                        self.bump();
                        args.push(self.expr()?);
                    }
                    self.expect(TokKind::RParen)?;
                    if args.len() != func.arity() {
                        return Err(ParseError::Arity { pos: t.pos, name, expected: func.arity(), found: args.len() });
                    }
                    return Ok(Node::Call(func, args));
                }
                if let Some(slot) = self.vars.iter().position(|v| *v == name) {
                    return Ok(Node::Var { name, slot });
                }
                match name.as_str() {
                    "pi" => Ok(Node::Const(Constant::Pi)),
                    "e" => Ok(Node::Const(Constant::E)),
                    _ if Func::lookup(&name).is_some() => Err(ParseError::Syntax {
                        pos: self.peek().pos,
                        message: format!("expected `(` after function `{name}`"),
                    }),
                    _ => Err(ParseError::UnknownIdentifier { pos: t.pos, name }),
                }
            }
            other => Err(ParseError::Syntax { pos: t.pos, message: format!("unexpected {other}") }),
        }
    }
}

/// One sampled failure of `f(t, x, y1) >= f(t, x, y2)` for `y1 < y2`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneViolation {
    pub t: f64,
    pub x: f64,
    pub y1: f64,
    pub y2: f64,
    pub f1: f64,
    pub f2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneReport {
    pub pairs_checked: usize,
    pub violation_count: usize,
    /// The first few witnesses, in sampling order.
    pub witnesses: Vec<MonotoneViolation>,
}

impl MonotoneReport {
    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }
}

const MAX_WITNESSES: usize = 16;
const MONOTONE_SLACK: f64 = 1e-12;

fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count).map(|k| lo + (hi - lo) * (k as f64) / ((count - 1) as f64)).collect()
}

/// Samples `f(t, x, ·)` on a lattice and reports every pair `y1 < y2` where
/// `f(t, x, y1) < f(t, x, y2) - 1e-12`. `f` must be declared over `t, x, y`
/// in that order.
pub fn sample_nonincreasing_in_y(
    f: &Expr,
    t_values: &[f64],
    x_range: (f64, f64),
    y_range: (f64, f64),
    samples: usize,
    exec: Execution,
) -> Result<MonotoneReport> {
    if samples < 2 {
        return Err(Error::InvalidOption(format!("monotonicity sampling needs at least 2 samples, got {samples}")));
    }
    if !(x_range.0 < x_range.1) || !(y_range.0 < y_range.1) {
        return Err(Error::InvalidOption("monotonicity sampling ranges must be non-degenerate".into()));
    }
    let xs = linspace(x_range.0, x_range.1, samples);
    let ys = linspace(y_range.0, y_range.1, samples);
    let per_t = exec.map_range(t_values.len(), |k| -> Result<MonotoneReport> {
        let t = t_values[k];
        let mut report = MonotoneReport { pairs_checked: 0, violation_count: 0, witnesses: Vec::new() };
        let mut fy = vec![0.0; ys.len()];
        for &x in &xs {
            for (slot, &y) in fy.iter_mut().zip(&ys) {
                *slot = f.eval(&[t, x, y]).map_err(|source| Error::FEval { index: k, t, x, y, source })?;
            }
            for a in 0..ys.len() {
                for b in a + 1..ys.len() {
                    report.pairs_checked += 1;
                    if fy[a] < fy[b] - MONOTONE_SLACK {
                        report.violation_count += 1;
                        if report.witnesses.len() < MAX_WITNESSES {
                            report.witnesses.push(MonotoneViolation {
                                t,
                                x,
                                y1: ys[a],
                                y2: ys[b],
                                f1: fy[a],
                                f2: fy[b],
                            });
                        }
                    }
                }
            }
        }
        Ok(report)
    });
    let mut total = MonotoneReport { pairs_checked: 0, violation_count: 0, witnesses: Vec::new() };
    for r in per_t {
        let r = r?;
        total.pairs_checked += r.pairs_checked;
        total.violation_count += r.violation_count;
        for w in r.witnesses {
            if total.witnesses.len() < MAX_WITNESSES {
                total.witnesses.push(w);
            }
        }
    }
    Ok(total)
}
