//! Scalar expression language for user-supplied functions.
//!
//! Expressions are parsed once into an immutable tree and evaluated either
//! on plain reals ([`Expr::eval`]) or on [`DualValue`]s, which carry the
//! first derivative with respect to one seed variable ([`Expr::eval_d`]).
//! Evaluation never yields a silent NaN: every operation that leaves the
//! real numbers (negative square root, non-positive logarithm, division by
//! zero, negative base with a non-integer exponent, overflow) is reported
//! as [`ExprError::Domain`] naming the offending subexpression.

mod dual;
mod parse;

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use thiserror::Error;

pub use dual::DualValue;
use dual::real_pow;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: found {found}, expected one of {}", expected.join(", "))]
    Syntax { offset: usize, found: String, expected: Vec<String> },

    #[error("unknown function '{name}' at byte {offset}")]
    UnknownFunction { name: String, offset: usize },

    #[error("variable '{0}' has no binding")]
    UnboundVariable(String),

    #[error("domain error in '{subexpr}': {reason}")]
    Domain { subexpr: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum BinOp {
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
pub(crate) enum Func {
    Sqrt,
    Sin,
    Cos,
    Ln,
    Exp,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "ln" => Func::Ln,
            "exp" => Func::Exp,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Ln => "ln",
            Func::Exp => "exp",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Node {
    Num(f64),
    /// Index into the owning expression's `free_vars`.
    Var(usize),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// A parsed expression over named free variables.
///
/// `free_vars` lists each variable once, in order of first appearance.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    free_vars: Vec<String>,
}

/// Parse `source` into an [`Expr`].
pub fn parse(source: &str) -> Result<Expr, ExprError> {
    Expr::parse(source)
}

impl Expr {
    pub fn parse(source: &str) -> Result<Expr, ExprError> {
        let mut parser = parse::Parser::new(source)?;
        let root = parser.parse_all()?;
        Ok(Expr { root, free_vars: parser.vars })
    }

    pub fn free_vars(&self) -> &[String] {
        &self.free_vars
    }

    /// Evaluate with a name → value binding list.
    pub fn eval(&self, bindings: &[(&str, f64)]) -> Result<f64, ExprError> {
        let values = self.lookup(bindings)?;
        eval_node(&self.root, &|i| values[i], &self.free_vars)
    }

    /// Evaluate value and derivative with respect to `seed`.
    ///
    /// A seed that does not occur in the expression has derivative zero.
    pub fn eval_d(&self, bindings: &[(&str, f64)], seed: &str) -> Result<DualValue, ExprError> {
        let values = self.lookup(bindings)?;
        let seed_idx = self.free_vars.iter().position(|v| v == seed);
        let var = |i: usize| {
            if Some(i) == seed_idx {
                DualValue::variable(values[i])
            } else {
                DualValue::constant(values[i])
            }
        };
        eval_node(&self.root, &var, &self.free_vars)
    }

    /// Fix a positional argument order so the expression can be evaluated
    /// from a slice without name lookups. Every free variable must appear
    /// in `order`; extra names are allowed.
    pub fn bind(&self, order: &[&str]) -> Result<BoundExpr, ExprError> {
        let slots = self
            .free_vars
            .iter()
            .map(|v| {
                order
                    .iter()
                    .position(|o| o == v)
                    .ok_or_else(|| ExprError::UnboundVariable(v.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(BoundExpr { expr: Arc::new(self.clone()), slots, arity: order.len() })
    }

    fn lookup(&self, bindings: &[(&str, f64)]) -> Result<Vec<f64>, ExprError> {
        self.free_vars
            .iter()
            .map(|v| {
                bindings
                    .iter()
                    .find(|(name, _)| name == v)
                    .map(|&(_, x)| x)
                    .ok_or_else(|| ExprError::UnboundVariable(v.clone()))
            })
            .collect()
    }
}

impl fmt::Display for Expr {
    /// Fully parenthesised form; parsing it back yields an identical tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(&self.root, &self.free_vars, f)
    }
}

impl std::str::FromStr for Expr {
    type Err = ExprError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expr::parse(s)
    }
}

/// An [`Expr`] with a fixed positional argument order.
#[derive(Debug, Clone)]
pub struct BoundExpr {
    expr: Arc<Expr>,
    slots: Vec<usize>,
    arity: usize,
}

impl BoundExpr {
    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn eval(&self, args: &[f64]) -> Result<f64, ExprError> {
        debug_assert_eq!(args.len(), self.arity);
        eval_node(&self.expr.root, &|i| args[self.slots[i]], &self.expr.free_vars)
    }

    /// Value and derivative with respect to argument position `seed`.
    pub fn eval_d(&self, args: &[f64], seed: usize) -> Result<DualValue, ExprError> {
        debug_assert_eq!(args.len(), self.arity);
        let var = |i: usize| {
            let slot = self.slots[i];
            if slot == seed {
                DualValue::variable(args[slot])
            } else {
                DualValue::constant(args[slot])
            }
        };
        eval_node(&self.expr.root, &var, &self.expr.free_vars)
    }
}

trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn lift(v: f64) -> Self;
    fn val(&self) -> f64;
    fn finite(&self) -> bool;
    fn apply(self, func: Func) -> Self;
    fn pow(self, rhs: Self) -> Self;
    fn is_const(&self) -> bool;
}

impl Scalar for f64 {
    fn lift(v: f64) -> Self {
        v
    }
    fn val(&self) -> f64 {
        *self
    }
    fn finite(&self) -> bool {
        self.is_finite()
    }
    fn apply(self, func: Func) -> Self {
        match func {
            Func::Sqrt => self.sqrt(),
            Func::Sin => self.sin(),
            Func::Cos => self.cos(),
            Func::Ln => self.ln(),
            Func::Exp => self.exp(),
        }
    }
    fn pow(self, rhs: Self) -> Self {
        real_pow(self, rhs)
    }
    fn is_const(&self) -> bool {
        true
    }
}

impl Scalar for DualValue {
    fn lift(v: f64) -> Self {
        DualValue::constant(v)
    }
    fn val(&self) -> f64 {
        self.value
    }
    fn finite(&self) -> bool {
        self.is_finite()
    }
    fn apply(self, func: Func) -> Self {
        match func {
            Func::Sqrt => self.sqrt(),
            Func::Sin => self.sin(),
            Func::Cos => self.cos(),
            Func::Ln => self.ln(),
            Func::Exp => self.exp(),
        }
    }
    fn pow(self, rhs: Self) -> Self {
        DualValue::pow(self, rhs)
    }
    fn is_const(&self) -> bool {
        self.derivative == 0.0
    }
}

fn domain(node: &Node, names: &[String], reason: &str) -> ExprError {
    ExprError::Domain { subexpr: NodeDisplay(node, names).to_string(), reason: reason.to_string() }
}

fn eval_node<S: Scalar>(node: &Node, var: &impl Fn(usize) -> S, names: &[String]) -> Result<S, ExprError> {
    let out = match node {
        Node::Num(v) => return Ok(S::lift(*v)),
        Node::Var(i) => var(*i),
        Node::Neg(inner) => -eval_node(inner, var, names)?,
        Node::Binary(op, l, r) => {
            let lhs = eval_node(l, var, names)?;
            let rhs = eval_node(r, var, names)?;
            match op {
                BinOp::Add => lhs + rhs,
                BinOp::Sub => lhs - rhs,
                BinOp::Mul => lhs * rhs,
                BinOp::Div => {
                    if rhs.val() == 0.0 {
                        return Err(domain(node, names, "division by zero"));
                    }
                    lhs / rhs
                }
                BinOp::Pow => {
                    let (b, e) = (lhs.val(), rhs.val());
                    if b < 0.0 && (e.fract() != 0.0 || !rhs.is_const()) {
                        return Err(domain(node, names, "negative base with non-integer exponent"));
                    }
                    if b == 0.0 && e < 0.0 {
                        return Err(domain(node, names, "zero raised to a negative power"));
                    }
                    lhs.pow(rhs)
                }
            }
        }
        Node::Call(func, arg) => {
            let x = eval_node(arg, var, names)?;
            match func {
                Func::Sqrt if x.val() < 0.0 => {
                    return Err(domain(node, names, "square root of a negative number"))
                }
                Func::Ln if x.val() <= 0.0 => {
                    return Err(domain(node, names, "logarithm of a non-positive number"))
                }
                _ => x.apply(*func),
            }
        }
    };
    if !out.finite() {
        return Err(domain(node, names, "non-finite result"));
    }
    Ok(out)
}

struct NodeDisplay<'a>(&'a Node, &'a [String]);

impl fmt::Display for NodeDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(self.0, self.1, f)
    }
}

fn write_node(node: &Node, names: &[String], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match node {
        Node::Num(v) => write!(f, "{v}"),
        Node::Var(i) => f.write_str(&names[*i]),
        Node::Neg(inner) => {
            f.write_str("(-")?;
            write_node(inner, names, f)?;
            f.write_str(")")
        }
        Node::Binary(op, l, r) => {
            f.write_str("(")?;
            write_node(l, names, f)?;
            write!(f, " {} ", op.symbol())?;
            write_node(r, names, f)?;
            f.write_str(")")
        }
        Node::Call(func, arg) => {
            write!(f, "{}(", func.name())?;
            write_node(arg, names, f)?;
            f.write_str(")")
        }
    }
}
