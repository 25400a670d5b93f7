//! Scalar expressions in the chart variables `x`, `y`, `p`.
//!
//! Expressions are immutable trees. They are printed in a canonical compact
//! form (see [`core::fmt::Display`]) that parses back to the same tree, and
//! they can be evaluated either to a plain number or to a [`Jet`] carrying
//! every partial derivative up to a requested order.

mod diff;
mod eval;
mod parse;
mod print;

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use core::fmt;

pub use eval::{evaluate, evaluate_jet};
pub use parse::parse_expression;

#[cfg(doc)]
use crate::jet::Jet;

/// Named parameter bindings.
pub type Params = BTreeMap<String, f64>;

/// A chart variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    X,
    Y,
    P,
}

impl Var {
    pub const ALL: [Var; 3] = [Var::X, Var::Y, Var::P];

    /// Position of the variable in multi-indices and coordinate triples.
    pub const fn slot(self) -> usize {
        match self {
            Var::X => 0,
            Var::Y => 1,
            Var::P => 2,
        }
    }

    pub const fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::P => "p",
        }
    }
}

/// Elementary functions of one argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
    Sign,
}

impl Func {
    pub const ALL: [Func; 8] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Abs,
        Func::Sign,
    ];

    pub const fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sign => "sign",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Param(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// A point `(x, y, p)` of the chart.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub p: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64, p: f64) -> Self {
        Self { x, y, p }
    }

    pub const fn coord(&self, var: Var) -> f64 {
        match var {
            Var::X => self.x,
            Var::Y => self.y,
            Var::P => self.p,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.p.is_finite()
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.p)
    }
}

impl From<[f64; 3]> for Point {
    fn from([x, y, p]: [f64; 3]) -> Self {
        Self { x, y, p }
    }
}

impl Expr {
    pub fn constant(c: f64) -> Self {
        Expr::Const(c)
    }

    pub fn var(v: Var) -> Self {
        Expr::Var(v)
    }

    pub fn param(name: impl Into<String>) -> Self {
        Expr::Param(name.into())
    }

    pub fn call(func: Func, arg: Expr) -> Self {
        Expr::Call(func, Box::new(arg))
    }

    fn binary(op: BinOp, a: Expr, b: Expr) -> Self {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    /// Sum with trivial constant folding.
    pub fn add(a: Expr, b: Expr) -> Self {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x + y),
            (Some(z), _) if z == 0.0 => b,
            (_, Some(z)) if z == 0.0 => a,
            _ => Self::binary(BinOp::Add, a, b),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Self {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x - y),
            (_, Some(z)) if z == 0.0 => a,
            (Some(z), _) if z == 0.0 => Expr::neg(b),
            _ => Self::binary(BinOp::Sub, a, b),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Self {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x * y),
            (Some(z), _) | (_, Some(z)) if z == 0.0 => Expr::Const(0.0),
            (Some(o), _) if o == 1.0 => b,
            (_, Some(o)) if o == 1.0 => a,
            _ => Self::binary(BinOp::Mul, a, b),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Self {
        match (a.as_const(), b.as_const()) {
            (Some(z), _) if z == 0.0 => Expr::Const(0.0),
            (_, Some(o)) if o == 1.0 => a,
            _ => Self::binary(BinOp::Div, a, b),
        }
    }

    pub fn pow(base: Expr, exponent: Expr) -> Self {
        match exponent.as_const() {
            Some(o) if o == 1.0 => base,
            Some(z) if z == 0.0 => Expr::Const(1.0),
            _ => Self::binary(BinOp::Pow, base, exponent),
        }
    }

    pub fn neg(a: Expr) -> Self {
        match a {
            Expr::Const(c) if c == 0.0 => Expr::Const(0.0),
            Expr::Neg(inner) => *inner,
            other => Expr::Neg(Box::new(other)),
        }
    }

    /// Unfolded binary node, exactly as the parser would build it.
    pub fn raw_binary(op: BinOp, a: Expr, b: Expr) -> Self {
        Self::binary(op, a, b)
    }

    /// Unfolded negation node.
    pub fn raw_neg(a: Expr) -> Self {
        Expr::Neg(Box::new(a))
    }

    /// Whether the expression references a chart variable.
    pub fn depends_on_chart(&self) -> bool {
        self.any_var(&|_| true)
    }

    pub fn depends_on(&self, var: Var) -> bool {
        self.any_var(&|v| v == var)
    }

    fn any_var(&self, pred: &dyn Fn(Var) -> bool) -> bool {
        match self {
            Expr::Const(_) | Expr::Param(_) => false,
            Expr::Var(v) => pred(*v),
            Expr::Neg(a) | Expr::Call(_, a) => a.any_var(pred),
            Expr::Binary(_, a, b) => a.any_var(pred) || b.any_var(pred),
        }
    }

    /// Names of all parameters referenced.
    pub fn params(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_params(&mut out);
        out
    }

    fn collect_params(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Param(name) => {
                out.insert(name.clone());
            }
            Expr::Const(_) | Expr::Var(_) => {}
            Expr::Neg(a) | Expr::Call(_, a) => a.collect_params(out),
            Expr::Binary(_, a, b) => {
                a.collect_params(out);
                b.collect_params(out);
            }
        }
    }

    /// Simultaneous substitution of chart variables. Variables for which
    /// `map` returns `None` are kept.
    pub fn substitute_vars(&self, map: &dyn Fn(Var) -> Option<Expr>) -> Expr {
        self.rebuild(&|leaf| match leaf {
            Expr::Var(v) => map(*v),
            _ => None,
        })
    }

    /// Replaces parameters by expressions; unknown names are kept.
    pub fn substitute_params(&self, map: &BTreeMap<String, Expr>) -> Expr {
        self.rebuild(&|leaf| match leaf {
            Expr::Param(name) => map.get(name).cloned(),
            _ => None,
        })
    }

    /// Replaces bound parameters by their numeric values.
    pub fn bind_params(&self, params: &Params) -> Expr {
        self.rebuild(&|leaf| match leaf {
            Expr::Param(name) => params.get(name).map(|v| Expr::Const(*v)),
            _ => None,
        })
    }

    fn rebuild(&self, leaf: &dyn Fn(&Expr) -> Option<Expr>) -> Expr {
        match self {
            Expr::Const(_) | Expr::Var(_) | Expr::Param(_) => {
                leaf(self).unwrap_or_else(|| self.clone())
            }
            Expr::Neg(a) => Expr::Neg(Box::new(a.rebuild(leaf))),
            Expr::Call(f, a) => Expr::Call(*f, Box::new(a.rebuild(leaf))),
            Expr::Binary(op, a, b) => {
                Expr::Binary(*op, Box::new(a.rebuild(leaf)), Box::new(b.rebuild(leaf)))
            }
        }
    }
}

impl From<f64> for Expr {
    fn from(c: f64) -> Self {
        Expr::Const(c)
    }
}

impl From<Var> for Expr {
    fn from(v: Var) -> Self {
        Expr::Var(v)
    }
}
