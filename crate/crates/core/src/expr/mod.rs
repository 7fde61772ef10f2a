//! A small expression language over time (and, for vector fields and
//! equation right-hand sides, over `x` and `xdot`) with exact symbolic
//! differentiation.
//!
//! Expressions are immutable trees with shared subtrees, so derivative
//! expressions can be built repeatedly without copying their parents.

mod parse;
mod timefn;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub use parse::{parse_expression, parse_with_vars, GRAMMAR};
pub use timefn::TimeFunction;

/// Independent variables an expression may reference.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    T,
    X,
    Xdot,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::T => "t",
            Var::X => "x",
            Var::Xdot => "xdot",
        }
    }

    fn index(self) -> usize {
        match self {
            Var::T => 0,
            Var::X => 1,
            Var::Xdot => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl UnaryOp {
    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sqrt => "sqrt",
        }
    }

    pub(crate) fn from_name(name: &str) -> Option<UnaryOp> {
        Some(match name {
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            "exp" => UnaryOp::Exp,
            "log" => UnaryOp::Log,
            "sqrt" => UnaryOp::Sqrt,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    pub fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
            BinaryOp::Pow => '^',
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Unary(UnaryOp, Arc<Expr>),
    Binary(BinaryOp, Arc<Expr>, Arc<Expr>),
}

/// Values of `(t, x, xdot)` at which an expression is evaluated.
pub type Point = [f64; 3];

impl Expr {
    pub fn t() -> Expr {
        Expr::Var(Var::T)
    }

    pub fn x() -> Expr {
        Expr::Var(Var::X)
    }

    pub fn xdot() -> Expr {
        Expr::Var(Var::Xdot)
    }

    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    fn is_const(&self, c: f64) -> bool {
        self.as_const() == Some(c)
    }

    /// Raw node constructors; no folding. The parser uses these so that a
    /// parse reproduces the source structure.
    pub(crate) fn unary_raw(op: UnaryOp, a: Expr) -> Expr {
        Expr::Unary(op, Arc::new(a))
    }

    pub(crate) fn binary_raw(op: BinaryOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Arc::new(a), Arc::new(b))
    }

    // Folding constructors. Identity elements are dropped and constant
    // subtrees are collapsed when the result is a finite number.

    fn fold(op: BinaryOp, a: &Expr, b: &Expr) -> Option<Expr> {
        let (x, y) = (a.as_const()?, b.as_const()?);
        let v = apply_binary(op, x, y).ok()?;
        Some(Expr::Const(v))
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        if let Some(e) = Expr::fold(BinaryOp::Add, &a, &b) {
            return e;
        }
        if a.is_const(0.0) {
            return b;
        }
        if b.is_const(0.0) {
            return a;
        }
        Expr::binary_raw(BinaryOp::Add, a, b)
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        if let Some(e) = Expr::fold(BinaryOp::Sub, &a, &b) {
            return e;
        }
        if b.is_const(0.0) {
            return a;
        }
        if a.is_const(0.0) {
            return Expr::neg(b);
        }
        Expr::binary_raw(BinaryOp::Sub, a, b)
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        if let Some(e) = Expr::fold(BinaryOp::Mul, &a, &b) {
            return e;
        }
        if a.is_const(0.0) || b.is_const(0.0) {
            return Expr::Const(0.0);
        }
        if a.is_const(1.0) {
            return b;
        }
        if b.is_const(1.0) {
            return a;
        }
        Expr::binary_raw(BinaryOp::Mul, a, b)
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        if let Some(e) = Expr::fold(BinaryOp::Div, &a, &b) {
            return e;
        }
        if b.is_const(1.0) {
            return a;
        }
        if a.is_const(0.0) && !b.is_const(0.0) {
            return Expr::Const(0.0);
        }
        Expr::binary_raw(BinaryOp::Div, a, b)
    }

    pub fn pow(a: Expr, b: Expr) -> Expr {
        if let Some(e) = Expr::fold(BinaryOp::Pow, &a, &b) {
            return e;
        }
        if b.is_const(1.0) {
            return a;
        }
        if b.is_const(0.0) {
            return Expr::Const(1.0);
        }
        Expr::binary_raw(BinaryOp::Pow, a, b)
    }

    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Const(c) => Expr::Const(-c),
            Expr::Unary(UnaryOp::Neg, inner) => (*inner).clone(),
            other => Expr::unary_raw(UnaryOp::Neg, other),
        }
    }

    pub fn apply(op: UnaryOp, a: Expr) -> Expr {
        if op == UnaryOp::Neg {
            return Expr::neg(a);
        }
        if let Some(c) = a.as_const() {
            if let Ok(v) = apply_unary(op, c) {
                return Expr::Const(v);
            }
        }
        Expr::unary_raw(op, a)
    }

    pub fn sin(a: Expr) -> Expr {
        Expr::apply(UnaryOp::Sin, a)
    }

    pub fn cos(a: Expr) -> Expr {
        Expr::apply(UnaryOp::Cos, a)
    }

    pub fn exp(a: Expr) -> Expr {
        Expr::apply(UnaryOp::Exp, a)
    }

    pub fn log(a: Expr) -> Expr {
        Expr::apply(UnaryOp::Log, a)
    }

    pub fn sqrt(a: Expr) -> Expr {
        Expr::apply(UnaryOp::Sqrt, a)
    }

    /// Replaces every occurrence of `var` by `with`.
    pub fn substitute(&self, var: Var, with: &Expr) -> Expr {
        match self {
            Expr::Const(_) => self.clone(),
            Expr::Var(v) if *v == var => with.clone(),
            Expr::Var(_) => self.clone(),
            Expr::Unary(op, a) => Expr::unary_raw(*op, a.substitute(var, with)),
            Expr::Binary(op, a, b) => {
                Expr::binary_raw(*op, a.substitute(var, with), b.substitute(var, with))
            }
        }
    }

    pub fn depends_on(&self, var: Var) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(v) => *v == var,
            Expr::Unary(_, a) => a.depends_on(var),
            Expr::Binary(_, a, b) => a.depends_on(var) || b.depends_on(var),
        }
    }

    /// Number of nodes in the tree (shared subtrees counted each time).
    pub fn size(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Unary(_, a) => 1 + a.size(),
            Expr::Binary(_, a, b) => 1 + a.size() + b.size(),
        }
    }

    /// Evaluates at `(t, x, xdot)`. Undefined operations are reported, not
    /// turned into NaN.
    pub fn eval(&self, point: &Point) -> Result<f64> {
        let v = match self {
            Expr::Const(c) => *c,
            Expr::Var(v) => point[v.index()],
            Expr::Unary(op, a) => apply_unary(*op, a.eval(point)?)?,
            Expr::Binary(op, a, b) => apply_binary(*op, a.eval(point)?, b.eval(point)?)?,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain(format!("non-finite value in `{self}`")))
        }
    }

    pub fn eval_t(&self, t: f64) -> Result<f64> {
        self.eval(&[t, 0.0, 0.0])
    }

    /// Partial derivative with respect to `var`.
    pub fn diff(&self, var: Var) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var(v) => Expr::Const(if *v == var { 1.0 } else { 0.0 }),
            Expr::Unary(op, a) => {
                let da = a.diff(var);
                if da.is_const(0.0) {
                    return Expr::Const(0.0);
                }
                let a = (**a).clone();
                match op {
                    UnaryOp::Neg => Expr::neg(da),
                    UnaryOp::Sin => Expr::mul(Expr::cos(a), da),
                    UnaryOp::Cos => Expr::neg(Expr::mul(Expr::sin(a), da)),
                    UnaryOp::Exp => Expr::mul(self.clone(), da),
                    UnaryOp::Log => Expr::div(da, a),
                    UnaryOp::Sqrt => Expr::div(da, Expr::mul(Expr::Const(2.0), self.clone())),
                }
            }
            Expr::Binary(op, a, b) => {
                let (da, db) = (a.diff(var), b.diff(var));
                let (a, b) = ((**a).clone(), (**b).clone());
                match op {
                    BinaryOp::Add => Expr::add(da, db),
                    BinaryOp::Sub => Expr::sub(da, db),
                    BinaryOp::Mul => Expr::add(Expr::mul(da, b.clone()), Expr::mul(a, db)),
                    BinaryOp::Div => Expr::sub(
                        Expr::div(da, b.clone()),
                        Expr::div(Expr::mul(a, db), Expr::pow(b, Expr::Const(2.0))),
                    ),
                    BinaryOp::Pow => {
                        if !b.depends_on(var) {
                            // d(f^c) = c f^(c-1) f'
                            let reduced = Expr::sub(b.clone(), Expr::Const(1.0));
                            Expr::mul(Expr::mul(b, Expr::pow(a, reduced)), da)
                        } else {
                            // d(f^g) = f^g (g' log f + g f'/f)
                            let inner = Expr::add(
                                Expr::mul(db, Expr::log(a.clone())),
                                Expr::div(Expr::mul(b, da), a),
                            );
                            Expr::mul(self.clone(), inner)
                        }
                    }
                }
            }
        }
    }

    /// Time derivative.
    pub fn differentiate(&self) -> Expr {
        self.diff(Var::T)
    }
}

pub fn differentiate(e: &Expr) -> Expr {
    e.differentiate()
}

fn apply_unary(op: UnaryOp, a: f64) -> Result<f64> {
    match op {
        UnaryOp::Neg => Ok(-a),
        UnaryOp::Sin => Ok(a.sin()),
        UnaryOp::Cos => Ok(a.cos()),
        UnaryOp::Exp => Ok(a.exp()),
        UnaryOp::Log if a > 0.0 => Ok(a.ln()),
        UnaryOp::Log => Err(Error::Domain(format!("log of non-positive value {a}"))),
        UnaryOp::Sqrt if a >= 0.0 => Ok(a.sqrt()),
        UnaryOp::Sqrt => Err(Error::Domain(format!("sqrt of negative value {a}"))),
    }
}

fn apply_binary(op: BinaryOp, a: f64, b: f64) -> Result<f64> {
    match op {
        BinaryOp::Add => Ok(a + b),
        BinaryOp::Sub => Ok(a - b),
        BinaryOp::Mul => Ok(a * b),
        BinaryOp::Div if b != 0.0 => Ok(a / b),
        BinaryOp::Div => Err(Error::Domain("division by zero".into())),
        BinaryOp::Pow => {
            if b.fract() == 0.0 && b.abs() <= i32::MAX as f64 {
                if a == 0.0 && b < 0.0 {
                    return Err(Error::Domain("zero raised to a negative power".into()));
                }
                Ok(a.powi(b as i32))
            } else if a > 0.0 {
                Ok(a.powf(b))
            } else {
                Err(Error::Domain(format!(
                    "non-integer power {b} of non-positive base {a}"
                )))
            }
        }
    }
}

fn write_wrapped(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    if matches!(e, Expr::Binary(..)) {
        write!(f, "{e}")
    } else {
        write!(f, "({e})")
    }
}

/// Canonical form: binary nodes print as `((lhs)op(rhs))`, functions as
/// `name(arg)`, negation as `(-(arg))`.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(v) => f.write_str(v.name()),
            Expr::Unary(UnaryOp::Neg, a) => write!(f, "(-({a}))"),
            Expr::Unary(op, a) => {
                f.write_str(op.name())?;
                write_wrapped(f, a)
            }
            Expr::Binary(op, a, b) => write!(f, "(({a}){}({b}))", op.symbol()),
        }
    }
}
