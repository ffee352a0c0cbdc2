//! Scalar expression language for Lagrangians and transformation families.
//!
//! Expressions are immutable trees over a fixed variable alphabet: `t`, `z`,
//! `s`, the state components `x1..xn` and the velocity components
//! `dx1..dxn`. They can be parsed from text, evaluated against an
//! [`Env`], and differentiated symbolically with respect to any variable.
//!
//! ```
//! use herglotz::expr::{parse, Env, Var};
//!
//! let lagrangian = parse("dx1^2/2 - z").unwrap();
//! let momentum = lagrangian.diff(Var::Dx(1));
//! let env = Env::new().with_dx(vec![3.0]).with_z(1.0);
//! assert_eq!(lagrangian.eval(&env).unwrap(), 3.5);
//! assert_eq!(momentum.eval(&env).unwrap(), 3.0);
//! ```

mod diff;
mod eval;
mod parse;

use std::collections::BTreeSet;
use std::fmt;

pub use eval::{Env, EvalError};
pub use parse::{parse, ParseError, ParseErrorKind};

/// A variable of the fixed alphabet. Component indices are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    T,
    X(usize),
    Dx(usize),
    Z,
    S,
}

impl Var {
    /// Parses a canonical variable name (`t`, `z`, `s`, `x3`, `dx12`, ...).
    pub fn from_name(name: &str) -> Option<Var> {
        fn index(digits: &str) -> Option<usize> {
            if digits.is_empty() || digits.starts_with('0') || !digits.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            digits.parse().ok()
        }
        match name {
            "t" => Some(Var::T),
            "z" => Some(Var::Z),
            "s" => Some(Var::S),
            _ => {
                if let Some(rest) = name.strip_prefix("dx") {
                    index(rest).map(Var::Dx)
                } else if let Some(rest) = name.strip_prefix('x') {
                    index(rest).map(Var::X)
                } else {
                    None
                }
            }
        }
    }

    /// Component index for `x`/`dx` variables.
    pub fn component(self) -> Option<usize> {
        match self {
            Var::X(i) | Var::Dx(i) => Some(i),
            _ => None,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::T => f.write_str("t"),
            Var::Z => f.write_str("z"),
            Var::S => f.write_str("s"),
            Var::X(i) => write!(f, "x{i}"),
            Var::Dx(i) => write!(f, "dx{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl UnaryOp {
    pub fn function_name(self) -> Option<&'static str> {
        match self {
            UnaryOp::Neg => None,
            UnaryOp::Sin => Some("sin"),
            UnaryOp::Cos => Some("cos"),
            UnaryOp::Exp => Some("exp"),
            UnaryOp::Log => Some("log"),
            UnaryOp::Sqrt => Some("sqrt"),
        }
    }

    pub(crate) fn from_function_name(name: &str) -> Option<UnaryOp> {
        match name {
            "sin" => Some(UnaryOp::Sin),
            "cos" => Some(UnaryOp::Cos),
            "exp" => Some(UnaryOp::Exp),
            "log" => Some(UnaryOp::Log),
            "sqrt" => Some(UnaryOp::Sqrt),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
        }
    }
}

/// Expression tree. Powers carry a constant exponent, folded at parse time.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, f64),
}

impl Expr {
    pub fn constant(value: f64) -> Expr {
        Expr::Const(value)
    }

    pub fn var(var: Var) -> Expr {
        Expr::Var(var)
    }

    /// Set of variables occurring in the tree.
    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => {
                out.insert(*v);
            }
            Expr::Unary(_, a) | Expr::Pow(a, _) => a.collect_vars(out),
            Expr::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Structural occurrence test.
    pub fn depends_on(&self, var: Var) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(v) => *v == var,
            Expr::Unary(_, a) | Expr::Pow(a, _) => a.depends_on(var),
            Expr::Binary(_, a, b) => a.depends_on(var) || b.depends_on(var),
        }
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    fn is_const(&self, value: f64) -> bool {
        matches!(self, Expr::Const(c) if *c == value)
    }

    // Simplifying constructors. Only the light rewrites 0*e, e+0, 1*e and
    // folding of finite constant operands are applied.
    #[allow(clippy::should_implement_trait)]
    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Const(c) => Expr::Const(-c),
            Expr::Unary(UnaryOp::Neg, inner) => *inner,
            a => Expr::Unary(UnaryOp::Neg, Box::new(a)),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(a: Expr, b: Expr) -> Expr {
        if a.is_const(0.0) {
            return b;
        }
        if b.is_const(0.0) {
            return a;
        }
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) if (x + y).is_finite() => Expr::Const(x + y),
            _ => Expr::Binary(BinaryOp::Add, Box::new(a), Box::new(b)),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(a: Expr, b: Expr) -> Expr {
        if b.is_const(0.0) {
            return a;
        }
        if a.is_const(0.0) {
            return Expr::neg(b);
        }
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) if (x - y).is_finite() => Expr::Const(x - y),
            _ => Expr::Binary(BinaryOp::Sub, Box::new(a), Box::new(b)),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(a: Expr, b: Expr) -> Expr {
        if a.is_const(0.0) || b.is_const(0.0) {
            return Expr::Const(0.0);
        }
        if a.is_const(1.0) {
            return b;
        }
        if b.is_const(1.0) {
            return a;
        }
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) if (x * y).is_finite() => Expr::Const(x * y),
            _ => Expr::Binary(BinaryOp::Mul, Box::new(a), Box::new(b)),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn div(a: Expr, b: Expr) -> Expr {
        if b.is_const(1.0) {
            return a;
        }
        if let Some(d) = b.as_const() {
            if d != 0.0 {
                if a.is_const(0.0) {
                    return Expr::Const(0.0);
                }
                if let Some(n) = a.as_const() {
                    if (n / d).is_finite() {
                        return Expr::Const(n / d);
                    }
                }
                // (c * e) / d  ->  (c / d) * e
                if let Expr::Binary(BinaryOp::Mul, l, r) = &a {
                    if let Some(c) = l.as_const() {
                        if (c / d).is_finite() {
                            return Expr::mul(Expr::Const(c / d), (**r).clone());
                        }
                    }
                }
            }
        }
        Expr::Binary(BinaryOp::Div, Box::new(a), Box::new(b))
    }

    pub fn pow(base: Expr, exponent: f64) -> Expr {
        if exponent == 1.0 {
            return base;
        }
        if exponent == 0.0 {
            return Expr::Const(1.0);
        }
        Expr::Pow(Box::new(base), exponent)
    }

    pub fn unary(op: UnaryOp, a: Expr) -> Expr {
        match op {
            UnaryOp::Neg => Expr::neg(a),
            _ => Expr::Unary(op, Box::new(a)),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => 1,
            Expr::Binary(BinaryOp::Mul | BinaryOp::Div, ..) => 2,
            Expr::Unary(UnaryOp::Neg, _) => 3,
            Expr::Const(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }
}

fn write_const(f: &mut fmt::Formatter<'_>, c: f64) -> fmt::Result {
    // `{:?}` is the shortest representation that round-trips.
    let text = format!("{c:?}");
    f.write_str(&text)
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, min_prec: u8) -> fmt::Result {
    if e.precedence() < min_prec {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write_const(f, *c),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Unary(UnaryOp::Neg, a) => {
                f.write_str("-")?;
                write_operand(f, a, 3)
            }
            Expr::Unary(op, a) => write!(f, "{}({a})", op.function_name().unwrap_or("?")),
            Expr::Binary(op, a, b) => {
                let prec = self.precedence();
                write_operand(f, a, prec)?;
                write!(f, " {} ", op.symbol())?;
                // Left-associative: the right operand needs strictly higher precedence.
                write_operand(f, b, prec + 1)
            }
            Expr::Pow(a, p) => {
                write_operand(f, a, 5)?;
                f.write_str("^")?;
                if *p < 0.0 || (*p == 0.0 && p.is_sign_negative()) {
                    f.write_str("(")?;
                    write_const(f, *p)?;
                    f.write_str(")")
                } else {
                    write_const(f, *p)
                }
            }
        }
    }
}
