use thiserror::Error;

use super::{BinaryOp, Expr, UnaryOp, Var};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(Var),
    #[error("domain error in `{expr}`: {reason}")]
    Domain { expr: String, reason: &'static str },
}

/// Variable bindings for evaluation.
///
/// Slots are ordered `t, x1..xn, dx1..dxn, z, s`. A slot that was never set
/// is unbound and looking it up fails.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Env {
    t: Option<f64>,
    x: Vec<f64>,
    dx: Vec<f64>,
    z: Option<f64>,
    s: Option<f64>,
}

impl Env {
    pub fn new() -> Self {
        Self::default()
    }

    /// Binds `t`, `x`, `dx` and `z` in one go.
    pub fn point(t: f64, x: &[f64], dx: &[f64], z: f64) -> Self {
        Env {
            t: Some(t),
            x: x.to_vec(),
            dx: dx.to_vec(),
            z: Some(z),
            s: None,
        }
    }

    pub fn with_t(mut self, t: f64) -> Self {
        self.t = Some(t);
        self
    }

    pub fn with_x(mut self, x: Vec<f64>) -> Self {
        self.x = x;
        self
    }

    pub fn with_dx(mut self, dx: Vec<f64>) -> Self {
        self.dx = dx;
        self
    }

    pub fn with_z(mut self, z: f64) -> Self {
        self.z = Some(z);
        self
    }

    pub fn with_s(mut self, s: f64) -> Self {
        self.s = Some(s);
        self
    }

    pub fn set_s(&mut self, s: Option<f64>) {
        self.s = s;
    }

    /// Binds by canonical name. Component `xk`/`dxk` grows the vector with
    /// NaN placeholders, which are treated as unbound.
    pub fn bind(mut self, name: &str, value: f64) -> Option<Self> {
        match Var::from_name(name)? {
            Var::T => self.t = Some(value),
            Var::Z => self.z = Some(value),
            Var::S => self.s = Some(value),
            Var::X(i) => set_component(&mut self.x, i, value),
            Var::Dx(i) => set_component(&mut self.dx, i, value),
        }
        Some(self)
    }

    pub fn get(&self, var: Var) -> Result<f64, EvalError> {
        let value = match var {
            Var::T => self.t,
            Var::Z => self.z,
            Var::S => self.s,
            Var::X(i) => self.x.get(i.wrapping_sub(1)).copied().filter(|v| !v.is_nan()),
            Var::Dx(i) => self.dx.get(i.wrapping_sub(1)).copied().filter(|v| !v.is_nan()),
        };
        value.ok_or(EvalError::Unbound(var))
    }

    /// Bound variables in canonical order.
    pub fn bindings(&self) -> Vec<(Var, f64)> {
        let mut out = Vec::new();
        if let Some(t) = self.t {
            out.push((Var::T, t));
        }
        for (i, &v) in self.x.iter().enumerate() {
            if !v.is_nan() {
                out.push((Var::X(i + 1), v));
            }
        }
        for (i, &v) in self.dx.iter().enumerate() {
            if !v.is_nan() {
                out.push((Var::Dx(i + 1), v));
            }
        }
        if let Some(z) = self.z {
            out.push((Var::Z, z));
        }
        if let Some(s) = self.s {
            out.push((Var::S, s));
        }
        out
    }
}

fn set_component(slots: &mut Vec<f64>, index: usize, value: f64) {
    if slots.len() < index {
        slots.resize(index, f64::NAN);
    }
    slots[index - 1] = value;
}

fn domain(e: &Expr, reason: &'static str) -> EvalError {
    EvalError::Domain {
        expr: e.to_string(),
        reason,
    }
}

impl Expr {
    /// Evaluates the tree. Any non-finite intermediate is a domain error.
    pub fn eval(&self, env: &Env) -> Result<f64, EvalError> {
        let value = match self {
            Expr::Const(c) => *c,
            Expr::Var(v) => env.get(*v)?,
            Expr::Unary(op, a) => {
                let a_val = a.eval(env)?;
                match op {
                    UnaryOp::Neg => -a_val,
                    UnaryOp::Sin => a_val.sin(),
                    UnaryOp::Cos => a_val.cos(),
                    UnaryOp::Exp => a_val.exp(),
                    UnaryOp::Log => {
                        if a_val <= 0.0 {
                            return Err(domain(self, "logarithm of a non-positive value"));
                        }
                        a_val.ln()
                    }
                    UnaryOp::Sqrt => {
                        if a_val < 0.0 {
                            return Err(domain(self, "square root of a negative value"));
                        }
                        a_val.sqrt()
                    }
                }
            }
            Expr::Binary(op, a, b) => {
                let a_val = a.eval(env)?;
                let b_val = b.eval(env)?;
                match op {
                    BinaryOp::Add => a_val + b_val,
                    BinaryOp::Sub => a_val - b_val,
                    BinaryOp::Mul => a_val * b_val,
                    BinaryOp::Div => {
                        if b_val == 0.0 {
                            return Err(domain(self, "division by zero"));
                        }
                        a_val / b_val
                    }
                }
            }
            Expr::Pow(a, p) => {
                let a_val = a.eval(env)?;
                if p.fract() == 0.0 && p.abs() <= i32::MAX as f64 {
                    if a_val == 0.0 && *p < 0.0 {
                        return Err(domain(self, "zero raised to a negative power"));
                    }
                    a_val.powi(*p as i32)
                } else {
                    if a_val < 0.0 {
                        return Err(domain(self, "negative base with non-integer exponent"));
                    }
                    if a_val == 0.0 && *p < 0.0 {
                        return Err(domain(self, "zero raised to a negative power"));
                    }
                    a_val.powf(*p)
                }
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(domain(self, "non-finite result"))
        }
    }
}
