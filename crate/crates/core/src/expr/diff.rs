use super::{BinaryOp, Expr, UnaryOp, Var};

impl Expr {
    /// Exact symbolic partial derivative with respect to `var`.
    pub fn diff(&self, var: Var) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var(v) => Expr::Const(if *v == var { 1.0 } else { 0.0 }),
            Expr::Unary(op, a) => {
                let da = a.diff(var);
                if da.as_const() == Some(0.0) {
                    return Expr::Const(0.0);
                }
                let a = (**a).clone();
                let outer = match op {
                    UnaryOp::Neg => return Expr::neg(da),
                    UnaryOp::Sin => Expr::unary(UnaryOp::Cos, a),
                    UnaryOp::Cos => Expr::neg(Expr::unary(UnaryOp::Sin, a)),
                    UnaryOp::Exp => Expr::unary(UnaryOp::Exp, a),
                    UnaryOp::Log => return Expr::div(da, a),
                    UnaryOp::Sqrt => {
                        let root = Expr::unary(UnaryOp::Sqrt, a);
                        return Expr::div(da, Expr::mul(Expr::Const(2.0), root));
                    }
                };
                Expr::mul(outer, da)
            }
            Expr::Binary(op, a, b) => {
                let da = a.diff(var);
                let db = b.diff(var);
                match op {
                    BinaryOp::Add => Expr::add(da, db),
                    BinaryOp::Sub => Expr::sub(da, db),
                    BinaryOp::Mul => Expr::add(Expr::mul(da, (**b).clone()), Expr::mul((**a).clone(), db)),
                    BinaryOp::Div => {
                        if db.as_const() == Some(0.0) {
                            return Expr::div(da, (**b).clone());
                        }
                        // (a' b - a b') / b^2
                        let numerator = Expr::sub(Expr::mul(da, (**b).clone()), Expr::mul((**a).clone(), db));
                        Expr::div(numerator, Expr::pow((**b).clone(), 2.0))
                    }
                }
            }
            Expr::Pow(a, p) => {
                let da = a.diff(var);
                if da.as_const() == Some(0.0) {
                    return Expr::Const(0.0);
                }
                let outer = Expr::mul(Expr::Const(*p), Expr::pow((**a).clone(), p - 1.0));
                Expr::mul(outer, da)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{parse, Env, Var};

    #[test]
    fn power_rule() {
        let d = parse("dx1^2/2 - z").unwrap().diff(Var::Dx(1));
        assert_eq!(d.to_string(), "dx1");
    }

    #[test]
    fn linear_term() {
        let d = parse("dx1^2/2 - 0.5*z").unwrap().diff(Var::Z);
        assert_eq!(d.as_const(), Some(-0.5));
    }

    #[test]
    fn product_matches_central_difference() {
        let e = parse("sin(x1)*t").unwrap();
        let d = e.diff(Var::X(1));
        let env = |x: f64| Env::new().with_x(vec![x]).with_t(2.0);
        let exact = d.eval(&env(0.0)).unwrap();
        assert_eq!(exact, 2.0);
        let h = 1e-6;
        let fd = (e.eval(&env(h)).unwrap() - e.eval(&env(-h)).unwrap()) / (2.0 * h);
        assert!((exact - fd).abs() < 1e-8, "{exact} vs {fd}");
    }

    #[test]
    fn absent_variable_differentiates_to_zero() {
        let e = parse("exp(x1) * log(dx1) + sqrt(t)").unwrap();
        assert_eq!(e.diff(Var::Z).as_const(), Some(0.0));
        assert_eq!(e.diff(Var::S).as_const(), Some(0.0));
    }

    #[test]
    fn second_order_by_repetition() {
        let e = parse("dx1^3 * z").unwrap();
        let d2 = e.diff(Var::Dx(1)).diff(Var::Dx(1));
        let env = Env::new().with_dx(vec![2.0]).with_z(0.5);
        assert_eq!(d2.eval(&env).unwrap(), 6.0);
        let mixed = e.diff(Var::Dx(1)).diff(Var::Z);
        assert_eq!(mixed.eval(&env).unwrap(), 12.0);
    }

    #[test]
    fn quotient_and_chain_rules() {
        let e = parse("cos(t^2) / (1 + x1^2) + sqrt(1 + t)").unwrap();
        let d = e.diff(Var::T);
        let t = 0.3;
        let env = Env::new().with_t(t).with_x(vec![0.7]);
        let expected = -(t * t).sin() * 2.0 * t / (1.0 + 0.49) + 0.5 / (1.0 + t).sqrt();
        assert!((d.eval(&env).unwrap() - expected).abs() < 1e-14);
        let dx = e.diff(Var::X(1)).eval(&env).unwrap();
        let expected = -(t * t).cos() * 2.0 * 0.7 / (1.49f64 * 1.49);
        assert!((dx - expected).abs() < 1e-14);
    }
}
