use super::{Expr, Func};

impl Expr {
    /// Symbolic partial derivative with respect to `v`.
    ///
    /// `abs` differentiates to `sign`, which fails to evaluate at 0; other
    /// singularities likewise surface only when the result is evaluated.
    pub fn diff(&self, v: &str) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var(name) => Expr::Const(if name == v { 1.0 } else { 0.0 }),
            Expr::Neg(a) => Expr::neg(a.diff(v)),
            Expr::Add(a, b) => Expr::add(a.diff(v), b.diff(v)),
            Expr::Sub(a, b) => Expr::sub(a.diff(v), b.diff(v)),
            Expr::Mul(a, b) => Expr::add(
                Expr::mul(a.diff(v), (**b).clone()),
                Expr::mul((**a).clone(), b.diff(v)),
            ),
            Expr::Div(a, b) => {
                let da = a.diff(v);
                let db = b.diff(v);
                if db.is_zero() {
                    return Expr::div(da, (**b).clone());
                }
                Expr::div(
                    Expr::sub(
                        Expr::mul(da, (**b).clone()),
                        Expr::mul((**a).clone(), db),
                    ),
                    Expr::pow((**b).clone(), 2),
                )
            }
            Expr::Pow(a, k) => {
                let da = a.diff(v);
                if da.is_zero() {
                    return Expr::Const(0.0);
                }
                Expr::mul(
                    Expr::mul(Expr::Const(*k as f64), Expr::pow((**a).clone(), k - 1)),
                    da,
                )
            }
            Expr::Call(f, a) => {
                let da = a.diff(v);
                if da.is_zero() {
                    return Expr::Const(0.0);
                }
                let a = (**a).clone();
                let outer = match f {
                    Func::Sin => Expr::call(Func::Cos, a),
                    Func::Cos => Expr::neg(Expr::call(Func::Sin, a)),
                    Func::Tan => Expr::add(
                        Expr::Const(1.0),
                        Expr::pow(Expr::call(Func::Tan, a), 2),
                    ),
                    Func::Atan => Expr::div(
                        Expr::Const(1.0),
                        Expr::add(Expr::Const(1.0), Expr::pow(a, 2)),
                    ),
                    Func::Exp => Expr::call(Func::Exp, a),
                    Func::Log => Expr::div(Expr::Const(1.0), a),
                    Func::Sqrt => Expr::div(
                        Expr::Const(1.0),
                        Expr::mul(Expr::Const(2.0), Expr::call(Func::Sqrt, a)),
                    ),
                    Func::Abs => Expr::call(Func::Sign, a),
                    Func::Sign => return Expr::Const(0.0),
                    Func::Bump(k) => Expr::call(Func::Bump(k + 1), a),
                };
                Expr::mul(outer, da)
            }
        }
    }

    /// Gradient with respect to an ordered list of variables.
    pub fn gradient<S: AsRef<str>>(&self, vars: &[S]) -> Vec<Expr> {
        vars.iter().map(|v| self.diff(v.as_ref())).collect()
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::parse_expr;

    fn d_at(text: &str, x: f64) -> f64 {
        parse_expr(text, &["x"])
            .unwrap()
            .diff("x")
            .eval(&[("x", x)][..])
            .unwrap()
    }

    #[test]
    fn power_rule() {
        assert_eq!(d_at("x^2", 3.0), 6.0);
    }

    #[test]
    fn atan_derivative() {
        assert_eq!(d_at("atan(x)", 1.0), 0.5);
    }

    #[test]
    fn x_cos_tan_matches_central_difference() {
        // frozen from an independent central-difference evaluation (h = 1e-6)
        let e = parse_expr("x * cos(tan(x))", &["x"]).unwrap();
        let h = 1e-6;
        let fd = (e.eval(&[("x", 1.0 + h)][..]).unwrap() - e.eval(&[("x", 1.0 - h)][..]).unwrap())
            / (2.0 * h);
        let sym = d_at("x * cos(tan(x))", 1.0);
        assert!((sym - fd).abs() <= 1e-5 * (1.0 + fd.abs()), "{sym} vs {fd}");
        // closed form: cos(tan 1) - sin(tan 1) * sec^2(1)
        let t = 1f64.tan();
        let closed = t.cos() - t.sin() / 1f64.cos().powi(2);
        assert!((sym - closed).abs() < 1e-13);
    }

    #[test]
    fn abs_derivative_fails_at_kink() {
        let e = parse_expr("abs(x - 2)", &["x"]).unwrap().diff("x");
        assert_eq!(e.eval(&[("x", 3.0)][..]).unwrap(), 1.0);
        assert_eq!(e.eval(&[("x", 1.0)][..]).unwrap(), -1.0);
        assert!(e.eval(&[("x", 2.0)][..]).is_err());
    }

    #[test]
    fn other_variable_is_constant() {
        let e = parse_expr("x * y + sin(y)", &["x", "y"]).unwrap();
        let d = e.diff("x");
        assert_eq!(d.to_string(), "y");
    }

    #[test]
    fn leibniz_at_tree_level() {
        let a = parse_expr("sin(x) + x^3", &["x"]).unwrap();
        let b = parse_expr("exp(x) / (1 + x^2)", &["x"]).unwrap();
        let prod = crate::expr::Expr::Mul(Box::new(a.clone()), Box::new(b.clone()));
        for &x in &[-1.3, 0.2, 0.7, 2.5] {
            let env = [("x", x)];
            let lhs = prod.diff("x").eval(&env[..]).unwrap();
            let rhs = a.diff("x").eval(&env[..]).unwrap() * b.eval(&env[..]).unwrap()
                + a.eval(&env[..]).unwrap() * b.diff("x").eval(&env[..]).unwrap();
            assert_eq!(lhs, rhs);
        }
    }
}
