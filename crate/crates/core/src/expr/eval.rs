use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

use super::{bump, Expr, Func};

/// `tan` is treated as singular where `|cos x|` falls below this value.
pub const TAN_POLE_EPS: f64 = 1e-12;

/// Variable lookup used by [`Expr::eval`].
pub trait Env {
    fn lookup(&self, name: &str) -> Option<f64>;
}

impl Env for HashMap<String, f64> {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.get(name).copied()
    }
}

impl Env for BTreeMap<String, f64> {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.get(name).copied()
    }
}

impl<S: AsRef<str>> Env for [(S, f64)] {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.iter()
            .find(|(k, _)| k.as_ref() == name)
            .map(|(_, v)| *v)
    }
}

/// Parallel name/value slices.
#[derive(Clone, Copy, Debug)]
pub struct Bindings<'a, S> {
    names: &'a [S],
    values: &'a [f64],
}

impl<'a, S: AsRef<str>> Bindings<'a, S> {
    pub fn new(names: &'a [S], values: &'a [f64]) -> Self {
        debug_assert_eq!(names.len(), values.len());
        Bindings { names, values }
    }
}

impl<S: AsRef<str>> Env for Bindings<'_, S> {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n.as_ref() == name)
            .map(|i| self.values[i])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DomainKind {
    TanPole,
    LogNonPositive,
    SqrtNegative,
    DivisionByZero,
    SignAtZero,
    ZeroNegativePower,
    NonFinite,
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainKind::TanPole => "tan evaluated at a pole",
            DomainKind::LogNonPositive => "log of a non-positive number",
            DomainKind::SqrtNegative => "sqrt of a negative number",
            DomainKind::DivisionByZero => "division by zero",
            DomainKind::SignAtZero => "abs is not differentiable at 0",
            DomainKind::ZeroNegativePower => "zero raised to a negative power",
            DomainKind::NonFinite => "non-finite value",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("{kind} in `{node}` (argument {arg})")]
    Domain {
        kind: DomainKind,
        node: String,
        arg: f64,
    },
}

impl EvalError {
    pub fn domain_kind(&self) -> Option<DomainKind> {
        match self {
            EvalError::Domain { kind, .. } => Some(*kind),
            EvalError::Unbound(_) => None,
        }
    }
}

fn domain(kind: DomainKind, node: &Expr, arg: f64) -> EvalError {
    EvalError::Domain {
        kind,
        node: node.to_string(),
        arg,
    }
}

impl Expr {
    /// Evaluate in double precision. Singular points are reported as
    /// [`EvalError::Domain`] rather than producing NaN or infinity.
    pub fn eval<E: Env + ?Sized>(&self, env: &E) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Const(c) => *c,
            Expr::Var(name) => env
                .lookup(name)
                .ok_or_else(|| EvalError::Unbound(name.clone()))?,
            Expr::Neg(a) => -a.eval(env)?,
            Expr::Add(a, b) => a.eval(env)? + b.eval(env)?,
            Expr::Sub(a, b) => a.eval(env)? - b.eval(env)?,
            Expr::Mul(a, b) => a.eval(env)? * b.eval(env)?,
            Expr::Div(a, b) => {
                let num = a.eval(env)?;
                let den = b.eval(env)?;
                if den == 0.0 {
                    return Err(domain(DomainKind::DivisionByZero, self, den));
                }
                num / den
            }
            Expr::Pow(a, k) => {
                let base = a.eval(env)?;
                if base == 0.0 && *k < 0 {
                    return Err(domain(DomainKind::ZeroNegativePower, self, base));
                }
                base.powi(*k)
            }
            Expr::Call(f, a) => {
                let x = a.eval(env)?;
                apply_func(*f, x).map_err(|kind| domain(kind, self, x))?
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(domain(DomainKind::NonFinite, self, v))
        }
    }
}

pub(crate) fn apply_func(f: Func, x: f64) -> Result<f64, DomainKind> {
    Ok(match f {
        Func::Sin => x.sin(),
        Func::Cos => x.cos(),
        Func::Tan => {
            if x.cos().abs() < TAN_POLE_EPS {
                return Err(DomainKind::TanPole);
            }
            x.tan()
        }
        Func::Atan => x.atan(),
        Func::Exp => x.exp(),
        Func::Log => {
            if x <= 0.0 {
                return Err(DomainKind::LogNonPositive);
            }
            x.ln()
        }
        Func::Sqrt => {
            if x < 0.0 {
                return Err(DomainKind::SqrtNegative);
            }
            x.sqrt()
        }
        Func::Abs => x.abs(),
        Func::Sign => {
            if x == 0.0 {
                return Err(DomainKind::SignAtZero);
            }
            x.signum()
        }
        Func::Bump(k) => bump::bump_derivative(x, k as usize),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn eval1(text: &str, x: f64) -> Result<f64, EvalError> {
        parse_expr(text, &["x"]).unwrap().eval(&[("x", x)][..])
    }

    #[test]
    fn atan_one_is_quarter_pi() {
        assert_eq!(eval1("atan(1)", 0.0).unwrap(), FRAC_PI_4);
    }

    #[test]
    fn square_at_three() {
        assert_eq!(eval1("x^2", 3.0).unwrap(), 9.0);
    }

    #[test]
    fn tan_at_half_pi_is_domain_error() {
        let err = eval1("tan(x)", FRAC_PI_2).unwrap_err();
        assert_eq!(err.domain_kind(), Some(DomainKind::TanPole));
        assert!(err.to_string().contains("tan(x)"));
    }

    #[test]
    fn other_singularities() {
        assert_eq!(
            eval1("log(x)", 0.0).unwrap_err().domain_kind(),
            Some(DomainKind::LogNonPositive)
        );
        assert_eq!(
            eval1("sqrt(x)", -1.0).unwrap_err().domain_kind(),
            Some(DomainKind::SqrtNegative)
        );
        assert_eq!(
            eval1("1 / x", 0.0).unwrap_err().domain_kind(),
            Some(DomainKind::DivisionByZero)
        );
        assert_eq!(
            eval1("x^-2", 0.0).unwrap_err().domain_kind(),
            Some(DomainKind::ZeroNegativePower)
        );
        assert_eq!(
            eval1("exp(x)", 1e4).unwrap_err().domain_kind(),
            Some(DomainKind::NonFinite)
        );
        assert_eq!(
            eval1("sign(x)", 0.0).unwrap_err().domain_kind(),
            Some(DomainKind::SignAtZero)
        );
    }

    #[test]
    fn unbound_variable() {
        let e = parse_expr("x + y", &["x", "y"]).unwrap();
        assert_eq!(
            e.eval(&[("x", 1.0)][..]).unwrap_err(),
            EvalError::Unbound("y".into())
        );
    }

    #[test]
    fn env_flavours_agree() {
        let e = parse_expr("x * y + 1", &["x", "y"]).unwrap();
        let mut h = HashMap::new();
        h.insert("x".to_string(), 2.0);
        h.insert("y".to_string(), 3.0);
        let b: BTreeMap<String, f64> = h.clone().into_iter().collect();
        let names = ["x", "y"];
        let vals = [2.0, 3.0];
        assert_eq!(e.eval(&h).unwrap(), 7.0);
        assert_eq!(e.eval(&b).unwrap(), 7.0);
        assert_eq!(e.eval(&Bindings::new(&names, &vals)).unwrap(), 7.0);
    }
}
