//! Closed-form real expressions.
//!
//! Every generator, chart component, probe and superposition witness in the
//! crate is an [`Expr`]: a small tree over named variables, real constants,
//! the four arithmetic operations, integer powers and a fixed set of unary
//! primitives. Expressions are immutable once built; [`diff`] produces a new
//! tree for the symbolic partial derivative.
//!
//! ```
//! use sikorski::expr::{parse_expr, Bindings};
//!
//! let e = parse_expr("x * cos(tan(x))", &["x"]).unwrap();
//! let d = e.diff("x");
//! let at = Bindings::new(&["x"], &[1.0]);
//! let fd = (e.eval(&Bindings::new(&["x"], &[1.0 + 1e-6])).unwrap()
//!     - e.eval(&Bindings::new(&["x"], &[1.0 - 1e-6])).unwrap()) / 2e-6;
//! assert!((d.eval(&at).unwrap() - fd).abs() < 1e-5);
//! ```

mod bump;
mod diff;
pub(crate) mod eval;
mod parse;

use std::collections::BTreeSet;
use std::fmt;

pub use bump::bump_derivative;
pub use eval::{Bindings, DomainKind, Env, EvalError, TAN_POLE_EPS};
pub use parse::{parse_expr, ParseError, ParseErrorKind};

/// Unary primitives.
///
/// `Abs` and `Sign` are admitted for evaluation but are not smooth; `Sign` only
/// arises as the derivative of `Abs`. `Bump(k)` is the `k`-th derivative of the
/// one-dimensional splice `bump1`, which is identically 1 on `[-1, 1]` and
/// vanishes outside `(-2, 2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Atan,
    Exp,
    Log,
    Sqrt,
    Abs,
    Sign,
    Bump(u32),
}

impl Func {
    pub fn name(self) -> String {
        match self {
            Func::Sin => "sin".into(),
            Func::Cos => "cos".into(),
            Func::Tan => "tan".into(),
            Func::Atan => "atan".into(),
            Func::Exp => "exp".into(),
            Func::Log => "log".into(),
            Func::Sqrt => "sqrt".into(),
            Func::Abs => "abs".into(),
            Func::Sign => "sign".into(),
            Func::Bump(0) => "bump1".into(),
            Func::Bump(k) => format!("bump1_d{k}"),
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "atan" => Func::Atan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "sign" => Func::Sign,
            "bump1" => Func::Bump(0),
            _ => {
                let order = name.strip_prefix("bump1_d")?;
                if order.is_empty() || !order.bytes().all(|b| b.is_ascii_digit()) {
                    return None;
                }
                Func::Bump(order.parse().ok()?)
            }
        })
    }

    pub fn is_smooth(self) -> bool {
        !matches!(self, Func::Abs | Func::Sign)
    }
}

/// Expression tree.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

// Folding constructors. Only identities that are exact in IEEE arithmetic on
// finite operands are applied, so folded trees evaluate to the same doubles.
#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Const(c) => Expr::Const(-c),
            Expr::Neg(inner) => *inner,
            other => Expr::Neg(Box::new(other)),
        }
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        if a.is_zero() {
            return b;
        }
        if b.is_zero() {
            return a;
        }
        Expr::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        if b.is_zero() {
            return a;
        }
        if a.is_zero() {
            return Expr::neg(b);
        }
        Expr::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        if a.is_zero() || b.is_zero() {
            return Expr::Const(0.0);
        }
        if a.is_one() {
            return b;
        }
        if b.is_one() {
            return a;
        }
        Expr::Mul(Box::new(a), Box::new(b))
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        if b.is_one() {
            return a;
        }
        Expr::Div(Box::new(a), Box::new(b))
    }

    pub fn pow(a: Expr, k: i32) -> Expr {
        match k {
            0 => Expr::Const(1.0),
            1 => a,
            _ => Expr::Pow(Box::new(a), k),
        }
    }

    pub fn call(f: Func, a: Expr) -> Expr {
        Expr::Call(f, Box::new(a))
    }

    /// Sum of a list of terms; the empty sum is `0`.
    pub fn sum(terms: impl IntoIterator<Item = Expr>) -> Expr {
        terms
            .into_iter()
            .fold(Expr::Const(0.0), Expr::add)
    }

    /// Product of a list of factors; the empty product is `1`.
    pub fn product(factors: impl IntoIterator<Item = Expr>) -> Expr {
        factors
            .into_iter()
            .fold(Expr::Const(1.0), Expr::mul)
    }

    /// Names of all variables referenced by the tree.
    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.collect_vars(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn contains_var(&self, name: &str) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(v) => v == name,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.contains_var(name),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.contains_var(name) || b.contains_var(name)
            }
        }
    }

    /// Whether any non-smooth primitive occurs in the tree.
    pub fn is_smooth(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::Var(_) => true,
            Expr::Call(f, a) => f.is_smooth() && a.is_smooth(),
            Expr::Neg(a) | Expr::Pow(a, _) => a.is_smooth(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.is_smooth() && b.is_smooth()
            }
        }
    }

    /// Replace variables by expressions. Variables for which `map` returns
    /// `None` are kept. The result is not re-folded.
    pub fn substitute(&self, map: &dyn Fn(&str) -> Option<Expr>) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var(v) => map(v).unwrap_or_else(|| Expr::Var(v.clone())),
            Expr::Neg(a) => Expr::Neg(Box::new(a.substitute(map))),
            Expr::Add(a, b) => Expr::Add(Box::new(a.substitute(map)), Box::new(b.substitute(map))),
            Expr::Sub(a, b) => Expr::Sub(Box::new(a.substitute(map)), Box::new(b.substitute(map))),
            Expr::Mul(a, b) => Expr::Mul(Box::new(a.substitute(map)), Box::new(b.substitute(map))),
            Expr::Div(a, b) => Expr::Div(Box::new(a.substitute(map)), Box::new(b.substitute(map))),
            Expr::Pow(a, k) => Expr::Pow(Box::new(a.substitute(map)), *k),
            Expr::Call(f, a) => Expr::Call(*f, Box::new(a.substitute(map))),
        }
    }

    /// Rename variables according to parallel slices `from` → `to`.
    pub fn rename(&self, from: &[String], to: &[String]) -> Expr {
        self.substitute(&|v| {
            from.iter()
                .position(|f| f == v)
                .map(|i| Expr::Var(to[i].clone()))
        })
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => 1 + a.size(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                1 + a.size() + b.size()
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => 1 + a.depth(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                1 + a.depth().max(b.depth())
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Const(c) if c.is_sign_negative() => 3,
            Expr::Pow(..) => 4,
            Expr::Const(_) | Expr::Var(_) | Expr::Call(..) => 5,
        }
    }

    fn fmt_child(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        if self.precedence() < min_prec {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for Expr {
    /// Prints with minimal parentheses; the output reparses to an equal tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::Var(v) => f.write_str(v),
            Expr::Neg(a) => {
                f.write_str("-")?;
                // a bare literal after '-' would fold into a negative constant
                if matches!(**a, Expr::Const(_)) {
                    write!(f, "({a})")
                } else {
                    a.fmt_child(f, 3)
                }
            }
            Expr::Add(a, b) => {
                a.fmt_child(f, 1)?;
                f.write_str(" + ")?;
                b.fmt_child(f, 2)
            }
            Expr::Sub(a, b) => {
                a.fmt_child(f, 1)?;
                f.write_str(" - ")?;
                b.fmt_child(f, 2)
            }
            Expr::Mul(a, b) => {
                a.fmt_child(f, 2)?;
                f.write_str(" * ")?;
                b.fmt_child(f, 3)
            }
            Expr::Div(a, b) => {
                a.fmt_child(f, 2)?;
                f.write_str(" / ")?;
                b.fmt_child(f, 3)
            }
            Expr::Pow(a, k) => {
                a.fmt_child(f, 5)?;
                write!(f, "^{k}")
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folding_constructors() {
        let x = Expr::var("x");
        assert_eq!(Expr::add(Expr::Const(0.0), x.clone()), x);
        assert_eq!(Expr::mul(Expr::Const(1.0), x.clone()), x);
        assert_eq!(Expr::mul(x.clone(), Expr::Const(0.0)), Expr::Const(0.0));
        assert_eq!(Expr::neg(Expr::neg(x.clone())), x);
        assert_eq!(Expr::neg(Expr::Const(2.0)), Expr::Const(-2.0));
        assert_eq!(Expr::pow(x.clone(), 1), x);
        assert_eq!(Expr::sub(Expr::Const(0.0), x.clone()), Expr::neg(x));
    }

    #[test]
    fn func_names_round_trip() {
        for f in [
            Func::Sin,
            Func::Cos,
            Func::Tan,
            Func::Atan,
            Func::Exp,
            Func::Log,
            Func::Sqrt,
            Func::Abs,
            Func::Sign,
            Func::Bump(0),
            Func::Bump(3),
        ] {
            assert_eq!(Func::from_name(&f.name()), Some(f));
        }
        assert_eq!(Func::from_name("bump1_d"), None);
        assert_eq!(Func::from_name("sinh"), None);
    }

    #[test]
    fn display_minimal_parens() {
        let e = parse_expr("(x + y) * z - (a - b)", &["x", "y", "z", "a", "b"]).unwrap();
        assert_eq!(e.to_string(), "(x + y) * z - (a - b)");
        let e = parse_expr("-x^2 + (-2)^3", &["x"]).unwrap();
        assert_eq!(e.to_string(), "-x^2 + (-2.0)^3");
    }

    #[test]
    fn vars_and_substitute() {
        let e = parse_expr("u * v + sin(u)", &["u", "v"]).unwrap();
        assert_eq!(e.vars().into_iter().collect::<Vec<_>>(), vec!["u", "v"]);
        let s = e.substitute(&|v| (v == "u").then_some(Expr::Const(2.0)));
        assert!(!s.contains_var("u"));
        assert!(s.contains_var("v"));
    }
}
