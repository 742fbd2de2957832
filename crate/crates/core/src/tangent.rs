//! Tangent vectors as directional derivations.
//!
//! A tangent vector at `m` is a coefficient vector `v` over the ambient
//! coordinates, acting on a smooth function by `v(f) = Σᵢ vᵢ ∂f/∂xᵢ(m)`.
//! Partials are symbolic, so the Leibniz and chain rules hold up to the
//! rounding of a single evaluation.

use thiserror::Error;

use crate::expr::{Bindings, EvalError, Expr};
use crate::space::{DiffSpace, GeneratorFamily, SmoothFunction, SmoothMapWitness, SpaceError};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum TangentError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("partial derivative along `{coord}` fails: {source}")]
    Partial {
        coord: String,
        #[source]
        source: EvalError,
    },
    #[error("value fails at the base point: {0}")]
    Value(#[source] EvalError),
    #[error("base point has {base} coordinates but {coeffs} coefficients were given")]
    Dimension { base: usize, coeffs: usize },
    #[error("non-finite base point or coefficient")]
    NonFinite,
    #[error("base point is an adjoined completion point; no derivatives there")]
    NotDifferentiable,
    #[error("parameters {0:?} are outside the carrier")]
    OutsideCarrier(Vec<f64>),
    #[error("expected {expected} ambient coordinates, found {got}")]
    CoordinateCount { expected: usize, got: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    /// Ambient coordinates of the base point.
    pub base: Vec<f64>,
    pub coeffs: Vec<f64>,
    /// Set for vectors at completion points outside the carrier.
    pub adjoined: bool,
}

impl TangentVector {
    pub fn new(base: Vec<f64>, coeffs: Vec<f64>) -> Result<Self, TangentError> {
        if base.len() != coeffs.len() {
            return Err(TangentError::Dimension {
                base: base.len(),
                coeffs: coeffs.len(),
            });
        }
        if base.iter().chain(&coeffs).any(|c| !c.is_finite()) {
            return Err(TangentError::NonFinite);
        }
        Ok(TangentVector {
            base,
            coeffs,
            adjoined: false,
        })
    }

    /// Vector at the carrier point with the given parameters.
    pub fn at_params(s: &DiffSpace, params: &[f64], coeffs: Vec<f64>) -> Result<Self, TangentError> {
        if !s.carrier.contains_params(params) {
            return Err(TangentError::OutsideCarrier(params.to_vec()));
        }
        TangentVector::new(s.carrier.chart_at(params)?, coeffs)
    }

    /// Vector at a point adjoined by a completion. Every operation rejects it.
    pub fn at_adjoined(base: Vec<f64>, coeffs: Vec<f64>) -> Result<Self, TangentError> {
        let mut v = TangentVector::new(base, coeffs)?;
        v.adjoined = true;
        Ok(v)
    }

    /// `a·self + b·other` at the same base point.
    pub fn combine(&self, a: f64, other: &TangentVector, b: f64) -> Result<TangentVector, TangentError> {
        if self.base != other.base {
            return Err(TangentError::Dimension {
                base: self.base.len(),
                coeffs: other.coeffs.len(),
            });
        }
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(x, y)| a * x + b * y).collect();
        TangentVector::new(self.base.clone(), coeffs)
    }
}

/// A directional derivative with the magnitude `Σ |vᵢ ∂ᵢf|` of its terms,
/// which bounds the rounding error of the sum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Derivative {
    pub value: f64,
    pub magnitude: f64,
}

fn directional(expr: &Expr, coords: &[String], v: &TangentVector) -> Result<Derivative, TangentError> {
    if v.adjoined {
        return Err(TangentError::NotDifferentiable);
    }
    if coords.len() != v.base.len() {
        return Err(TangentError::CoordinateCount {
            expected: coords.len(),
            got: v.base.len(),
        });
    }
    let env = Bindings::new(coords, &v.base);
    let mut value = 0.0;
    let mut magnitude = 0.0;
    for (c, &vi) in coords.iter().zip(&v.coeffs) {
        if vi == 0.0 || !expr.contains_var(c) {
            continue;
        }
        let d = expr.diff(c).eval(&env).map_err(|source| TangentError::Partial {
            coord: c.clone(),
            source,
        })?;
        value += vi * d;
        magnitude += (vi * d).abs();
    }
    Ok(Derivative { value, magnitude })
}

/// `v(f)` together with the term magnitude.
pub fn apply_terms(v: &TangentVector, f: &SmoothFunction, family: &GeneratorFamily) -> Result<Derivative, TangentError> {
    directional(&f.compose(family)?, family.coords(), v)
}

/// `v(f) = Σᵢ vᵢ ∂(ω∘α)/∂xᵢ(m)`.
pub fn apply(v: &TangentVector, f: &SmoothFunction, family: &GeneratorFamily) -> Result<f64, TangentError> {
    Ok(apply_terms(v, f, family)?.value)
}

/// `dα(v) = v(α)`.
pub fn differential(alpha: &SmoothFunction, v: &TangentVector, family: &GeneratorFamily) -> Result<f64, TangentError> {
    apply(v, alpha, family)
}

fn value_at(f: &SmoothFunction, family: &GeneratorFamily, v: &TangentVector) -> Result<f64, TangentError> {
    let e = f.compose(family)?;
    e.eval(&Bindings::new(family.coords(), &v.base)).map_err(TangentError::Value)
}

/// Absolute residual and the scale it is measured against.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Residual {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    /// `1 +` the magnitudes of all terms on both sides.
    pub scale: f64,
}

impl Residual {
    fn new(lhs: f64, rhs: f64, magnitude: f64) -> Self {
        Residual {
            lhs,
            rhs,
            residual: (lhs - rhs).abs(),
            scale: 1.0 + magnitude,
        }
    }

    pub fn relative(&self) -> f64 {
        self.residual / self.scale
    }
}

/// `|v(αβ) − α(m)v(β) − β(m)v(α)|`.
pub fn leibniz_check(
    v: &TangentVector,
    alpha: &SmoothFunction,
    beta: &SmoothFunction,
    family: &GeneratorFamily,
) -> Result<Residual, TangentError> {
    let prod = apply_terms(v, &SmoothFunction::product(alpha, beta), family)?;
    let da = apply_terms(v, alpha, family)?;
    let db = apply_terms(v, beta, family)?;
    let a = value_at(alpha, family, v)?;
    let b = value_at(beta, family, v)?;
    let rhs = a * db.value + b * da.value;
    let magnitude = prod.magnitude + (a * db.magnitude).abs() + (b * da.magnitude).abs();
    Ok(Residual::new(prod.value, rhs, magnitude))
}

/// Jacobian of the map components at `base`, one row per target coordinate.
pub fn jacobian(components: &[Expr], coords: &[String], base: &[f64]) -> Result<Vec<Vec<f64>>, TangentError> {
    let env = Bindings::new(coords, base);
    components
        .iter()
        .map(|c| {
            coords
                .iter()
                .map(|x| {
                    c.diff(x).eval(&env).map_err(|source| TangentError::Partial {
                        coord: x.clone(),
                        source,
                    })
                })
                .collect()
        })
        .collect()
}

/// `TF(v)`: the vector `J_F(m)·v` at `F(m)`.
pub fn tangent_map(f: &SmoothMapWitness, source_coords: &[String], v: &TangentVector) -> Result<TangentVector, TangentError> {
    if v.adjoined {
        return Err(TangentError::NotDifferentiable);
    }
    if source_coords.len() != v.base.len() {
        return Err(TangentError::CoordinateCount {
            expected: source_coords.len(),
            got: v.base.len(),
        });
    }
    let base = f.apply(source_coords, &v.base)?;
    let jac = jacobian(&f.components, source_coords, &v.base)?;
    let coeffs = jac
        .iter()
        .map(|row| row.iter().zip(&v.coeffs).map(|(j, c)| j * c).sum())
        .collect();
    TangentVector::new(base, coeffs)
}

/// `β ∘ F` as a superposition over the source generators, built from the
/// witnesses of the target generators `β` mentions.
pub fn compose_witness(f: &SmoothMapWitness, beta: &SmoothFunction) -> Result<SmoothFunction, TangentError> {
    let mut args: Vec<String> = Vec::new();
    let mut pieces = Vec::new();
    for b in &beta.args {
        let w = f.witness(b)?;
        for a in &w.args {
            if !args.contains(a) {
                args.push(a.clone());
            }
        }
        pieces.push((b.clone(), w.omega.clone()));
    }
    let omega = beta
        .omega
        .substitute(&|v| pieces.iter().find(|(b, _)| b == v).map(|(_, w)| w.clone()));
    Ok(SmoothFunction::new(omega, args)?)
}

/// `|dβ(TF(v)) − d(β∘F)(v)|`, with `β∘F` taken from the map's witnesses.
pub fn chain_rule_check(
    f: &SmoothMapWitness,
    source: &GeneratorFamily,
    v: &TangentVector,
    beta: &SmoothFunction,
) -> Result<Residual, TangentError> {
    let pushed = tangent_map(f, source.coords(), v)?;
    let lhs = apply_terms(&pushed, beta, &f.target)?;
    let rhs = apply_terms(v, &compose_witness(f, beta)?, source)?;
    Ok(Residual::new(lhs.value, rhs.value, lhs.magnitude + rhs.magnitude))
}

/// Derivative of `t ↦ g(chart(t))` along one parameter axis, estimated by a
/// Richardson-extrapolated central difference.
pub fn parameter_derivative(s: &DiffSpace, f: &SmoothFunction, params: &[f64], axis: usize, h: f64) -> Result<f64, TangentError> {
    let at = |dt: f64| -> Result<f64, TangentError> {
        let mut p = params.to_vec();
        p[axis] += dt;
        let amb = s.carrier.chart_at(&p)?;
        Ok(f.eval(&s.family, &amb)?)
    };
    let central = |h: f64| -> Result<f64, TangentError> { Ok((at(h)? - at(-h)?) / (2.0 * h)) };
    Ok((4.0 * central(h / 2.0)? - central(h)?) / 3.0)
}

/// Applies the chart pushforward of a parameter direction to `f` and
/// compares with the derivative of `f` along that parameter.
pub fn chart_direction_check(s: &DiffSpace, f: &SmoothFunction, params: &[f64], axis: usize) -> Result<Residual, TangentError> {
    if !s.carrier.contains_params(params) {
        return Err(TangentError::OutsideCarrier(params.to_vec()));
    }
    let base = s.carrier.chart_at(params)?;
    let env = Bindings::new(s.carrier.params(), params);
    let dir = s.carrier.params()[axis].clone();
    let coeffs = s
        .carrier
        .chart()
        .iter()
        .map(|c| c.diff(&dir).eval(&env).map_err(|source| TangentError::Partial { coord: dir.clone(), source }))
        .collect::<Result<Vec<_>, _>>()?;
    let v = TangentVector::new(base, coeffs)?;
    let d = apply_terms(&v, f, &s.family)?;
    let fd = parameter_derivative(s, f, params, axis, 1e-4)?;
    Ok(Residual::new(d.value, fd, d.magnitude))
}
