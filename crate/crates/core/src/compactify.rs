//! Bounded generators and compactification.
//!
//! Any smooth function is locally a superposition of generators that take
//! values in `[−1, 1]`: cut the generators off with a bump around their
//! value at a point and rescale. Globally, generators are brought into
//! `[−1, 1]` by dividing by their supremum, and the completion over such a
//! family lands in a cube.

use thiserror::Error;

use crate::completion::{complete, CompletedSpace, CompletionError};
use crate::expr::{DomainKind, EvalError, Expr, Func};
use crate::space::{embed, sample, DiffSpace, Generator, GeneratorFamily, SmoothFunction, SpaceError};
use crate::uniform::Probe;

/// Half-width of the cube on which the bump equals one.
pub const INNER_HALF_WIDTH: f64 = 1.0;
/// Half-width of the cube outside which the bump vanishes.
pub const OUTER_HALF_WIDTH: f64 = 2.0;
/// Largest admissible `|f − ω₁ ∘ γ|` near the centre.
pub const LOCAL_TOL: f64 = 1e-9;

/// Outward probe steps used to detect unbounded generators.
const DIVERGENCE_STEPS: i32 = 16;
/// Increment ratio at or above which growth counts as divergence.
const DIVERGENCE_RATIO: f64 = 0.75;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum CompactifyError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Completion(#[from] CompletionError),
    #[error("bump centre must be a nonempty finite point, got {0:?}")]
    DegenerateCube(Vec<f64>),
    #[error("bump needs one argument per centre coordinate ({args} vs {center})")]
    BumpArity { args: usize, center: usize },
    #[error("centre {0:?} is not a carrier point")]
    CenterOutside(Vec<f64>),
    #[error("|{generator}| reaches {value} > 1 at parameters {params:?}")]
    GammaBound {
        generator: String,
        value: f64,
        params: Vec<f64>,
    },
    #[error("local agreement fails: residual {residual} at parameters {params:?}")]
    LocalResidual { residual: f64, params: Vec<f64> },
    #[error("no sample falls inside the inner cube around the centre")]
    EmptyNeighbourhood,
    #[error("generator `{0}` vanishes on every sample")]
    ZeroGenerator(String),
    #[error("generator `{generator}` is unbounded towards {end}")]
    Unbounded { generator: String, end: String },
    #[error("generator `{0}` is not declared bounded by 1")]
    NotBounded(String),
    #[error("generator `{generator}` takes value {value} outside its bound at parameters {params:?}")]
    BoundViolation {
        generator: String,
        value: f64,
        params: Vec<f64>,
    },
    #[error("coordinate {value} of generator `{generator}` leaves [-1, 1] at {point}")]
    OutsideCube {
        generator: String,
        value: f64,
        point: String,
    },
}

/// `η(y) = Π bump1(yᵢ − cᵢ)`: equal to 1 on the cube of half-width 1 around
/// `c` and to 0 outside the cube of half-width 2.
pub fn bump(args: Vec<Expr>, center: &[f64]) -> Result<Expr, CompactifyError> {
    if center.is_empty() || center.iter().any(|c| !c.is_finite()) {
        return Err(CompactifyError::DegenerateCube(center.to_vec()));
    }
    if args.len() != center.len() {
        return Err(CompactifyError::BumpArity {
            args: args.len(),
            center: center.len(),
        });
    }
    Ok(Expr::product(
        args.into_iter()
            .zip(center)
            .map(|(a, &c)| Expr::call(Func::Bump(0), Expr::sub(a, Expr::constant(c)))),
    ))
}

/// Local bounded representation of `f = ω ∘ α` around one point.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundedGeneratorSet {
    /// Carrier parameters of the centre `m`.
    pub center: Vec<f64>,
    /// `y₀ = α(m)`.
    pub y0: Vec<f64>,
    /// `α₁, …, αₙ`.
    pub alphas: Vec<String>,
    /// `η(α)` as an expression in the ambient coordinates.
    pub eta: Expr,
    /// `μᵢ = max(|y₀ᵢ + 2|, |y₀ᵢ − 2|)`.
    pub mu: Vec<f64>,
    /// `γᵢ = αᵢ·η(α)/μᵢ`, named after the generator they bound.
    pub gammas: Vec<Generator>,
    /// `ω₁(u) = ω(μ₁u₁, …, μₙuₙ)` over the `γ` names.
    pub omega1: SmoothFunction,
    pub max_abs_gamma: Vec<f64>,
    /// `max |f − ω₁ ∘ γ|` over samples with `α(x)` in the inner cube.
    pub local_residual: f64,
    pub local_samples: usize,
}

impl BoundedGeneratorSet {
    pub fn gamma_family(&self, coords: Vec<String>) -> Result<GeneratorFamily, SpaceError> {
        let mut f = GeneratorFamily::new(coords);
        for g in &self.gammas {
            f.push(&g.name, g.expr.clone(), Some(1.0))?;
        }
        Ok(f)
    }
}

pub fn gamma_name(alpha: &str) -> String {
    format!("{alpha}_bounded")
}

/// Builds the bump-truncated, rescaled generators at the carrier point with
/// parameters `center` and validates them on every sample.
pub fn boundize(s: &DiffSpace, f: &SmoothFunction, center: &[f64]) -> Result<BoundedGeneratorSet, CompactifyError> {
    if !s.carrier.contains_params(center) {
        return Err(CompactifyError::CenterOutside(center.to_vec()));
    }
    let m = s.carrier.chart_at(center)?;
    let alphas = f.args.clone();
    let alpha_exprs: Vec<Expr> = alphas
        .iter()
        .map(|a| s.family.get(a).map(|g| g.expr.clone()))
        .collect::<Result<_, _>>()?;
    let y0: Vec<f64> = alphas
        .iter()
        .map(|a| s.family.eval_one(a, &m))
        .collect::<Result<_, _>>()?;
    let eta = bump(alpha_exprs.clone(), &y0)?;
    let mu: Vec<f64> = y0
        .iter()
        .map(|y| (y + OUTER_HALF_WIDTH).abs().max((y - OUTER_HALF_WIDTH).abs()))
        .collect();
    let gammas: Vec<Generator> = alphas
        .iter()
        .zip(&alpha_exprs)
        .zip(&mu)
        .map(|((name, a), &mu)| Generator {
            name: gamma_name(name),
            expr: Expr::div(Expr::mul(a.clone(), eta.clone()), Expr::constant(mu)),
            bound: Some(1.0),
        })
        .collect();
    let gamma_names: Vec<String> = gammas.iter().map(|g| g.name.clone()).collect();
    let omega1 = SmoothFunction::new(
        f.omega.substitute(&|v| {
            alphas
                .iter()
                .position(|a| a == v)
                .map(|i| Expr::mul(Expr::constant(mu[i]), Expr::var(gamma_names[i].clone())))
        }),
        gamma_names.clone(),
    )?;
    let gamma_family = {
        let mut fam = GeneratorFamily::new(s.family.coords().to_vec());
        for g in &gammas {
            fam.push(&g.name, g.expr.clone(), g.bound)?;
        }
        fam
    };

    let samples = sample(&s.carrier)?;
    let mut max_abs_gamma = vec![0.0f64; gammas.len()];
    let mut local_residual = 0.0f64;
    let mut local_samples = 0;
    for p in &samples {
        let gv = gamma_family.eval_all(&p.ambient)?;
        for (i, v) in gv.iter().enumerate() {
            if v.abs() > 1.0 {
                return Err(CompactifyError::GammaBound {
                    generator: gamma_names[i].clone(),
                    value: *v,
                    params: p.params.clone(),
                });
            }
            max_abs_gamma[i] = max_abs_gamma[i].max(v.abs());
        }
        let av: Vec<f64> = alphas
            .iter()
            .map(|a| s.family.eval_one(a, &p.ambient))
            .collect::<Result<_, _>>()?;
        let inside = av
            .iter()
            .zip(&y0)
            .all(|(a, y)| (a - y).abs() < INNER_HALF_WIDTH);
        if inside {
            local_samples += 1;
            let r = (f.eval(&s.family, &p.ambient)? - omega1.eval(&gamma_family, &p.ambient)?).abs();
            if r > LOCAL_TOL {
                return Err(CompactifyError::LocalResidual {
                    residual: r,
                    params: p.params.clone(),
                });
            }
            local_residual = local_residual.max(r);
        }
    }
    if local_samples == 0 {
        return Err(CompactifyError::EmptyNeighbourhood);
    }
    Ok(BoundedGeneratorSet {
        center: center.to_vec(),
        y0,
        alphas,
        eta,
        mu,
        gammas,
        omega1,
        max_abs_gamma,
        local_residual,
        local_samples,
    })
}

/// `g / ŝ` with `ŝ` the largest sampled `|g|`.
#[derive(Clone, Debug, PartialEq)]
pub struct Normalized {
    pub generator: String,
    pub expr: Expr,
    pub sup: f64,
    /// Sample index where `|g|` is largest (first one on ties).
    pub argmax: usize,
}

fn argmax_abs(values: &[f64]) -> (usize, f64) {
    values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
            if v.abs() > bv {
                (i, v.abs())
            } else {
                (bi, bv)
            }
        })
}

/// Divides a generator by its sampled supremum.
///
/// Unbounded generators are rejected: beyond every open or infinite end of
/// the parameter box, `|g|` is evaluated at geometrically approaching points
/// and divergence is declared when the values keep growing without the
/// increments shrinking geometrically.
pub fn normalize(g: &str, s: &DiffSpace) -> Result<Normalized, CompactifyError> {
    let gen = s.family.get(g)?.clone();
    let samples = sample(&s.carrier)?;
    let values: Vec<f64> = samples
        .iter()
        .map(|p| s.family.eval_one(g, &p.ambient))
        .collect::<Result<_, _>>()?;
    let (argmax, sup) = argmax_abs(&values);
    if samples.is_empty() || sup == 0.0 {
        return Err(CompactifyError::ZeroGenerator(g.to_string()));
    }
    check_bounded(s, &gen, &samples[argmax].params)?;
    Ok(Normalized {
        generator: g.to_string(),
        expr: Expr::div(gen.expr, Expr::constant(sup)),
        sup,
        argmax,
    })
}

type Ray = Box<dyn Fn(i32) -> f64>;

fn check_bounded(s: &DiffSpace, gen: &Generator, base: &[f64]) -> Result<(), CompactifyError> {
    let plan = s.carrier.plan();
    for (axis, dom) in s.carrier.domain().iter().enumerate() {
        let window = plan.window.get(axis).copied().flatten();
        let mut ends: Vec<(String, Ray)> = Vec::new();
        if dom.lo == f64::NEG_INFINITY {
            let w = window.map_or(1.0, |(lo, _)| lo.abs().max(1.0));
            ends.push(("-inf".into(), Box::new(move |k| -w * 2f64.powi(k))));
        } else if dom.lo_open {
            let (lo, d) = (dom.lo, plan.inset);
            ends.push((format!("{lo}"), Box::new(move |k| lo + d * 2f64.powi(-k))));
        }
        if dom.hi == f64::INFINITY {
            let w = window.map_or(1.0, |(_, hi)| hi.abs().max(1.0));
            ends.push(("inf".into(), Box::new(move |k| w * 2f64.powi(k))));
        } else if dom.hi_open {
            let (hi, d) = (dom.hi, plan.inset);
            ends.push((format!("{hi}"), Box::new(move |k| hi - d * 2f64.powi(-k))));
        }
        for (end, at) in ends {
            let mut vals = Vec::new();
            for k in 1..=DIVERGENCE_STEPS {
                let mut params = base.to_vec();
                params[axis] = at(k);
                let v = s
                    .carrier
                    .chart_at(&params)
                    .and_then(|amb| s.family.eval_one(&gen.name, &amb));
                match v {
                    Ok(v) => vals.push(v.abs()),
                    Err(e) if is_overflow(&e) => {
                        return Err(CompactifyError::Unbounded {
                            generator: gen.name.clone(),
                            end,
                        })
                    }
                    Err(_) => break,
                }
            }
            if diverges(&vals) {
                return Err(CompactifyError::Unbounded {
                    generator: gen.name.clone(),
                    end,
                });
            }
        }
    }
    Ok(())
}

fn is_overflow(e: &SpaceError) -> bool {
    let kind = |ev: &EvalError| ev.domain_kind() == Some(DomainKind::NonFinite);
    match e {
        SpaceError::GeneratorAt(_, ev) | SpaceError::Chart { source: ev, .. } => kind(ev),
        SpaceError::Generator { source, .. } => kind(source),
        _ => false,
    }
}

fn diverges(v: &[f64]) -> bool {
    let n = v.len();
    if n < 3 {
        return false;
    }
    let (a, b, c) = (v[n - 3], v[n - 2], v[n - 1]);
    a < b && b < c && (c - b) >= DIVERGENCE_RATIO * (b - a)
}

/// Family with every generator scaled into `[−1, 1]`: declared bounds are
/// divided out, undeclared generators are normalized by their sampled
/// supremum. Returns the new family and the divisor used per generator.
pub fn unit_bounded_family(s: &DiffSpace) -> Result<(GeneratorFamily, Vec<f64>), CompactifyError> {
    let mut fam = GeneratorFamily::new(s.family.coords().to_vec());
    let mut scales = Vec::new();
    for g in s.family.generators() {
        let (expr, scale) = match g.bound {
            Some(1.0) => (g.expr.clone(), 1.0),
            Some(b) => (Expr::div(g.expr.clone(), Expr::constant(b)), b),
            None => {
                let n = normalize(&g.name, s)?;
                (n.expr, n.sup)
            }
        };
        fam.push(&g.name, expr, Some(1.0))?;
        scales.push(scale);
    }
    Ok((fam, scales))
}

/// Completion over a family bounded by 1.
pub fn compactify(s: &DiffSpace, probes: &[Probe], tol: f64, tail: usize) -> Result<CompletedSpace, CompactifyError> {
    for g in s.family.generators() {
        if g.bound.is_none_or(|b| b > 1.0) {
            return Err(CompactifyError::NotBounded(g.name.clone()));
        }
    }
    let base = embed(s)?;
    for p in &base.points {
        for (g, &v) in s.family.generators().iter().zip(&p.coords) {
            if v.abs() > g.bound.unwrap_or(1.0) {
                return Err(CompactifyError::BoundViolation {
                    generator: g.name.clone(),
                    value: v,
                    params: p.params.clone(),
                });
            }
        }
    }
    let cs = complete(s, probes, tol, tail)?;
    let names = cs.generators().to_vec();
    let base_pts = cs.base.points.iter().map(|p| (format!("{:?}", p.params), &p.coords));
    let adj_pts = cs.adjoined.iter().map(|a| (format!("limit of {}", a.probe), &a.limit));
    for (label, coords) in base_pts.chain(adj_pts) {
        if let Some((k, &v)) = coords.iter().enumerate().find(|(_, v)| v.abs() > 1.0) {
            return Err(CompactifyError::OutsideCube {
                generator: names[k].clone(),
                value: v,
                point: label,
            });
        }
    }
    Ok(cs)
}
