//! Differential spaces presented by a parametric carrier and a family of
//! generators.
//!
//! The structure generated by a family is never materialised. A function
//! belongs to it through a [`SmoothFunction`] witness `ω ∘ (α₁, …, αₙ)`, and a
//! map is smooth when every target generator composed with it has such a
//! witness over the source ([`check_smooth_map`]).

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::expr::{Bindings, EvalError, Expr};
use crate::par::try_map;

/// Exact-rounded comparison step for point identity.
pub const POINT_ROUNDING: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SpaceError {
    #[error("invalid carrier: {0}")]
    InvalidCarrier(String),
    #[error("chart fails at parameters {params:?}: {source}")]
    Chart {
        params: Vec<f64>,
        #[source]
        source: EvalError,
    },
    #[error("generator `{name}` fails at parameters {params:?}: {source}")]
    Generator {
        name: String,
        params: Vec<f64>,
        #[source]
        source: EvalError,
    },
    #[error("generator `{0}` evaluation failed: {1}")]
    GeneratorAt(String, #[source] EvalError),
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("duplicate generator `{0}`")]
    DuplicateGenerator(String),
    #[error("expression `{expr}` references `{var}` which is not in scope")]
    OutOfScope { expr: String, var: String },
    #[error("restriction leaves no carrier points")]
    EmptyRestriction,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("superposition `{0}` failed: {1}")]
    Superposition(String, #[source] EvalError),
    #[error("map component fails: {0}")]
    MapComponent(#[source] EvalError),
    #[error("target generator `{0}` has no witness")]
    MissingWitness(String),
}

/// Real interval with per-end openness. Ends may be infinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
}

impl Interval {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Interval {
            lo,
            hi,
            lo_open: false,
            hi_open: false,
        }
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        Interval {
            lo,
            hi,
            lo_open: true,
            hi_open: true,
        }
    }

    pub fn real_line() -> Self {
        Interval::open(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_open { x > self.lo } else { x >= self.lo };
        let below = if self.hi_open { x < self.hi } else { x <= self.hi };
        above && below
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && (self.lo_open || self.hi_open))
    }

    pub fn is_compact(&self) -> bool {
        !self.lo_open && !self.hi_open && self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        let (lo, lo_open) = match self.lo.partial_cmp(&other.lo) {
            Some(std::cmp::Ordering::Greater) => (self.lo, self.lo_open),
            Some(std::cmp::Ordering::Less) => (other.lo, other.lo_open),
            _ => (self.lo, self.lo_open || other.lo_open),
        };
        let (hi, hi_open) = match self.hi.partial_cmp(&other.hi) {
            Some(std::cmp::Ordering::Less) => (self.hi, self.hi_open),
            Some(std::cmp::Ordering::Greater) => (other.hi, other.hi_open),
            _ => (self.hi, self.hi_open || other.hi_open),
        };
        Interval {
            lo,
            hi,
            lo_open,
            hi_open,
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.lo_open { '(' } else { '[' },
            self.lo,
            self.hi,
            if self.hi_open { ')' } else { ']' }
        )
    }
}

/// Per-axis grid description.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplingPlan {
    pub counts: Vec<usize>,
    /// Distance kept from open finite endpoints.
    pub inset: f64,
    /// Closed sampling window per axis; required where the domain is unbounded.
    pub window: Vec<Option<(f64, f64)>>,
}

/// A sampled point of the carrier.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplePoint {
    pub params: Vec<f64>,
    pub ambient: Vec<f64>,
}

/// Parametric carrier: a parameter box mapped into ambient coordinates by a
/// chart, sampled on a deterministic rectangular grid.
///
/// The grid is fixed when the carrier is built; restrictions shrink the
/// domain but keep the grid, so a restricted carrier samples exactly a
/// subset of the original points.
#[derive(Clone, Debug, PartialEq)]
pub struct Carrier {
    params: Vec<String>,
    domain: Vec<Interval>,
    coords: Vec<String>,
    chart: Vec<Expr>,
    plan: SamplingPlan,
    axes: Vec<Vec<f64>>,
}

impl Carrier {
    pub fn new(
        params: Vec<String>,
        domain: Vec<Interval>,
        coords: Vec<String>,
        chart: Vec<Expr>,
        plan: SamplingPlan,
    ) -> Result<Self, SpaceError> {
        let k = params.len();
        if k == 0 {
            return Err(SpaceError::InvalidCarrier("no parameters".into()));
        }
        if domain.len() != k || plan.counts.len() != k || plan.window.len() != k {
            return Err(SpaceError::InvalidCarrier(format!(
                "{k} parameters but {} intervals, {} counts, {} windows",
                domain.len(),
                plan.counts.len(),
                plan.window.len()
            )));
        }
        if coords.len() != chart.len() || coords.is_empty() {
            return Err(SpaceError::InvalidCarrier(
                "chart needs one expression per ambient coordinate".into(),
            ));
        }
        if !(plan.inset >= 0.0 && plan.inset.is_finite()) {
            return Err(SpaceError::InvalidCarrier("inset must be finite and >= 0".into()));
        }
        for e in &chart {
            check_scope(e, &params)?;
        }
        let mut axes = Vec::with_capacity(k);
        for (i, dom) in domain.iter().enumerate() {
            axes.push(grid_axis(dom, plan.counts[i], plan.inset, plan.window[i])?);
        }
        Ok(Carrier {
            params,
            domain,
            coords,
            chart,
            plan,
            axes,
        })
    }

    /// One-parameter identity chart `x = t` over `domain`.
    pub fn line(domain: Interval, count: usize, window: Option<(f64, f64)>) -> Result<Self, SpaceError> {
        Carrier::new(
            vec!["t".into()],
            vec![domain],
            vec!["x".into()],
            vec![Expr::var("t")],
            SamplingPlan {
                counts: vec![count],
                inset: 0.01,
                window: vec![window],
            },
        )
    }

    pub fn params(&self) -> &[String] {
        &self.params
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn chart(&self) -> &[Expr] {
        &self.chart
    }

    pub fn domain(&self) -> &[Interval] {
        &self.domain
    }

    pub fn plan(&self) -> &SamplingPlan {
        &self.plan
    }

    pub fn contains_params(&self, params: &[f64]) -> bool {
        params.len() == self.domain.len()
            && self.domain.iter().zip(params).all(|(iv, &p)| iv.contains(p))
    }

    /// Every domain interval closed and bounded.
    pub fn is_compact(&self) -> bool {
        self.domain.iter().all(Interval::is_compact)
    }

    pub fn chart_at(&self, params: &[f64]) -> Result<Vec<f64>, SpaceError> {
        if params.len() != self.params.len() {
            return Err(SpaceError::Dimension {
                expected: self.params.len(),
                got: params.len(),
            });
        }
        let env = Bindings::new(&self.params, params);
        self.chart
            .iter()
            .map(|e| {
                e.eval(&env).map_err(|source| SpaceError::Chart {
                    params: params.to_vec(),
                    source,
                })
            })
            .collect()
    }

    /// Grid nodes inside the current domain, row-major (last parameter
    /// fastest).
    pub fn grid(&self) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new()];
        for axis in &self.axes {
            let mut next = Vec::with_capacity(out.len() * axis.len());
            for prefix in &out {
                for &v in axis {
                    let mut p = prefix.clone();
                    p.push(v);
                    next.push(p);
                }
            }
            out = next;
        }
        out.retain(|p| self.contains_params(p));
        out
    }

    /// Shrink the domain to its intersection with `sub`.
    pub fn restrict(&self, sub: &[Interval]) -> Result<Carrier, SpaceError> {
        if sub.len() != self.domain.len() {
            return Err(SpaceError::Dimension {
                expected: self.domain.len(),
                got: sub.len(),
            });
        }
        let domain: Vec<Interval> = self
            .domain
            .iter()
            .zip(sub)
            .map(|(a, b)| a.intersect(b))
            .collect();
        if domain.iter().any(Interval::is_empty) {
            return Err(SpaceError::EmptyRestriction);
        }
        let out = Carrier {
            domain,
            ..self.clone()
        };
        if out.grid().is_empty() {
            return Err(SpaceError::EmptyRestriction);
        }
        Ok(out)
    }
}

fn grid_axis(
    domain: &Interval,
    count: usize,
    inset: f64,
    window: Option<(f64, f64)>,
) -> Result<Vec<f64>, SpaceError> {
    if count == 0 {
        return Err(SpaceError::InvalidCarrier("sample count must be positive".into()));
    }
    if domain.is_empty() {
        return Err(SpaceError::InvalidCarrier(format!("empty domain {domain}")));
    }
    let mut lo = if domain.lo.is_finite() {
        domain.lo + if domain.lo_open { inset } else { 0.0 }
    } else {
        f64::NEG_INFINITY
    };
    let mut hi = if domain.hi.is_finite() {
        domain.hi - if domain.hi_open { inset } else { 0.0 }
    } else {
        f64::INFINITY
    };
    if let Some((wlo, whi)) = window {
        if !(wlo.is_finite() && whi.is_finite() && wlo <= whi) {
            return Err(SpaceError::InvalidCarrier(format!(
                "bad sampling window [{wlo}, {whi}]"
            )));
        }
        lo = lo.max(wlo);
        hi = hi.min(whi);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return Err(SpaceError::InvalidCarrier(format!(
            "unbounded domain {domain} needs a sampling window"
        )));
    }
    if lo > hi {
        return Err(SpaceError::InvalidCarrier(format!(
            "domain {domain} has no room for inset {inset}"
        )));
    }
    if count == 1 {
        return Ok(vec![lo + (hi - lo) / 2.0]);
    }
    let n = (count - 1) as f64;
    Ok((0..count)
        .map(|j| {
            if j == count - 1 {
                hi
            } else {
                lo + (hi - lo) * (j as f64 / n)
            }
        })
        .collect())
}

fn check_scope<S: AsRef<str>>(e: &Expr, scope: &[S]) -> Result<(), SpaceError> {
    for v in e.vars() {
        if !scope.iter().any(|s| s.as_ref() == v) {
            return Err(SpaceError::OutOfScope {
                expr: e.to_string(),
                var: v,
            });
        }
    }
    Ok(())
}

/// Sample the carrier: grid nodes with their chart images.
pub fn sample(c: &Carrier) -> Result<Vec<SamplePoint>, SpaceError> {
    let grid = c.grid();
    try_map(&grid, |p| {
        Ok(SamplePoint {
            params: p.clone(),
            ambient: c.chart_at(p)?,
        })
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    pub name: String,
    pub expr: Expr,
    /// Stated bound `sup |g| <= bound`, if the generator is declared bounded.
    pub bound: Option<f64>,
}

/// Ordered generator family over named ambient coordinates. The order
/// indexes the coordinates of the embedding space.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorFamily {
    coords: Vec<String>,
    gens: Vec<Generator>,
}

impl GeneratorFamily {
    pub fn new(coords: Vec<String>) -> Self {
        GeneratorFamily {
            coords,
            gens: Vec::new(),
        }
    }

    pub fn with(mut self, name: &str, expr: Expr) -> Result<Self, SpaceError> {
        self.push(name, expr, None)?;
        Ok(self)
    }

    pub fn push(&mut self, name: &str, expr: Expr, bound: Option<f64>) -> Result<(), SpaceError> {
        if self.gens.iter().any(|g| g.name == name) {
            return Err(SpaceError::DuplicateGenerator(name.to_string()));
        }
        check_scope(&expr, &self.coords)?;
        self.gens.push(Generator {
            name: name.to_string(),
            expr,
            bound,
        });
        Ok(())
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn generators(&self) -> &[Generator] {
        &self.gens
    }

    pub fn len(&self) -> usize {
        self.gens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.gens.iter().map(|g| g.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.gens.iter().position(|g| g.name == name)
    }

    pub fn get(&self, name: &str) -> Result<&Generator, SpaceError> {
        self.gens
            .iter()
            .find(|g| g.name == name)
            .ok_or_else(|| SpaceError::UnknownGenerator(name.to_string()))
    }

    /// Subfamily with the given names, kept in the order requested.
    pub fn select<S: AsRef<str>>(&self, names: &[S]) -> Result<GeneratorFamily, SpaceError> {
        let mut out = GeneratorFamily::new(self.coords.clone());
        for n in names {
            let g = self.get(n.as_ref())?;
            out.push(&g.name, g.expr.clone(), g.bound)?;
        }
        Ok(out)
    }

    pub fn name_set(&self) -> BTreeSet<String> {
        self.gens.iter().map(|g| g.name.clone()).collect()
    }

    pub fn eval_one(&self, name: &str, ambient: &[f64]) -> Result<f64, SpaceError> {
        let g = self.get(name)?;
        g.expr
            .eval(&Bindings::new(&self.coords, ambient))
            .map_err(|e| SpaceError::GeneratorAt(name.to_string(), e))
    }

    /// Generator values at an ambient point, in family order.
    pub fn eval_all(&self, ambient: &[f64]) -> Result<Vec<f64>, SpaceError> {
        if ambient.len() != self.coords.len() {
            return Err(SpaceError::Dimension {
                expected: self.coords.len(),
                got: ambient.len(),
            });
        }
        let env = Bindings::new(&self.coords, ambient);
        self.gens
            .iter()
            .map(|g| {
                g.expr
                    .eval(&env)
                    .map_err(|e| SpaceError::GeneratorAt(g.name.clone(), e))
            })
            .collect()
    }
}

/// A differential space `(M, gen(G))` with `M` given by a carrier.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffSpace {
    pub name: String,
    pub carrier: Carrier,
    pub family: GeneratorFamily,
}

impl DiffSpace {
    pub fn new(name: &str, carrier: Carrier, family: GeneratorFamily) -> Result<Self, SpaceError> {
        if carrier.coords() != family.coords() {
            return Err(SpaceError::InvalidCarrier(format!(
                "generators use coordinates {:?} but the chart provides {:?}",
                family.coords(),
                carrier.coords()
            )));
        }
        Ok(DiffSpace {
            name: name.to_string(),
            carrier,
            family,
        })
    }

    /// The same carrier with another family over the same coordinates.
    pub fn with_family(&self, family: GeneratorFamily) -> Result<DiffSpace, SpaceError> {
        DiffSpace::new(&self.name, self.carrier.clone(), family)
    }

    pub fn sub_family<S: AsRef<str>>(&self, names: &[S]) -> Result<DiffSpace, SpaceError> {
        self.with_family(self.family.select(names)?)
    }

    /// Embedded image of a single parameter tuple.
    pub fn embed_params(&self, params: &[f64]) -> Result<EmbeddedPoint, SpaceError> {
        let ambient = self.carrier.chart_at(params)?;
        let coords = self.family.eval_all(&ambient).map_err(|e| match e {
            SpaceError::GeneratorAt(name, source) => SpaceError::Generator {
                name,
                params: params.to_vec(),
                source,
            },
            other => other,
        })?;
        Ok(EmbeddedPoint {
            params: params.to_vec(),
            ambient,
            coords,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddedPoint {
    pub params: Vec<f64>,
    pub ambient: Vec<f64>,
    /// `(g₁(m), …, g_r(m))` in family order.
    pub coords: Vec<f64>,
}

/// Sampled image of the generator embedding, with back-references to the
/// parameters of each point.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddedCloud {
    pub generators: Vec<String>,
    pub points: Vec<EmbeddedPoint>,
}

impl EmbeddedCloud {
    /// Index of a sample whose coordinates agree with `tuple` within `tol` in
    /// every component.
    pub fn find_close(&self, tuple: &[f64], tol: f64) -> Option<usize> {
        self.points.iter().position(|p| {
            p.coords
                .iter()
                .zip(tuple)
                .all(|(a, b)| (a - b).abs() <= tol)
        })
    }

    /// Smallest max-norm distance from `tuple` to a sample.
    pub fn nearest(&self, tuple: &[f64]) -> Option<(usize, f64)> {
        self.points
            .iter()
            .enumerate()
            .map(|(i, p)| (i, chebyshev(&p.coords, tuple)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

pub(crate) fn chebyshev(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Generator embedding `m ↦ (g(m))_{g ∈ G}` over the sampled carrier.
pub fn embed(s: &DiffSpace) -> Result<EmbeddedCloud, SpaceError> {
    let grid = s.carrier.grid();
    let points = try_map(&grid, |p| s.embed_params(p))?;
    Ok(EmbeddedCloud {
        generators: s.family.names(),
        points,
    })
}

/// Superposition `ω ∘ (α₁, …, αₙ)`. The variables of `omega` are the
/// generator names listed in `args`.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothFunction {
    pub omega: Expr,
    pub args: Vec<String>,
}

impl SmoothFunction {
    pub fn new(omega: Expr, args: Vec<String>) -> Result<Self, SpaceError> {
        check_scope(&omega, &args)?;
        Ok(SmoothFunction { omega, args })
    }

    /// A generator itself, `ω(u) = u`.
    pub fn generator(name: &str) -> Self {
        SmoothFunction {
            omega: Expr::var(name),
            args: vec![name.to_string()],
        }
    }

    /// Witness whose arguments are the family generators `omega` mentions, in
    /// family order.
    pub fn over_family(omega: Expr, family: &GeneratorFamily) -> Result<Self, SpaceError> {
        let used = omega.vars();
        let args: Vec<String> = family
            .names()
            .into_iter()
            .filter(|n| used.contains(n))
            .collect();
        SmoothFunction::new(omega, args)
    }

    pub fn product(a: &SmoothFunction, b: &SmoothFunction) -> SmoothFunction {
        let mut args = a.args.clone();
        for n in &b.args {
            if !args.contains(n) {
                args.push(n.clone());
            }
        }
        SmoothFunction {
            omega: Expr::Mul(Box::new(a.omega.clone()), Box::new(b.omega.clone())),
            args,
        }
    }

    fn check_args(&self, family: &GeneratorFamily) -> Result<(), SpaceError> {
        for a in &self.args {
            family.get(a)?;
        }
        Ok(())
    }

    /// `ω(α₁(m), …, αₙ(m))`.
    pub fn eval(&self, family: &GeneratorFamily, ambient: &[f64]) -> Result<f64, SpaceError> {
        self.check_args(family)?;
        let values = self
            .args
            .iter()
            .map(|a| family.eval_one(a, ambient))
            .collect::<Result<Vec<_>, _>>()?;
        self.omega
            .eval(&Bindings::new(&self.args, &values))
            .map_err(|e| SpaceError::Superposition(self.omega.to_string(), e))
    }

    /// The superposition written out as a single expression in the ambient
    /// coordinates.
    pub fn compose(&self, family: &GeneratorFamily) -> Result<Expr, SpaceError> {
        self.check_args(family)?;
        Ok(self.omega.substitute(&|v| {
            self.args
                .iter()
                .any(|a| a == v)
                .then(|| family.get(v).map(|g| g.expr.clone()).ok())
                .flatten()
        }))
    }
}

/// `eval_smooth(f, m)`.
pub fn eval_smooth(f: &SmoothFunction, family: &GeneratorFamily, ambient: &[f64]) -> Result<f64, SpaceError> {
    f.eval(family, ambient)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Separation {
    Separates,
    /// Two parameter tuples with identical rounded embedded images.
    Collision { first: Vec<f64>, second: Vec<f64> },
}

fn rounded_key(coords: &[f64]) -> Vec<u64> {
    coords
        .iter()
        .map(|c| {
            let r = (c / POINT_ROUNDING).round();
            // -0 and +0 are the same point
            if r == 0.0 { 0 } else { r.to_bits() }
        })
        .collect()
}

/// Whether the family separates the sampled points, comparing coordinates
/// rounded to multiples of [`POINT_ROUNDING`].
pub fn separates_points(s: &DiffSpace) -> Result<Separation, SpaceError> {
    let cloud = embed(s)?;
    let mut keyed: Vec<(Vec<u64>, usize)> = cloud
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| (rounded_key(&p.coords), i))
        .collect();
    keyed.sort();
    let mut best: Option<(usize, usize)> = None;
    for w in keyed.windows(2) {
        if w[0].0 == w[1].0 {
            let pair = (w[0].1.min(w[1].1), w[0].1.max(w[1].1));
            if best.is_none_or(|b| pair < b) {
                best = Some(pair);
            }
        }
    }
    Ok(match best {
        None => Separation::Separates,
        Some((i, j)) => Separation::Collision {
            first: cloud.points[i].params.clone(),
            second: cloud.points[j].params.clone(),
        },
    })
}

/// Restriction to a parameter sub-box.
pub fn restrict(s: &DiffSpace, sub: &[Interval]) -> Result<DiffSpace, SpaceError> {
    DiffSpace::new(&s.name, s.carrier.restrict(sub)?, s.family.clone())
}

/// A map `F` between differential spaces together with the superposition
/// witnesses `w_β = β ∘ F` for every target generator `β`.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothMapWitness {
    pub target: GeneratorFamily,
    /// Target ambient coordinates as expressions in the source ambient
    /// coordinates.
    pub components: Vec<Expr>,
    pub witnesses: Vec<(String, SmoothFunction)>,
}

impl SmoothMapWitness {
    pub fn new(
        source_coords: &[String],
        target: GeneratorFamily,
        components: Vec<Expr>,
        witnesses: Vec<(String, SmoothFunction)>,
    ) -> Result<Self, SpaceError> {
        if components.len() != target.coords().len() {
            return Err(SpaceError::Dimension {
                expected: target.coords().len(),
                got: components.len(),
            });
        }
        for c in &components {
            check_scope(c, source_coords)?;
        }
        for g in target.generators() {
            if !witnesses.iter().any(|(n, _)| n == &g.name) {
                return Err(SpaceError::MissingWitness(g.name.clone()));
            }
        }
        Ok(SmoothMapWitness {
            target,
            components,
            witnesses,
        })
    }

    pub fn witness(&self, target_generator: &str) -> Result<&SmoothFunction, SpaceError> {
        self.witnesses
            .iter()
            .find(|(n, _)| n == target_generator)
            .map(|(_, w)| w)
            .ok_or_else(|| SpaceError::MissingWitness(target_generator.to_string()))
    }

    /// `F(m)` in target ambient coordinates.
    pub fn apply(&self, source_coords: &[String], ambient: &[f64]) -> Result<Vec<f64>, SpaceError> {
        let env = Bindings::new(source_coords, ambient);
        self.components
            .iter()
            .map(|c| c.eval(&env).map_err(SpaceError::MapComponent))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MapResidual {
    pub generator: String,
    pub max_residual: f64,
    /// Parameters of the sample attaining the maximum.
    pub worst_params: Vec<f64>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MapReport {
    pub residuals: Vec<MapResidual>,
    pub smooth: bool,
}

/// Check `|w_β(m) − β(F(m))| <= tol` for every sample `m` and every target
/// generator `β`.
pub fn check_smooth_map(w: &SmoothMapWitness, src: &DiffSpace, tol: f64) -> Result<MapReport, SpaceError> {
    let samples = sample(&src.carrier)?;
    let coords = src.carrier.coords().to_vec();
    let mut residuals = Vec::new();
    for beta in w.target.generators() {
        let witness = w.witness(&beta.name)?;
        let per_sample = try_map(&samples, |m| {
            let image = w.apply(&coords, &m.ambient)?;
            let direct = w.target.eval_one(&beta.name, &image)?;
            let via = witness.eval(&src.family, &m.ambient)?;
            Ok::<_, SpaceError>((via - direct).abs())
        })?;
        let (worst, max_residual) = per_sample
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |acc, (i, &r)| if r > acc.1 { (i, r) } else { acc });
        residuals.push(MapResidual {
            generator: beta.name.clone(),
            max_residual,
            worst_params: samples.get(worst).map(|s| s.params.clone()).unwrap_or_default(),
            passed: max_residual <= tol,
        });
    }
    let smooth = residuals.iter().all(|r| r.passed);
    Ok(MapReport { residuals, smooth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn coords() -> Vec<String> {
        vec!["x".into()]
    }

    fn fam(gens: &[(&str, &str)]) -> GeneratorFamily {
        let mut f = GeneratorFamily::new(coords());
        for (n, e) in gens {
            f.push(n, parse_expr(e, &["x"]).unwrap(), None).unwrap();
        }
        f
    }

    fn line_space(domain: Interval, count: usize, gens: &[(&str, &str)]) -> DiffSpace {
        DiffSpace::new("test", Carrier::line(domain, count, None).unwrap(), fam(gens)).unwrap()
    }

    #[test]
    fn open_box_sampling_respects_inset() {
        let c = Carrier::line(Interval::open(0.0, FRAC_PI_2), 5, None).unwrap();
        let pts = sample(&c).unwrap();
        assert_eq!(pts.len(), 5);
        assert_eq!(pts[0].params[0], 0.01);
        assert_eq!(pts[4].params[0], FRAC_PI_2 - 0.01);
        assert!(pts.iter().all(|p| p.params[0] >= 0.01 && p.params[0] <= FRAC_PI_2 - 0.01));
    }

    #[test]
    fn closed_two_point_grid() {
        let c = Carrier::line(Interval::closed(0.0, 1.0), 2, None).unwrap();
        let pts = sample(&c).unwrap();
        let xs: Vec<f64> = pts.iter().map(|p| p.ambient[0]).collect();
        assert_eq!(xs, vec![0.0, 1.0]);
    }

    #[test]
    fn chart_singularity_reports_node() {
        let c = Carrier::new(
            vec!["t".into()],
            vec![Interval::closed(0.0, PI)],
            vec!["x".into()],
            vec![parse_expr("tan(t)", &["t"]).unwrap()],
            SamplingPlan {
                counts: vec![3],
                inset: 0.0,
                window: vec![None],
            },
        )
        .unwrap();
        match sample(&c).unwrap_err() {
            SpaceError::Chart { params, .. } => assert_eq!(params, vec![FRAC_PI_2]),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn unbounded_axis_needs_window() {
        assert!(Carrier::line(Interval::real_line(), 11, None).is_err());
        let c = Carrier::line(Interval::real_line(), 11, Some((-5.0, 5.0))).unwrap();
        assert_eq!(c.grid().len(), 11);
    }

    #[test]
    fn grid_is_row_major() {
        let c = Carrier::new(
            vec!["a".into(), "b".into()],
            vec![Interval::closed(0.0, 1.0), Interval::closed(0.0, 2.0)],
            vec!["x".into()],
            vec![parse_expr("a + b", &["a", "b"]).unwrap()],
            SamplingPlan {
                counts: vec![2, 3],
                inset: 0.0,
                window: vec![None, None],
            },
        )
        .unwrap();
        let g = c.grid();
        assert_eq!(g[0], vec![0.0, 0.0]);
        assert_eq!(g[1], vec![0.0, 1.0]);
        assert_eq!(g[3], vec![1.0, 0.0]);
    }

    #[test]
    fn embedding_of_identity_and_square() {
        let s = line_space(Interval::closed(-2.0, 2.0), 5, &[("id", "x"), ("sq", "x^2")]);
        let p = s.embed_params(&[2.0]).unwrap();
        assert_eq!(p.coords, vec![2.0, 4.0]);
        let cloud = embed(&s).unwrap();
        assert_eq!(cloud.points.len(), 5);
        assert_eq!(cloud.generators, vec!["id", "sq"]);
    }

    #[test]
    fn one_generator_embedding_is_graph() {
        let s = line_space(Interval::closed(0.0, 1.0), 4, &[("g", "atan(x)")]);
        for p in embed(&s).unwrap().points {
            assert_eq!(p.coords[0], p.ambient[0].atan());
        }
    }

    #[test]
    fn spiral_radius_tends_to_half_pi() {
        let s = line_space(
            Interval::open(0.0, FRAC_PI_2),
            201,
            &[("gx", "x * cos(tan(x))"), ("gy", "x * sin(tan(x))")],
        );
        // independent oracle: radius of (x cos tan x, x sin tan x) is x
        for p in embed(&s).unwrap().points {
            let r = p.coords[0].hypot(p.coords[1]);
            assert!((r - p.ambient[0]).abs() < 1e-12);
        }
        let last = s.embed_params(&[FRAC_PI_2 - 1e-6]).unwrap();
        assert!((last.coords[0].hypot(last.coords[1]) - FRAC_PI_2).abs() < 1e-5);
    }

    #[test]
    fn eval_smooth_examples() {
        let f = fam(&[("id", "x"), ("sq", "x^2"), ("a", "atan(x)")]);
        let w = SmoothFunction::over_family(parse_expr("id^2", &["id"]).unwrap(), &f).unwrap();
        assert_eq!(eval_smooth(&w, &f, &[3.0]).unwrap(), 9.0);
        let w = SmoothFunction::over_family(parse_expr("id + sq", &["id", "sq"]).unwrap(), &f).unwrap();
        assert_eq!(eval_smooth(&w, &f, &[2.0]).unwrap(), 6.0);
        let w = SmoothFunction::over_family(parse_expr("sin(a)", &["a"]).unwrap(), &f).unwrap();
        assert_eq!(eval_smooth(&w, &f, &[0.0]).unwrap(), 0.0);
        let w = SmoothFunction::generator("a");
        assert_eq!(eval_smooth(&w, &f, &[1.0]).unwrap(), FRAC_PI_4);
    }

    #[test]
    fn smooth_function_scope_checked() {
        let f = fam(&[("id", "x")]);
        assert!(SmoothFunction::new(parse_expr("u", &["u"]).unwrap(), vec!["v".into()]).is_err());
        let w = SmoothFunction::new(parse_expr("u", &["u"]).unwrap(), vec!["u".into()]).unwrap();
        assert_eq!(w.eval(&f, &[1.0]).unwrap_err(), SpaceError::UnknownGenerator("u".into()));
    }

    #[test]
    fn square_does_not_separate_symmetric_grid() {
        let s = line_space(Interval::closed(-1.0, 1.0), 21, &[("sq", "x^2")]);
        match separates_points(&s).unwrap() {
            Separation::Collision { first, second } => {
                assert!((first[0] + second[0]).abs() < 1e-12);
                assert!(first[0] != second[0]);
            }
            Separation::Separates => panic!("x^2 is even"),
        }
    }

    #[test]
    fn identity_separates() {
        let s = line_space(Interval::closed(-1.0, 1.0), 21, &[("id", "x")]);
        assert_eq!(separates_points(&s).unwrap(), Separation::Separates);
    }

    #[test]
    fn spiral_separates_sampled_points() {
        let s = line_space(
            Interval::open(0.0, FRAC_PI_2),
            400,
            &[("gx", "x * cos(tan(x))"), ("gy", "x * sin(tan(x))")],
        );
        assert_eq!(separates_points(&s).unwrap(), Separation::Separates);
        // pairwise-distance oracle
        let pts = embed(&s).unwrap().points;
        let mut min_d = f64::INFINITY;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                min_d = min_d.min(chebyshev(&pts[i].coords, &pts[j].coords));
            }
        }
        assert!(min_d > 1e-6, "{min_d}");
    }

    #[test]
    fn restrict_full_box_is_identity() {
        let s = line_space(Interval::open(0.0, FRAC_PI_2), 9, &[("id", "x")]);
        let r = restrict(&s, &[Interval::open(0.0, FRAC_PI_2)]).unwrap();
        assert_eq!(r, s);
    }

    #[test]
    fn restrict_confines_samples() {
        let s = line_space(Interval::open(0.0, FRAC_PI_2), 9, &[("id", "x")]);
        let sub = Interval {
            lo: 0.0,
            hi: FRAC_PI_4,
            lo_open: true,
            hi_open: false,
        };
        let r = restrict(&s, &[sub]).unwrap();
        let pts = sample(&r.carrier).unwrap();
        assert!(!pts.is_empty());
        assert!(pts.iter().all(|p| p.params[0] > 0.0 && p.params[0] <= FRAC_PI_4));
    }

    #[test]
    fn restrict_empty_is_error() {
        let s = line_space(Interval::open(0.0, 1.0), 9, &[("id", "x")]);
        assert_eq!(
            restrict(&s, &[Interval::closed(2.0, 3.0)]).unwrap_err(),
            SpaceError::EmptyRestriction
        );
    }

    #[test]
    fn restrict_then_embed_commutes() {
        let s = line_space(Interval::closed(-3.0, 3.0), 61, &[("id", "x"), ("s", "sin(x)")]);
        let sub = [Interval::open(-1.0, 2.0)];
        let lhs = embed(&restrict(&s, &sub).unwrap()).unwrap();
        let mut rhs = embed(&s).unwrap();
        rhs.points.retain(|p| sub[0].contains(p.params[0]));
        assert_eq!(lhs, rhs);
    }

    fn map_to_line(component: &str, witness: &str, src: &GeneratorFamily) -> SmoothMapWitness {
        let target = GeneratorFamily::new(vec!["y".into()])
            .with("id", parse_expr("y", &["y"]).unwrap())
            .unwrap();
        let w = SmoothFunction::over_family(
            parse_expr(witness, &src.names()).unwrap(),
            src,
        )
        .unwrap();
        SmoothMapWitness::new(
            &coords(),
            target,
            vec![parse_expr(component, &["x"]).unwrap()],
            vec![("id".into(), w)],
        )
        .unwrap()
    }

    #[test]
    fn identity_map_is_smooth() {
        let s = line_space(Interval::closed(-2.0, 2.0), 41, &[("id", "x")]);
        let w = map_to_line("x", "id", &s.family);
        let r = check_smooth_map(&w, &s, 1e-12).unwrap();
        assert!(r.smooth);
        assert_eq!(r.residuals[0].max_residual, 0.0);
    }

    #[test]
    fn squaring_map_is_smooth() {
        let s = line_space(Interval::closed(-2.0, 2.0), 41, &[("id", "x")]);
        let w = map_to_line("x^2", "id^2", &s.family);
        let r = check_smooth_map(&w, &s, 1e-12).unwrap();
        assert!(r.smooth);
        assert_eq!(r.residuals[0].max_residual, 0.0);
    }

    #[test]
    fn identity_out_of_even_structure_fails() {
        let s = line_space(Interval::closed(-1.0, 1.0), 21, &[("sq", "x^2")]);
        // brute-force scan: no polynomial in x^2 matches x at both x = 1 and x = -1
        for witness in ["sq", "sq^2", "1 - sq", "sq + sq^2 / 2", "sqrt(sq)"] {
            let w = map_to_line("x", witness, &s.family);
            let r = check_smooth_map(&w, &s, 1e-6).unwrap();
            assert!(!r.smooth, "{witness}");
            let scan = [-1.0f64, 1.0]
                .iter()
                .map(|&x| {
                    let v = w.witness("id").unwrap().eval(&s.family, &[x]).unwrap();
                    (v - x).abs()
                })
                .fold(0.0, f64::max);
            assert!(scan >= 1.0);
            assert!(r.residuals[0].max_residual >= scan);
        }
    }

    #[test]
    fn missing_witness_rejected() {
        let target = GeneratorFamily::new(vec!["y".into()])
            .with("id", parse_expr("y", &["y"]).unwrap())
            .unwrap();
        let err = SmoothMapWitness::new(&coords(), target, vec![Expr::var("x")], vec![]).unwrap_err();
        assert_eq!(err, SpaceError::MissingWitness("id".into()));
    }

    #[test]
    fn duplicate_generator_rejected() {
        let mut f = fam(&[("g", "x")]);
        assert_eq!(
            f.push("g", Expr::var("x"), None).unwrap_err(),
            SpaceError::DuplicateGenerator("g".into())
        );
    }

    #[test]
    fn compose_writes_out_superposition() {
        let f = fam(&[("a", "atan(x)"), ("sq", "x^2")]);
        let w = SmoothFunction::over_family(parse_expr("a * sq", &["a", "sq"]).unwrap(), &f).unwrap();
        let e = w.compose(&f).unwrap();
        assert_eq!(e.to_string(), "atan(x) * x^2");
    }
}
