//! Differential completion along probe sequences.
//!
//! The completion of `φ_G(M)` is approximated by the sampled embedding plus
//! the limits of those probes that are Cauchy for the family. Generator
//! extensions to the adjoined points are coordinate projections, and the
//! comparison map between completions for `G ⊆ H` projects limit tuples
//! onto the `G` coordinates.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::expr::Expr;
use crate::space::{chebyshev, embed, DiffSpace, EmbeddedCloud, GeneratorFamily, SpaceError};
use crate::uniform::{probe_cauchy, CauchyStatus, CauchyVerdict, Probe, UniformError};

/// Two limit tuples closer than this in every coordinate are the same point.
pub const DEDUP_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum CompletionError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("generators {0:?} are not part of the larger family")]
    NotSubfamily(Vec<String>),
    #[error("completions are built over different carriers")]
    CarrierMismatch,
    #[error("monomial degree must be at least 1")]
    BadDegree,
}

/// A point of `ℝ^G` adjoined as the limit of a Cauchy probe.
#[derive(Clone, Debug, PartialEq)]
pub struct AdjoinedPoint {
    pub probe: String,
    pub limit: Vec<f64>,
    /// Largest tail oscillation over the generator coordinates.
    pub oscillation: f64,
}

/// Where the limit of a Cauchy probe landed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Placement {
    Adjoined(usize),
    /// Within [`DEDUP_TOL`] of a sampled base point.
    AtSample(usize),
    /// Within [`DEDUP_TOL`] of a point adjoined by an earlier probe.
    SameAs(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeOutcome {
    pub probe: String,
    /// Probe failures (leaving the carrier, singular evaluation) are kept
    /// here rather than aborting the completion.
    pub verdict: Result<CauchyVerdict, UniformError>,
    pub placement: Option<Placement>,
}

impl ProbeOutcome {
    pub fn status_label(&self) -> String {
        match &self.verdict {
            Ok(v) => v.status.to_string(),
            Err(_) => "failed".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompletedSpace {
    pub base: EmbeddedCloud,
    pub adjoined: Vec<AdjoinedPoint>,
    pub outcomes: Vec<ProbeOutcome>,
}

impl CompletedSpace {
    pub fn generators(&self) -> &[String] {
        &self.base.generators
    }

    pub fn len(&self) -> usize {
        self.base.points.len() + self.adjoined.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Run further probes against the space, adjoining new limits.
    /// Returns the number of points adjoined.
    pub fn extend(&mut self, s: &DiffSpace, probes: &[Probe], tol: f64, tail: usize) -> usize {
        let verdicts = crate::par::map(probes, |p| probe_cauchy(s, p, tol, tail));
        let before = self.adjoined.len();
        for (p, verdict) in probes.iter().zip(verdicts) {
            let placement = match &verdict {
                Ok(CauchyVerdict {
                    status: CauchyStatus::Cauchy,
                    limit: Some(limit),
                    tail_oscillation,
                    ..
                }) => Some(self.place(&p.name, limit, tail_oscillation)),
                _ => None,
            };
            self.outcomes.push(ProbeOutcome {
                probe: p.name.clone(),
                verdict,
                placement,
            });
        }
        self.adjoined.len() - before
    }

    fn place(&mut self, probe: &str, limit: &[f64], osc: &[f64]) -> Placement {
        if let Some(i) = self.base.find_close(limit, DEDUP_TOL) {
            return Placement::AtSample(i);
        }
        if let Some(j) = self.adjoined.iter().position(|a| close(&a.limit, limit)) {
            return Placement::SameAs(j);
        }
        self.adjoined.push(AdjoinedPoint {
            probe: probe.to_string(),
            limit: limit.to_vec(),
            oscillation: osc.iter().copied().fold(0.0, f64::max),
        });
        Placement::Adjoined(self.adjoined.len() - 1)
    }

    pub fn adjoined_by_probe(&self, probe: &str) -> Option<usize> {
        self.adjoined.iter().position(|a| a.probe == probe)
    }
}

fn close(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= DEDUP_TOL)
}

/// Sampled embedding together with the limits of all Cauchy probes.
pub fn complete(s: &DiffSpace, probes: &[Probe], tol: f64, tail: usize) -> Result<CompletedSpace, CompletionError> {
    let mut cs = CompletedSpace {
        base: embed(s)?,
        adjoined: Vec::new(),
        outcomes: Vec::new(),
    };
    cs.extend(s, probes, tol, tail);
    Ok(cs)
}

/// Values of the continuous extension `g̃` of one generator.
#[derive(Clone, Debug, PartialEq)]
pub struct Extension {
    pub generator: String,
    pub base: Vec<f64>,
    pub adjoined: Vec<f64>,
}

pub fn extend_function(g: &str, cs: &CompletedSpace) -> Result<Extension, CompletionError> {
    let k = cs
        .generators()
        .iter()
        .position(|n| n == g)
        .ok_or_else(|| CompletionError::UnknownGenerator(g.to_string()))?;
    Ok(Extension {
        generator: g.to_string(),
        base: cs.base.points.iter().map(|p| p.coords[k]).collect(),
        adjoined: cs.adjoined.iter().map(|a| a.limit[k]).collect(),
    })
}

/// Restrict a tuple over `from` to the coordinates named in `to`.
pub fn project<S: AsRef<str>, T: AsRef<str>>(
    tuple: &[f64],
    from: &[S],
    to: &[T],
) -> Result<Vec<f64>, CompletionError> {
    to.iter()
        .map(|name| {
            from.iter()
                .position(|f| f.as_ref() == name.as_ref())
                .map(|i| tuple[i])
                .ok_or_else(|| CompletionError::UnknownGenerator(name.as_ref().to_string()))
        })
        .collect()
}

/// Image of a point of the larger completion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IotaTarget {
    Base(usize),
    Adjoined(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct IotaEntry {
    /// Index of the adjoined point in the larger completion.
    pub source: usize,
    pub probe: String,
    pub projected: Vec<f64>,
    pub target: Option<IotaTarget>,
    /// `max_g |g̃_G(ι(p)) − g̃_H(p)|`.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IotaReport {
    pub base_fixed: bool,
    pub entries: Vec<IotaEntry>,
    /// Adjoined points of the smaller completion outside the image.
    pub omitted: Vec<usize>,
}

impl IotaReport {
    /// Base points fixed and `g̃_G ∘ ι = g̃_H` on every adjoined point.
    pub fn passed(&self) -> bool {
        self.base_fixed
            && self
                .entries
                .iter()
                .all(|e| e.target.is_some() && e.residual <= DEDUP_TOL)
    }

    /// Whether the image reaches every point of the smaller completion.
    pub fn is_onto(&self) -> bool {
        self.omitted.is_empty()
    }
}

/// Comparison map from the completion over `H` to the completion over
/// `G ⊆ H` of the same carrier.
pub fn iota(cs_h: &CompletedSpace, cs_g: &CompletedSpace) -> Result<IotaReport, CompletionError> {
    let h_names: BTreeSet<&String> = cs_h.generators().iter().collect();
    let missing: Vec<String> = cs_g
        .generators()
        .iter()
        .filter(|g| !h_names.contains(g))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(CompletionError::NotSubfamily(missing));
    }
    if cs_h.base.points.len() != cs_g.base.points.len()
        || cs_h
            .base
            .points
            .iter()
            .zip(&cs_g.base.points)
            .any(|(a, b)| a.params != b.params)
    {
        return Err(CompletionError::CarrierMismatch);
    }

    let mut base_fixed = true;
    for (ph, pg) in cs_h.base.points.iter().zip(&cs_g.base.points) {
        let proj = project(&ph.coords, cs_h.generators(), cs_g.generators())?;
        base_fixed &= proj == pg.coords;
    }

    let mut hit = vec![false; cs_g.adjoined.len()];
    let mut entries = Vec::new();
    for (i, a) in cs_h.adjoined.iter().enumerate() {
        let projected = project(&a.limit, cs_h.generators(), cs_g.generators())?;
        let target = cs_g
            .adjoined_by_probe(&a.probe)
            .or_else(|| cs_g.adjoined.iter().position(|b| close(&b.limit, &projected)))
            .map(IotaTarget::Adjoined)
            .or_else(|| cs_g.base.find_close(&projected, DEDUP_TOL).map(IotaTarget::Base));
        let residual = match target {
            Some(IotaTarget::Adjoined(j)) => {
                hit[j] = true;
                chebyshev(&cs_g.adjoined[j].limit, &projected)
            }
            Some(IotaTarget::Base(j)) => chebyshev(&cs_g.base.points[j].coords, &projected),
            None => f64::INFINITY,
        };
        entries.push(IotaEntry {
            source: i,
            probe: a.probe.clone(),
            projected,
            target,
            residual,
        });
    }
    let omitted = hit
        .iter()
        .enumerate()
        .filter(|(_, &h)| !h)
        .map(|(j, _)| j)
        .collect();
    Ok(IotaReport {
        base_fixed,
        entries,
        omitted,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Order {
    /// `G ⊊ H`.
    Below,
    /// `G ⊋ H`.
    Above,
    Equal,
    Incomparable,
}

impl std::fmt::Display for Order {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Order::Below => "below",
            Order::Above => "above",
            Order::Equal => "equal",
            Order::Incomparable => "incomparable",
        })
    }
}

/// Order of the completions over `G` and `H` by inclusion of names.
pub fn order_compare<S: AsRef<str>, T: AsRef<str>>(g: &[S], h: &[T]) -> Order {
    let g: BTreeSet<&str> = g.iter().map(|s| s.as_ref()).collect();
    let h: BTreeSet<&str> = h.iter().map(|s| s.as_ref()).collect();
    match (g.is_subset(&h), h.is_subset(&g)) {
        (true, true) => Order::Equal,
        (true, false) => Order::Below,
        (false, true) => Order::Above,
        (false, false) => Order::Incomparable,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompletenessRow {
    pub probe: String,
    pub coarse: Result<CauchyVerdict, UniformError>,
    pub fine: Result<CauchyVerdict, UniformError>,
    /// Distance from the coarse limit to the nearest sample, if Cauchy.
    pub coarse_distance: Option<f64>,
    /// Distance from the fine limit to the nearest sample, if Cauchy.
    pub fine_distance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompletenessReport {
    pub tol: f64,
    pub rows: Vec<CompletenessRow>,
}

impl CompletenessReport {
    /// Every fine-Cauchy probe converges to a sampled point.
    pub fn passed(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.fine_distance.is_none_or(|d| d <= self.tol))
    }

    /// Probes that are coarse-Cauchy with a limit outside the samples; any
    /// such probe contradicts completeness of the coarse structure.
    pub fn coarse_counterexamples(&self) -> Vec<&str> {
        self.rows
            .iter()
            .filter(|r| r.coarse_distance.is_some_and(|d| d > self.tol))
            .map(|r| r.probe.as_str())
            .collect()
    }
}

fn limit_distance(s: &DiffSpace, v: &Result<CauchyVerdict, UniformError>) -> Result<Option<f64>, SpaceError> {
    match v {
        Ok(CauchyVerdict { limit: Some(l), .. }) => Ok(embed(s)?.nearest(l).map(|(_, d)| d)),
        _ => Ok(None),
    }
}

/// Checks that probes Cauchy for the fine family `s.family` converge inside
/// the sampled carrier, and reports which are Cauchy for the coarse family.
pub fn completeness_probe_test<S: AsRef<str>>(
    s: &DiffSpace,
    coarse: &[S],
    probes: &[Probe],
    tol: f64,
    tail: usize,
) -> Result<CompletenessReport, CompletionError> {
    let g = s.sub_family(coarse)?;
    let rows = crate::par::try_map(probes, |p| -> Result<CompletenessRow, CompletionError> {
        let coarse = probe_cauchy(&g, p, tol, tail);
        let fine = probe_cauchy(s, p, tol, tail);
        Ok(CompletenessRow {
            probe: p.name.clone(),
            coarse_distance: limit_distance(&g, &coarse)?,
            fine_distance: limit_distance(s, &fine)?,
            coarse,
            fine,
        })
    })?;
    Ok(CompletenessReport { tol, rows })
}

/// The family together with all monomials of degree `2..=degree` in its
/// generators, named like `g*h` and `g^2`.
pub fn maximal_family(family: &GeneratorFamily, degree: u32) -> Result<GeneratorFamily, CompletionError> {
    if degree == 0 {
        return Err(CompletionError::BadDegree);
    }
    let mut out = family.clone();
    let gens = family.generators();
    let mut stack: Vec<Vec<usize>> = (0..gens.len()).map(|i| vec![i]).collect();
    let mut monomials = Vec::new();
    while let Some(m) = stack.pop() {
        if m.len() as u32 >= 2 {
            monomials.push(m.clone());
        }
        if (m.len() as u32) < degree {
            let last = *m.last().expect("nonempty monomial");
            for j in (last..gens.len()).rev() {
                let mut next = m.clone();
                next.push(j);
                stack.push(next);
            }
        }
    }
    monomials.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    for m in monomials {
        let mut factors: Vec<(usize, i32)> = Vec::new();
        for &i in &m {
            match factors.last_mut() {
                Some((j, k)) if *j == i => *k += 1,
                _ => factors.push((i, 1)),
            }
        }
        let name = factors
            .iter()
            .map(|&(i, k)| {
                if k == 1 {
                    gens[i].name.clone()
                } else {
                    format!("{}^{k}", gens[i].name)
                }
            })
            .collect::<Vec<_>>()
            .join("*");
        let expr = Expr::product(
            factors
                .iter()
                .map(|&(i, k)| Expr::pow(gens[i].expr.clone(), k)),
        );
        out.push(&name, expr, None)?;
    }
    Ok(out)
}
