//! Uniform structures induced by generator families.
//!
//! The base entourages are `V(f₁, …, f_k, ε) = {(x, y) : |fᵢ(x) − fᵢ(y)| < ε}`.
//! Cauchy filters on an infinite carrier are represented by probe sequences;
//! the exact filter calculus lives in [`crate::filters`].

use std::fmt;

use thiserror::Error;

use crate::expr::{Bindings, EvalError, Expr};
use crate::space::{DiffSpace, EmbeddedPoint, GeneratorFamily, SamplePoint, SpaceError};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum UniformError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("entourage radius must be positive, got {0}")]
    BadRadius(f64),
    #[error("entourage needs at least one generator")]
    EmptyEntourage,
    #[error("probe `{probe}` at n = {n}: {source}")]
    ProbeEval {
        probe: String,
        n: u64,
        #[source]
        source: EvalError,
    },
    #[error("probe `{probe}` leaves the carrier at n = {n} (parameters {params:?})")]
    ProbeOutside {
        probe: String,
        n: u64,
        params: Vec<f64>,
    },
    #[error("probe `{probe}` fails to embed at n = {n}: {source}")]
    ProbeEmbed {
        probe: String,
        n: u64,
        #[source]
        source: SpaceError,
    },
    #[error("invalid probe `{0}`: {1}")]
    BadProbe(String, String),
}

/// `V(f₁, …, f_k, ε)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Entourage {
    pub generators: Vec<String>,
    pub eps: f64,
}

impl Entourage {
    pub fn new(generators: Vec<String>, eps: f64) -> Result<Self, UniformError> {
        if generators.is_empty() {
            return Err(UniformError::EmptyEntourage);
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(UniformError::BadRadius(eps));
        }
        Ok(Entourage { generators, eps })
    }
}

impl fmt::Display for Entourage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "V({};{})", self.generators.join(","), self.eps)
    }
}

/// Strict-inequality membership `(x, y) ∈ V`.
pub fn entourage_contains(
    family: &GeneratorFamily,
    v: &Entourage,
    x: &[f64],
    y: &[f64],
) -> Result<bool, UniformError> {
    for g in &v.generators {
        let d = (family.eval_one(g, x)? - family.eval_one(g, y)?).abs();
        if d >= v.eps {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `max_i |fᵢ(x) − fᵢ(y)|`, the canonical pseudometric of a finite family.
pub fn pseudometric<S: AsRef<str>>(
    family: &GeneratorFamily,
    names: &[S],
    x: &[f64],
    y: &[f64],
) -> Result<f64, UniformError> {
    let mut d = 0.0f64;
    for g in names {
        let g = g.as_ref();
        d = d.max((family.eval_one(g, x)? - family.eval_one(g, y)?).abs());
    }
    Ok(d)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub x: SamplePoint,
    pub y: SamplePoint,
    /// `d_G(x, y) < ε`.
    pub d_coarse: f64,
    /// First target generator with `|h(x) − h(y)| >= ε₀`.
    pub violated: String,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Refinement {
    /// No sampled pair violates; not a proof of refinement.
    Refines,
    Witness(Witness),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefinementRow {
    pub target: Entourage,
    pub eps: f64,
    pub verdict: Refinement,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefinementReport {
    pub coarse: Vec<String>,
    pub rows: Vec<RefinementRow>,
}

/// Counterexample search for `V(G, ε) ⊆ V_target` over sampled pairs.
///
/// For each target entourage and candidate `ε`, looks for a pair with
/// `d_G(x, y) < ε` that is not in the target. Each sample is first paired
/// with the one at first-coordinate distance nearest `ε/2` above it, in
/// increasing order; if none of those pairs violates, every pair is visited
/// by rank distance.
pub fn compare_uniformities<S: AsRef<str>>(
    family: &GeneratorFamily,
    coarse: &[S],
    targets: &[Entourage],
    eps_grid: &[f64],
    samples: &[SamplePoint],
) -> Result<RefinementReport, UniformError> {
    let coarse: Vec<String> = coarse.iter().map(|s| s.as_ref().to_string()).collect();
    if coarse.is_empty() {
        return Err(UniformError::EmptyEntourage);
    }
    for &e in eps_grid {
        if !(e > 0.0 && e.is_finite()) {
            return Err(UniformError::BadRadius(e));
        }
    }
    let coarse_fam = family.select(&coarse)?;
    let g_vals: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| coarse_fam.eval_all(&s.ambient))
        .collect::<Result<_, _>>()?;
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| g_vals[a][0].total_cmp(&g_vals[b][0]).then(a.cmp(&b)));

    let mut rows = Vec::new();
    for target in targets {
        let target_fam = family.select(&target.generators)?;
        let h_vals: Vec<Vec<f64>> = samples
            .iter()
            .map(|s| target_fam.eval_all(&s.ambient))
            .collect::<Result<_, _>>()?;
        for &eps in eps_grid {
            let verdict = search_witness(&order, &g_vals, &h_vals, target, eps)
                .map(|(a, b, d, k)| {
                    Refinement::Witness(Witness {
                        x: samples[a].clone(),
                        y: samples[b].clone(),
                        d_coarse: d,
                        violated: target.generators[k].clone(),
                    })
                })
                .unwrap_or(Refinement::Refines);
            rows.push(RefinementRow {
                target: target.clone(),
                eps,
                verdict,
            });
        }
    }
    Ok(RefinementReport { coarse, rows })
}

fn check_pair(
    a: usize,
    b: usize,
    g_vals: &[Vec<f64>],
    h_vals: &[Vec<f64>],
    target: &Entourage,
    eps: f64,
) -> Option<(usize, usize, f64, usize)> {
    let d = g_vals[a]
        .iter()
        .zip(&g_vals[b])
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max);
    if d >= eps {
        return None;
    }
    h_vals[a]
        .iter()
        .zip(&h_vals[b])
        .position(|(p, q)| (p - q).abs() >= target.eps)
        .map(|k| (a, b, d, k))
}

/// Pairs each sample with the one whose first coarse coordinate is nearest
/// `ε/2` above it, and falls back to scanning all rank gaps.
fn search_witness(
    order: &[usize],
    g_vals: &[Vec<f64>],
    h_vals: &[Vec<f64>],
    target: &Entourage,
    eps: f64,
) -> Option<(usize, usize, f64, usize)> {
    let n = order.len();
    let keys: Vec<f64> = order.iter().map(|&i| g_vals[i][0]).collect();
    for i in 0..n {
        let want = keys[i] + eps / 2.0;
        let j = keys.partition_point(|&k| k < want);
        let partner = [j.checked_sub(1), Some(j)]
            .into_iter()
            .flatten()
            .filter(|&j| j > i && j < n)
            .min_by(|&x, &y| (keys[x] - want).abs().total_cmp(&(keys[y] - want).abs()));
        if let Some(found) = partner.and_then(|j| check_pair(order[i], order[j], g_vals, h_vals, target, eps)) {
            return Some(found);
        }
    }
    for gap in 1..n {
        let mut any_close = false;
        for i in 0..n - gap {
            let (a, b) = (order[i], order[i + gap]);
            if g_vals[b][0] - g_vals[a][0] >= eps {
                continue;
            }
            any_close = true;
            if let Some(found) = check_pair(a, b, g_vals, h_vals, target, eps) {
                return Some(found);
            }
        }
        // first-coordinate gaps only grow with rank distance
        if !any_close {
            break;
        }
    }
    None
}

/// Index sequence `n₀, n₀+1, …, n_max` mapped into the parameter box.
#[derive(Clone, Debug, PartialEq)]
pub struct Probe {
    pub name: String,
    /// One expression in `n` per carrier parameter.
    pub exprs: Vec<Expr>,
    pub start: u64,
    pub end: u64,
}

impl Probe {
    pub const INDEX: &'static str = "n";

    pub fn new(name: &str, exprs: Vec<Expr>, start: u64, end: u64) -> Result<Self, UniformError> {
        if exprs.is_empty() {
            return Err(UniformError::BadProbe(name.into(), "no expressions".into()));
        }
        if end < start {
            return Err(UniformError::BadProbe(name.into(), format!("empty schedule {start}..{end}")));
        }
        for e in &exprs {
            if let Some(v) = e.vars().into_iter().find(|v| v != Probe::INDEX) {
                return Err(UniformError::BadProbe(name.into(), format!("unknown variable `{v}`")));
            }
        }
        Ok(Probe {
            name: name.to_string(),
            exprs,
            start,
            end,
        })
    }

    pub fn len(&self) -> usize {
        (self.end - self.start + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn params_at(&self, n: u64) -> Result<Vec<f64>, UniformError> {
        let idx = [n as f64];
        let env = Bindings::new(&[Probe::INDEX], &idx);
        self.exprs
            .iter()
            .map(|e| {
                e.eval(&env).map_err(|source| UniformError::ProbeEval {
                    probe: self.name.clone(),
                    n,
                    source,
                })
            })
            .collect()
    }

    /// Embedded probe points over the whole schedule.
    pub fn trace(&self, s: &DiffSpace) -> Result<Vec<EmbeddedPoint>, UniformError> {
        if self.exprs.len() != s.carrier.params().len() {
            return Err(UniformError::BadProbe(
                self.name.clone(),
                format!(
                    "{} expressions for {} parameters",
                    self.exprs.len(),
                    s.carrier.params().len()
                ),
            ));
        }
        let idx: Vec<u64> = (self.start..=self.end).collect();
        crate::par::try_map(&idx, |&n| {
            let params = self.params_at(n)?;
            if !s.carrier.contains_params(&params) {
                return Err(UniformError::ProbeOutside {
                    probe: self.name.clone(),
                    n,
                    params,
                });
            }
            s.embed_params(&params).map_err(|source| UniformError::ProbeEmbed {
                probe: self.name.clone(),
                n,
                source,
            })
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CauchyStatus {
    Cauchy,
    Escaping,
    Undecided,
}

impl fmt::Display for CauchyStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CauchyStatus::Cauchy => "cauchy",
            CauchyStatus::Escaping => "escaping",
            CauchyStatus::Undecided => "undecided",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CauchyVerdict {
    pub status: CauchyStatus,
    /// Per-generator `max − min` over the tail.
    pub tail_oscillation: Vec<f64>,
    /// Coordinate-wise tail mean; present exactly when the probe is Cauchy.
    pub limit: Option<Vec<f64>>,
    /// Parameters of the final probe point.
    pub last_params: Vec<f64>,
}

fn oscillation(points: &[EmbeddedPoint], coord: usize) -> f64 {
    let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p.coords[coord]), hi.max(p.coords[coord]))
    });
    hi - lo
}

/// Sequence-level Cauchy test.
///
/// Cauchy when the last `tail` embedded points are within `tol` of each other
/// in every generator coordinate. Escaping when, for some coordinate, the
/// oscillation over consecutive `tail`-long windows never decreases (up to
/// `tol`) and ends above `10·tol`. Undecided otherwise.
pub fn probe_cauchy(s: &DiffSpace, p: &Probe, tol: f64, tail: usize) -> Result<CauchyVerdict, UniformError> {
    if tail < 2 || tail > p.len() {
        return Err(UniformError::BadProbe(
            p.name.clone(),
            format!("tail {tail} does not fit a schedule of {} indices", p.len()),
        ));
    }
    let trace = p.trace(s)?;
    let r = s.family.len();
    let tail_pts = &trace[trace.len() - tail..];
    let tail_oscillation: Vec<f64> = (0..r).map(|c| oscillation(tail_pts, c)).collect();
    let last_params = trace.last().map(|t| t.params.clone()).unwrap_or_default();

    if tail_oscillation.iter().all(|&o| o <= tol) {
        let mut mean = vec![0.0; r];
        for (k, pt) in tail_pts.iter().enumerate() {
            for (m, &c) in mean.iter_mut().zip(&pt.coords) {
                *m += (c - *m) / (k + 1) as f64;
            }
        }
        return Ok(CauchyVerdict {
            status: CauchyStatus::Cauchy,
            tail_oscillation,
            limit: Some(mean),
            last_params,
        });
    }

    let windows: Vec<&[EmbeddedPoint]> = trace.rchunks_exact(tail).rev().collect();
    let escaping = windows.len() >= 2
        && (0..r).any(|c| {
            let osc: Vec<f64> = windows.iter().map(|w| oscillation(w, c)).collect();
            osc.windows(2).all(|w| w[1] >= w[0] - tol) && osc[osc.len() - 1] > 10.0 * tol
        });
    Ok(CauchyVerdict {
        status: if escaping {
            CauchyStatus::Escaping
        } else {
            CauchyStatus::Undecided
        },
        tail_oscillation,
        limit: None,
        last_params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;
    use crate::space::{embed, sample, Carrier, Interval};
    use std::f64::consts::FRAC_PI_2;

    fn family(gens: &[(&str, &str)]) -> GeneratorFamily {
        let mut f = GeneratorFamily::new(vec!["x".into()]);
        for (n, e) in gens {
            f.push(n, parse_expr(e, &["x"]).unwrap(), None).unwrap();
        }
        f
    }

    fn real_line(gens: &[(&str, &str)], window: (f64, f64), count: usize) -> DiffSpace {
        DiffSpace::new(
            "R",
            Carrier::line(Interval::real_line(), count, Some(window)).unwrap(),
            family(gens),
        )
        .unwrap()
    }

    fn probe(text: &str, start: u64, end: u64) -> Probe {
        Probe::new("p", vec![parse_expr(text, &["n"]).unwrap()], start, end).unwrap()
    }

    fn v(gens: &[&str], eps: f64) -> Entourage {
        Entourage::new(gens.iter().map(|s| s.to_string()).collect(), eps).unwrap()
    }

    #[test]
    fn entourage_membership_examples() {
        let f = family(&[("id", "x"), ("sq", "x^2")]);
        assert!(entourage_contains(&f, &v(&["id"], 1.0), &[0.0], &[0.7]).unwrap());
        assert!(!entourage_contains(&f, &v(&["id"], 1.0), &[0.0], &[1.5]).unwrap());
        // |10.05^2 - 10^2| = 1.0025 (direct arithmetic)
        assert!(!entourage_contains(&f, &v(&["id", "sq"], 1.0), &[10.0], &[10.05]).unwrap());
        assert!((10.05f64.powi(2) - 100.0 - 1.0025).abs() < 1e-12);
    }

    #[test]
    fn entourage_rejects_bad_radius() {
        assert_eq!(
            Entourage::new(vec!["id".into()], 0.0).unwrap_err(),
            UniformError::BadRadius(0.0)
        );
        assert!(Entourage::new(vec![], 1.0).is_err());
    }

    #[test]
    fn pseudometric_examples() {
        let f = family(&[("id", "x"), ("sq", "x^2")]);
        assert_eq!(pseudometric(&f, &["id"], &[1.0], &[2.0]).unwrap(), 1.0);
        assert_eq!(pseudometric(&f, &["id", "sq"], &[1.0], &[2.0]).unwrap(), 3.0);
        assert_eq!(pseudometric(&f, &["id", "sq"], &[1.7], &[1.7]).unwrap(), 0.0);
    }

    #[test]
    fn parabola_witness_at_ten() {
        // samples covering [0, 20] with step 0.05
        let s = DiffSpace::new(
            "R",
            Carrier::line(Interval::closed(0.0, 20.0), 401, None).unwrap(),
            family(&[("id", "x"), ("sq", "x^2")]),
        )
        .unwrap();
        let samples = sample(&s.carrier).unwrap();
        let rep = compare_uniformities(&s.family, &["id"], &[v(&["sq"], 1.0)], &[0.1], &samples).unwrap();
        match &rep.rows[0].verdict {
            Refinement::Witness(w) => {
                assert_eq!(w.x.ambient[0], 10.0);
                assert!((w.y.ambient[0] - 10.05).abs() < 1e-12);
                assert!(w.d_coarse < 0.1);
                assert_eq!(w.violated, "sq");
                // arithmetic oracle
                let dsq = w.y.ambient[0].powi(2) - w.x.ambient[0].powi(2);
                assert!(dsq >= 1.0 && (dsq - 1.0025).abs() < 1e-9);
            }
            Refinement::Refines => panic!("expected witness"),
        }
    }

    #[test]
    fn finer_family_refines_coarser_target() {
        let s = real_line(&[("id", "x"), ("sq", "x^2")], (-5.0, 5.0), 201);
        let samples = sample(&s.carrier).unwrap();
        // G ⊇ target generators: V(G, ε) ⊆ V(target, ε)
        let rep = compare_uniformities(&s.family, &["id", "sq"], &[v(&["id"], 0.5)], &[0.5, 0.1], &samples)
            .unwrap();
        assert!(rep.rows.iter().all(|r| r.verdict == Refinement::Refines));
        // G = H with the same radius
        let rep = compare_uniformities(&s.family, &["sq"], &[v(&["sq"], 0.3)], &[0.3], &samples).unwrap();
        assert_eq!(rep.rows[0].verdict, Refinement::Refines);
    }

    #[test]
    fn atan_probe_is_cauchy_towards_half_pi() {
        let s = real_line(&[("g", "atan(x)")], (-20.0, 20.0), 41);
        let verdict = probe_cauchy(&s, &probe("n", 1000, 1050), 1e-3, 50).unwrap();
        assert_eq!(verdict.status, CauchyStatus::Cauchy);
        let lim = verdict.limit.unwrap()[0];
        // direct evaluation: tail mean of atan(n), n = 1001..1050
        let oracle: f64 = (1001..=1050).map(|n| (n as f64).atan()).sum::<f64>() / 50.0;
        assert!((lim - oracle).abs() < 1e-12);
        assert!((lim - FRAC_PI_2).abs() < 1e-3);
    }

    #[test]
    fn identity_probe_escapes() {
        let s = real_line(&[("id", "x")], (-20.0, 20.0), 41);
        let verdict = probe_cauchy(&s, &probe("n", 1000, 1199), 1e-6, 50).unwrap();
        assert_eq!(verdict.status, CauchyStatus::Escaping);
        assert!(verdict.limit.is_none());
    }

    #[test]
    fn constant_probe_limit_is_exact() {
        let s = real_line(&[("g", "atan(x)"), ("e", "exp(x)")], (-20.0, 20.0), 41);
        let verdict = probe_cauchy(&s, &probe("0.3", 1, 60), 1e-9, 50).unwrap();
        assert_eq!(verdict.status, CauchyStatus::Cauchy);
        let expected = s.embed_params(&[0.3]).unwrap().coords;
        assert_eq!(verdict.limit.unwrap(), expected);
    }

    #[test]
    fn bounded_oscillation_is_undecided() {
        let s = real_line(&[("s", "sin(x)")], (-20.0, 20.0), 41);
        let verdict = probe_cauchy(&s, &probe("n", 1, 400), 1e-6, 50).unwrap();
        assert_eq!(verdict.status, CauchyStatus::Undecided);
    }

    #[test]
    fn probe_outside_carrier_is_error() {
        let s = DiffSpace::new(
            "I",
            Carrier::line(Interval::open(0.0, 1.0), 11, None).unwrap(),
            family(&[("id", "x")]),
        )
        .unwrap();
        let err = probe_cauchy(&s, &probe("n", 1, 100), 1e-6, 50).unwrap_err();
        assert!(matches!(err, UniformError::ProbeOutside { n: 1, .. }));
    }

    #[test]
    fn bad_probe_definitions() {
        assert!(Probe::new("p", vec![Expr::var("m")], 1, 2).is_err());
        assert!(Probe::new("p", vec![Expr::var("n")], 5, 2).is_err());
        let s = real_line(&[("id", "x")], (-1.0, 1.0), 3);
        assert!(probe_cauchy(&s, &probe("1/n", 1, 10), 1e-6, 50).is_err());
    }

    #[test]
    fn monotone_cauchy_transfer() {
        // H = G ∪ {tan}: any H-Cauchy probe is G-Cauchy
        let h = DiffSpace::new(
            "spiral",
            Carrier::line(Interval::open(0.0, FRAC_PI_2), 11, None).unwrap(),
            family(&[("gx", "x * cos(tan(x))"), ("gy", "x * sin(tan(x))"), ("gt", "tan(x)")]),
        )
        .unwrap();
        let g = h.sub_family(&["gx", "gy"]).unwrap();
        for text in ["1/n", "atan(2 * pi * n)", "atan(pi / 2 + 2 * pi * n)", "1/n^2 + 0.5"] {
            let p = probe(text, 10000, 10199);
            let vh = probe_cauchy(&h, &p, 1e-3, 50).unwrap();
            let vg = probe_cauchy(&g, &p, 1e-3, 50).unwrap();
            if vh.status == CauchyStatus::Cauchy {
                assert_eq!(vg.status, CauchyStatus::Cauchy, "{text}");
            }
        }
    }

    #[test]
    fn monotone_radius_shrinks_entourage() {
        let s = real_line(&[("id", "x"), ("c", "cos(x)")], (-3.0, 3.0), 31);
        let pts = embed(&s).unwrap().points;
        for a in &pts {
            for b in &pts {
                let small = entourage_contains(&s.family, &v(&["id", "c"], 0.3), &a.ambient, &b.ambient).unwrap();
                let large = entourage_contains(&s.family, &v(&["id", "c"], 0.9), &a.ambient, &b.ambient).unwrap();
                assert!(!small || large);
            }
        }
    }
}
