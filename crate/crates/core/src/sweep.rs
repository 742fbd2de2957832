//! Randomized identity sweeps over generated expressions.
//!
//! Each sweep draws expressions and evaluation points from a seeded ChaCha
//! stream, discards draws that come within [`SINGULAR_MARGIN`] of a
//! singularity, and records the worst relative residual.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expr::eval::apply_func;
use crate::expr::{Bindings, Expr, Func};
use crate::space::{GeneratorFamily, SmoothFunction, SmoothMapWitness};
use crate::tangent::{chain_rule_check, leibniz_check, tangent_map, TangentVector};

/// Minimum distance from a pole, a log/sqrt boundary or a zero divisor.
pub const SINGULAR_MARGIN: f64 = 0.05;
/// Draws with larger intermediate values or derivatives are discarded.
const MAGNITUDE_CAP: f64 = 1e4;
const MAX_ATTEMPTS_PER_CASE: usize = 1000;

const UNARY: [Func; 7] = [Func::Sin, Func::Cos, Func::Tan, Func::Atan, Func::Exp, Func::Log, Func::Sqrt];

/// Random expression of depth at most `depth` over `vars`.
pub fn random_expr<R: Rng>(rng: &mut R, vars: &[String], depth: usize) -> Expr {
    if depth == 0 || rng.gen_bool(0.25) {
        return if rng.gen_bool(0.75) {
            Expr::Var(vars.choose(rng).expect("at least one variable").clone())
        } else {
            Expr::Const(rng.gen_range(-8i32..=8) as f64 / 4.0)
        };
    }
    let sub = |rng: &mut R| Box::new(random_expr(rng, vars, depth - 1));
    match rng.gen_range(0..7) {
        0 => Expr::Add(sub(rng), sub(rng)),
        1 => Expr::Sub(sub(rng), sub(rng)),
        2 => Expr::Mul(sub(rng), sub(rng)),
        3 => Expr::Div(sub(rng), sub(rng)),
        4 => Expr::Pow(sub(rng), *[2, 3, -1].choose(rng).expect("nonempty")),
        5 => Expr::Neg(sub(rng)),
        _ => Expr::Call(*UNARY.choose(rng).expect("nonempty"), sub(rng)),
    }
}

/// Evaluates `e` and checks that every node keeps [`SINGULAR_MARGIN`] from
/// its singular set and stays below the magnitude cap.
pub fn well_conditioned<S: AsRef<str>>(e: &Expr, names: &[S], values: &[f64]) -> bool {
    fn go(e: &Expr, env: &Bindings<'_, impl AsRef<str>>) -> Option<f64> {
        let v = match e {
            Expr::Const(c) => *c,
            Expr::Var(_) => e.eval(env).ok()?,
            Expr::Neg(a) => -go(a, env)?,
            Expr::Add(a, b) => go(a, env)? + go(b, env)?,
            Expr::Sub(a, b) => go(a, env)? - go(b, env)?,
            Expr::Mul(a, b) => go(a, env)? * go(b, env)?,
            Expr::Div(a, b) => {
                let (n, d) = (go(a, env)?, go(b, env)?);
                if d.abs() < SINGULAR_MARGIN {
                    return None;
                }
                n / d
            }
            Expr::Pow(a, k) => {
                let b = go(a, env)?;
                if *k < 0 && b.abs() < SINGULAR_MARGIN {
                    return None;
                }
                b.powi(*k)
            }
            Expr::Call(f, a) => {
                let x = go(a, env)?;
                let margin = match f {
                    Func::Tan => x.cos().abs(),
                    Func::Log | Func::Sqrt => x,
                    Func::Abs | Func::Sign => x.abs(),
                    _ => f64::INFINITY,
                };
                if margin < SINGULAR_MARGIN {
                    return None;
                }
                apply_func(*f, x).ok()?
            }
        };
        (v.is_finite() && v.abs() <= MAGNITUDE_CAP).then_some(v)
    }
    go(e, &Bindings::new(names, values)).is_some()
        && names.iter().all(|n| {
            e.diff(n.as_ref())
                .eval(&Bindings::new(names, values))
                .is_ok_and(|d| d.abs() <= MAGNITUDE_CAP)
        })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSummary {
    pub name: &'static str,
    pub cases: usize,
    /// Draws made, including the discarded ones.
    pub attempts: usize,
    pub threshold: f64,
    pub worst_relative: f64,
    pub worst_case: Option<String>,
    pub failures: usize,
    /// For tangent maps: the pushed vector sits at `F(m)` in every case.
    pub base_law_exact: bool,
}

impl SweepSummary {
    fn new(name: &'static str, threshold: f64) -> Self {
        SweepSummary {
            name,
            cases: 0,
            attempts: 0,
            threshold,
            worst_relative: 0.0,
            worst_case: None,
            failures: 0,
            base_law_exact: true,
        }
    }

    fn record(&mut self, relative: f64, describe: impl FnOnce() -> String) {
        self.cases += 1;
        if relative > self.threshold || relative.is_nan() {
            self.failures += 1;
        }
        if relative > self.worst_relative || relative.is_nan() {
            self.worst_relative = relative;
            self.worst_case = Some(describe());
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.base_law_exact
    }
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

fn point<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect()
}

/// Family of coordinate generators `u_i = x_i`.
fn coordinate_family(coords: &[String], gens: &[String]) -> GeneratorFamily {
    let mut f = GeneratorFamily::new(coords.to_vec());
    for (g, c) in gens.iter().zip(coords) {
        f.push(g, Expr::var(c.clone()), None).expect("distinct names");
    }
    f
}

/// Leibniz residuals `v(αβ) − α(m)v(β) − β(m)v(α)` for random `α`, `β` of
/// depth at most 4.
pub fn leibniz_sweep(seed: u64, cases: usize, threshold: f64) -> SweepSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SweepSummary::new("leibniz", threshold);
    while out.cases < cases && out.attempts < cases * MAX_ATTEMPTS_PER_CASE {
        out.attempts += 1;
        let d = rng.gen_range(1..=3);
        let coords = names("x", d);
        let gens = names("u", d);
        let fam = coordinate_family(&coords, &gens);
        let a = random_expr(&mut rng, &gens, 4);
        let b = random_expr(&mut rng, &gens, 4);
        let base = point(&mut rng, d);
        let coeffs = point(&mut rng, d);
        let (fa, fb) = (
            SmoothFunction::new(a, gens.clone()).expect("in scope"),
            SmoothFunction::new(b, gens.clone()).expect("in scope"),
        );
        let ok = [&fa, &fb].iter().all(|f| {
            f.compose(&fam)
                .is_ok_and(|e| well_conditioned(&e, &coords, &base))
        });
        if !ok {
            continue;
        }
        let v = TangentVector::new(base.clone(), coeffs).expect("finite");
        let Ok(r) = leibniz_check(&v, &fa, &fb, &fam) else {
            continue;
        };
        out.record(r.relative(), || format!("a = {}, b = {}, m = {base:?}: {r:?}", fa.omega, fb.omega));
    }
    out
}

/// Chain-rule residuals `dβ(TF(v)) − d(β∘F)(v)` for random maps
/// `F: ℝ^d → ℝ^e` and random target functions `β`.
pub fn chain_rule_sweep(seed: u64, cases: usize, threshold: f64) -> SweepSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SweepSummary::new("chain_rule", threshold);
    while out.cases < cases && out.attempts < cases * MAX_ATTEMPTS_PER_CASE {
        out.attempts += 1;
        let d = rng.gen_range(1..=3);
        let e = rng.gen_range(1..=3);
        let (xs, us) = (names("x", d), names("u", d));
        let (ys, ws) = (names("y", e), names("w", e));
        let source = coordinate_family(&xs, &us);
        let target = coordinate_family(&ys, &ws);
        let comps: Vec<Expr> = (0..e).map(|_| random_expr(&mut rng, &xs, 3)).collect();
        let witnesses: Vec<(String, SmoothFunction)> = ws
            .iter()
            .zip(&comps)
            .map(|(w, c)| (w.clone(), SmoothFunction::new(c.rename(&xs, &us), us.clone()).expect("in scope")))
            .collect();
        let map = SmoothMapWitness::new(&xs, target, comps.clone(), witnesses).expect("consistent map");
        let beta = SmoothFunction::new(random_expr(&mut rng, &ws, 3), ws.clone()).expect("in scope");
        let base = point(&mut rng, d);
        let coeffs = point(&mut rng, d);
        if !comps.iter().all(|c| well_conditioned(c, &xs, &base)) {
            continue;
        }
        let Ok(image) = map.apply(&xs, &base) else {
            continue;
        };
        let composed = beta.omega.substitute(&|v| ws.iter().position(|w| w == v).map(|j| comps[j].clone()));
        if !well_conditioned(&beta.omega, &ws, &image) || !well_conditioned(&composed, &xs, &base) {
            continue;
        }
        let v = TangentVector::new(base.clone(), coeffs).expect("finite");
        let (Ok(pushed), Ok(r)) = (tangent_map(&map, &xs, &v), chain_rule_check(&map, &source, &v, &beta)) else {
            continue;
        };
        if pushed.base != image {
            out.base_law_exact = false;
        }
        out.record(r.relative(), || format!("F = {comps:?}, beta = {}, m = {base:?}: {r:?}", beta.omega));
    }
    out
}

/// Symbolic gradients against Richardson-extrapolated central differences.
pub fn gradient_sweep(seed: u64, cases: usize, threshold: f64) -> SweepSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SweepSummary::new("gradient", threshold);
    let h = 1e-4;
    while out.cases < cases && out.attempts < cases * MAX_ATTEMPTS_PER_CASE {
        out.attempts += 1;
        let d = rng.gen_range(1..=3);
        let xs = names("x", d);
        let e = random_expr(&mut rng, &xs, 4);
        let base = point(&mut rng, d);
        if !well_conditioned(&e, &xs, &base) {
            continue;
        }
        let at = |k: usize, dt: f64| {
            let mut p = base.clone();
            p[k] += dt;
            e.eval(&Bindings::new(&xs, &p))
        };
        let mut worst = 0.0f64;
        let mut ok = true;
        for (k, x) in xs.iter().enumerate() {
            let sym = e.diff(x).eval(&Bindings::new(&xs, &base));
            let central = |s: f64| -> Option<f64> { Some((at(k, s).ok()? - at(k, -s).ok()?) / (2.0 * s)) };
            match (sym, central(h), central(h / 2.0)) {
                (Ok(sym), Some(c1), Some(c2)) => {
                    let fd = (4.0 * c2 - c1) / 3.0;
                    worst = worst.max((sym - fd).abs() / (1.0 + sym.abs()));
                }
                _ => ok = false,
            }
        }
        if ok {
            out.record(worst, || format!("{e} at {base:?}"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_expressions_respect_depth() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let vars = names("x", 2);
        for _ in 0..500 {
            let e = random_expr(&mut rng, &vars, 4);
            assert!(e.depth() <= 5);
            assert!(e.vars().iter().all(|v| vars.contains(v)));
        }
    }

    #[test]
    fn conditioning_rejects_near_poles() {
        let xs = names("x", 1);
        let e = Expr::Call(Func::Tan, Box::new(Expr::var("x1")));
        assert!(well_conditioned(&e, &xs, &[0.3]));
        assert!(!well_conditioned(&e, &xs, &[1.55]));
        let d = Expr::Div(Box::new(Expr::Const(1.0)), Box::new(Expr::var("x1")));
        assert!(!well_conditioned(&d, &xs, &[0.01]));
        let l = Expr::Call(Func::Log, Box::new(Expr::var("x1")));
        assert!(!well_conditioned(&l, &xs, &[-1.0]));
    }

    #[test]
    fn sweeps_are_reproducible() {
        assert_eq!(leibniz_sweep(3, 50, 1e-12), leibniz_sweep(3, 50, 1e-12));
        assert_eq!(chain_rule_sweep(3, 20, 1e-12), chain_rule_sweep(3, 20, 1e-12));
    }

    #[test]
    fn small_sweeps_pass() {
        let l = leibniz_sweep(11, 200, 1e-12);
        assert_eq!(l.cases, 200);
        assert!(l.passed(), "{l:?}");
        let c = chain_rule_sweep(11, 50, 1e-12);
        assert_eq!(c.cases, 50);
        assert!(c.passed(), "{c:?}");
        let g = gradient_sweep(11, 200, 1e-5);
        assert_eq!(g.cases, 200);
        assert!(g.passed(), "{g:?}");
    }
}
