use anyhow::{anyhow, bail, Context, Result};
use sikorski::compactify::{boundize as boundize_at, compactify as compactify_space, unit_bounded_family, LOCAL_TOL, OUTER_HALF_WIDTH};
use sikorski::completion::{complete as complete_space, iota, maximal_family, order_compare, CompletedSpace, IotaTarget, Placement};
use sikorski::filters::verify_section3;
use sikorski::space::{check_smooth_map, embed as embed_space, sample, separates_points, DiffSpace, Separation, SmoothFunction};
use sikorski::specfile::{Entry, SpecFile};
use sikorski::sweep::{chain_rule_sweep, gradient_sweep, leibniz_sweep, SweepSummary};
use sikorski::tangent::{apply_terms, chain_rule_check, chart_direction_check, leibniz_check, tangent_map, TangentVector};
use sikorski::uniform::{compare_uniformities, Entourage, Probe, Refinement};

use crate::report::{num, nums, tuple, Table};
use crate::{Flags, Outcome, Settings, DEFAULT_MAX_SIZE, DEFAULT_TAIL, DEFAULT_TOL};

/// Relative residual allowed for exact derivative identities.
pub const IDENTITY_TOL: f64 = 1e-12;
/// Relative disagreement allowed between symbolic and finite differences.
pub const FD_TOL: f64 = 1e-5;
/// Seeds and case counts of the randomized tangent sweeps.
pub const SWEEP_SEEDS: [u64; 3] = [1, 2, 3];
pub const SWEEP_CASES: [usize; 3] = [1000, 200, 1000];

pub(crate) struct Ctx<'a> {
    pub flags: &'a Flags,
    pub settings: &'a Settings<'a>,
    pub stem: String,
}

impl Ctx<'_> {
    fn table<S: AsRef<str>>(&self, what: &str, header: &[S]) -> Result<Table> {
        Table::create(&self.flags.out, &format!("{}_{what}.csv", self.stem), header)
    }

    fn tol(&self) -> Result<f64> {
        let t = self.settings.f64_or("tol", self.flags.tol, DEFAULT_TOL)?;
        if t <= 0.0 {
            bail!("tol must be positive, got {t}");
        }
        Ok(t)
    }

    fn tail(&self) -> Result<usize> {
        self.settings.usize_or("tail", self.flags.tail, DEFAULT_TAIL)
    }

    fn names(&self, key: &str) -> Result<Option<Vec<String>>> {
        self.settings.with(key, Entry::names)
    }

    /// The space restricted to `--family`, or the experiment's family, or
    /// all declared generators.
    fn family_space(&self, s: &DiffSpace) -> Result<DiffSpace> {
        let text = match (&self.flags.family, self.settings.text("family")) {
            (Some(f), _) => f.clone(),
            (None, Some(f)) => f,
            (None, None) => return Ok(s.clone()),
        };
        resolve_family(s, &text)
    }

    fn probes(&self, spec: &SpecFile, tail: usize) -> Result<Vec<Probe>> {
        let names = self
            .names("probes")?
            .unwrap_or_else(|| spec.probes.iter().map(|p| p.name.clone()).collect());
        names
            .iter()
            .map(|n| {
                spec.probe(n)
                    .map(|p| p.to_probe(tail))
                    .ok_or_else(|| anyhow!("unknown probe `{n}`"))
            })
            .collect()
    }
}

/// `a,b,c` selects generators; `maximal:<n>` adds every monomial of degree
/// up to `n`.
pub fn resolve_family(s: &DiffSpace, text: &str) -> Result<DiffSpace> {
    if let Some(d) = text.trim().strip_prefix("maximal:") {
        let degree: u32 = d.trim().parse().with_context(|| format!("bad degree in `{text}`"))?;
        return Ok(s.with_family(maximal_family(&s.family, degree)?)?);
    }
    let names: Vec<&str> = text.split(',').map(str::trim).collect();
    Ok(s.sub_family(&names)?)
}

pub(crate) fn embed(ctx: &Ctx, spec: &SpecFile) -> Result<Outcome> {
    let s = ctx.family_space(&spec.space)?;
    let cloud = embed_space(&s)?;
    let mut header: Vec<String> = s.carrier.params().to_vec();
    header.extend(s.carrier.coords().iter().cloned());
    header.extend(cloud.generators.iter().cloned());
    let mut t = ctx.table("points", &header)?;
    for p in &cloud.points {
        let mut row = nums(&p.params);
        row.extend(nums(&p.ambient));
        row.extend(nums(&p.coords));
        t.row(&row)?;
    }
    let mut out = Outcome::default();
    out.artifacts.push(t.finish()?);
    out.line(format!("space: {}", s.name));
    out.line(format!("generators: {}", cloud.generators.join(", ")));
    out.line(format!("samples: {}", cloud.points.len()));
    match separates_points(&s)? {
        Separation::Separates => out.line("separates sampled points: yes"),
        Separation::Collision { first, second } => out.line(format!(
            "separates sampled points: no ({} and {} share an image)",
            tuple(&first),
            tuple(&second)
        )),
    }
    let finite = cloud.points.iter().all(|p| p.coords.iter().all(|c| c.is_finite()));
    out.check("space", finite, || "embedded coordinates are finite".into());
    Ok(out)
}

fn write_completion(ctx: &Ctx, what: &str, cs: &CompletedSpace, out: &mut Outcome) -> Result<()> {
    let gens = cs.generators();
    let mut header = vec!["probe".to_string(), "status".into(), "placement".into(), "oscillation".into()];
    header.extend(gens.iter().map(|g| format!("limit_{g}")));
    header.push("detail".into());
    let mut t = ctx.table(&format!("{what}probes"), &header)?;
    for o in &cs.outcomes {
        let placement = match o.placement {
            Some(Placement::Adjoined(i)) => format!("adjoined:{i}"),
            Some(Placement::AtSample(i)) => format!("sample:{i}"),
            Some(Placement::SameAs(i)) => format!("same-as:{i}"),
            None => String::new(),
        };
        let mut row = vec![o.probe.clone(), o.status_label(), placement];
        match &o.verdict {
            Ok(v) => {
                row.push(num(v.tail_oscillation.iter().copied().fold(0.0, f64::max)));
                match &v.limit {
                    Some(l) => row.extend(nums(l)),
                    None => row.extend(gens.iter().map(|_| String::new())),
                }
                row.push(String::new());
            }
            Err(e) => {
                row.push(String::new());
                row.extend(gens.iter().map(|_| String::new()));
                row.push(e.to_string());
            }
        }
        t.row(&row)?;
    }
    out.artifacts.push(t.finish()?);

    let mut header = vec!["kind".to_string(), "label".into()];
    header.extend(gens.iter().cloned());
    let mut t = ctx.table(&format!("{what}points"), &header)?;
    for p in &cs.base.points {
        let mut row = vec!["sample".to_string(), tuple(&p.params)];
        row.extend(nums(&p.coords));
        t.row(&row)?;
    }
    for a in &cs.adjoined {
        let mut row = vec!["adjoined".to_string(), a.probe.clone()];
        row.extend(nums(&a.limit));
        t.row(&row)?;
    }
    out.artifacts.push(t.finish()?);
    for (i, a) in cs.adjoined.iter().enumerate() {
        out.line(format!("{what}adjoined[{i}] from {}: ({})", a.probe, tuple(&a.limit)));
        out.check("completion", a.limit.iter().all(|c| c.is_finite()), || {
            format!("limit of probe {} is finite", a.probe)
        });
    }
    Ok(())
}

pub(crate) fn complete(ctx: &Ctx, spec: &SpecFile) -> Result<Outcome> {
    let (tol, tail) = (ctx.tol()?, ctx.tail()?);
    let s = ctx.family_space(&spec.space)?;
    let probes = ctx.probes(spec, tail)?;
    let cs = complete_space(&s, &probes, tol, tail)?;
    let mut out = Outcome::default();
    out.line(format!("space: {}", s.name));
    out.line(format!("family: {}", s.family.names().join(", ")));
    out.line(format!("tol: {}  tail: {tail}", num(tol)));
    out.line(format!("samples: {}  adjoined: {}", cs.base.points.len(), cs.adjoined.len()));
    write_completion(ctx, "", &cs, &mut out)?;

    if let Some(finer) = ctx.names("finer")? {
        let h = spec.space.sub_family(&finer)?;
        let cs_h = complete_space(&h, &probes, tol, tail)?;
        out.line(format!("finer family: {}", finer.join(", ")));
        out.line(format!("order of the completions: {}", order_compare(&s.family.names(), &finer)));
        out.line(format!("finer adjoined: {}", cs_h.adjoined.len()));
        write_completion(ctx, "finer_", &cs_h, &mut out)?;
        let r = iota(&cs_h, &cs)?;
        let gens = cs.generators();
        let mut header = vec!["source".to_string(), "probe".into(), "target".into(), "residual".into()];
        header.extend(gens.iter().map(|g| format!("projected_{g}")));
        let mut t = ctx.table("iota", &header)?;
        for e in &r.entries {
            let target = match e.target {
                Some(IotaTarget::Base(i)) => format!("sample:{i}"),
                Some(IotaTarget::Adjoined(i)) => format!("adjoined:{i}"),
                None => String::new(),
            };
            let mut row = vec![e.source.to_string(), e.probe.clone(), target, num(e.residual)];
            row.extend(nums(&e.projected));
            t.row(&row)?;
        }
        for &i in &r.omitted {
            let mut row = vec![String::new(), cs.adjoined[i].probe.clone(), format!("omitted:{i}"), String::new()];
            row.extend(nums(&cs.adjoined[i].limit));
            t.row(&row)?;
        }
        out.artifacts.push(t.finish()?);
        out.line(format!("iota fixes base points: {}", r.base_fixed));
        out.line(format!("iota onto: {}", r.is_onto()));
        let omitted: Vec<&str> = r.omitted.iter().map(|&i| cs.adjoined[i].probe.as_str()).collect();
        out.line(format!("outside the image of iota: {}", omitted.join(", ")));
        out.check("completion", r.passed(), || {
            "iota fixes the carrier and extensions agree after projection".into()
        });
    }
    Ok(out)
}

fn argmax_abs(values: impl Iterator<Item = f64>) -> (usize, f64) {
    values
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, v)| if v.abs() > bv { (i, v.abs()) } else { (bi, bv) })
}

pub(crate) fn compactify(ctx: &Ctx, spec: &SpecFile) -> Result<Outcome> {
    let (tol, tail) = (ctx.tol()?, ctx.tail()?);
    let s = ctx.family_space(&spec.space)?;
    let probes = ctx.probes(spec, tail)?;
    let (fam, scales) = unit_bounded_family(&s)?;
    let unit = s.with_family(fam)?;
    let samples = sample(&s.carrier)?;
    let mut out = Outcome::default();
    out.line(format!("space: {}", s.name));
    out.line(format!("tol: {}  tail: {tail}", num(tol)));

    let mut t = ctx.table("normalization", &["generator", "declared_bound", "scale", "argmax_before", "argmax_after", "max_abs_after"])?;
    for ((g, u), scale) in s.family.generators().iter().zip(unit.family.generators()).zip(&scales) {
        let before = samples.iter().map(|p| s.family.eval_one(&g.name, &p.ambient)).collect::<Result<Vec<_>, _>>()?;
        let after = samples.iter().map(|p| unit.family.eval_one(&u.name, &p.ambient)).collect::<Result<Vec<_>, _>>()?;
        let (ib, _) = argmax_abs(before.into_iter());
        let (ia, ma) = argmax_abs(after.into_iter());
        t.row(&[
            g.name.clone(),
            g.bound.map(num).unwrap_or_default(),
            num(*scale),
            ib.to_string(),
            ia.to_string(),
            num(ma),
        ])?;
        out.line(format!("{}: scale {}, max |g| after {}", g.name, num(*scale), num(ma)));
        out.check("compactify", ib == ia, || format!("argmax of |{}| is unchanged by normalization ({ib} vs {ia})", g.name));
        out.check("compactify", ma <= 1.0, || format!("normalized {} lies in [-1, 1]", g.name));
    }
    out.artifacts.push(t.finish()?);

    let cs = compactify_space(&unit, &probes, tol, tail)?;
    out.line(format!("samples: {}  adjoined: {}", cs.base.points.len(), cs.adjoined.len()));
    write_completion(ctx, "", &cs, &mut out)?;
    let in_cube = cs
        .base
        .points
        .iter()
        .map(|p| &p.coords)
        .chain(cs.adjoined.iter().map(|a| &a.limit))
        .all(|c| c.iter().all(|v| v.abs() <= 1.0));
    out.check("compactify", in_cube, || "every point lies in the cube [-1, 1]^G".into());
    Ok(out)
}

pub(crate) fn boundize(ctx: &Ctx, spec: &SpecFile) -> Result<Outcome> {
    let s = &spec.space;
    let fname = ctx
        .settings
        .text("function")
        .ok_or_else(|| anyhow!("boundize needs a `function` setting"))?;
    let f = spec
        .function(&fname)
        .cloned()
        .or_else(|| s.family.index_of(&fname).map(|_| SmoothFunction::generator(&fname)))
        .ok_or_else(|| anyhow!("unknown function `{fname}`"))?;
    let centers = ctx
        .settings
        .with("centers", Entry::number_groups)?
        .ok_or_else(|| anyhow!("boundize needs a `centers` setting"))?;
    let mut out = Outcome::default();
    out.line(format!("space: {}", s.name));
    out.line(format!("function: {fname} = {}", f.omega));

    let mut t = ctx.table("generators", &["center", "alpha", "y0", "mu", "mu_formula", "max_abs_gamma", "local_residual", "local_samples"])?;
    let mut curve_header = vec!["center".to_string()];
    curve_header.extend(s.carrier.params().iter().cloned());
    curve_header.extend(f.args.iter().map(|a| format!("{a}_bounded")));
    curve_header.push("f".into());
    curve_header.push("omega1".into());
    let mut curve = ctx.table("curve", &curve_header)?;
    let samples = sample(&s.carrier)?;
    for c in &centers {
        let b = boundize_at(s, &f, c)?;
        let gfam = b.gamma_family(s.family.coords().to_vec())?;
        for i in 0..b.alphas.len() {
            let formula = (b.y0[i] + OUTER_HALF_WIDTH).abs().max((b.y0[i] - OUTER_HALF_WIDTH).abs());
            t.row(&[
                tuple(c),
                b.alphas[i].clone(),
                num(b.y0[i]),
                num(b.mu[i]),
                num(formula),
                num(b.max_abs_gamma[i]),
                num(b.local_residual),
                b.local_samples.to_string(),
            ])?;
            out.line(format!(
                "center {}: {} mu {} max|gamma| {} local residual {} over {} samples",
                tuple(c),
                b.alphas[i],
                num(b.mu[i]),
                num(b.max_abs_gamma[i]),
                num(b.local_residual),
                b.local_samples
            ));
            out.check("compactify", b.mu[i] == formula, || format!("mu = max(|y0+2|, |y0-2|) at {}", tuple(c)));
            out.check("compactify", b.max_abs_gamma[i] <= 1.0, || format!("|gamma| <= 1 at {}", tuple(c)));
        }
        out.check("compactify", b.local_residual <= LOCAL_TOL, || {
            format!("local agreement f = omega1(gamma) at {}", tuple(c))
        });
        for p in &samples {
            let mut row = vec![tuple(c)];
            row.extend(nums(&p.params));
            row.extend(nums(&gfam.eval_all(&p.ambient)?));
            row.push(num(f.eval(&s.family, &p.ambient)?));
            row.push(num(b.omega1.eval(&gfam, &p.ambient)?));
            curve.row(&row)?;
        }
    }
    out.artifacts.push(t.finish()?);
    out.artifacts.push(curve.finish()?);
    Ok(out)
}

/// `sq:1; id,sq:0.5`.
fn parse_targets(e: &Entry) -> Result<Vec<Entourage>> {
    e.value
        .split(';')
        .map(|part| {
            let (gens, eps) = part
                .rsplit_once(':')
                .ok_or_else(|| anyhow!("target `{}` should look like gen,gen:eps", part.trim()))?;
            let eps: f64 = Entry::detached("eps", eps).number().map_err(|x| anyhow!("{}", x.message))?;
            let gens: Vec<String> = gens.split(',').map(|g| g.trim().to_string()).collect();
            Ok(Entourage::new(gens, eps)?)
        })
        .collect()
}

pub(crate) fn compare_uniform(ctx: &Ctx, spec: &SpecFile) -> Result<Outcome> {
    let s = &spec.space;
    let coarse = ctx
        .names("coarse")?
        .ok_or_else(|| anyhow!("compare-uniform needs a `coarse` setting"))?;
    let targets = match ctx.settings.entry("targets") {
        Some(e) => parse_targets(e).with_context(|| "targets")?,
        None => bail!("compare-uniform needs a `targets` setting"),
    };
    let eps = ctx
        .settings
        .with("eps", Entry::numbers)?
        .ok_or_else(|| anyhow!("compare-uniform needs an `eps` setting"))?;
    let samples = sample(&s.carrier)?;
    let r = compare_uniformities(&s.family, &coarse, &targets, &eps, &samples)?;
    let mut out = Outcome::default();
    out.line(format!("space: {}", s.name));
    out.line(format!("coarse family: {}", coarse.join(", ")));
    let mut t = ctx.table("witnesses", &["target", "eps", "verdict", "x", "y", "d_coarse", "violated", "target_gap"])?;
    for row in &r.rows {
        match &row.verdict {
            Refinement::Refines => {
                t.row(&[row.target.to_string(), num(row.eps), "refines".into(), String::new(), String::new(), String::new(), String::new(), String::new()])?;
                out.line(format!("{} eps {}: no sampled witness", row.target, num(row.eps)));
            }
            Refinement::Witness(w) => {
                let gx = s.family.eval_one(&w.violated, &w.x.ambient)?;
                let gy = s.family.eval_one(&w.violated, &w.y.ambient)?;
                let gap = (gx - gy).abs();
                let d = coarse
                    .iter()
                    .map(|g| Ok((s.family.eval_one(g, &w.x.ambient)? - s.family.eval_one(g, &w.y.ambient)?).abs()))
                    .collect::<Result<Vec<f64>>>()?
                    .into_iter()
                    .fold(0.0, f64::max);
                t.row(&[
                    row.target.to_string(),
                    num(row.eps),
                    "witness".into(),
                    tuple(&w.x.params),
                    tuple(&w.y.params),
                    num(w.d_coarse),
                    w.violated.clone(),
                    num(gap),
                ])?;
                out.line(format!(
                    "{} eps {}: witness ({}, {}) with coarse distance {} and {} gap {}",
                    row.target,
                    num(row.eps),
                    tuple(&w.x.params),
                    tuple(&w.y.params),
                    num(w.d_coarse),
                    w.violated,
                    num(gap)
                ));
                out.check("uniform", d < row.eps && gap >= row.target.eps, || {
                    format!("witness for {} at eps {} re-evaluates as a violation", row.target, num(row.eps))
                });
            }
        }
    }
    out.artifacts.push(t.finish()?);
    Ok(out)
}

fn sweep_row(s: &SweepSummary) -> Vec<String> {
    vec![
        s.name.to_string(),
        s.cases.to_string(),
        s.attempts.to_string(),
        num(s.threshold),
        num(s.worst_relative),
        s.failures.to_string(),
        s.base_law_exact.to_string(),
        s.worst_case.clone().unwrap_or_default(),
    ]
}

pub(crate) fn tangent(ctx: &Ctx, spec: Option<&SpecFile>) -> Result<Outcome> {
    let mut out = Outcome::default();
    // without a description, run the standard sweeps
    let sweep = ctx
        .settings
        .with("sweep", Entry::numbers)?
        .or_else(|| spec.is_none().then(|| SWEEP_CASES.iter().map(|&c| c as f64).collect()));
    if let Some(spec) = spec.filter(|_| ctx.settings.entry("point").is_some()) {
        tangent_at_point(ctx, spec, &mut out)?;
    }
    if let Some(counts) = sweep {
        if counts.len() != 3 || counts.iter().any(|c| *c < 0.0 || c.fract() != 0.0) {
            bail!("sweep takes three case counts: leibniz, chain rule, gradient");
        }
        let c: Vec<usize> = counts.iter().map(|&c| c as usize).collect();
        let sweeps = [
            leibniz_sweep(SWEEP_SEEDS[0], c[0], IDENTITY_TOL),
            chain_rule_sweep(SWEEP_SEEDS[1], c[1], IDENTITY_TOL),
            gradient_sweep(SWEEP_SEEDS[2], c[2], FD_TOL),
        ];
        let mut t = ctx.table("sweeps", &["sweep", "cases", "attempts", "threshold", "worst_relative", "failures", "base_law_exact", "worst_case"])?;
        for s in &sweeps {
            t.row(&sweep_row(s))?;
            out.line(format!(
                "sweep {}: {} cases, worst relative residual {}, {} failures",
                s.name,
                s.cases,
                num(s.worst_relative),
                s.failures
            ));
            out.check("tangent", s.passed(), || format!("{} sweep within {}", s.name, num(s.threshold)));
        }
        for (s, want) in sweeps.iter().zip(&c) {
            out.check("tangent", s.cases == *want, || format!("{} sweep drew {} of {want} cases", s.name, s.cases));
        }
        out.artifacts.push(t.finish()?);
    }
    Ok(out)
}

fn tangent_at_point(ctx: &Ctx, spec: &SpecFile, out: &mut Outcome) -> Result<()> {
    let s = &spec.space;
    let point = ctx.settings.with("point", Entry::numbers)?.unwrap_or_default();
    let coeffs = ctx
        .settings
        .with("vector", Entry::numbers)?
        .ok_or_else(|| anyhow!("tangent needs a `vector` setting"))?;
    let v = TangentVector::at_params(s, &point, coeffs)?;
    let names = ctx.names("functions")?.unwrap_or_else(|| {
        let mut n = s.family.names();
        n.extend(spec.functions.iter().map(|(f, _)| f.clone()));
        n
    });
    let funcs: Vec<(String, SmoothFunction)> = names
        .iter()
        .map(|n| {
            spec.function(n)
                .cloned()
                .or_else(|| s.family.index_of(n).map(|_| SmoothFunction::generator(n)))
                .map(|f| (n.clone(), f))
                .ok_or_else(|| anyhow!("unknown function `{n}`"))
        })
        .collect::<Result<_>>()?;
    out.line(format!("space: {}", s.name));
    out.line(format!("base point: ({})  vector: ({})", tuple(&v.base), tuple(&v.coeffs)));

    let mut t = ctx.table("values", &["function", "value", "derivative"])?;
    for (n, f) in &funcs {
        let d = apply_terms(&v, f, &s.family)?;
        t.row(&[n.clone(), num(f.eval(&s.family, &v.base)?), num(d.value)])?;
        out.line(format!("v({n}) = {}", num(d.value)));
    }
    out.artifacts.push(t.finish()?);

    let mut t = ctx.table("checks", &["check", "first", "second", "lhs", "rhs", "relative"])?;
    for (i, (na, a)) in funcs.iter().enumerate() {
        for (nb, b) in &funcs[i..] {
            let r = leibniz_check(&v, a, b, &s.family)?;
            t.row(&["leibniz".into(), na.clone(), nb.clone(), num(r.lhs), num(r.rhs), num(r.relative())])?;
            out.check("tangent", r.relative() <= IDENTITY_TOL, || format!("Leibniz rule for {na}, {nb}"));
        }
        for (axis, p) in s.carrier.params().iter().enumerate() {
            let r = chart_direction_check(s, a, &point, axis)?;
            t.row(&["finite-difference".into(), na.clone(), p.clone(), num(r.lhs), num(r.rhs), num(r.relative())])?;
            out.check("tangent", r.relative() <= FD_TOL, || format!("symbolic and finite-difference derivative of {na} along {p}"));
        }
    }

    if let Some(mname) = ctx.settings.text("map") {
        let m = spec.map(&mname).ok_or_else(|| anyhow!("unknown map `{mname}`"))?;
        let coords = s.carrier.coords();
        let pushed = tangent_map(&m.witness, coords, &v)?;
        let image = m.witness.apply(coords, &v.base)?;
        out.line(format!("map {mname}: TF(v) at ({}) = ({})", tuple(&pushed.base), tuple(&pushed.coeffs)));
        out.check("tangent", pushed.base == image, || format!("base point of TF(v) is F(m) for {mname}"));
        let mut betas: Vec<(String, SmoothFunction)> =
            m.witness.target.names().iter().map(|g| (g.clone(), SmoothFunction::generator(g))).collect();
        betas.extend(m.functions.iter().cloned());
        for (nb, beta) in &betas {
            let r = chain_rule_check(&m.witness, &s.family, &v, beta)?;
            t.row(&["chain-rule".into(), mname.clone(), nb.clone(), num(r.lhs), num(r.rhs), num(r.relative())])?;
            out.check("tangent", r.relative() <= IDENTITY_TOL, || format!("chain rule for {nb} through {mname}"));
        }
        let mut pt = ctx.table("pushforward", &["coordinate", "base", "coefficient"])?;
        for ((c, b), k) in m.witness.target.coords().iter().zip(&pushed.base).zip(&pushed.coeffs) {
            pt.row(&[c.clone(), num(*b), num(*k)])?;
        }
        out.artifacts.push(pt.finish()?);
    }
    out.artifacts.push(t.finish()?);
    Ok(())
}

pub(crate) fn check_map(ctx: &Ctx, spec: &SpecFile) -> Result<Outcome> {
    let mname = ctx
        .settings
        .text("map")
        .or_else(|| (spec.maps.len() == 1).then(|| spec.maps[0].name.clone()))
        .ok_or_else(|| anyhow!("check-map needs a `map` setting"))?;
    let m = spec.map(&mname).ok_or_else(|| anyhow!("unknown map `{mname}`"))?;
    let tol = ctx.tol()?;
    let r = check_smooth_map(&m.witness, &spec.space, tol)?;
    let mut out = Outcome::default();
    out.line(format!("space: {}  map: {mname}  tol: {}", spec.space.name, num(tol)));
    let mut t = ctx.table("residuals", &["generator", "max_residual", "worst_params", "passed"])?;
    for row in &r.residuals {
        t.row(&[row.generator.clone(), num(row.max_residual), tuple(&row.worst_params), row.passed.to_string()])?;
        out.line(format!("{}: max residual {}", row.generator, num(row.max_residual)));
        out.check("space", row.passed, || format!("witness of {} agrees with the pullback within tol", row.generator));
    }
    out.artifacts.push(t.finish()?);
    Ok(out)
}

pub(crate) fn verify_filters(ctx: &Ctx) -> Result<Outcome> {
    let max = ctx.settings.usize_or("max_size", ctx.flags.max_size, DEFAULT_MAX_SIZE)?;
    let r = verify_section3(max)?;
    let mut out = Outcome::default();
    out.line(format!("ground sets up to size {max}, {} uniformities", r.models.len()));
    let mut t = ctx.table("properties", &["property", "checked", "passed"])?;
    for tally in &r.tallies {
        t.row(&[tally.property.to_string(), tally.checked.to_string(), tally.passed.to_string()])?;
        out.line(format!("{}: {}/{}", tally.property, tally.passed, tally.checked));
        out.check("filters", tally.passed == tally.checked, || format!("{} holds in every model", tally.property));
    }
    out.artifacts.push(t.finish()?);
    let mut t = ctx.table("models", &["ground_size", "uniformity", "entourages", "filters", "cauchy_filters", "classes", "checks", "failures"])?;
    for m in &r.models {
        t.row(&[
            m.ground_size.to_string(),
            m.label.clone(),
            m.entourages.to_string(),
            m.filters.to_string(),
            m.cauchy_filters.to_string(),
            m.classes.to_string(),
            m.checks.to_string(),
            m.failures.to_string(),
        ])?;
        let expected = (1usize << m.ground_size) - 1;
        out.check("filters", m.filters == expected, || {
            format!("{} filters on a {}-point set, expected {expected}", m.filters, m.ground_size)
        });
    }
    out.artifacts.push(t.finish()?);
    if let Some(c) = &r.first_counterexample {
        out.line(format!("first counterexample: {c}"));
    }
    out.check("filters", r.first_counterexample.is_none(), || "no counterexample".into());
    Ok(out)
}
