//! Acceptance gate: one line per criterion, nonzero exit if any fails.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::path::Path;
use std::time::{Duration, Instant};

use sikorski_cli::{declared_commands, load, run, Command, Flags, Outcome};
use tempfile::tempdir;

type Check = Result<String, String>;

fn flags(out: &Path) -> Flags {
    Flags {
        out: out.to_path_buf(),
        ..Flags::default()
    }
}

fn timed(f: impl FnOnce() -> anyhow::Result<Outcome>) -> Result<(Outcome, Duration), String> {
    let start = Instant::now();
    let out = f().map_err(|e| format!("{e:#}"))?;
    let took = start.elapsed();
    if !out.passed() {
        return Err(format!("violations: {:?}", out.violations));
    }
    Ok((out, took))
}

fn rows(path: &Path) -> Result<Vec<Vec<String>>, String> {
    let mut r = csv::Reader::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
    r.records()
        .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()).map_err(|e| e.to_string()))
        .collect()
}

fn f(s: &str) -> Result<f64, String> {
    s.parse().map_err(|_| format!("not a number: `{s}`"))
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(took: Duration, limit: Duration) -> Result<(), String> {
    ensure(took < limit, || format!("took {took:?}, limit {limit:?}"))
}

fn adjoined(path: &Path) -> Result<Vec<(String, Vec<f64>)>, String> {
    rows(path)?
        .into_iter()
        .filter(|r| r[0] == "adjoined")
        .map(|r| Ok((r[1].clone(), r[2..].iter().map(|s| f(s)).collect::<Result<_, _>>()?)))
        .collect()
}

fn real_line_replay() -> Check {
    let spec = load("real_line_atan").map_err(|e| e.to_string())?;
    let g = tempdir().unwrap();
    let (_, t1) = timed(|| run(Command::Complete, Some(&spec), &flags(g.path())))?;
    let pts = adjoined(&g.path().join("complete_points.csv"))?;
    ensure(pts.len() == 2, || format!("{} points adjoined over atan", pts.len()))?;
    let mut ends: Vec<f64> = pts.iter().map(|(_, c)| c[0]).collect();
    ends.sort_by(f64::total_cmp);
    ensure((ends[0] + FRAC_PI_2).abs() < 1e-3 && (ends[1] - FRAC_PI_2).abs() < 1e-3, || {
        format!("ends {ends:?}")
    })?;

    let id = tempdir().unwrap();
    let mut fl = flags(id.path());
    fl.family = Some("id".into());
    let (_, t2) = timed(|| run(Command::Complete, Some(&spec), &fl))?;
    let none = adjoined(&id.path().join("complete_points.csv"))?;
    ensure(none.is_empty(), || format!("{} points adjoined over id", none.len()))?;
    within(t1 + t2, Duration::from_secs(1))?;
    Ok(format!("atan ends {:.6} {:.6}, id adjoins none, {:?}", ends[0], ends[1], t1 + t2))
}

fn parabola_replay() -> Check {
    let spec = load("parabola_refinement").map_err(|e| e.to_string())?;
    let d = tempdir().unwrap();
    let (_, took) = timed(|| run(Command::CompareUniform, Some(&spec), &flags(d.path())))?;
    let table = rows(&d.path().join("compare_uniform_witnesses.csv"))?;
    let mut seen = Vec::new();
    for want in [1.0, 0.1, 0.01] {
        let r = table
            .iter()
            .find(|r| f(&r[1]).is_ok_and(|e| e == want))
            .ok_or_else(|| format!("no row for eps {want}"))?;
        ensure(r[2] == "witness", || format!("no witness at eps {want}"))?;
        let (x, y) = (f(&r[3])?, f(&r[4])?);
        ensure((x - y).abs() < want && (x * x - y * y).abs() >= 1.0, || {
            format!("({x}, {y}) is not a witness at eps {want}")
        })?;
        seen.push(format!("({x}, {y})"));
    }
    within(took, Duration::from_secs(1))?;
    Ok(format!("witnesses {}, {took:?}", seen.join(" ")))
}

fn spiral_replay() -> Check {
    let spec = load("spiral").map_err(|e| e.to_string())?;
    let d = tempdir().unwrap();
    let (_, took) = timed(|| run(Command::Complete, Some(&spec), &flags(d.path())))?;
    let g = adjoined(&d.path().join("complete_points.csv"))?;
    ensure(g.len() == 5, || format!("{} points adjoined over G", g.len()))?;
    let radius = |c: &[f64]| c[0].hypot(c[1]);
    let origin: Vec<_> = g.iter().filter(|(_, c)| radius(c) < 1e-3).collect();
    let circle: Vec<_> = g.iter().filter(|(_, c)| (radius(c) - FRAC_PI_2).abs() < 1e-2).collect();
    ensure(origin.len() == 1 && circle.len() == 4, || format!("points {g:?}"))?;

    let h = adjoined(&d.path().join("complete_finer_points.csv"))?;
    ensure(h.len() == 1 && h[0].1.iter().all(|c| c.abs() < 1e-3), || format!("H points {h:?}"))?;

    let iota = rows(&d.path().join("complete_iota.csv"))?;
    let mut omitted = Vec::new();
    for r in &iota {
        if r[2].starts_with("omitted") {
            omitted.push(r[1].clone());
        } else {
            ensure(!r[2].is_empty() && f(&r[3])? <= 1e-9, || format!("iota row {r:?}"))?;
        }
    }
    let circle_probes: Vec<String> = circle.iter().map(|(p, _)| p.clone()).collect();
    ensure(omitted == circle_probes, || format!("omitted {omitted:?}"))?;
    within(took, Duration::from_secs(5))?;
    Ok(format!("G adjoins 5, H adjoins the origin, circle outside iota, {took:?}"))
}

fn boundize_replay() -> Check {
    let spec = load("real_line_atan").map_err(|e| e.to_string())?;
    let d = tempdir().unwrap();
    timed(|| run(Command::Boundize, Some(&spec), &flags(d.path())))?;
    let table = rows(&d.path().join("boundize_generators.csv"))?;
    let mut mus = BTreeMap::new();
    for m in [-3.0f64, 0.0, 5.0] {
        let r = table
            .iter()
            .find(|r| f(&r[0]).is_ok_and(|c| c == m))
            .ok_or_else(|| format!("no row for center {m}"))?;
        let mu = f(&r[3])?;
        let oracle = (m + 2.0).abs().max((m - 2.0).abs());
        ensure(mu == oracle, || format!("mu {mu} at {m}, expected {oracle}"))?;
        ensure(f(&r[5])? <= 1.0, || format!("max |gamma| {} at {m}", r[5]))?;
        ensure(f(&r[6])? <= 1e-9, || format!("local residual {} at {m}", r[6]))?;
        ensure(r[7] != "0", || format!("no local samples at {m}"))?;
        mus.insert(m as i64, mu);
    }
    ensure(mus[&0] == 2.0, || "mu at 0 is not 2".into())?;
    Ok(format!("mu {mus:?}, |gamma| <= 1, local residual <= 1e-9"))
}

fn filters_check() -> Check {
    let d = tempdir().unwrap();
    let mut fl = flags(d.path());
    fl.max_size = Some(4);
    let (_, took) = timed(|| run(Command::VerifyFilters, None, &fl))?;
    let props = rows(&d.path().join("verify_filters_properties.csv"))?;
    let mut total = 0u64;
    for r in &props {
        ensure(r[1] == r[2] && r[1] != "0", || format!("{} passed {} of {}", r[0], r[2], r[1]))?;
        total += r[1].parse::<u64>().unwrap();
    }
    ensure(props.len() == sikorski::filters::PROPERTIES.len(), || format!("{} properties", props.len()))?;
    let models = rows(&d.path().join("verify_filters_models.csv"))?;
    let mut per_size = [0usize; 5];
    for m in &models {
        let n: usize = m[0].parse().unwrap();
        per_size[n] += 1;
        ensure(m[3] == ((1usize << n) - 1).to_string(), || format!("{} filters on {n} points", m[3]))?;
    }
    // equivalence relations on 1..=4 points
    ensure(per_size[1..] == [1, 2, 5, 15], || format!("catalog sizes {per_size:?}"))?;
    within(took, Duration::from_secs(30))?;
    Ok(format!("{total} checks over {} uniformities, no counterexample, {took:?}", models.len()))
}

fn tangent_suite() -> Check {
    let d = tempdir().unwrap();
    timed(|| run(Command::Tangent, None, &flags(d.path())))?;
    let table = rows(&d.path().join("tangent_sweeps.csv"))?;
    let want = [("leibniz", 1000, 1e-12), ("chain_rule", 200, 1e-12), ("gradient", 1000, 1e-5)];
    let mut parts = Vec::new();
    for (name, cases, tol) in want {
        let r = table.iter().find(|r| r[0] == name).ok_or_else(|| format!("no {name} sweep"))?;
        ensure(r[1] == cases.to_string(), || format!("{name}: {} cases", r[1]))?;
        ensure(f(&r[4])? <= tol && r[5] == "0", || format!("{name}: worst {} with {} failures", r[4], r[5]))?;
        ensure(r[6] == "true", || format!("{name}: base-point law not exact"))?;
        parts.push(format!("{name} {}", r[4]));
    }
    Ok(parts.join(", "))
}

fn compactness_law() -> Check {
    let spec = load("unit_interval_compact").map_err(|e| e.to_string())?;
    let d = tempdir().unwrap();
    timed(|| run(Command::Compactify, Some(&spec), &flags(d.path())))?;
    let pts = rows(&d.path().join("compactify_points.csv"))?;
    ensure(pts.iter().all(|r| r[0] == "sample"), || "points were adjoined".into())?;
    for r in &pts {
        for c in &r[2..] {
            ensure(f(c)?.abs() <= 1.0, || format!("coordinate {c} outside [-1, 1]"))?;
        }
    }
    for r in rows(&d.path().join("compactify_normalization.csv"))? {
        ensure(r[3] == r[4], || format!("argmax of {} moved from {} to {}", r[0], r[3], r[4]))?;
    }
    Ok(format!("{} samples in the cube, nothing adjoined, argmax fixed", pts.len()))
}

fn artifacts(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

fn determinism() -> Check {
    let mut files = 0;
    for (name, _) in sikorski_cli::BUNDLED {
        let spec = load(name).map_err(|e| e.to_string())?;
        let runs: Vec<_> = (0..2)
            .map(|_| {
                let d = tempdir().unwrap();
                for c in declared_commands(&spec.spec) {
                    run(c, Some(&spec), &flags(d.path())).map_err(|e| format!("{name} {c}: {e:#}"))?;
                }
                Ok(artifacts(d.path()))
            })
            .collect::<Result<_, String>>()?;
        ensure(!runs[0].is_empty(), || format!("{name} wrote no CSV"))?;
        ensure(runs[0] == runs[1], || format!("{name}: artifacts differ between runs"))?;
        files += runs[0].len();
    }
    Ok(format!("{files} CSV files byte-identical across two runs"))
}

type Criterion = (&'static str, fn() -> Check);

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 real line completion", real_line_replay),
        ("2 parabola refinement witnesses", parabola_replay),
        ("3 spiral completions and comparison map", spiral_replay),
        ("4 bounded generators", boundize_replay),
        ("5 filter model checking", filters_check),
        ("6 tangent suite", tangent_suite),
        ("7 compactness law", compactness_law),
        ("8 determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("criterion {name}: PASS ({detail})"),
            Err(why) => {
                failed += 1;
                println!("criterion {name}: FAIL ({why})");
            }
        }
    }
    println!("acceptance: {} of 8 criteria passed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
