//! Loader for the plain-text space description format.
//!
//! ```text
//! # the real line with one bounded generator
//! [space]
//! name = real_line
//! params = t
//! domain = (-inf, inf)
//! window = [-50, 50]
//! chart.x = t
//! samples = 201
//!
//! [generators]
//! g = atan(x)
//!
//! [probes]
//! up = n @ 1000..1199
//! ```
//!
//! Sections: `[space]`, `[generators]`, `[bounded]`, `[probes]`,
//! `[functions]`, `[map NAME]` and `[experiment COMMAND]`. Every error
//! carries the line and column it was found at.

use std::collections::BTreeSet;
use std::fmt;

use crate::expr::{parse_expr, Expr};
use crate::space::{
    Carrier, DiffSpace, GeneratorFamily, Interval, SamplingPlan, SmoothFunction, SmoothMapWitness,
};
use crate::uniform::Probe;

/// First index of probes declared without a schedule.
pub const DEFAULT_PROBE_START: u64 = 1000;
/// Probes without a schedule run over this many tails.
pub const DEFAULT_PROBE_TAILS: u64 = 4;
pub const DEFAULT_INSET: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpecError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for SpecError {}

fn err<T>(line: usize, column: usize, message: impl Into<String>) -> Result<T, SpecError> {
    Err(SpecError {
        line,
        column,
        message: message.into(),
    })
}

/// A `key = value` line.
#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
    pub key_column: usize,
    pub value_column: usize,
}

impl Entry {
    fn fail<T>(&self, message: impl Into<String>) -> Result<T, SpecError> {
        err(self.line, self.value_column, message)
    }

    /// Parse the whole value as an expression over `vars`.
    pub fn expr<S: AsRef<str>>(&self, vars: &[S]) -> Result<Expr, SpecError> {
        self.expr_at(&self.value, 0, vars)
    }

    /// Parse a slice of the value starting at byte `offset`.
    fn expr_at<S: AsRef<str>>(&self, text: &str, offset: usize, vars: &[S]) -> Result<Expr, SpecError> {
        parse_expr(text, vars).map_err(|e| SpecError {
            line: self.line,
            column: self.value_column + char_col(&self.value, offset + e.offset.min(text.len())),
            message: format!("in `{}`: {}", text.trim(), e.kind),
        })
    }

    pub fn number(&self) -> Result<f64, SpecError> {
        let v = self.expr(&[] as &[&str])?.eval(&[] as &[(&str, f64)]).or_else(|e| self.fail(e.to_string()))?;
        Ok(v)
    }

    pub fn count(&self) -> Result<usize, SpecError> {
        self.value
            .trim()
            .parse()
            .or_else(|_| self.fail(format!("expected a non-negative integer, found `{}`", self.value)))
    }

    /// Comma-separated names.
    pub fn names(&self) -> Result<Vec<String>, SpecError> {
        let mut out = Vec::new();
        for (off, part) in split_top(&self.value, ',') {
            let name = part.trim();
            if !is_ident(name) {
                return err(self.line, self.value_column + char_col(&self.value, off), format!("`{name}` is not a valid name"));
            }
            out.push(name.to_string());
        }
        Ok(out)
    }

    /// Comma-separated numeric expressions.
    pub fn numbers(&self) -> Result<Vec<f64>, SpecError> {
        self.numbers_in(&self.value, 0)
    }

    fn numbers_in(&self, text: &str, base: usize) -> Result<Vec<f64>, SpecError> {
        split_top(text, ',')
            .into_iter()
            .map(|(off, part)| {
                let e = self.expr_at(part, base + off, &[] as &[&str])?;
                e.eval(&[] as &[(&str, f64)]).or_else(|ev| {
                    err(self.line, self.value_column + char_col(&self.value, base + off), ev.to_string())
                })
            })
            .collect()
    }

    /// `;`-separated groups of comma-separated numbers.
    pub fn number_groups(&self) -> Result<Vec<Vec<f64>>, SpecError> {
        split_top(&self.value, ';')
            .into_iter()
            .map(|(off, part)| self.numbers_in(part, off))
            .collect()
    }
}

fn char_col(s: &str, byte: usize) -> usize {
    s[..byte.min(s.len())].chars().count()
}

/// Split at `sep` outside parentheses, keeping byte offsets of each part.
fn split_top(s: &str, sep: char) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push((start, &s[start..i]));
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    out.push((start, &s[start..]));
    out
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Clone, Debug, PartialEq)]
pub struct Section {
    pub kind: String,
    pub label: Option<String>,
    pub line: usize,
    pub entries: Vec<Entry>,
}

impl Section {
    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    fn require(&self, key: &str) -> Result<&Entry, SpecError> {
        self.get(key)
            .map_or_else(|| err(self.line, 1, format!("[{}] needs `{key}`", self.kind)), Ok)
    }
}

/// Split the text into sections of `key = value` entries.
pub fn parse_sections(text: &str) -> Result<Vec<Section>, SpecError> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("");
        let lead = body.len() - body.trim_start().len();
        let trimmed = body.trim();
        if trimmed.is_empty() {
            continue;
        }
        let col = char_col(raw, lead) + 1;
        if let Some(inner) = trimmed.strip_prefix('[') {
            let Some(inner) = inner.strip_suffix(']') else {
                return err(line, col, "section header must end with `]`");
            };
            let mut words = inner.split_whitespace();
            let kind = words.next().unwrap_or("").to_string();
            let label = words.next().map(str::to_string);
            if words.next().is_some() {
                return err(line, col, "section header has too many words");
            }
            if !matches!(
                kind.as_str(),
                "space" | "generators" | "bounded" | "probes" | "functions" | "map" | "experiment"
            ) {
                return err(line, col, format!("unknown section `{kind}`"));
            }
            if matches!(kind.as_str(), "map" | "experiment") != label.is_some() {
                return err(line, col, format!("section `{kind}` has a wrong number of labels"));
            }
            if sections.iter().any(|s| s.kind == kind && s.label == label) {
                return err(line, col, format!("duplicate section [{}]", inner.trim()));
            }
            sections.push(Section {
                kind,
                label,
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let Some(section) = sections.last_mut() else {
            return err(line, col, "entry outside of any section");
        };
        let Some(eq) = body.find('=') else {
            return err(line, col, "expected `key = value`");
        };
        let key = body[..eq].trim().to_string();
        let after = &body[eq + 1..];
        let value = after.trim().to_string();
        let value_byte = eq + 1 + (after.len() - after.trim_start().len());
        let value_column = char_col(raw, value_byte) + 1;
        let key_ok = key.split('.').all(is_ident) && !key.is_empty();
        if !key_ok {
            return err(line, col, format!("`{key}` is not a valid key"));
        }
        if value.is_empty() {
            return err(line, value_column, format!("`{key}` has no value"));
        }
        if section.entries.iter().any(|e| e.key == key) {
            return err(line, col, format!("duplicate key `{key}`"));
        }
        section.entries.push(Entry {
            key,
            value,
            line,
            key_column: col,
            value_column,
        });
    }
    Ok(sections)
}

/// A probe whose index schedule may still depend on the tail length.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeSpec {
    pub name: String,
    pub exprs: Vec<Expr>,
    pub schedule: Option<(u64, u64)>,
    pub line: usize,
}

impl ProbeSpec {
    /// Declared schedule, or `n₀ = 1000` up to four tails further.
    pub fn to_probe(&self, tail: usize) -> Probe {
        let (start, end) = self.schedule.unwrap_or((
            DEFAULT_PROBE_START,
            DEFAULT_PROBE_START + DEFAULT_PROBE_TAILS * tail as u64 - 1,
        ));
        Probe::new(&self.name, self.exprs.clone(), start, end).expect("validated at load time")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MapSpec {
    pub name: String,
    pub witness: SmoothMapWitness,
    /// Functions on the target, over target generator names.
    pub functions: Vec<(String, SmoothFunction)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Experiment {
    pub command: String,
    pub section: Section,
}

impl Experiment {
    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.section.get(key)
    }
}

const EXPERIMENT_KEYS: &[(&str, &[&str])] = &[
    ("embed", &["family"]),
    ("complete", &["family", "finer", "probes", "tol", "tail"]),
    ("compactify", &["family", "probes", "tol", "tail"]),
    ("boundize", &["function", "centers"]),
    ("compare-uniform", &["coarse", "targets", "eps"]),
    ("tangent", &["point", "vector", "functions", "map", "sweep"]),
    ("check-map", &["map", "tol"]),
    ("verify-filters", &["max_size"]),
];

pub fn experiment_commands() -> impl Iterator<Item = &'static str> {
    EXPERIMENT_KEYS.iter().map(|(c, _)| *c)
}

/// Settings an `[experiment COMMAND]` section may contain.
pub fn experiment_keys(command: &str) -> Option<&'static [&'static str]> {
    EXPERIMENT_KEYS.iter().find(|(c, _)| *c == command).map(|(_, k)| *k)
}

impl Entry {
    /// An entry that did not come from a file, such as a command-line
    /// override. Errors in it report line 0.
    pub fn detached(key: &str, value: &str) -> Entry {
        Entry {
            key: key.to_string(),
            value: value.trim().to_string(),
            line: 0,
            key_column: 0,
            value_column: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpecFile {
    pub space: DiffSpace,
    pub probes: Vec<ProbeSpec>,
    pub functions: Vec<(String, SmoothFunction)>,
    pub maps: Vec<MapSpec>,
    pub experiments: Vec<Experiment>,
}

impl SpecFile {
    pub fn experiment(&self, command: &str) -> Option<&Experiment> {
        self.experiments.iter().find(|e| e.command == command)
    }

    pub fn function(&self, name: &str) -> Option<&SmoothFunction> {
        self.functions.iter().find(|(n, _)| n == name).map(|(_, f)| f)
    }

    pub fn map(&self, name: &str) -> Option<&MapSpec> {
        self.maps.iter().find(|m| m.name == name)
    }

    pub fn probe(&self, name: &str) -> Option<&ProbeSpec> {
        self.probes.iter().find(|p| p.name == name)
    }
}

fn parse_interval(entry: &Entry, text: &str, offset: usize) -> Result<Interval, SpecError> {
    let t = text.trim();
    let lead = offset + (text.len() - text.trim_start().len());
    let col = entry.value_column + char_col(&entry.value, lead);
    let (lo_open, hi_open) = match (t.chars().next(), t.chars().last()) {
        (Some(a @ ('[' | '(')), Some(b @ (']' | ')'))) if t.len() >= 2 => (a == '(', b == ')'),
        _ => return err(entry.line, col, format!("`{t}` is not an interval like [a, b] or (a, b)")),
    };
    let inner = &t[1..t.len() - 1];
    let parts = split_top(inner, ',');
    if parts.len() != 2 {
        return err(entry.line, col, "an interval needs exactly two ends");
    }
    let inner_offset = lead + 1;
    let end = |(off, s): (usize, &str)| -> Result<f64, SpecError> {
        let s_trim = s.trim();
        match s_trim {
            "inf" | "+inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            _ => {
                let e = entry.expr_at(s, inner_offset + off, &[] as &[&str])?;
                e.eval(&[] as &[(&str, f64)]).or_else(|ev| err(entry.line, col, ev.to_string()))
            }
        }
    };
    let lo = end(parts[0])?;
    let hi = end(parts[1])?;
    if (lo.is_infinite() && !lo_open) || (hi.is_infinite() && !hi_open) {
        return err(entry.line, col, "infinite ends must be open");
    }
    if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
        return err(entry.line, col, format!("empty interval `{t}`"));
    }
    Ok(Interval {
        lo,
        hi,
        lo_open,
        hi_open,
    })
}

fn build_space(sec: &Section, generators: Option<&Section>, bounded: Option<&Section>) -> Result<DiffSpace, SpecError> {
    let name = sec.get("name").map_or("space".to_string(), |e| e.value.clone());
    let params_entry = sec.require("params")?;
    let params = params_entry.names()?;
    let domain_entry = sec.require("domain")?;
    let domain = split_top(&domain_entry.value, ';')
        .into_iter()
        .map(|(off, part)| parse_interval(domain_entry, part, off))
        .collect::<Result<Vec<_>, _>>()?;
    if domain.len() != params.len() {
        return domain_entry.fail(format!("{} intervals for {} parameters", domain.len(), params.len()));
    }
    let window = match sec.get("window") {
        None => vec![None; params.len()],
        Some(w) => {
            let ws = split_top(&w.value, ';')
                .into_iter()
                .map(|(off, part)| {
                    if part.trim() == "-" {
                        Ok(None)
                    } else {
                        parse_interval(w, part, off).map(|i| Some((i.lo, i.hi)))
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            if ws.len() != params.len() {
                return w.fail(format!("{} windows for {} parameters", ws.len(), params.len()));
            }
            ws
        }
    };
    let chart_entries: Vec<&Entry> = sec.entries.iter().filter(|e| e.key.starts_with("chart.")).collect();
    let coords: Vec<String> = match sec.get("coords") {
        Some(c) => c.names()?,
        None if chart_entries.is_empty() => params.clone(),
        None => chart_entries.iter().map(|e| e.key["chart.".len()..].to_string()).collect(),
    };
    let chart = if chart_entries.is_empty() {
        if coords != params {
            return err(sec.line, 1, "coordinates differ from parameters, so a chart is required");
        }
        params.iter().map(|p| Expr::var(p.clone())).collect()
    } else {
        for e in &chart_entries {
            let c = &e.key["chart.".len()..];
            if !coords.iter().any(|k| k == c) {
                return err(e.line, e.key_column, format!("chart for undeclared coordinate `{c}`"));
            }
        }
        coords
            .iter()
            .map(|c| {
                let key = format!("chart.{c}");
                sec.get(&key)
                    .map_or_else(|| err(sec.line, 1, format!("missing `{key}`")), |e| e.expr(&params))
            })
            .collect::<Result<Vec<_>, _>>()?
    };
    let counts = match sec.get("samples") {
        None => vec![101; params.len()],
        Some(e) => {
            let c = split_top(&e.value, ',')
                .into_iter()
                .map(|(_, s)| s.trim().parse::<usize>().or_else(|_| e.fail(format!("bad sample count `{}`", s.trim()))))
                .collect::<Result<Vec<_>, _>>()?;
            if c.len() != params.len() {
                return e.fail(format!("{} sample counts for {} parameters", c.len(), params.len()));
            }
            c
        }
    };
    let inset = match sec.get("inset") {
        None => DEFAULT_INSET,
        Some(e) => e.number()?,
    };
    for e in &sec.entries {
        let known = matches!(
            e.key.as_str(),
            "name" | "params" | "domain" | "window" | "coords" | "samples" | "inset"
        ) || e.key.starts_with("chart.");
        if !known {
            return err(e.line, e.key_column, format!("unknown key `{}` in [space]", e.key));
        }
    }
    let carrier = Carrier::new(
        params,
        domain,
        coords.clone(),
        chart,
        SamplingPlan {
            counts,
            inset,
            window,
        },
    )
    .or_else(|e| err(sec.line, 1, e.to_string()))?;

    let mut family = GeneratorFamily::new(coords.clone());
    let Some(gsec) = generators else {
        return err(sec.line, 1, "missing [generators] section");
    };
    for e in &gsec.entries {
        if !is_ident(&e.key) {
            return err(e.line, e.key_column, format!("`{}` is not a valid generator name", e.key));
        }
        if coords.iter().any(|c| c == &e.key) {
            return err(e.line, e.key_column, format!("generator `{}` shadows a coordinate", e.key));
        }
        let expr = e.expr(&coords)?;
        family
            .push(&e.key, expr, None)
            .or_else(|x| err(e.line, e.key_column, x.to_string()))?;
    }
    if family.is_empty() {
        return err(gsec.line, 1, "no generators declared");
    }
    if let Some(b) = bounded {
        let mut gens: Vec<_> = family.generators().to_vec();
        for e in &b.entries {
            let Some(g) = gens.iter_mut().find(|g| g.name == e.key) else {
                return err(e.line, e.key_column, format!("unknown generator `{}`", e.key));
            };
            let v = e.number()?;
            if v.is_nan() || v <= 0.0 {
                return e.fail("bound must be positive");
            }
            g.bound = Some(v);
        }
        let mut fam = GeneratorFamily::new(coords);
        for g in gens {
            fam.push(&g.name, g.expr, g.bound).expect("names already checked");
        }
        family = fam;
    }
    DiffSpace::new(&name, carrier, family).or_else(|e| err(sec.line, 1, e.to_string()))
}

fn parse_probe(e: &Entry, nparams: usize) -> Result<ProbeSpec, SpecError> {
    let (expr_part, schedule) = match e.value.find('@') {
        None => (e.value.as_str(), None),
        Some(at) => {
            let sched = e.value[at + 1..].trim();
            let col = e.value_column + char_col(&e.value, at + 1);
            let Some((a, b)) = sched.split_once("..") else {
                return err(e.line, col, format!("schedule `{sched}` should look like 1000..1199"));
            };
            let parse = |s: &str| s.trim().parse::<u64>().or_else(|_| err(e.line, col, format!("bad index `{}`", s.trim())));
            let (a, b) = (parse(a)?, parse(b)?);
            if b < a || a == 0 {
                return err(e.line, col, format!("schedule {a}..{b} is empty or starts at 0"));
            }
            (&e.value[..at], Some((a, b)))
        }
    };
    let exprs = split_top(expr_part, ',')
        .into_iter()
        .map(|(off, s)| e.expr_at(s, off, &[Probe::INDEX]))
        .collect::<Result<Vec<_>, _>>()?;
    if exprs.len() != nparams {
        return e.fail(format!("{} expressions for {} parameters", exprs.len(), nparams));
    }
    Ok(ProbeSpec {
        name: e.key.clone(),
        exprs,
        schedule,
        line: e.line,
    })
}

fn function_over(e: &Entry, family: &GeneratorFamily) -> Result<SmoothFunction, SpecError> {
    let names = family.names();
    let omega = e.expr(&names)?;
    SmoothFunction::over_family(omega, family).or_else(|x| e.fail(x.to_string()))
}

fn build_map(sec: &Section, space: &DiffSpace) -> Result<MapSpec, SpecError> {
    let name = sec.label.clone().expect("map sections are labelled");
    let target = sec.require("target")?.names()?;
    let src_coords = space.family.coords().to_vec();
    let mut tfam = GeneratorFamily::new(target.clone());
    let mut comps = Vec::new();
    for c in &target {
        let key = format!("component.{c}");
        let e = sec
            .get(&key)
            .map_or_else(|| err(sec.line, 1, format!("map `{name}` needs `{key}`")), Ok)?;
        comps.push(e.expr(&src_coords)?);
    }
    for e in sec.entries.iter().filter(|e| e.key.starts_with("generator.")) {
        let g = &e.key["generator.".len()..];
        tfam.push(g, e.expr(&target)?, None)
            .or_else(|x| err(e.line, e.key_column, x.to_string()))?;
    }
    if tfam.is_empty() {
        return err(sec.line, 1, format!("map `{name}` declares no target generators"));
    }
    let mut witnesses = Vec::new();
    let mut functions = Vec::new();
    for e in &sec.entries {
        if let Some(g) = e.key.strip_prefix("witness.") {
            if tfam.index_of(g).is_none() {
                return err(e.line, e.key_column, format!("witness for unknown target generator `{g}`"));
            }
            witnesses.push((g.to_string(), function_over(e, &space.family)?));
        } else if let Some(f) = e.key.strip_prefix("function.") {
            functions.push((f.to_string(), function_over(e, &tfam)?));
        } else if let Some(c) = e.key.strip_prefix("component.") {
            if !target.iter().any(|t| t == c) {
                return err(e.line, e.key_column, format!("component for undeclared coordinate `{c}`"));
            }
        } else if !(e.key == "target" || e.key.starts_with("generator.")) {
            return err(e.line, e.key_column, format!("unknown key `{}` in [map {name}]", e.key));
        }
    }
    let witness = SmoothMapWitness::new(&src_coords, tfam, comps, witnesses)
        .or_else(|x| err(sec.line, 1, format!("map `{name}`: {x}")))?;
    Ok(MapSpec {
        name,
        witness,
        functions,
    })
}

fn check_experiment(sec: &Section, spec: &SpecFile) -> Result<Experiment, SpecError> {
    let command = sec.label.clone().expect("experiment sections are labelled");
    let Some((_, keys)) = EXPERIMENT_KEYS.iter().find(|(c, _)| *c == command) else {
        return err(sec.line, 1, format!("unknown command `{command}`"));
    };
    for e in &sec.entries {
        if !keys.contains(&e.key.as_str()) {
            return err(e.line, e.key_column, format!("`{}` is not a setting of {command}", e.key));
        }
        match e.key.as_str() {
            "family" if !e.value.starts_with("maximal:") => {
                for n in e.names()? {
                    if spec.space.family.index_of(&n).is_none() {
                        return e.fail(format!("unknown generator `{n}`"));
                    }
                }
            }
            "coarse" | "finer" => {
                for n in e.names()? {
                    if spec.space.family.index_of(&n).is_none() {
                        return e.fail(format!("unknown generator `{n}`"));
                    }
                }
            }
            "probes" => {
                for n in e.names()? {
                    if spec.probe(&n).is_none() {
                        return e.fail(format!("unknown probe `{n}`"));
                    }
                }
            }
            "function" if spec.function(&e.value).is_none() => {
                return e.fail(format!("unknown function `{}`", e.value));
            }
            "map" if spec.map(&e.value).is_none() => {
                return e.fail(format!("unknown map `{}`", e.value));
            }
            "tol" | "tail" | "max_size" => {
                e.number()?;
            }
            _ => {}
        }
    }
    Ok(Experiment {
        command,
        section: sec.clone(),
    })
}

/// Parse and validate a complete description.
pub fn load_spec_str(text: &str) -> Result<SpecFile, SpecError> {
    let sections = parse_sections(text)?;
    let find = |k: &str| sections.iter().find(|s| s.kind == k);
    let Some(space_sec) = find("space") else {
        return err(1, 1, "missing [space] section");
    };
    let space = build_space(space_sec, find("generators"), find("bounded"))?;

    let mut probes = Vec::new();
    if let Some(p) = find("probes") {
        for e in &p.entries {
            probes.push(parse_probe(e, space.carrier.params().len())?);
        }
    }
    let mut functions = Vec::new();
    if let Some(f) = find("functions") {
        let gen_names: BTreeSet<String> = space.family.name_set();
        for e in &f.entries {
            if gen_names.contains(&e.key) {
                return err(e.line, e.key_column, format!("function `{}` shadows a generator", e.key));
            }
            functions.push((e.key.clone(), function_over(e, &space.family)?));
        }
    }
    let mut spec = SpecFile {
        space,
        probes,
        functions,
        maps: Vec::new(),
        experiments: Vec::new(),
    };
    for s in sections.iter().filter(|s| s.kind == "map") {
        let m = build_map(s, &spec.space)?;
        spec.maps.push(m);
    }
    for s in sections.iter().filter(|s| s.kind == "experiment") {
        let x = check_experiment(s, &spec)?;
        spec.experiments.push(x);
    }
    Ok(spec)
}
