//! Command layer of the `sikorski` tool: resolves settings, runs one
//! experiment against a loaded space description and writes its CSV
//! artifacts.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use sikorski::specfile::{experiment_keys, load_spec_str, Entry, Experiment, SpecError, SpecFile};

mod commands;
pub mod report;

pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_TAIL: usize = 50;
pub const DEFAULT_MAX_SIZE: usize = 4;
pub const THREADS_ENV: &str = "SIKORSKI_THREADS";

pub const BUNDLED: &[(&str, &str)] = &[
    ("real_line_atan", include_str!("../specs/real_line_atan.spec")),
    ("parabola_refinement", include_str!("../specs/parabola_refinement.spec")),
    ("spiral", include_str!("../specs/spiral.spec")),
    ("rationals_sqrt2", include_str!("../specs/rationals_sqrt2.spec")),
    ("unit_interval_compact", include_str!("../specs/unit_interval_compact.spec")),
    ("plane_square", include_str!("../specs/plane_square.spec")),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Embed,
    Complete,
    Compactify,
    Boundize,
    CompareUniform,
    Tangent,
    CheckMap,
    VerifyFilters,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Embed,
        Command::Complete,
        Command::Compactify,
        Command::Boundize,
        Command::CompareUniform,
        Command::Tangent,
        Command::CheckMap,
        Command::VerifyFilters,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Embed => "embed",
            Command::Complete => "complete",
            Command::Compactify => "compactify",
            Command::Boundize => "boundize",
            Command::CompareUniform => "compare-uniform",
            Command::Tangent => "tangent",
            Command::CheckMap => "check-map",
            Command::VerifyFilters => "verify-filters",
        }
    }

    pub fn from_name(name: &str) -> Option<Command> {
        Command::ALL.into_iter().find(|c| c.name() == name)
    }

    fn module(self) -> &'static str {
        match self {
            Command::Embed | Command::CheckMap => "space",
            Command::Complete => "completion",
            Command::Compactify | Command::Boundize => "compactify",
            Command::CompareUniform => "uniform",
            Command::Tangent => "tangent",
            Command::VerifyFilters => "filters",
        }
    }

    /// Artifact file names start with this.
    fn stem(self) -> String {
        self.name().replace('-', "_")
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Command-line settings. Each one overrides the matching experiment
/// setting, which overrides the built-in default.
#[derive(Clone, Debug, Default)]
pub struct Flags {
    pub out: PathBuf,
    pub tol: Option<f64>,
    pub tail: Option<usize>,
    pub family: Option<String>,
    pub max_size: Option<usize>,
    /// `key=value` experiment settings.
    pub set: Vec<String>,
}

/// A description loaded from a file or from the bundled set.
pub struct LoadedSpec {
    pub origin: String,
    pub spec: SpecFile,
}

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// Loads `path`, or a bundled description when no such file exists and the
/// name matches one.
pub fn load(path: &str) -> Result<LoadedSpec> {
    let p = Path::new(path);
    let (origin, text) = if p.exists() {
        let text = std::fs::read_to_string(p).with_context(|| format!("reading {path}"))?;
        (path.to_string(), text)
    } else if let Some(t) = bundled(path) {
        (format!("<bundled {path}>"), t.to_string())
    } else {
        bail!("{path}: no such file and no bundled description of that name");
    };
    let spec = load_spec_str(&text).map_err(|e| anyhow!("{origin}: {e}"))?;
    Ok(LoadedSpec { origin, spec })
}

/// An invariant that did not hold.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub module: &'static str,
    pub invariant: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.module, self.invariant)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub summary: Vec<String>,
    pub artifacts: Vec<PathBuf>,
    pub violations: Vec<Violation>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn line(&mut self, s: impl Into<String>) {
        self.summary.push(s.into());
    }

    fn check(&mut self, module: &'static str, ok: bool, invariant: impl FnOnce() -> String) {
        if !ok {
            self.violations.push(Violation {
                module,
                invariant: invariant(),
            });
        }
    }
}

/// Experiment settings with command-line overrides layered on top.
pub(crate) struct Settings<'a> {
    origin: &'a str,
    overrides: Vec<Entry>,
    experiment: Option<&'a Experiment>,
}

impl<'a> Settings<'a> {
    fn new(command: Command, origin: &'a str, spec: Option<&'a SpecFile>, set: &[String]) -> Result<Self> {
        let keys = experiment_keys(command.name()).unwrap_or(&[]);
        let mut overrides = Vec::new();
        for kv in set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| anyhow!("--set {kv}: expected key=value"))?;
            let k = k.trim();
            if !keys.contains(&k) {
                bail!("--set {k}: not a setting of {command} (expected one of {})", keys.join(", "));
            }
            overrides.retain(|e: &Entry| e.key != k);
            overrides.push(Entry::detached(k, v));
        }
        Ok(Settings {
            origin,
            overrides,
            experiment: spec.and_then(|s| s.experiment(command.name())),
        })
    }

    pub(crate) fn entry(&self, key: &str) -> Option<&Entry> {
        self.overrides
            .iter()
            .find(|e| e.key == key)
            .or_else(|| self.experiment.and_then(|x| x.get(key)))
    }

    /// Attach the setting's location to an error raised while reading it.
    pub(crate) fn locate(&self, e: SpecError, key: &str) -> anyhow::Error {
        if e.line == 0 {
            anyhow!("--set {key}: {}", e.message)
        } else {
            anyhow!("{}: {e}", self.origin)
        }
    }

    pub(crate) fn with<T>(&self, key: &str, f: impl FnOnce(&Entry) -> Result<T, SpecError>) -> Result<Option<T>> {
        match self.entry(key) {
            None => Ok(None),
            Some(e) => f(e).map(Some).map_err(|err| self.locate(err, key)),
        }
    }

    pub(crate) fn f64_or(&self, key: &str, flag: Option<f64>, default: f64) -> Result<f64> {
        let v = match flag {
            Some(v) => v,
            None => self.with(key, Entry::number)?.unwrap_or(default),
        };
        if !v.is_finite() {
            bail!("{key} must be finite, got {v}");
        }
        Ok(v)
    }

    pub(crate) fn usize_or(&self, key: &str, flag: Option<usize>, default: usize) -> Result<usize> {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.with(key, Entry::count)?.unwrap_or(default)),
        }
    }

    pub(crate) fn text(&self, key: &str) -> Option<String> {
        self.entry(key).map(|e| e.value.clone())
    }
}

/// Run one command. Errors are returned for bad input or failing library
/// calls; invariant violations are reported in the outcome.
pub fn run(command: Command, spec: Option<&LoadedSpec>, flags: &Flags) -> Result<Outcome> {
    let origin = spec.map_or("<none>", |s| s.origin.as_str());
    let settings = Settings::new(command, origin, spec.map(|s| &s.spec), &flags.set)?;
    std::fs::create_dir_all(&flags.out).with_context(|| format!("creating {}", flags.out.display()))?;
    let need = || spec.map(|s| &s.spec).ok_or_else(|| anyhow!("{command} needs a space description"));
    let ctx = commands::Ctx {
        flags,
        settings: &settings,
        stem: command.stem(),
    };
    let mut out = match command {
        Command::Embed => commands::embed(&ctx, need()?),
        Command::Complete => commands::complete(&ctx, need()?),
        Command::Compactify => commands::compactify(&ctx, need()?),
        Command::Boundize => commands::boundize(&ctx, need()?),
        Command::CompareUniform => commands::compare_uniform(&ctx, need()?),
        Command::Tangent => commands::tangent(&ctx, spec.map(|s| &s.spec)),
        Command::CheckMap => commands::check_map(&ctx, need()?),
        Command::VerifyFilters => commands::verify_filters(&ctx),
    }
    .with_context(|| format!("{command} [{}]", command.module()))?;
    let status = if out.passed() { "passed" } else { "FAILED" };
    out.line(format!("status: {status}"));
    for v in out.violations.clone() {
        out.line(format!("violation: {v}"));
    }
    let summary = report::write_text(&flags.out, &format!("{}_summary.txt", command.stem()), &out.summary)?;
    out.artifacts.push(summary);
    Ok(out)
}

/// Every command with an `[experiment]` section in the description, in
/// the fixed command order.
pub fn declared_commands(spec: &SpecFile) -> Vec<Command> {
    Command::ALL
        .into_iter()
        .filter(|c| spec.experiment(c.name()).is_some())
        .collect()
}

/// Apply `SIKORSKI_THREADS` (0 or unset: one worker per core).
pub fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .with_context(|| format!("{THREADS_ENV}={v} is not a thread count"))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    Ok(())
}
