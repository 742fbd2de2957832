use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sikorski_cli::{configure_threads, declared_commands, load, run, Command, Flags, BUNDLED};

#[derive(Parser)]
#[command(name = "sikorski", version, about = "Experiments on finitely generated differential spaces")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Directory for CSV and summary artifacts
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Cauchy and agreement tolerance
    #[arg(long)]
    tol: Option<f64>,
    /// Probe tail length
    #[arg(long)]
    tail: Option<usize>,
    /// Generators to use: `a,b` or `maximal:<n>`
    #[arg(long)]
    family: Option<String>,
    /// Largest ground set for verify-filters
    #[arg(long)]
    max_size: Option<usize>,
    /// Override an experiment setting, e.g. `--set eps=1,0.5`
    #[arg(long, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl From<Common> for Flags {
    fn from(c: Common) -> Flags {
        Flags {
            out: c.out,
            tol: c.tol,
            tail: c.tail,
            family: c.family,
            max_size: c.max_size,
            set: c.set,
        }
    }
}

#[derive(Args)]
struct WithSpec {
    /// Description file, or the name of a bundled one
    spec: String,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct OptionalSpec {
    /// Description file, or the name of a bundled one
    spec: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample the carrier and write its generator embedding
    Embed(WithSpec),
    /// Adjoin the limits of Cauchy probes
    Complete(WithSpec),
    /// Normalize generators into [-1, 1] and complete
    Compactify(WithSpec),
    /// Replace generators by bounded ones near given centers
    Boundize(WithSpec),
    /// Search for pairs separating two uniform structures
    CompareUniform(WithSpec),
    /// Tangent vectors, tangent maps and randomized derivative sweeps
    Tangent(OptionalSpec),
    /// Check the witnesses of a smooth map
    CheckMap(WithSpec),
    /// Exhaustively check the Cauchy filter calculus on small sets
    VerifyFilters(OptionalSpec),
    /// Run every experiment declared in a description
    Run(WithSpec),
    /// List the bundled descriptions
    Bundled,
}

fn execute(command: Command, spec: Option<&str>, common: Common) -> anyhow::Result<bool> {
    let loaded = spec.map(load).transpose()?;
    let outcome = run(command, loaded.as_ref(), &common.into())?;
    for line in &outcome.summary {
        println!("{line}");
    }
    for v in &outcome.violations {
        eprintln!("invariant violated {v}");
    }
    Ok(outcome.passed())
}

fn dispatch(cli: Cli) -> anyhow::Result<bool> {
    let (command, spec, common) = match cli.command {
        Cmd::Embed(a) => (Command::Embed, Some(a.spec), a.common),
        Cmd::Complete(a) => (Command::Complete, Some(a.spec), a.common),
        Cmd::Compactify(a) => (Command::Compactify, Some(a.spec), a.common),
        Cmd::Boundize(a) => (Command::Boundize, Some(a.spec), a.common),
        Cmd::CompareUniform(a) => (Command::CompareUniform, Some(a.spec), a.common),
        Cmd::Tangent(a) => (Command::Tangent, a.spec, a.common),
        Cmd::CheckMap(a) => (Command::CheckMap, Some(a.spec), a.common),
        Cmd::VerifyFilters(a) => (Command::VerifyFilters, a.spec, a.common),
        Cmd::Run(a) => {
            let loaded = load(&a.spec)?;
            let flags: Flags = a.common.into();
            let mut passed = true;
            for c in declared_commands(&loaded.spec) {
                println!("== {c}");
                let outcome = run(c, Some(&loaded), &flags)?;
                for line in &outcome.summary {
                    println!("{line}");
                }
                for v in &outcome.violations {
                    eprintln!("invariant violated {v}");
                }
                passed &= outcome.passed();
            }
            return Ok(passed);
        }
        Cmd::Bundled => {
            for (name, _) in BUNDLED {
                println!("{name}");
            }
            return Ok(true);
        }
    };
    execute(command, spec.as_deref(), common)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
