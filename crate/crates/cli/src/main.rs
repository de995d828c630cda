//! `maxosc`: command-line runs of the gluing, shadowing, compiling and
//! oscillation pipelines.

mod artifacts;
mod run;
mod spec;
mod verify;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use maxosc::oscillator::Profile;

use crate::spec::{RunSpec, Task};

#[derive(Parser)]
#[command(name = "maxosc", version, about = "Maximally oscillating orbits, step by step")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Shadow a toral pseudo-orbit by a true orbit.
    Shadow(RunArgs),
    /// Glue orbit segments of a shift.
    Glue(RunArgs),
    /// Compile a measure into a periodic carrier.
    CompileMeasure(RunArgs),
    /// Build a point whose empirical measures sweep V.
    Oscillate(RunArgs),
    /// Re-check a run directory (or its manifest).
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Paper,
    Desk,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Output directory; defaults to the run file's `out`, then `./out`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long, value_enum)]
    profile: Option<ProfileArg>,
    #[arg(long)]
    seed: Option<u64>,
    /// Glue into one periodic point.
    #[arg(long)]
    period: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Run directory or manifest path.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_spec(args: &RunArgs, task: &str) -> Result<RunSpec> {
    let text = std::fs::read_to_string(&args.spec)
        .with_context(|| format!("reading spec {}", args.spec.display()))?;
    let mut spec: RunSpec = serde_json::from_str(&text)
        .with_context(|| format!("parsing spec {}", args.spec.display()))?;
    if spec.task.name() != task {
        bail!("spec describes task `{}`, not `{task}`", spec.task.name());
    }
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    match &mut spec.task {
        Task::Oscillate(t) => {
            if let Some(d) = args.depth {
                t.depth = d;
            }
            match (args.profile, t.profile) {
                (Some(ProfileArg::Paper), _) => t.profile = Profile::Paper,
                (Some(ProfileArg::Desk), Profile::Paper) => t.profile = Profile::Desk { c: 2.0 },
                _ => {}
            }
        }
        Task::Glue(t) => t.periodic |= args.period,
        _ => {}
    }
    Ok(spec)
}

fn execute(task: &str, args: &RunArgs) -> Result<bool> {
    let spec = load_spec(args, task)?;
    let out = args
        .out
        .clone()
        .or_else(|| spec.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let spec_dir = args.spec.parent().unwrap_or(Path::new("."));
    let manifest = run::run(&spec, spec_dir, &out)?;
    for inv in &manifest.invariants {
        println!("{} {}: {}", if inv.pass { "PASS" } else { "FAIL" }, inv.name, inv.detail);
    }
    println!("artifacts written to {}", out.display());
    Ok(manifest.pass())
}

fn run_verify(args: &VerifyArgs) -> Result<bool> {
    let Some(path) = args.spec.as_ref().or(args.out.as_ref()) else {
        bail!("verify needs --spec <manifest> or --out <run dir>");
    };
    let report = verify::verify(path)?;
    for c in &report.checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    println!("{}", serde_json::to_string(&serde_json::json!({ "pass": report.pass }))?);
    Ok(report.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Shadow(a) => execute("shadow", a),
        Command::Glue(a) => execute("glue", a),
        Command::CompileMeasure(a) => execute("compile-measure", a),
        Command::Oscillate(a) => execute("oscillate", a),
        Command::Verify(a) => run_verify(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
