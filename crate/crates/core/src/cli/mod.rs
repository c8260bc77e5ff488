//! The `advectum` command line.
//!
//! Exit codes: 0 on success, 1 on usage or configuration errors, 2 when
//! `validate` misses its R² threshold.

pub mod config;
pub mod validate;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::advect::{compute_ftle, output, run_workload, AnalyzerKind, AnalyzerOutput, ParticleStatus};
use crate::costmodel::{
    advise, estimate_cost, AdviseOptions, CalibrationModel, CostConstants, CostEstimate, DatasetSize,
    FieldComplexity, ParticleCount, SeedDistribution, StrategyHints, WorkloadSpec,
};
use crate::eval::EvalCounters;
use crate::locate::Locator;
use crate::mesh::MeshKind;
use crate::solve::SolverKind;
use crate::{Error, Result};

pub use config::RunConfig;
pub use validate::{run_validation, SuiteOptions, ValidationReport, ValidationRow};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;

/// Environment variable consulted when neither flag nor config sets threads.
pub const THREADS_ENV: &str = "ADVECTUM_THREADS";

#[derive(Debug, Parser)]
#[command(name = "advectum", version, about = "Particle advection and its analytical cost model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a workload from a config file and report counters and wall time.
    Run(RunArgs),
    /// Predict the FLOP cost of a workload.
    Estimate(EstimateArgs),
    /// Fit a time model from a CSV of predicted FLOPs and measured seconds.
    Calibrate(CalibrateArgs),
    /// Time the built-in suite and check the fit against a threshold.
    Validate(ValidateArgs),
    /// Compare a workload's predicted time to a budget and suggest changes.
    Advise(AdviseArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Worker threads [default: config, then $ADVECTUM_THREADS, then 1].
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub analyzer: Option<AnalyzerKind>,
    /// Analyzer output file.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Summary JSON file (also printed to stdout).
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SpecArgs {
    #[arg(long)]
    pub particles: u64,
    /// Steps per particle.
    #[arg(long, conflicts_with = "steps_file")]
    pub steps: Option<u64>,
    /// File of per-particle step counts, whitespace separated.
    #[arg(long)]
    pub steps_file: Option<PathBuf>,
    #[arg(long, default_value = "rk4")]
    pub solver: SolverKind,
    #[arg(long, default_value = "uniform")]
    pub mesh: MeshKind,
    /// Grid points per axis for the locate formulas.
    #[arg(long, default_value_t = 50)]
    pub d: u32,
    /// Analyzer FLOPs per step.
    #[arg(long)]
    pub analyze: Option<f64>,
    /// Cost-constant override file.
    #[arg(long)]
    pub constants: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// CSV with `predicted_flop` and `measured_seconds` columns.
    pub input: PathBuf,
    #[arg(long, default_value = "calibration.toml")]
    pub output: PathBuf,
    #[arg(long, default_value = "local")]
    pub machine: String,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long, default_value_t = 50)]
    pub d: usize,
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0.95)]
    pub threshold: f64,
    /// Multiplies every suite row's particle count.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long, default_value = "validation.csv")]
    pub output: PathBuf,
    /// Where to write the fitted model.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value = "local")]
    pub machine: String,
}

#[derive(Debug, Args)]
pub struct AdviseArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Time budget in seconds.
    #[arg(long)]
    pub budget: f64,
    /// Calibration model from `advectum calibrate` or `advectum validate`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[arg(long, default_value_t = 64)]
    pub max_threads: usize,
    #[arg(long, requires_all = ["particle_count", "seeds", "field"])]
    pub dataset_size: Option<DatasetSize>,
    #[arg(long)]
    pub particle_count: Option<ParticleCount>,
    #[arg(long)]
    pub seeds: Option<SeedDistribution>,
    #[arg(long)]
    pub field: Option<FieldComplexity>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Diagnostics go to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli, &mut std::io::stdout().lock()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::Run(a) => cmd_run(&a, out),
        Command::Estimate(a) => cmd_estimate(&a, out),
        Command::Calibrate(a) => cmd_calibrate(&a, out),
        Command::Validate(a) => cmd_validate(&a, out),
        Command::Advise(a) => cmd_advise(&a, out),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| Error::Config(format!("{THREADS_ENV}={v} is not a thread count"))),
        Err(_) => Ok(None),
    }
}

#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub mesh: MeshKind,
    pub cells: usize,
    pub solver: SolverKind,
    pub analyzer: AnalyzerKind,
    pub particles: usize,
    pub threads: usize,
    pub rng_seed: u64,
    pub total_steps: u64,
    pub counters: EvalCounters,
    pub terminated_steps: usize,
    pub terminated_bounds: usize,
    pub terminated_time: usize,
    pub terminated_overflow: usize,
    /// Model cost of the realized step counts.
    pub predicted_flop: f64,
    pub wall_seconds: f64,
}

pub fn cmd_run(a: &RunArgs, out: &mut dyn Write) -> Result<i32> {
    let mut cfg = RunConfig::load(&a.config)?;
    if let Some(seed) = a.seed {
        cfg.rng_seed = seed;
    }
    let threads = match (a.threads, cfg.threads) {
        (Some(t), _) | (None, Some(t)) => t,
        (None, None) => threads_from_env()?.unwrap_or(1),
    };
    if threads == 0 {
        return Err(Error::Config("thread count must be at least 1".into()));
    }
    let analyzer = a.analyzer.or(cfg.output.analyzer).unwrap_or(AnalyzerKind::SourceDest);
    let ds = cfg.build_dataset()?;
    let wl = cfg.build_workload(&ds)?;
    let loc = Locator::for_dataset(&ds);
    let result = run_workload(&ds, &loc, &wl, analyzer, threads)?;

    if let Some(path) = a.output.as_ref().or(cfg.output.path.as_ref()) {
        let w = create(path)?;
        match &result.output {
            AnalyzerOutput::Streamline(lines) => output::write_streamlines(w, lines).map_err(io_err(path))?,
            AnalyzerOutput::SourceDest(rows) => output::write_endpoints_csv(w, rows)?,
            AnalyzerOutput::FlowMap(flow) => {
                let horizon = wl.termination.max_time.ok_or_else(|| {
                    Error::Config("FTLE output needs `workload.max_time` as its horizon".into())
                })?;
                output::write_ftle_csv(w, &compute_ftle(flow, horizon)?)?;
            }
        }
    }

    let spec = WorkloadSpec::per_particle(result.steps_per_particle(), wl.solver.kind, ds.kind());
    let predicted_flop = estimate_cost(&spec, &CostConstants::default())?.total_flop;
    let summary = RunSummary {
        mesh: ds.kind(),
        cells: ds.mesh().cell_count(),
        solver: wl.solver.kind,
        analyzer,
        particles: result.particles.len(),
        threads,
        rng_seed: cfg.rng_seed,
        total_steps: result.total_steps,
        counters: result.counters,
        terminated_steps: result.status_count(ParticleStatus::TerminatedSteps),
        terminated_bounds: result.status_count(ParticleStatus::TerminatedBounds),
        terminated_time: result.status_count(ParticleStatus::TerminatedTime),
        terminated_overflow: result.status_count(ParticleStatus::TerminatedOverflow),
        predicted_flop,
        wall_seconds: result.wall_seconds,
    };
    let json = serde_json::to_string_pretty(&summary)?;
    if let Some(path) = a.summary.as_ref().or(cfg.output.summary.as_ref()) {
        std::fs::write(path, format!("{json}\n")).map_err(io_err(path))?;
    }
    writeln!(out, "{json}").map_err(io_err(Path::new("<stdout>")))?;
    Ok(EXIT_OK)
}

fn build_spec(s: &SpecArgs) -> Result<(WorkloadSpec, CostConstants)> {
    let mut constants = match &s.constants {
        Some(path) => CostConstants::load(path)?,
        None => CostConstants::for_resolution(s.d)?,
    };
    if s.constants.is_some() && s.d != constants.d {
        let file = constants.clone();
        constants = CostConstants::for_resolution(s.d)?;
        for solver in SolverKind::ALL {
            for mesh in MeshKind::ALL {
                let mut row = *file.row(solver, mesh);
                row.locate = constants.row(solver, mesh).locate;
                constants.set_row(solver, mesh, row)?;
            }
        }
    }
    let mut spec = match (&s.steps, &s.steps_file) {
        (_, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(io_err(path))?;
            let steps = text
                .split_whitespace()
                .map(|t| t.parse::<u64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            let mut spec = WorkloadSpec::per_particle(steps, s.solver, s.mesh);
            spec.particles = s.particles;
            spec
        }
        (Some(n), None) => WorkloadSpec::uniform(s.particles, *n, s.solver, s.mesh),
        (None, None) => return Err(Error::Config("one of --steps or --steps-file is required".into())),
    };
    spec.analyze = s.analyze;
    spec.validate()?;
    Ok((spec, constants))
}

fn write_estimate(out: &mut dyn Write, spec: &WorkloadSpec, e: &CostEstimate, format: Format) -> std::io::Result<()> {
    let b = &e.breakdown;
    match format {
        Format::Text => {
            writeln!(out, "{}", e.total_flop)?;
            writeln!(
                out,
                "# {} particles, {} steps, {} on {}: solve {} locate {} interp {} analyze {} terminate {}",
                spec.particles,
                spec.total_steps(),
                spec.solver,
                spec.mesh,
                b.solve,
                b.locate,
                b.interp,
                b.analyze,
                b.terminate
            )
        }
        Format::Csv => {
            writeln!(out, "solver,mesh,particles,total_steps,total_flop,solve,locate,interp,analyze,terminate")?;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                spec.solver,
                spec.mesh,
                spec.particles,
                spec.total_steps(),
                e.total_flop,
                b.solve,
                b.locate,
                b.interp,
                b.analyze,
                b.terminate
            )
        }
        Format::Json => {
            let v = serde_json::json!({
                "solver": spec.solver,
                "mesh": spec.mesh,
                "particles": spec.particles,
                "total_steps": spec.total_steps(),
                "total_flop": e.total_flop,
                "breakdown": b,
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&v).expect("json value"))
        }
    }
}

pub fn cmd_estimate(a: &EstimateArgs, out: &mut dyn Write) -> Result<i32> {
    let (spec, constants) = build_spec(&a.spec)?;
    let e = estimate_cost(&spec, &constants)?;
    write_estimate(out, &spec, &e, a.format).map_err(io_err(Path::new("<stdout>")))?;
    Ok(EXIT_OK)
}

pub fn cmd_calibrate(a: &CalibrateArgs, out: &mut dyn Write) -> Result<i32> {
    let file = File::open(&a.input).map_err(io_err(&a.input))?;
    let samples = validate::read_samples_csv(file)?;
    let model = crate::costmodel::calibrate(&samples)?.with_machine(a.machine.clone());
    model.save(&a.output)?;
    writeln!(
        out,
        "m = {:e} s/FLOP\nb = {:e} s\nR^2 = {}\nsamples = {}\nwritten to {}",
        model.slope,
        model.intercept,
        model.r_squared,
        model.samples,
        a.output.display()
    )
    .map_err(io_err(Path::new("<stdout>")))?;
    Ok(EXIT_OK)
}

pub fn cmd_validate(a: &ValidateArgs, out: &mut dyn Write) -> Result<i32> {
    let opts = SuiteOptions {
        d: a.d,
        repeats: a.repeats,
        threshold: a.threshold,
        scale: a.scale,
        machine: a.machine.clone(),
    };
    let report = run_validation(&opts, |r| {
        eprintln!(
            "{:<40} {:>14.6e} FLOP {:>10.4} s{}",
            r.label,
            r.predicted_flop,
            r.measured_seconds,
            if r.flagged { "  (noisy)" } else { "" }
        );
    })?;
    validate::write_rows_csv(create(&a.output)?, &report.rows)?;
    if let Some(path) = &a.model {
        report.model.save(path)?;
    }
    let stdout = |e| Error::io("<stdout>", e);
    writeln!(
        out,
        "rows = {}\nm = {:e} s/FLOP\nb = {:e} s\nR^2 = {}\nthreshold = {}\nresult = {}",
        report.rows.len(),
        report.model.slope,
        report.model.intercept,
        report.model.r_squared,
        report.threshold,
        if report.passed { "pass" } else { "fail" }
    )
    .map_err(stdout)?;
    for r in report.rows.iter().filter(|r| r.flagged) {
        writeln!(out, "noisy row: {} (spread {:.0}%)", r.label, 100.0 * r.spread).map_err(stdout)?;
    }
    Ok(if report.passed { EXIT_OK } else { EXIT_VALIDATION })
}

fn hints(a: &AdviseArgs) -> Result<Option<StrategyHints>> {
    let (Some(d), Some(p), Some(s), Some(f)) = (a.dataset_size, a.particle_count, a.seeds, a.field) else {
        return Ok(None);
    };
    Ok(Some(StrategyHints {
        dataset_size: d,
        particle_count: p,
        seed_distribution: s,
        field_complexity: f,
    }))
}

pub fn cmd_advise(a: &AdviseArgs, out: &mut dyn Write) -> Result<i32> {
    if !a.model.exists() {
        return Err(Error::Config(format!(
            "model file {} not found; create one with `advectum calibrate <runs.csv> --output {}` \
             (or `advectum validate --model {}`)",
            a.model.display(),
            a.model.display(),
            a.model.display()
        )));
    }
    let model = CalibrationModel::load(&a.model)?;
    let (spec, constants) = build_spec(&a.spec)?;
    let opts = AdviseOptions {
        constants,
        threads: a.threads,
        max_threads: a.max_threads,
        hints: hints(a)?,
    };
    let advice = advise(&spec, a.budget, &model, &opts)?;
    let stdout = |e| Error::io("<stdout>", e);
    match a.format {
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&advice)?).map_err(stdout)?,
        Format::Text | Format::Csv => {
            writeln!(
                out,
                "predicted {} FLOP, {:.6} s against a budget of {} s: {}",
                advice.predicted_flop,
                advice.predicted_seconds,
                advice.budget_seconds,
                if advice.within_budget { "within budget" } else { "over budget" }
            )
            .map_err(stdout)?;
            for (i, s) in advice.suggestions.iter().enumerate() {
                writeln!(
                    out,
                    "{}. {} -> {:.6} s{}",
                    i + 1,
                    s.describe(),
                    s.predicted_seconds,
                    if s.optimistic { " (assumes ideal thread scaling)" } else { "" }
                )
                .map_err(stdout)?;
            }
            if !advice.within_budget && advice.suggestions.is_empty() {
                writeln!(out, "no re-specification fits the budget").map_err(stdout)?;
            }
            if let Some(r) = &advice.parallel_strategy {
                let verdict = r.majority.map_or("no majority".to_string(), |m| m.to_string());
                write!(out, "parallel strategy: {verdict}").map_err(stdout)?;
                if r.is_mixed() {
                    write!(out, " (conflicting: {:?})", r.conflicting).map_err(stdout)?;
                }
                writeln!(out).map_err(stdout)?;
            }
        }
    }
    Ok(EXIT_OK)
}
