//! Built-in workload suite that checks predicted FLOPs against wall time.

use serde::{Deserialize, Serialize};

use super::config::synthetic_dataset;
use crate::advect::{run_workload, AnalyzerKind, Seeding, TerminationCriteria, Workload};
use crate::costmodel::{calibrate, estimate_cost, CalibrationModel, CostConstants, WorkloadSpec};
use crate::locate::{Locator, LocatorKind};
use crate::mesh::{AnalyticField, Bounds3, Dataset, MeshKind, Vec3};
use crate::solve::{SolverConfig, SolverKind};
use crate::Result;

/// Relative repeat spread above which a row is flagged as noisy.
pub const MAX_SPREAD: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOptions {
    pub d: usize,
    pub repeats: usize,
    pub threshold: f64,
    /// Multiplies every row's particle count.
    pub scale: f64,
    pub machine: String,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            d: 50,
            repeats: 3,
            threshold: 0.95,
            scale: 1.0,
            machine: String::from("local"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRow {
    pub label: String,
    pub mesh: MeshKind,
    pub solver: SolverKind,
    pub particles: u64,
    pub steps: u64,
    pub predicted_flop: f64,
    /// Median over repeat samples.
    pub measured_seconds: f64,
    /// `(max - min) / median` over repeats.
    pub spread: f64,
    pub repeats: usize,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub rows: Vec<ValidationRow>,
    pub model: CalibrationModel,
    pub threshold: f64,
    pub passed: bool,
}

struct SuiteCase {
    solver: SolverKind,
    mesh: MeshKind,
    particles: u64,
    steps: u64,
}

/// `{euler, rk4} x {uniform, rectilinear, unstructured} x {1e5, 5e6}` steps.
fn suite(scale: f64) -> Vec<SuiteCase> {
    let mut cases = Vec::new();
    for (particles, steps) in [(1_000u64, 100u64), (5_000, 1_000)] {
        for mesh in MeshKind::ALL {
            for solver in [SolverKind::Euler, SolverKind::Rk4] {
                cases.push(SuiteCase {
                    solver,
                    mesh,
                    particles: ((particles as f64 * scale).round() as u64).max(1),
                    steps,
                });
            }
        }
    }
    cases
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Workloads faster than this are run back to back within one sample.
const MIN_SAMPLE_SECONDS: f64 = 1.0;
/// Runs at least this long keep their warm-up run as the first sample.
const LONG_RUN_SECONDS: f64 = 1.0;

/// Median wall time and relative spread over `repeats` samples. A sample
/// is the fastest of enough back-to-back runs to fill `MIN_SAMPLE_SECONDS`;
/// preemption only adds time, so the minimum filters it out. `single` is
/// the duration of one run if already known, else a warm-up run finds it.
fn measure(ds: &Dataset, loc: &Locator, wl: &Workload, repeats: usize, single: Option<f64>) -> Result<(f64, f64)> {
    let run = || -> Result<f64> { Ok(run_workload(ds, loc, wl, AnalyzerKind::SourceDest, 1)?.wall_seconds) };
    let (warm, fresh) = match single {
        Some(t) => (t, false),
        None => (run()?, true),
    };
    let batch = (MIN_SAMPLE_SECONDS / warm.max(1e-6)).ceil().clamp(1.0, 1000.0) as usize;
    let mut times = Vec::with_capacity(repeats);
    if fresh && warm >= LONG_RUN_SECONDS {
        times.push(warm);
    }
    while times.len() < repeats.max(1) {
        let mut best = f64::INFINITY;
        for _ in 0..batch {
            best = best.min(run()?);
        }
        times.push(best);
    }
    times.sort_by(f64::total_cmp);
    let med = median(&times);
    let spread = if med > 0.0 { (times[times.len() - 1] - times[0]) / med } else { 0.0 };
    Ok((med, spread))
}

/// The vortex domain `[-1, 1]^3`; seeds sit inside radius `0.5 sqrt(2)` so
/// no particle leaves within the suite's step counts.
fn seed_region() -> Bounds3 {
    Bounds3 {
        min: Vec3::new(-0.5, -0.5, -0.9),
        max: Vec3::new(0.5, 0.5, 0.9),
    }
}

/// Runs the suite single-threaded and fits the calibration line.
/// Unstructured rows use the cell tree, the locator the cost constants
/// describe. `progress` sees each row as it completes.
pub fn run_validation(opts: &SuiteOptions, mut progress: impl FnMut(&ValidationRow)) -> Result<ValidationReport> {
    let bounds = Bounds3 {
        min: Vec3::splat(-1.0),
        max: Vec3::splat(1.0),
    };
    let constants = CostConstants::for_resolution(opts.d as u32)?;
    let mut rows = Vec::new();
    for mesh in MeshKind::ALL {
        let ds = synthetic_dataset(mesh, opts.d, bounds, &AnalyticField::Circular)?;
        let loc = match mesh {
            MeshKind::Unstructured => Locator::new(&ds, LocatorKind::CellTree)?,
            _ => Locator::for_dataset(&ds),
        };
        for case in suite(opts.scale).into_iter().filter(|c| c.mesh == mesh) {
            let wl = Workload::new(
                Seeding::Packed { lattice: None },
                case.particles as usize,
                SolverConfig::for_bounds(case.solver, &ds.bounds()),
                TerminationCriteria::new(case.steps, ds.bounds(), None)?,
                0,
            )
            .with_seed_region(seed_region());
            let spec = WorkloadSpec::uniform(case.particles, case.steps, case.solver, mesh);
            let predicted_flop = estimate_cost(&spec, &constants)?.total_flop;

            let mut repeats = opts.repeats.max(1);
            let (mut seconds, mut spread) = measure(&ds, &loc, &wl, repeats, None)?;
            if spread > MAX_SPREAD {
                repeats *= 2;
                (seconds, spread) = measure(&ds, &loc, &wl, repeats, Some(seconds))?;
            }
            let row = ValidationRow {
                label: format!("{}-{}-p{}-n{}", case.solver, mesh, case.particles, case.steps),
                mesh,
                solver: case.solver,
                particles: case.particles,
                steps: case.steps,
                predicted_flop,
                measured_seconds: seconds,
                spread,
                repeats,
                flagged: spread > MAX_SPREAD,
            };
            progress(&row);
            rows.push(row);
        }
    }
    rows.sort_by(|a, b| a.predicted_flop.total_cmp(&b.predicted_flop));
    let samples: Vec<(f64, f64)> = rows.iter().map(|r| (r.predicted_flop, r.measured_seconds)).collect();
    let model = calibrate(&samples)?.with_machine(opts.machine.clone());
    let passed = rows.len() >= 8 && model.r_squared >= opts.threshold && rows.iter().all(|r| !r.flagged);
    Ok(ValidationReport {
        rows,
        model,
        threshold: opts.threshold,
        passed,
    })
}

pub fn write_rows_csv<W: std::io::Write>(w: W, rows: &[ValidationRow]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    for r in rows {
        csv.serialize(r)?;
    }
    csv.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct SampleRow {
    predicted_flop: f64,
    measured_seconds: f64,
}

/// `(predicted_flop, measured_seconds)` pairs from a CSV with those columns.
pub fn read_samples_csv<R: std::io::Read>(r: R) -> Result<Vec<(f64, f64)>> {
    let mut csv = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for row in csv.deserialize::<SampleRow>() {
        let row = row?;
        out.push((row.predicted_flop, row.measured_seconds));
    }
    Ok(out)
}
