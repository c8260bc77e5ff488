//! The particle advance loop, analyzers, workloads and parallel execution.
//!
//! Each particle repeats step, analyze, terminate-check until a termination
//! criterion fires. Particles never interact, so a workload is split into
//! static contiguous blocks, one per worker, and merged back in id order.

mod ftle;
pub mod output;
mod seed;
mod workload;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use ftle::{compute_ftle, FlowMap, FtleField};
pub use seed::seed_particles;
pub use workload::{SeedCountClass, Seeding, StepCountClass, Workload};

use crate::eval::{EvalCounters, FieldEvaluator};
use crate::locate::{Locator, WalkCache};
use crate::mesh::{Bounds3, Dataset, Vec3};
use crate::solve::{step, SolverConfig, SolverKind, StepStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParticleStatus {
    Active,
    TerminatedSteps,
    TerminatedBounds,
    /// Reached `max_time` of accumulated integration time.
    TerminatedTime,
    /// The solver produced a non-finite state.
    TerminatedOverflow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub id: u64,
    pub seed: Vec3,
    pub position: Vec3,
    /// Accumulated integration time, the sum of accepted step sizes.
    pub time: f64,
    pub steps_taken: u64,
    pub status: ParticleStatus,
    /// Next trial step size (only changes under the adaptive solver).
    pub step_size: f64,
    pub walk_cache: WalkCache,
}

impl Particle {
    pub fn new(id: u64, position: Vec3, step_size: f64) -> Self {
        Particle {
            id,
            seed: position,
            position,
            time: 0.0,
            steps_taken: 0,
            status: ParticleStatus::Active,
            step_size,
            walk_cache: WalkCache::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TerminationCriteria {
    pub max_steps: u64,
    pub bounds: Bounds3,
    pub max_time: Option<f64>,
}

impl TerminationCriteria {
    pub fn new(max_steps: u64, bounds: Bounds3, max_time: Option<f64>) -> crate::Result<Self> {
        if max_steps == 0 {
            return Err(crate::Error::InvalidWorkload("max_steps must be at least 1".into()));
        }
        if let Some(t) = max_time {
            if !(t > 0.0) {
                return Err(crate::Error::InvalidWorkload(format!("max_time {t} must be positive")));
            }
        }
        Ok(TerminationCriteria {
            max_steps,
            bounds,
            max_time,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalyzerKind {
    /// Keep only each particle's final position.
    SourceDest,
    /// Keep every accepted position.
    Streamline,
    /// Seed-to-end mapping, meant for packed lattices.
    FlowMap,
}

impl std::str::FromStr for AnalyzerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "source_dest" | "source-dest" => Ok(AnalyzerKind::SourceDest),
            "streamline" | "streamlines" => Ok(AnalyzerKind::Streamline),
            "flow_map" | "flow-map" | "ftle" => Ok(AnalyzerKind::FlowMap),
            other => Err(format!("unknown analyzer `{other}`")),
        }
    }
}

/// Per-step hook of the advance loop.
pub trait Analyze {
    fn start(&mut self, _particle: &Particle) {}
    fn step(&mut self, _particle: &Particle) {}
}

/// Analyzer that does no work (source-destination and flow maps read the
/// final particle state instead).
#[derive(Debug, Default)]
pub struct Discard;

impl Analyze for Discard {}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polyline {
    pub id: u64,
    /// `(position, time)` per vertex; the seed first.
    pub points: Vec<(Vec3, f64)>,
}

impl Analyze for Polyline {
    fn start(&mut self, particle: &Particle) {
        self.id = particle.id;
        self.points.clear();
        self.points.push((particle.position, particle.time));
    }

    fn step(&mut self, particle: &Particle) {
        self.points.push((particle.position, particle.time));
    }
}

/// Runs the step/analyze/terminate loop until `particle` terminates.
pub fn advance_particle<A: Analyze>(
    ev: &mut FieldEvaluator<'_>,
    cfg: &SolverConfig,
    term: &TerminationCriteria,
    analyzer: &mut A,
    particle: &mut Particle,
) {
    if particle.status != ParticleStatus::Active {
        return;
    }
    ev.swap_cache(&mut particle.walk_cache);
    analyzer.start(particle);
    if !term.bounds.contains(particle.position) {
        particle.status = ParticleStatus::TerminatedBounds;
    }
    while particle.status == ParticleStatus::Active {
        let mut h = particle.step_size;
        let mut to_horizon = false;
        if let Some(t_end) = term.max_time {
            let remaining = t_end - particle.time;
            if h >= remaining {
                h = remaining;
                to_horizon = true;
            }
        }
        let r = step(ev, particle.position, cfg, h);
        match r.status {
            StepStatus::Ok if term.bounds.contains(r.new_position) => {
                particle.position = r.new_position;
                particle.steps_taken += 1;
                particle.time = if to_horizon && r.h_used == h {
                    term.max_time.expect("horizon implies max_time")
                } else {
                    particle.time + r.h_used
                };
                if cfg.kind == SolverKind::Rkf45 {
                    particle.step_size = r.h_next;
                }
                analyzer.step(particle);

                if particle.steps_taken >= term.max_steps {
                    particle.status = ParticleStatus::TerminatedSteps;
                } else if term.max_time.is_some_and(|t| particle.time >= t) {
                    particle.status = ParticleStatus::TerminatedTime;
                }
            }
            StepStatus::Ok | StepStatus::ExitedDomain => {
                particle.status = ParticleStatus::TerminatedBounds
            }
            StepStatus::RejectedOverflow => particle.status = ParticleStatus::TerminatedOverflow,
        }
    }
    ev.swap_cache(&mut particle.walk_cache);
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnalyzerOutput {
    /// `(id, seed, final position)` per particle.
    SourceDest(Vec<(u64, Vec3, Vec3)>),
    Streamline(Vec<Polyline>),
    FlowMap(FlowMap),
}

#[derive(Debug, Clone)]
pub struct WorkloadResult {
    /// Sum of per-particle step counts.
    pub total_steps: u64,
    pub counters: EvalCounters,
    pub wall_seconds: f64,
    /// Final particle states in id order.
    pub particles: Vec<Particle>,
    pub output: AnalyzerOutput,
}

impl WorkloadResult {
    pub fn steps_per_particle(&self) -> Vec<u64> {
        self.particles.iter().map(|p| p.steps_taken).collect()
    }

    pub fn status_count(&self, status: ParticleStatus) -> usize {
        self.particles.iter().filter(|p| p.status == status).count()
    }
}

fn advance_block(
    dataset: &Dataset,
    locator: &Locator,
    workload: &Workload,
    record_lines: bool,
    block: &mut [Particle],
) -> (EvalCounters, Vec<Polyline>) {
    let mut ev = FieldEvaluator::new(dataset, locator);
    let mut lines = Vec::new();
    for particle in block.iter_mut() {
        if record_lines {
            let mut line = Polyline::default();
            advance_particle(&mut ev, &workload.solver, &workload.termination, &mut line, particle);
            lines.push(line);
        } else {
            advance_particle(&mut ev, &workload.solver, &workload.termination, &mut Discard, particle);
        }
    }
    (ev.counters(), lines)
}

/// Seeds and advances every particle of `workload` on `thread_count`
/// workers. Wall time covers the advection phase only.
pub fn run_workload(
    dataset: &Dataset,
    locator: &Locator,
    workload: &Workload,
    analyzer: AnalyzerKind,
    thread_count: usize,
) -> crate::Result<WorkloadResult> {
    workload.solver.validate()?;
    let thread_count = thread_count.max(1);
    let mut particles = seed_particles(workload, dataset)?;
    let record_lines = analyzer == AnalyzerKind::Streamline;

    let start = Instant::now();
    let mut shards: Vec<(EvalCounters, Vec<Polyline>)> = Vec::new();
    if thread_count == 1 || particles.len() <= 1 {
        shards.push(advance_block(dataset, locator, workload, record_lines, &mut particles));
    } else {
        let block = particles.len().div_ceil(thread_count);
        std::thread::scope(|s| {
            let handles: Vec<_> = particles
                .chunks_mut(block)
                .map(|chunk| {
                    s.spawn(move || advance_block(dataset, locator, workload, record_lines, chunk))
                })
                .collect();
            shards = handles
                .into_iter()
                .map(|h| h.join().expect("advection worker panicked"))
                .collect();
        });
    }
    let wall_seconds = start.elapsed().as_secs_f64();

    let mut counters = EvalCounters::default();
    let mut lines = Vec::new();
    for (c, l) in shards {
        counters += c;
        lines.extend(l);
    }
    let total_steps = particles.iter().map(|p| p.steps_taken).sum();
    let output = match analyzer {
        AnalyzerKind::SourceDest => AnalyzerOutput::SourceDest(
            particles.iter().map(|p| (p.id, p.seed, p.position)).collect(),
        ),
        AnalyzerKind::Streamline => AnalyzerOutput::Streamline(lines),
        AnalyzerKind::FlowMap => AnalyzerOutput::FlowMap(FlowMap {
            dims: workload.lattice_dims(),
            seeds: particles.iter().map(|p| p.seed).collect(),
            ends: particles.iter().map(|p| p.position).collect(),
        }),
    };
    Ok(WorkloadResult {
        total_steps,
        counters,
        wall_seconds,
        particles,
        output,
    })
}
