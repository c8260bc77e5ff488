use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{estimate_cost, predict_time, CalibrationModel, CostConstants, WorkloadSpec};
use crate::mesh::MeshKind;
use crate::solve::SolverKind;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParallelStrategy {
    OverData,
    OverParticles,
}

impl fmt::Display for ParallelStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParallelStrategy::OverData => "parallelize-over-data",
            ParallelStrategy::OverParticles => "parallelize-over-particles",
        })
    }
}

macro_rules! two_way {
    ($name:ident { $($variant:ident = $text:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name { $($variant),+ }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(Error::Config(format!(
                        concat!("unknown ", stringify!($name), " `{}`"),
                        other
                    ))),
                }
            }
        }
    };
}

two_way!(DatasetSize { Small = "small", Large = "large" });
two_way!(ParticleCount { Small = "small", Large = "large" });
two_way!(SeedDistribution { Sparse = "sparse", Dense = "dense" });
two_way!(FieldComplexity {
    CriticalPoints = "critical_points",
    Circular = "circular",
    Benign = "benign",
});

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyFactor {
    DatasetSize,
    ParticleCount,
    SeedDistribution,
    FieldComplexity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyHints {
    pub dataset_size: DatasetSize,
    pub particle_count: ParticleCount,
    pub seed_distribution: SeedDistribution,
    pub field_complexity: FieldComplexity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyReport {
    /// `None` on a tie.
    pub majority: Option<ParallelStrategy>,
    pub votes: Vec<(StrategyFactor, Option<ParallelStrategy>)>,
    /// Factors voting against the majority (all voters on a tie).
    pub conflicting: Vec<StrategyFactor>,
}

impl StrategyReport {
    pub fn is_mixed(&self) -> bool {
        !self.conflicting.is_empty()
    }
}

/// Majority vote over the four problem features. Over data suits large
/// datasets, few particles, sparse seeds and fields without critical points;
/// over particles suits the opposite, and fields without circulation.
pub fn recommend_parallel_strategy(h: &StrategyHints) -> StrategyReport {
    use ParallelStrategy::*;
    let votes = vec![
        (
            StrategyFactor::DatasetSize,
            Some(match h.dataset_size {
                DatasetSize::Large => OverData,
                DatasetSize::Small => OverParticles,
            }),
        ),
        (
            StrategyFactor::ParticleCount,
            Some(match h.particle_count {
                ParticleCount::Small => OverData,
                ParticleCount::Large => OverParticles,
            }),
        ),
        (
            StrategyFactor::SeedDistribution,
            Some(match h.seed_distribution {
                SeedDistribution::Sparse => OverData,
                SeedDistribution::Dense => OverParticles,
            }),
        ),
        (
            StrategyFactor::FieldComplexity,
            match h.field_complexity {
                FieldComplexity::Circular => Some(OverData),
                FieldComplexity::CriticalPoints => Some(OverParticles),
                FieldComplexity::Benign => None,
            },
        ),
    ];
    let data = votes.iter().filter(|v| v.1 == Some(OverData)).count();
    let particles = votes.iter().filter(|v| v.1 == Some(OverParticles)).count();
    let majority = match data.cmp(&particles) {
        std::cmp::Ordering::Greater => Some(OverData),
        std::cmp::Ordering::Less => Some(OverParticles),
        std::cmp::Ordering::Equal => None,
    };
    let conflicting = votes
        .iter()
        .filter(|(_, v)| v.is_some() && (majority.is_none() || *v != majority))
        .map(|(f, _)| *f)
        .collect();
    StrategyReport {
        majority,
        votes,
        conflicting,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Change {
    Solver { from: SolverKind, to: SolverKind },
    Mesh { from: MeshKind, to: MeshKind },
    Threads { from: usize, to: usize },
}

impl fmt::Display for Change {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Change::Solver { from, to } => write!(f, "use {to} instead of {from}"),
            Change::Mesh { from, to } => write!(f, "resample the {from} mesh onto a {to} grid"),
            Change::Threads { from, to } => write!(f, "raise threads from {from} to {to}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    pub changes: Vec<Change>,
    pub solver: SolverKind,
    pub mesh: MeshKind,
    pub threads: usize,
    pub predicted_flop: f64,
    pub predicted_seconds: f64,
    /// Set when the prediction assumes ideal thread scaling.
    pub optimistic: bool,
}

impl Suggestion {
    pub fn describe(&self) -> String {
        let parts: Vec<String> = self.changes.iter().map(|c| c.to_string()).collect();
        parts.join(", ")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Advice {
    pub predicted_flop: f64,
    pub predicted_seconds: f64,
    pub budget_seconds: f64,
    pub within_budget: bool,
    /// Re-specifications that fit the budget, fewest changes first.
    pub suggestions: Vec<Suggestion>,
    pub parallel_strategy: Option<StrategyReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdviseOptions {
    pub constants: CostConstants,
    /// Threads the workload already uses.
    pub threads: usize,
    /// Upper limit for thread-count suggestions.
    pub max_threads: usize,
    pub hints: Option<StrategyHints>,
}

impl Default for AdviseOptions {
    fn default() -> Self {
        AdviseOptions {
            constants: CostConstants::default(),
            threads: 1,
            max_threads: 64,
            hints: None,
        }
    }
}

/// Estimates, predicts and compares against the budget; over budget, tries
/// cheaper solvers, uniform resampling and more threads (ideal scaling).
pub fn advise(
    spec: &WorkloadSpec,
    budget_seconds: f64,
    model: &CalibrationModel,
    opts: &AdviseOptions,
) -> Result<Advice> {
    if !(budget_seconds >= 0.0) {
        return Err(Error::InvalidCostSpec(format!("budget {budget_seconds} must be non-negative")));
    }
    let threads = opts.threads.max(1);
    let flop = estimate_cost(spec, &opts.constants)?.total_flop;
    let seconds = predict_time(model, flop) / threads as f64;
    let within_budget = seconds <= budget_seconds;
    let mut advice = Advice {
        predicted_flop: flop,
        predicted_seconds: seconds,
        budget_seconds,
        within_budget,
        suggestions: Vec::new(),
        parallel_strategy: None,
    };
    if within_budget {
        return Ok(advice);
    }
    advice.parallel_strategy = opts.hints.as_ref().map(recommend_parallel_strategy);

    let base_step = super::per_step_cost(&opts.constants, spec.solver, spec.mesh, 0.0);
    let solvers = SolverKind::ALL.into_iter().filter(|&s| {
        s == spec.solver || super::per_step_cost(&opts.constants, s, spec.mesh, 0.0) < base_step
    });
    let mut meshes = vec![spec.mesh];
    if spec.mesh != MeshKind::Uniform {
        meshes.push(MeshKind::Uniform);
    }
    let thread_options: Vec<usize> = std::iter::successors(Some(threads * 2), |t| Some(t * 2))
        .take_while(|&t| t <= opts.max_threads)
        .collect();

    for solver in solvers {
        for &mesh in &meshes {
            let mut changes = Vec::new();
            if solver != spec.solver {
                changes.push(Change::Solver {
                    from: spec.solver,
                    to: solver,
                });
            }
            if mesh != spec.mesh {
                changes.push(Change::Mesh {
                    from: spec.mesh,
                    to: mesh,
                });
            }
            let variant = WorkloadSpec {
                solver,
                mesh,
                ..spec.clone()
            };
            let vflop = estimate_cost(&variant, &opts.constants)?.total_flop;
            let serial = predict_time(model, vflop);
            let fit = if !changes.is_empty() && serial / threads as f64 <= budget_seconds {
                Some((threads, serial / threads as f64))
            } else {
                thread_options
                    .iter()
                    .map(|&t| (t, serial / t as f64))
                    .find(|&(_, s)| s <= budget_seconds)
            };
            let Some((t, secs)) = fit else { continue };
            if t != threads {
                changes.push(Change::Threads { from: threads, to: t });
            }
            advice.suggestions.push(Suggestion {
                changes,
                solver,
                mesh,
                threads: t,
                predicted_flop: vflop,
                predicted_seconds: secs,
                optimistic: t != threads,
            });
        }
    }
    advice.suggestions.sort_by(|a, b| {
        a.changes
            .len()
            .cmp(&b.changes.len())
            .then(b.predicted_seconds.total_cmp(&a.predicted_seconds))
    });
    Ok(advice)
}
