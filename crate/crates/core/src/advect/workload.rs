use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::TerminationCriteria;
use crate::mesh::{Bounds3, Dataset, Vec3};
use crate::solve::{SolverConfig, SolverKind};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Seeding {
    /// Independent uniform random seeds over the seed region.
    Sparse,
    /// A regular lattice filling the seed region. `None` picks the smallest
    /// cube lattice holding all particles.
    Packed { lattice: Option<[usize; 3]> },
    /// Equispaced seeds along a segment, endpoints included.
    Curve { from: Vec3, to: Vec3 },
}

impl Seeding {
    pub fn name(&self) -> &'static str {
        match self {
            Seeding::Sparse => "sparse",
            Seeding::Packed { .. } => "packed",
            Seeding::Curve { .. } => "curve",
        }
    }
}

/// Seed density relative to the cell count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedCountClass {
    /// At most one seed per 1000 cells.
    Small,
    /// Around one seed per 100 cells.
    Medium,
    /// At least one seed per cell.
    Large,
}

impl SeedCountClass {
    pub const ALL: [SeedCountClass; 3] = [SeedCountClass::Small, SeedCountClass::Medium, SeedCountClass::Large];

    pub fn classify(particles: usize, cells: usize) -> Self {
        if particles >= cells {
            SeedCountClass::Large
        } else if particles * 1000 <= cells {
            SeedCountClass::Small
        } else {
            SeedCountClass::Medium
        }
    }

    /// Representative particle count for `cells` cells.
    pub fn particle_count(self, cells: usize) -> usize {
        match self {
            SeedCountClass::Small => (cells / 1000).max(1),
            SeedCountClass::Medium => (cells / 100).max(1),
            SeedCountClass::Large => cells,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SeedCountClass::Small => "small",
            SeedCountClass::Medium => "medium",
            SeedCountClass::Large => "large",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepCountClass {
    Small,
    Medium,
    Large,
}

impl StepCountClass {
    pub const ALL: [StepCountClass; 3] = [StepCountClass::Small, StepCountClass::Medium, StepCountClass::Large];

    pub fn max_steps(self) -> u64 {
        match self {
            StepCountClass::Small => 100,
            StepCountClass::Medium => 1_000,
            StepCountClass::Large => 10_000,
        }
    }

    pub fn classify(steps: u64) -> Self {
        if steps <= 100 {
            StepCountClass::Small
        } else if steps < 10_000 {
            StepCountClass::Medium
        } else {
            StepCountClass::Large
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StepCountClass::Small => "small",
            StepCountClass::Medium => "medium",
            StepCountClass::Large => "large",
        }
    }
}

fn parse_class(s: &str) -> Option<usize> {
    ["small", "medium", "large"].iter().position(|c| *c == s)
}

impl FromStr for SeedCountClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_class(s)
            .map(|i| SeedCountClass::ALL[i])
            .ok_or_else(|| Error::InvalidWorkload(format!("unknown seed class `{s}`")))
    }
}

impl FromStr for StepCountClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_class(s)
            .map(|i| StepCountClass::ALL[i])
            .ok_or_else(|| Error::InvalidWorkload(format!("unknown step class `{s}`")))
    }
}

impl fmt::Display for SeedCountClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for StepCountClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Workload {
    pub seeding: Seeding,
    /// Region seeds are drawn from; the termination bounds when `None`.
    pub seed_region: Option<Bounds3>,
    pub particle_count: usize,
    pub solver: SolverConfig,
    pub termination: TerminationCriteria,
    pub rng_seed: u64,
}

impl Workload {
    pub fn new(
        seeding: Seeding,
        particle_count: usize,
        solver: SolverConfig,
        termination: TerminationCriteria,
        rng_seed: u64,
    ) -> Self {
        Workload {
            seeding,
            seed_region: None,
            particle_count,
            solver,
            termination,
            rng_seed,
        }
    }

    pub fn with_seed_region(mut self, region: Bounds3) -> Self {
        self.seed_region = Some(region);
        self
    }

    pub fn seed_region(&self) -> Bounds3 {
        self.seed_region.unwrap_or(self.termination.bounds)
    }

    pub fn seed_count_class(&self, cells: usize) -> SeedCountClass {
        SeedCountClass::classify(self.particle_count, cells)
    }

    pub fn step_count_class(&self) -> StepCountClass {
        StepCountClass::classify(self.termination.max_steps)
    }

    /// Lattice shape of packed seeding, `[P, 1, 1]` otherwise.
    pub fn lattice_dims(&self) -> [usize; 3] {
        match self.seeding {
            Seeding::Packed { lattice: Some(l) } => l,
            Seeding::Packed { lattice: None } => {
                let n = cube_side(self.particle_count);
                [n, n, n]
            }
            _ => [self.particle_count, 1, 1],
        }
    }

    /// Builds a workload from a preset name `<seeding>-<seeds>-<steps>`,
    /// e.g. `packed-large-small`. Curve presets span the seed region's
    /// main diagonal.
    pub fn preset(name: &str, dataset: &Dataset, solver: SolverKind, rng_seed: u64) -> Result<Self> {
        let parts: Vec<&str> = name.split('-').collect();
        let [seeding, seeds, steps] = parts[..] else {
            return Err(Error::InvalidWorkload(format!(
                "preset `{name}` is not of the form <seeding>-<seeds>-<steps>"
            )));
        };
        let bounds = dataset.bounds();
        let seeding = match seeding {
            "sparse" => Seeding::Sparse,
            "packed" => Seeding::Packed { lattice: None },
            "curve" => Seeding::Curve {
                from: bounds.min,
                to: bounds.max,
            },
            other => return Err(Error::InvalidWorkload(format!("unknown seeding `{other}`"))),
        };
        let seeds: SeedCountClass = seeds.parse()?;
        let steps: StepCountClass = steps.parse()?;
        let cells = dataset.mesh().cell_count();
        Ok(Workload::new(
            seeding,
            seeds.particle_count(cells),
            SolverConfig::for_bounds(solver, &bounds),
            TerminationCriteria::new(steps.max_steps(), bounds, None)?,
            rng_seed,
        ))
    }
}

/// Smallest `n` with `n^3 >= count`.
pub(crate) fn cube_side(count: usize) -> usize {
    let mut n = (count as f64).cbrt().round() as usize;
    while n.pow(3) < count {
        n += 1;
    }
    while n > 0 && (n - 1).pow(3) >= count {
        n -= 1;
    }
    n
}
