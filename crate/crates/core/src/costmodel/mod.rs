//! Analytical FLOP cost of a particle-advection workload.
//!
//! One step costs `solve + K * (locate + interp) + analyze + terminate`,
//! where `K` is the solver's evaluation count. A workload costs the sum of
//! its particles' step costs.

mod advise;
mod calibrate;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use advise::{
    advise, recommend_parallel_strategy, Advice, AdviseOptions, Change, DatasetSize, FieldComplexity,
    ParallelStrategy, ParticleCount, SeedDistribution, StrategyFactor, StrategyHints, StrategyReport,
    Suggestion,
};
pub use calibrate::{calibrate, predict_time, CalibrationModel};

use crate::mesh::MeshKind;
use crate::solve::{SolverKind, RKF45_SOLVE_FLOPS};
use crate::{Error, Result};

/// Grid resolution the published constants refer to.
pub const REFERENCE_RESOLUTION: u32 = 50;

/// FLOPs per cell-tree level in the unstructured locate formula.
pub const TREE_LEVEL_FLOPS: f64 = 10.0;
/// Newton-iteration FLOPs in the unstructured locate formula.
pub const NEWTON_ITERATION_FLOPS: f64 = 374.0;
pub const NEWTON_ITERATIONS: f64 = 2.0;

/// Locate FLOPs for one query on a `d`-per-axis grid.
pub fn locate_cost(mesh: MeshKind, d: u32) -> Result<f64> {
    if d < 2 {
        return Err(Error::InvalidCostSpec(format!("resolution d = {d} must be at least 2")));
    }
    let d = f64::from(d);
    Ok(match mesh {
        MeshKind::Uniform => 15.0,
        MeshKind::Rectilinear => (3.0 * d.log2()).ceil(),
        MeshKind::Unstructured => {
            (d.powi(3).log2() * TREE_LEVEL_FLOPS).ceil() + NEWTON_ITERATION_FLOPS * NEWTON_ITERATIONS
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub solve: f64,
    pub locate: f64,
    pub interp: f64,
    pub terminate: f64,
    pub analyze: f64,
}

impl CostRow {
    fn is_valid(&self) -> bool {
        [self.solve, self.locate, self.interp, self.terminate, self.analyze]
            .iter()
            .all(|v| v.is_finite() && *v >= 0.0)
    }
}

/// Per-(solver, mesh) FLOP constants.
#[derive(Debug, Clone, PartialEq)]
pub struct CostConstants {
    pub d: u32,
    rows: [[CostRow; 3]; 3],
}

fn solver_index(s: SolverKind) -> usize {
    SolverKind::ALL.iter().position(|k| *k == s).expect("listed solver")
}

fn mesh_index(m: MeshKind) -> usize {
    MeshKind::ALL.iter().position(|k| *k == m).expect("listed mesh")
}

fn default_solve(s: SolverKind) -> f64 {
    match s {
        SolverKind::Euler => 6.0,
        SolverKind::Rk4 => 37.0,
        SolverKind::Rkf45 => RKF45_SOLVE_FLOPS,
    }
}

fn default_interp(m: MeshKind) -> f64 {
    match m {
        MeshKind::Uniform | MeshKind::Rectilinear => 15.0,
        MeshKind::Unstructured => 35.0,
    }
}

impl Default for CostConstants {
    fn default() -> Self {
        CostConstants::for_resolution(REFERENCE_RESOLUTION).expect("reference resolution is valid")
    }
}

impl CostConstants {
    /// Default constants with locate costs evaluated at resolution `d`.
    pub fn for_resolution(d: u32) -> Result<Self> {
        let mut rows = [[CostRow {
            solve: 0.0,
            locate: 0.0,
            interp: 0.0,
            terminate: 0.0,
            analyze: 0.0,
        }; 3]; 3];
        for s in SolverKind::ALL {
            for m in MeshKind::ALL {
                rows[solver_index(s)][mesh_index(m)] = CostRow {
                    solve: default_solve(s),
                    locate: locate_cost(m, d)?,
                    interp: default_interp(m),
                    terminate: 5.0,
                    analyze: 0.0,
                };
            }
        }
        Ok(CostConstants { d, rows })
    }

    pub fn row(&self, solver: SolverKind, mesh: MeshKind) -> &CostRow {
        &self.rows[solver_index(solver)][mesh_index(mesh)]
    }

    pub fn set_row(&mut self, solver: SolverKind, mesh: MeshKind, row: CostRow) -> Result<()> {
        if !row.is_valid() {
            return Err(Error::InvalidCostSpec(format!("{solver}.{mesh}: {row:?}")));
        }
        self.rows[solver_index(solver)][mesh_index(mesh)] = row;
        Ok(())
    }

    /// Parses an override file:
    ///
    /// ```toml
    /// d = 64
    /// [rk4.unstructured]
    /// locate = 900
    /// ```
    ///
    /// Unnamed entries keep their defaults at the file's `d`.
    pub fn from_toml(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let d = match table.get("d") {
            None => REFERENCE_RESOLUTION,
            Some(v) => v
                .as_integer()
                .and_then(|i| u32::try_from(i).ok())
                .ok_or_else(|| Error::InvalidCostSpec(format!("d must be a positive integer, got {v}")))?,
        };
        let mut c = CostConstants::for_resolution(d)?;
        for (key, value) in &table {
            if key == "d" {
                continue;
            }
            let solver: SolverKind = key.parse().map_err(Error::InvalidCostSpec)?;
            let meshes = value
                .as_table()
                .ok_or_else(|| Error::InvalidCostSpec(format!("`{key}` must be a table of mesh rows")))?;
            for (mkey, mvalue) in meshes {
                let mesh: MeshKind = mkey.parse().map_err(Error::InvalidCostSpec)?;
                let fields = mvalue
                    .as_table()
                    .ok_or_else(|| Error::InvalidCostSpec(format!("`{key}.{mkey}` must be a table")))?;
                let mut row = *c.row(solver, mesh);
                for (field, v) in fields {
                    let v = v
                        .as_float()
                        .or_else(|| v.as_integer().map(|i| i as f64))
                        .ok_or_else(|| Error::InvalidCostSpec(format!("`{key}.{mkey}.{field}` must be a number")))?;
                    match field.as_str() {
                        "solve" => row.solve = v,
                        "locate" => row.locate = v,
                        "interp" => row.interp = v,
                        "terminate" => row.terminate = v,
                        "analyze" => row.analyze = v,
                        other => {
                            return Err(Error::InvalidCostSpec(format!("unknown cost field `{key}.{mkey}.{other}`")))
                        }
                    }
                }
                c.set_row(solver, mesh, row)?;
            }
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        CostConstants::from_toml(&text)
    }
}

/// FLOPs of one step: `solve + K (locate + interp) + analyze + terminate`.
pub fn per_step_cost(c: &CostConstants, solver: SolverKind, mesh: MeshKind, analyze: f64) -> f64 {
    let row = c.row(solver, mesh);
    let k = f64::from(solver.evals_per_step());
    row.solve + k * (row.locate + row.interp) + analyze + row.terminate
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepModel {
    /// Every particle takes `N` steps.
    Uniform(u64),
    /// Particle `i` takes `N_i` steps.
    PerParticle(Vec<u64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub particles: u64,
    pub steps: StepModel,
    pub solver: SolverKind,
    pub mesh: MeshKind,
    /// Per-step analyzer FLOPs; the constants' entry when `None`.
    pub analyze: Option<f64>,
}

impl WorkloadSpec {
    pub fn uniform(particles: u64, steps: u64, solver: SolverKind, mesh: MeshKind) -> Self {
        WorkloadSpec {
            particles,
            steps: StepModel::Uniform(steps),
            solver,
            mesh,
            analyze: None,
        }
    }

    pub fn per_particle(steps: Vec<u64>, solver: SolverKind, mesh: MeshKind) -> Self {
        WorkloadSpec {
            particles: steps.len() as u64,
            steps: StepModel::PerParticle(steps),
            solver,
            mesh,
            analyze: None,
        }
    }

    /// Evaluations per step.
    pub fn k(&self) -> u32 {
        self.solver.evals_per_step()
    }

    pub fn total_steps(&self) -> f64 {
        match &self.steps {
            StepModel::Uniform(n) => self.particles as f64 * *n as f64,
            StepModel::PerParticle(ns) => ns.iter().map(|&n| n as f64).sum(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let StepModel::PerParticle(ns) = &self.steps {
            if ns.len() as u64 != self.particles {
                return Err(Error::InvalidCostSpec(format!(
                    "{} per-particle step counts for {} particles",
                    ns.len(),
                    self.particles
                )));
            }
        }
        if let Some(a) = self.analyze {
            if !(a >= 0.0 && a.is_finite()) {
                return Err(Error::InvalidCostSpec(format!("analyze cost {a} must be non-negative")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub solve: f64,
    pub locate: f64,
    pub interp: f64,
    pub analyze: f64,
    pub terminate: f64,
}

impl CostBreakdown {
    pub fn sum(&self) -> f64 {
        self.solve + self.locate + self.interp + self.analyze + self.terminate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostEstimate {
    pub total_flop: f64,
    pub breakdown: CostBreakdown,
}

pub fn estimate_cost(spec: &WorkloadSpec, c: &CostConstants) -> Result<CostEstimate> {
    spec.validate()?;
    let row = c.row(spec.solver, spec.mesh);
    let steps = spec.total_steps();
    let evals = steps * f64::from(spec.k());
    let breakdown = CostBreakdown {
        solve: steps * row.solve,
        locate: evals * row.locate,
        interp: evals * row.interp,
        analyze: steps * spec.analyze.unwrap_or(row.analyze),
        terminate: steps * row.terminate,
    };
    Ok(CostEstimate {
        total_flop: breakdown.sum(),
        breakdown,
    })
}
