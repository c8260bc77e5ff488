//! `run` configuration files.
//!
//! ```toml
//! rng_seed = 7
//! threads = 2
//!
//! [dataset]
//! mesh = "uniform"        # uniform | rectilinear | unstructured
//! resolution = 50
//! field = "circular"
//!
//! [workload]
//! preset = "packed-medium-small"
//! solver = "rk4"
//!
//! [output]
//! analyzer = "streamline"
//! path = "lines.txt"
//! summary = "summary.json"
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::advect::{AnalyzerKind, Seeding, TerminationCriteria, Workload};
use crate::mesh::{self, build_rectilinear, build_uniform, tetrahedralize, AnalyticField, Bounds3, Dataset, MeshKind, Vec3};
use crate::solve::{SolverConfig, SolverKind};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetConfig,
    pub workload: WorkloadConfig,
    #[serde(default)]
    pub output: OutputConfig,
    pub threads: Option<usize>,
    #[serde(default)]
    pub rng_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    /// Mesh file to load instead of generating one.
    pub file: Option<PathBuf>,
    pub mesh: Option<MeshKind>,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    pub field: Option<AnalyticField>,
    /// `[[min], [max]]`, default `[-1, 1]^3`.
    pub bounds: Option<[[f64; 3]; 2]>,
}

fn default_resolution() -> usize {
    50
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadConfig {
    /// `<seeding>-<seeds>-<steps>`, e.g. `sparse-small-medium`.
    pub preset: Option<String>,
    pub seeding: Option<String>,
    pub particles: Option<usize>,
    pub steps: Option<u64>,
    #[serde(default = "default_solver")]
    pub solver: SolverKind,
    pub h: Option<f64>,
    pub tol: Option<f64>,
    pub max_time: Option<f64>,
    pub seed_region: Option<[[f64; 3]; 2]>,
    pub lattice: Option<[usize; 3]>,
    pub curve: Option<[[f64; 3]; 2]>,
}

fn default_solver() -> SolverKind {
    SolverKind::Rk4
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub analyzer: Option<AnalyzerKind>,
    /// Streamline text, FTLE CSV or endpoint CSV, by analyzer.
    pub path: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

fn bounds_from(b: [[f64; 3]; 2]) -> Result<Bounds3> {
    Bounds3::new(b[0].into(), b[1].into())
}

/// Gently stretched axis through `[lo, hi]`, spacing varying by about 20%.
pub fn stretched_axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let tau = std::f64::consts::TAU;
    (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            lo + (hi - lo) * (t + 0.1 * (tau * t).sin() / tau)
        })
        .collect()
}

/// A `d`-per-axis dataset of the given kind over `bounds`. Rectilinear
/// axes are stretched; unstructured meshes split each hex into six tets.
pub fn synthetic_dataset(kind: MeshKind, d: usize, bounds: Bounds3, field: &AnalyticField) -> Result<Dataset> {
    if d < 2 {
        return Err(Error::Config(format!("dataset resolution {d} must be at least 2")));
    }
    let e = bounds.extent();
    let spacing = Vec3::new(e.x, e.y, e.z) * (1.0 / (d - 1) as f64);
    match kind {
        MeshKind::Uniform => build_uniform(bounds.min, spacing, [d, d, d], field),
        MeshKind::Rectilinear => build_rectilinear(
            stretched_axis(bounds.min.x, bounds.max.x, d),
            stretched_axis(bounds.min.y, bounds.max.y, d),
            stretched_axis(bounds.min.z, bounds.max.z, d),
            field,
        ),
        MeshKind::Unstructured => tetrahedralize(&build_uniform(bounds.min, spacing, [d, d, d], field)?),
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn build_dataset(&self) -> Result<Dataset> {
        let d = &self.dataset;
        if let Some(file) = &d.file {
            return mesh::io::load(file);
        }
        let kind = d
            .mesh
            .ok_or_else(|| Error::Config("dataset: missing field `mesh` (or `file`)".into()))?;
        let field = d
            .field
            .ok_or_else(|| Error::Config("dataset: missing field `field`".into()))?;
        let bounds = bounds_from(d.bounds.unwrap_or([[-1.0; 3], [1.0; 3]]))?;
        synthetic_dataset(kind, d.resolution, bounds, &field)
    }

    pub fn build_workload(&self, ds: &Dataset) -> Result<Workload> {
        let w = &self.workload;
        let mut wl = match &w.preset {
            Some(name) => Workload::preset(name, ds, w.solver, self.rng_seed)?,
            None => {
                let particles = w
                    .particles
                    .ok_or_else(|| Error::Config("workload: missing field `particles` (or `preset`)".into()))?;
                let steps = w
                    .steps
                    .ok_or_else(|| Error::Config("workload: missing field `steps` (or `preset`)".into()))?;
                Workload::new(
                    Seeding::Sparse,
                    particles,
                    SolverConfig::for_bounds(w.solver, &ds.bounds()),
                    TerminationCriteria::new(steps, ds.bounds(), None)?,
                    self.rng_seed,
                )
            }
        };
        if let Some(s) = &w.seeding {
            wl.seeding = match s.as_str() {
                "sparse" => Seeding::Sparse,
                "packed" => Seeding::Packed { lattice: w.lattice },
                "curve" => {
                    let c = w
                        .curve
                        .ok_or_else(|| Error::Config("workload: curve seeding needs `curve`".into()))?;
                    Seeding::Curve {
                        from: c[0].into(),
                        to: c[1].into(),
                    }
                }
                other => return Err(Error::Config(format!("workload: unknown seeding `{other}`"))),
            };
        } else if let (Seeding::Packed { .. }, Some(l)) = (wl.seeding, w.lattice) {
            wl.seeding = Seeding::Packed { lattice: Some(l) };
        }
        if w.preset.is_some() {
            if let Some(p) = w.particles {
                wl.particle_count = p;
            }
            if let Some(n) = w.steps {
                wl.termination.max_steps = n;
            }
        }
        if let Some(h) = w.h {
            wl.solver = SolverConfig::fixed(w.solver, h, &ds.bounds())?;
        }
        if let Some(tol) = w.tol {
            wl.solver.tol = tol;
        }
        wl.solver.validate()?;
        wl.termination = TerminationCriteria::new(wl.termination.max_steps, wl.termination.bounds, w.max_time)?;
        if let Some(r) = w.seed_region {
            wl = wl.with_seed_region(bounds_from(r)?);
        }
        Ok(wl)
    }
}
