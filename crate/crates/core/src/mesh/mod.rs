//! Meshes, node-centred velocity fields and analytic test fields.
//!
//! Structured grids number their points x-fastest: the point `(i, j, k)` has
//! index `i + nx * (j + ny * k)`. Cells are numbered the same way over the
//! `(nx - 1, ny - 1, nz - 1)` cell lattice.

mod field;
mod grid;
pub mod io;
mod tet;

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use field::{sample_analytic_field, AnalyticField};
pub use grid::{RectilinearGrid, StructuredIndex, UniformGrid, HEX_CORNERS};
pub use tet::{tetrahedralize, TetMesh, BOUNDARY, HEX_TO_TETS};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub const fn splat(v: f64) -> Self {
        Vec3::new(v, v, v)
    }

    #[inline]
    pub fn axis(self, axis: usize) -> f64 {
        match axis {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }

    #[inline]
    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn min(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn max(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    #[inline]
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    #[inline]
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    #[inline]
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    #[inline]
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Axis-aligned box, closed on both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds3 {
    pub min: Vec3,
    pub max: Vec3,
}

impl Bounds3 {
    pub fn new(min: Vec3, max: Vec3) -> Result<Self> {
        if !(min.x <= max.x && min.y <= max.y && min.z <= max.z) {
            return Err(Error::InvalidMesh(format!(
                "bounds min {min:?} exceeds max {max:?}"
            )));
        }
        Ok(Bounds3 { min, max })
    }

    pub fn from_points(points: &[Vec3]) -> Option<Self> {
        let first = *points.first()?;
        let (min, max) = points
            .iter()
            .fold((first, first), |(lo, hi), &p| (lo.min(p), hi.max(p)));
        Some(Bounds3 { min, max })
    }

    #[inline]
    pub fn contains(&self, p: Vec3) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn diagonal(&self) -> f64 {
        self.extent().norm()
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn volume(&self) -> f64 {
        let e = self.extent();
        e.x * e.y * e.z
    }
}

/// Mesh family, as used by the cost model rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshKind {
    Uniform,
    Rectilinear,
    Unstructured,
}

impl MeshKind {
    pub const ALL: [MeshKind; 3] = [MeshKind::Uniform, MeshKind::Rectilinear, MeshKind::Unstructured];

    pub fn name(self) -> &'static str {
        match self {
            MeshKind::Uniform => "uniform",
            MeshKind::Rectilinear => "rectilinear",
            MeshKind::Unstructured => "unstructured",
        }
    }
}

impl fmt::Display for MeshKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MeshKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(MeshKind::Uniform),
            "rectilinear" => Ok(MeshKind::Rectilinear),
            "unstructured" | "tet" | "tetrahedral" => Ok(MeshKind::Unstructured),
            other => Err(format!("unknown mesh type `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Mesh {
    Uniform(UniformGrid),
    Rectilinear(RectilinearGrid),
    Tet(TetMesh),
}

impl Mesh {
    pub fn kind(&self) -> MeshKind {
        match self {
            Mesh::Uniform(_) => MeshKind::Uniform,
            Mesh::Rectilinear(_) => MeshKind::Rectilinear,
            Mesh::Tet(_) => MeshKind::Unstructured,
        }
    }

    pub fn vertex_count(&self) -> usize {
        match self {
            Mesh::Uniform(g) => g.point_count(),
            Mesh::Rectilinear(g) => g.point_count(),
            Mesh::Tet(m) => m.vertices().len(),
        }
    }

    pub fn cell_count(&self) -> usize {
        match self {
            Mesh::Uniform(g) => g.cell_count(),
            Mesh::Rectilinear(g) => g.cell_count(),
            Mesh::Tet(m) => m.tets().len(),
        }
    }

    pub fn vertex(&self, index: usize) -> Vec3 {
        match self {
            Mesh::Uniform(g) => g.point_at(index),
            Mesh::Rectilinear(g) => g.point_at(index),
            Mesh::Tet(m) => m.vertices()[index],
        }
    }

    pub fn bounds(&self) -> Bounds3 {
        match self {
            Mesh::Uniform(g) => g.bounds(),
            Mesh::Rectilinear(g) => g.bounds(),
            Mesh::Tet(m) => m.bounds(),
        }
    }
}

/// A mesh plus one velocity per vertex. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    mesh: Mesh,
    velocity: Vec<Vec3>,
    bounds: Bounds3,
}

impl Dataset {
    pub fn new(mesh: Mesh, velocity: Vec<Vec3>) -> Result<Self> {
        if velocity.len() != mesh.vertex_count() {
            return Err(Error::InvalidMesh(format!(
                "{} velocities for {} vertices",
                velocity.len(),
                mesh.vertex_count()
            )));
        }
        if let Some(i) = velocity.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidMesh(format!("non-finite velocity at vertex {i}")));
        }
        let bounds = mesh.bounds();
        Ok(Dataset {
            mesh,
            velocity,
            bounds,
        })
    }

    /// Samples `field` at every vertex of `mesh`.
    pub fn from_field(mesh: Mesh, field: &AnalyticField) -> Result<Self> {
        let velocity = (0..mesh.vertex_count())
            .map(|i| field.sample(mesh.vertex(i)))
            .collect();
        Dataset::new(mesh, velocity)
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn velocity(&self) -> &[Vec3] {
        &self.velocity
    }

    pub fn bounds(&self) -> Bounds3 {
        self.bounds
    }

    pub fn kind(&self) -> MeshKind {
        self.mesh.kind()
    }
}

pub fn build_uniform(
    origin: Vec3,
    spacing: Vec3,
    dims: [usize; 3],
    field: &AnalyticField,
) -> Result<Dataset> {
    let grid = UniformGrid::new(origin, spacing, dims)?;
    Dataset::from_field(Mesh::Uniform(grid), field)
}

pub fn build_rectilinear(
    coords_x: Vec<f64>,
    coords_y: Vec<f64>,
    coords_z: Vec<f64>,
    field: &AnalyticField,
) -> Result<Dataset> {
    let grid = RectilinearGrid::new(coords_x, coords_y, coords_z)?;
    Dataset::from_field(Mesh::Rectilinear(grid), field)
}

pub fn build_tet_mesh(
    vertices: Vec<Vec3>,
    tets: Vec<[u32; 4]>,
    field: &AnalyticField,
) -> Result<Dataset> {
    let mesh = TetMesh::new(vertices, tets)?;
    Dataset::from_field(Mesh::Tet(mesh), field)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_construction_counts() {
        let ds = build_uniform(
            Vec3::ZERO,
            Vec3::splat(1.0),
            [50, 50, 50],
            &"constant(1,0,0)".parse().unwrap(),
        )
        .unwrap();
        assert_eq!(ds.mesh().vertex_count(), 125_000);
        assert_eq!(ds.bounds().min, Vec3::ZERO);
        assert_eq!(ds.bounds().max, Vec3::splat(49.0));
        assert!(ds.velocity().iter().all(|&v| v == Vec3::new(1.0, 0.0, 0.0)));
    }

    #[test]
    fn circular_corners() {
        let ds = build_uniform(Vec3::ZERO, Vec3::splat(1.0), [2, 2, 2], &AnalyticField::Circular)
            .unwrap();
        assert_eq!(ds.velocity().len(), 8);
        for i in 0..8 {
            let p = ds.mesh().vertex(i);
            assert_eq!(ds.velocity()[i], Vec3::new(-p.y, p.x, 0.0));
        }
    }

    #[test]
    fn uniform_rejects_bad_dims_and_spacing() {
        let f = AnalyticField::ZERO;
        assert!(build_uniform(Vec3::ZERO, Vec3::splat(1.0), [1, 2, 2], &f).is_err());
        assert!(build_uniform(Vec3::ZERO, Vec3::new(1.0, 0.0, 1.0), [2, 2, 2], &f).is_err());
        assert!(build_uniform(Vec3::ZERO, Vec3::new(1.0, f64::NAN, 1.0), [2, 2, 2], &f).is_err());
    }

    #[test]
    fn rectilinear_construction() {
        let c = vec![0.0, 1.0, 3.0];
        let ds = build_rectilinear(
            c.clone(),
            c.clone(),
            c,
            &"constant(0,0,1)".parse().unwrap(),
        )
        .unwrap();
        assert_eq!(ds.velocity().len(), 27);
        assert!(ds.velocity().iter().all(|&v| v == Vec3::new(0.0, 0.0, 1.0)));

        let f = AnalyticField::ZERO;
        assert!(build_rectilinear(vec![0.0, 0.0, 1.0], vec![0.0, 1.0], vec![0.0, 1.0], &f).is_err());
        assert!(build_rectilinear(vec![0.0], vec![0.0, 1.0], vec![0.0, 1.0], &f).is_err());
    }

    #[test]
    fn rectilinear_log_spaced_saddle() {
        let c: Vec<f64> = (0..50).map(|i| 10f64.powf(2.0 * i as f64 / 49.0)).collect();
        let ds = build_rectilinear(c.clone(), c.clone(), c, &AnalyticField::Saddle).unwrap();
        for i in (0..ds.velocity().len()).step_by(997) {
            let p = ds.mesh().vertex(i);
            assert_eq!(ds.velocity()[i], Vec3::new(p.x, -p.y, 0.0));
        }
    }

    #[test]
    fn vertices_inside_bounds_and_sampled_exactly() {
        let ds = build_uniform(
            Vec3::new(-1.0, 0.5, 2.0),
            Vec3::new(0.3, 0.7, 0.11),
            [7, 5, 9],
            &AnalyticField::Shear,
        )
        .unwrap();
        let b = ds.bounds();
        for i in 0..ds.mesh().vertex_count() {
            let p = ds.mesh().vertex(i);
            assert!(b.contains(p));
            assert_eq!(ds.velocity()[i], AnalyticField::Shear.sample(p));
        }
    }
}
