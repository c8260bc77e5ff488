use super::{Bounds3, Vec3};
use crate::error::{Error, Result};

/// Hexahedral corner offsets in the usual VTK order:
/// 0 (0,0,0), 1 (1,0,0), 2 (1,1,0), 3 (0,1,0), 4 (0,0,1), 5 (1,0,1), 6 (1,1,1), 7 (0,1,1).
pub const HEX_CORNERS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];

fn check_dims(dims: [usize; 3]) -> Result<()> {
    if dims.iter().any(|&d| d < 2) {
        return Err(Error::InvalidMesh(format!(
            "grid dims {dims:?} must be at least 2 per axis"
        )));
    }
    Ok(())
}

#[inline]
fn flatten(ijk: [usize; 3], dims: [usize; 3]) -> usize {
    ijk[0] + dims[0] * (ijk[1] + dims[1] * ijk[2])
}

#[inline]
fn unflatten(index: usize, dims: [usize; 3]) -> [usize; 3] {
    let i = index % dims[0];
    let rest = index / dims[0];
    [i, rest % dims[1], rest / dims[1]]
}

/// Shared index arithmetic for both structured grid kinds.
pub trait StructuredIndex {
    /// Points per axis.
    fn dims(&self) -> [usize; 3];

    fn cell_dims(&self) -> [usize; 3] {
        let d = self.dims();
        [d[0] - 1, d[1] - 1, d[2] - 1]
    }

    fn point_count(&self) -> usize {
        self.dims().iter().product()
    }

    fn cell_count(&self) -> usize {
        self.cell_dims().iter().product()
    }

    fn point_index(&self, ijk: [usize; 3]) -> usize {
        flatten(ijk, self.dims())
    }

    fn cell_index(&self, ijk: [usize; 3]) -> usize {
        flatten(ijk, self.cell_dims())
    }

    fn cell_ijk(&self, cell: usize) -> [usize; 3] {
        unflatten(cell, self.cell_dims())
    }

    fn point_ijk(&self, index: usize) -> [usize; 3] {
        unflatten(index, self.dims())
    }

    /// Vertex indices of a hex cell in [`HEX_CORNERS`] order.
    fn cell_vertices(&self, cell: usize) -> [usize; 8] {
        let [i, j, k] = self.cell_ijk(cell);
        HEX_CORNERS.map(|[di, dj, dk]| self.point_index([i + di, j + dj, k + dk]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniformGrid {
    origin: Vec3,
    spacing: Vec3,
    dims: [usize; 3],
}

impl UniformGrid {
    pub fn new(origin: Vec3, spacing: Vec3, dims: [usize; 3]) -> Result<Self> {
        check_dims(dims)?;
        if !(spacing.x > 0.0 && spacing.y > 0.0 && spacing.z > 0.0) || !spacing.is_finite() {
            return Err(Error::InvalidMesh(format!(
                "spacing {spacing:?} must be positive and finite"
            )));
        }
        if !origin.is_finite() {
            return Err(Error::InvalidMesh(format!("origin {origin:?} not finite")));
        }
        Ok(UniformGrid {
            origin,
            spacing,
            dims,
        })
    }

    /// Grid with `dims` points filling `bounds` exactly.
    pub fn fitting(bounds: Bounds3, dims: [usize; 3]) -> Result<Self> {
        check_dims(dims)?;
        let e = bounds.extent();
        let spacing = Vec3::new(
            e.x / (dims[0] - 1) as f64,
            e.y / (dims[1] - 1) as f64,
            e.z / (dims[2] - 1) as f64,
        );
        UniformGrid::new(bounds.min, spacing, dims)
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn spacing(&self) -> Vec3 {
        self.spacing
    }

    pub fn point(&self, ijk: [usize; 3]) -> Vec3 {
        Vec3::new(
            self.origin.x + self.spacing.x * ijk[0] as f64,
            self.origin.y + self.spacing.y * ijk[1] as f64,
            self.origin.z + self.spacing.z * ijk[2] as f64,
        )
    }

    pub fn point_at(&self, index: usize) -> Vec3 {
        self.point(self.point_ijk(index))
    }

    pub fn bounds(&self) -> Bounds3 {
        Bounds3 {
            min: self.origin,
            max: self.point([self.dims[0] - 1, self.dims[1] - 1, self.dims[2] - 1]),
        }
    }

    /// Per-axis coordinate arrays of this grid.
    pub fn axis_coords(&self) -> [Vec<f64>; 3] {
        [0, 1, 2].map(|a| {
            (0..self.dims[a])
                .map(|i| self.origin.axis(a) + self.spacing.axis(a) * i as f64)
                .collect()
        })
    }
}

impl StructuredIndex for UniformGrid {
    fn dims(&self) -> [usize; 3] {
        self.dims
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RectilinearGrid {
    coords: [Vec<f64>; 3],
}

impl RectilinearGrid {
    pub fn new(coords_x: Vec<f64>, coords_y: Vec<f64>, coords_z: Vec<f64>) -> Result<Self> {
        let coords = [coords_x, coords_y, coords_z];
        for (axis, c) in coords.iter().enumerate() {
            if c.len() < 2 {
                return Err(Error::InvalidMesh(format!(
                    "axis {axis} has {} coordinates, need at least 2",
                    c.len()
                )));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidMesh(format!("axis {axis} has non-finite coordinates")));
            }
            if let Some(w) = c.windows(2).position(|w| w[0] >= w[1]) {
                return Err(Error::InvalidMesh(format!(
                    "axis {axis} not strictly increasing at index {w}"
                )));
            }
        }
        Ok(RectilinearGrid { coords })
    }

    pub fn coords(&self, axis: usize) -> &[f64] {
        &self.coords[axis]
    }

    pub fn point(&self, ijk: [usize; 3]) -> Vec3 {
        Vec3::new(
            self.coords[0][ijk[0]],
            self.coords[1][ijk[1]],
            self.coords[2][ijk[2]],
        )
    }

    pub fn point_at(&self, index: usize) -> Vec3 {
        self.point(self.point_ijk(index))
    }

    pub fn bounds(&self) -> Bounds3 {
        let first = |a: usize| self.coords[a][0];
        let last = |a: usize| *self.coords[a].last().expect("validated length");
        Bounds3 {
            min: Vec3::new(first(0), first(1), first(2)),
            max: Vec3::new(last(0), last(1), last(2)),
        }
    }
}

impl StructuredIndex for RectilinearGrid {
    fn dims(&self) -> [usize; 3] {
        [self.coords[0].len(), self.coords[1].len(), self.coords[2].len()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip() {
        let g = UniformGrid::new(Vec3::ZERO, Vec3::splat(1.0), [4, 3, 5]).unwrap();
        for idx in 0..g.point_count() {
            assert_eq!(g.point_index(g.point_ijk(idx)), idx);
        }
        for c in 0..g.cell_count() {
            assert_eq!(g.cell_index(g.cell_ijk(c)), c);
        }
        assert_eq!(g.cell_count(), 3 * 2 * 4);
    }

    #[test]
    fn hex_corner_order() {
        let g = UniformGrid::new(Vec3::ZERO, Vec3::splat(1.0), [2, 2, 2]).unwrap();
        let v = g.cell_vertices(0);
        for (corner, &vid) in HEX_CORNERS.iter().zip(&v) {
            let p = g.point_at(vid);
            assert_eq!(p, Vec3::new(corner[0] as f64, corner[1] as f64, corner[2] as f64));
        }
    }

    #[test]
    fn fitting_grid_hits_bounds() {
        let b = Bounds3::new(Vec3::splat(-1.0), Vec3::splat(1.0)).unwrap();
        let g = UniformGrid::fitting(b, [50, 50, 50]).unwrap();
        assert_eq!(g.bounds().min, b.min);
        assert!((g.bounds().max - b.max).norm() < 1e-12);
    }
}
