use nalgebra::{Matrix3, SymmetricEigen};

use crate::mesh::Vec3;
use crate::{Error, Result};

/// Seed and end position of every lattice particle, x fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowMap {
    pub dims: [usize; 3],
    pub seeds: Vec<Vec3>,
    pub ends: Vec<Vec3>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FtleField {
    pub dims: [usize; 3],
    pub positions: Vec<Vec3>,
    pub values: Vec<f64>,
}

impl FlowMap {
    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }
}

/// Finite-time Lyapunov exponent `ln(sqrt(lambda_max(J^T J))) / |T|` at every
/// lattice point, with `J` the flow-map gradient. Central differences
/// inside, one-sided on the lattice faces.
pub fn compute_ftle(flow: &FlowMap, horizon: f64) -> Result<FtleField> {
    let [nx, ny, nz] = flow.dims;
    if nx < 3 || ny < 3 || nz < 3 {
        return Err(Error::LatticeTooSmall(flow.dims));
    }
    let n = nx * ny * nz;
    if flow.seeds.len() != n || flow.ends.len() != n {
        return Err(Error::InvalidWorkload(format!(
            "flow map has {} seeds and {} ends for a {n}-point lattice",
            flow.seeds.len(),
            flow.ends.len()
        )));
    }
    if !(horizon != 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidWorkload(format!("FTLE horizon {horizon} must be non-zero")));
    }

    let mut values = Vec::with_capacity(n);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let ijk = [i, j, k];
                let mut jac = Matrix3::zeros();
                for axis in 0..3 {
                    let (lo, hi) = neighbours(ijk, axis, flow.dims);
                    let a = flow.index(lo[0], lo[1], lo[2]);
                    let b = flow.index(hi[0], hi[1], hi[2]);
                    let dx = flow.seeds[b].axis(axis) - flow.seeds[a].axis(axis);
                    let d = flow.ends[b] - flow.ends[a];
                    jac[(0, axis)] = d.x / dx;
                    jac[(1, axis)] = d.y / dx;
                    jac[(2, axis)] = d.z / dx;
                }
                let cauchy_green = jac.transpose() * jac;
                let lambda = SymmetricEigen::new(cauchy_green).eigenvalues.max();
                values.push(lambda.max(f64::MIN_POSITIVE).sqrt().ln() / horizon.abs());
            }
        }
    }
    Ok(FtleField {
        dims: flow.dims,
        positions: flow.seeds.clone(),
        values,
    })
}

fn neighbours(ijk: [usize; 3], axis: usize, dims: [usize; 3]) -> ([usize; 3], [usize; 3]) {
    let mut lo = ijk;
    let mut hi = ijk;
    if ijk[axis] > 0 {
        lo[axis] -= 1;
    }
    if ijk[axis] + 1 < dims[axis] {
        hi[axis] += 1;
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::advect::seed::lattice_points;
    use crate::mesh::Bounds3;

    fn analytic_map(dims: [usize; 3], f: impl Fn(Vec3) -> Vec3) -> FlowMap {
        let region = Bounds3::new(Vec3::splat(-0.5), Vec3::splat(0.5)).unwrap();
        let seeds: Vec<Vec3> = lattice_points(&region, dims).collect();
        let ends = seeds.iter().map(|&p| f(p)).collect();
        FlowMap { dims, seeds, ends }
    }

    #[test]
    fn saddle_flow_map_has_unit_exponent() {
        let t: f64 = 0.7;
        let flow = analytic_map([5, 6, 4], |p| Vec3::new(p.x * t.exp(), p.y * (-t).exp(), p.z));
        let ftle = compute_ftle(&flow, t).unwrap();
        for v in ftle.values {
            assert!((v - 1.0).abs() < 1e-12, "{v}");
        }
    }

    #[test]
    fn rigid_rotation_has_zero_exponent() {
        let (s, c) = 0.4f64.sin_cos();
        let flow = analytic_map([4, 4, 4], |p| Vec3::new(c * p.x - s * p.y, s * p.x + c * p.y, p.z));
        let ftle = compute_ftle(&flow, 2.0).unwrap();
        assert!(ftle.values.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn identity_map_is_exactly_zero() {
        let flow = analytic_map([3, 4, 5], |p| p);
        let ftle = compute_ftle(&flow, 1.0).unwrap();
        assert!(ftle.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_thin_lattice() {
        let flow = analytic_map([2, 5, 5], |p| p);
        assert!(matches!(compute_ftle(&flow, 1.0), Err(Error::LatticeTooSmall(_))));
    }
}
