//! Velocity evaluation: locate the cell, then interpolate vertex velocities.

use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::locate::{barycentric, CellId, LocateResult, Locator, WalkCache};
use crate::mesh::{Dataset, Mesh, StructuredIndex, TetMesh, Vec3};

/// Tallies of the two evaluation sub-operations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounters {
    pub locate: u64,
    pub interp: u64,
}

impl AddAssign for EvalCounters {
    fn add_assign(&mut self, o: EvalCounters) {
        self.locate += o.locate;
        self.interp += o.interp;
    }
}

#[inline]
fn lerp(a: Vec3, b: Vec3, t: f64) -> Vec3 {
    a * (1.0 - t) + b * t
}

fn structured_corners(mesh: &Mesh, cell: CellId) -> [usize; 8] {
    match mesh {
        Mesh::Uniform(g) => g.cell_vertices(cell.0),
        Mesh::Rectilinear(g) => g.cell_vertices(cell.0),
        Mesh::Tet(_) => panic!("trilinear interpolation on a tetrahedral mesh"),
    }
}

/// Eight-corner trilinear blend inside a hex cell.
///
/// Panics if `dataset` is not a structured grid.
#[inline]
pub fn trilinear_interpolate(dataset: &Dataset, r: &LocateResult) -> Vec3 {
    let c = structured_corners(dataset.mesh(), r.cell);
    let v = dataset.velocity();
    let [u, s, w] = r.local;
    // corners in hex order: 0 (000) 1 (100) 2 (110) 3 (010) 4 (001) 5 (101) 6 (111) 7 (011)
    let x00 = lerp(v[c[0]], v[c[1]], u);
    let x10 = lerp(v[c[3]], v[c[2]], u);
    let x01 = lerp(v[c[4]], v[c[5]], u);
    let x11 = lerp(v[c[7]], v[c[6]], u);
    lerp(lerp(x00, x10, s), lerp(x01, x11, s), w)
}

pub fn barycentric_coords(mesh: &TetMesh, cell: CellId, p: Vec3) -> Result<[f64; 4]> {
    if cell.0 >= mesh.tets().len() {
        return Err(Error::InvalidMesh(format!("tet {} out of range", cell.0)));
    }
    barycentric(&mesh.tet_points(cell.0), p).ok_or(Error::DegenerateTet {
        tet: cell.0,
        volume: 0.0,
        threshold: 0.0,
    })
}

/// Barycentric blend of the four vertex velocities.
///
/// Panics if `dataset` is not a tetrahedral mesh.
#[inline]
pub fn tet_interpolate(dataset: &Dataset, r: &LocateResult) -> Vec3 {
    let Mesh::Tet(m) = dataset.mesh() else {
        panic!("tet interpolation on a structured grid");
    };
    let t = m.tets()[r.cell.0];
    let v = dataset.velocity();
    let b = r.barycentric();
    v[t[0] as usize] * b[0] + v[t[1] as usize] * b[1] + v[t[2] as usize] * b[2] + v[t[3] as usize] * b[3]
}

#[inline]
pub fn interpolate(dataset: &Dataset, r: &LocateResult) -> Vec3 {
    match dataset.mesh() {
        Mesh::Tet(_) => tet_interpolate(dataset, r),
        _ => trilinear_interpolate(dataset, r),
    }
}

/// Per-worker evaluator. The dataset and locator are shared; the walk cache
/// and counters are owned.
#[derive(Debug)]
pub struct FieldEvaluator<'a> {
    dataset: &'a Dataset,
    locator: &'a Locator,
    cache: WalkCache,
    counters: EvalCounters,
}

impl<'a> FieldEvaluator<'a> {
    pub fn new(dataset: &'a Dataset, locator: &'a Locator) -> Self {
        FieldEvaluator {
            dataset,
            locator,
            cache: WalkCache::new(),
            counters: EvalCounters::default(),
        }
    }

    pub fn dataset(&self) -> &'a Dataset {
        self.dataset
    }

    pub fn counters(&self) -> EvalCounters {
        self.counters
    }

    pub fn cache(&self) -> &WalkCache {
        &self.cache
    }

    /// Swaps in a particle's walk cache; call again to hand it back.
    pub fn swap_cache(&mut self, cache: &mut WalkCache) {
        std::mem::swap(&mut self.cache, cache);
    }

    /// Velocity at `p`, or `None` outside the mesh. A miss still counts as a
    /// locate but not as an interp.
    #[inline]
    pub fn evaluate(&mut self, p: Vec3) -> Option<Vec3> {
        self.counters.locate += 1;
        let r = self.locator.locate(self.dataset.mesh(), p, &mut self.cache)?;
        self.counters.interp += 1;
        Some(interpolate(self.dataset, &r))
    }
}

pub fn evaluate_velocity(ev: &mut FieldEvaluator<'_>, p: Vec3) -> Option<Vec3> {
    ev.evaluate(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::locate::{locate_uniform, LocatorKind};
    use crate::mesh::{build_rectilinear, build_uniform, tetrahedralize, AnalyticField};
    use proptest::prelude::*;

    fn rand_velocity_grid(seed: u64) -> Dataset {
        use rand::{Rng, SeedableRng};
        let ds = build_uniform(Vec3::ZERO, Vec3::splat(1.0), [2, 2, 2], &AnalyticField::ZERO)
            .unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let vel = (0..8)
            .map(|_| Vec3::new(rng.random_range(-5.0..5.0), rng.random(), rng.random_range(-1.0..0.0)))
            .collect();
        Dataset::new(ds.mesh().clone(), vel).unwrap()
    }

    fn at(local: [f64; 3]) -> LocateResult {
        LocateResult {
            cell: CellId(0),
            local,
        }
    }

    #[test]
    fn trilinear_vertex_and_center() {
        let ds = rand_velocity_grid(1);
        assert_eq!(trilinear_interpolate(&ds, &at([0.0; 3])), ds.velocity()[0]);
        for i in 0..8 {
            let p = ds.mesh().vertex(i);
            assert_eq!(trilinear_interpolate(&ds, &at(p.to_array())), ds.velocity()[i]);
        }
        let mean = ds.velocity().iter().fold(Vec3::ZERO, |a, &v| a + v) * 0.125;
        assert!((trilinear_interpolate(&ds, &at([0.5; 3])) - mean).norm() < 1e-14);
    }

    proptest! {
        #[test]
        fn trilinear_is_convex(seed in 0u64..1000, u in 0.0..=1.0f64, v in 0.0..=1.0f64, w in 0.0..=1.0f64) {
            let ds = rand_velocity_grid(seed);
            let r = trilinear_interpolate(&ds, &at([u, v, w]));
            for a in 0..3 {
                let vals: Vec<f64> = ds.velocity().iter().map(|x| x.axis(a)).collect();
                let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(r.axis(a) >= lo - 1e-12 && r.axis(a) <= hi + 1e-12);
            }
        }

        #[test]
        fn interpolants_reproduce_affine_fields(
            px in 0.0..3.0f64, py in 0.0..2.0f64, pz in 0.0..1.5f64,
            a in -2.0..2.0f64, b in -2.0..2.0f64, c in -2.0..2.0f64,
        ) {
            let field = |p: Vec3| Vec3::new(a * p.x + b * p.y + 0.5, c * p.z - p.x, b * p.y + c);
            let base = build_rectilinear(
                vec![0.0, 0.4, 1.7, 3.0], vec![0.0, 1.1, 2.0], vec![0.0, 0.25, 1.5],
                &AnalyticField::ZERO,
            ).unwrap();
            let vel: Vec<Vec3> = (0..base.mesh().vertex_count()).map(|i| field(base.mesh().vertex(i))).collect();
            let ds = Dataset::new(base.mesh().clone(), vel).unwrap();
            let p = Vec3::new(px, py, pz);
            let expect = field(p);
            let scale = expect.norm().max(1.0);
            let loc = Locator::for_dataset(&ds);
            let mut ev = FieldEvaluator::new(&ds, &loc);
            prop_assert!((ev.evaluate(p).unwrap() - expect).norm() <= 1e-10 * scale);

            let tds = tetrahedralize(&ds).unwrap();
            let tloc = Locator::for_dataset(&tds);
            let mut tev = FieldEvaluator::new(&tds, &tloc);
            prop_assert!((tev.evaluate(p).unwrap() - expect).norm() <= 1e-10 * scale);
        }
    }

    #[test]
    fn barycentric_examples() {
        let ds = crate::mesh::build_tet_mesh(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(0.0, 0.0, 1.0),
            ],
            vec![[0, 1, 2, 3]],
            &AnalyticField::Circular,
        )
        .unwrap();
        let Mesh::Tet(m) = ds.mesh() else { unreachable!() };
        let v2 = m.vertices()[m.tets()[0][2] as usize];
        let b = barycentric_coords(m, CellId(0), v2).unwrap();
        assert_eq!(b, [0.0, 0.0, 1.0, 0.0]);
        let b = barycentric_coords(m, CellId(0), m.centroid(0)).unwrap();
        for x in b {
            assert!((x - 0.25).abs() < 1e-15);
        }
        assert!(barycentric_coords(m, CellId(3), v2).is_err());
    }

    #[test]
    fn tet_interpolation_vertices_constant_and_linear() {
        let grid = build_uniform(Vec3::splat(-1.0), Vec3::splat(0.5), [5, 5, 5], &AnalyticField::Saddle)
            .unwrap();
        let tds = tetrahedralize(&grid).unwrap();
        let loc = Locator::new(&tds, LocatorKind::CellTree).unwrap();
        let mut ev = FieldEvaluator::new(&tds, &loc);
        for i in 0..tds.mesh().vertex_count() {
            let p = tds.mesh().vertex(i);
            let got = ev.evaluate(p).unwrap();
            assert!((got - tds.velocity()[i]).norm() <= 1e-14 * tds.velocity()[i].norm().max(1.0));
        }
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let p = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let got = ev.evaluate(p).unwrap();
            assert!((got - AnalyticField::Saddle.sample(p)).norm() < 1e-10);
        }

        let constant = build_uniform(Vec3::ZERO, Vec3::splat(1.0), [3, 3, 3], &"constant(0.3,-2,7)".parse().unwrap())
            .unwrap();
        let tc = tetrahedralize(&constant).unwrap();
        let loc = Locator::for_dataset(&tc);
        let sloc = Locator::for_dataset(&constant);
        let mut ev = FieldEvaluator::new(&tc, &loc);
        let mut sev = FieldEvaluator::new(&constant, &sloc);
        for _ in 0..50 {
            let p = Vec3::new(rng.random_range(0.0..2.0), rng.random_range(0.0..2.0), rng.random_range(0.0..2.0));
            let a = ev.evaluate(p).unwrap();
            let b = sev.evaluate(p).unwrap();
            // barycentric weights sum to one only up to rounding
            assert!((a - b).norm() < 1e-14 * b.norm());
            assert_eq!(b, Vec3::new(0.3, -2.0, 7.0));
        }
    }

    #[test]
    fn circular_field_reproduced_exactly() {
        let ds = build_uniform(Vec3::splat(-2.0), Vec3::splat(0.05), [81, 81, 3], &AnalyticField::Circular)
            .unwrap();
        let loc = Locator::for_dataset(&ds);
        let mut ev = FieldEvaluator::new(&ds, &loc);
        let v = evaluate_velocity(&mut ev, Vec3::new(1.0, 0.0, -1.95)).unwrap();
        assert!((v - Vec3::new(0.0, 1.0, 0.0)).norm() < 1e-14);
        let v = ev.evaluate(Vec3::new(0.123, -0.77, -1.97)).unwrap();
        assert!((v - Vec3::new(0.77, 0.123, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn counters_track_successes_and_misses() {
        let ds = build_uniform(Vec3::ZERO, Vec3::splat(1.0), [4, 4, 4], &"constant(1,0,0)".parse().unwrap())
            .unwrap();
        let loc = Locator::for_dataset(&ds);
        let mut ev = FieldEvaluator::new(&ds, &loc);
        for i in 0..25 {
            let p = Vec3::splat(0.1 * i as f64);
            assert_eq!(ev.evaluate(p), Some(Vec3::new(1.0, 0.0, 0.0)));
        }
        assert_eq!(ev.counters(), EvalCounters { locate: 25, interp: 25 });
        assert_eq!(ev.evaluate(Vec3::splat(5.0)), None);
        assert_eq!(ev.counters(), EvalCounters { locate: 26, interp: 25 });
        let Mesh::Uniform(g) = ds.mesh() else { unreachable!() };
        assert!(locate_uniform(g, Vec3::splat(5.0)).is_none());
    }
}
