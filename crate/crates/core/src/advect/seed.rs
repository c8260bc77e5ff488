use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::workload::{Seeding, Workload};
use super::Particle;
use crate::mesh::{Bounds3, Dataset, Vec3};
use crate::{Error, Result};

/// Initial particles of `workload`, ids `0..particle_count`.
///
/// Sparse seeds draw from a ChaCha stream keyed by particle id, so each seed
/// depends only on `(rng_seed, id)`.
pub fn seed_particles(workload: &Workload, dataset: &Dataset) -> Result<Vec<Particle>> {
    let region = workload.seed_region();
    let domain = dataset.bounds();
    let slack = Vec3::splat(1e-9 * domain.diagonal());
    let loose = Bounds3 {
        min: domain.min - slack,
        max: domain.max + slack,
    };
    if !loose.contains(region.min) || !loose.contains(region.max) {
        return Err(Error::InvalidWorkload(format!(
            "seed region {region:?} is not inside the dataset bounds"
        )));
    }
    let count = workload.particle_count;
    let h = workload.solver.h;
    let positions: Vec<Vec3> = match workload.seeding {
        Seeding::Sparse => (0..count as u64)
            .map(|id| sparse_seed(workload.rng_seed, id, &region))
            .collect(),
        Seeding::Packed { .. } => {
            let dims = workload.lattice_dims();
            let capacity = dims.iter().product::<usize>();
            if capacity < count {
                return Err(Error::InvalidWorkload(format!(
                    "lattice {dims:?} holds {capacity} seeds, {count} requested"
                )));
            }
            lattice_points(&region, dims).take(count).collect()
        }
        Seeding::Curve { from, to } => {
            if !loose.contains(from) || !loose.contains(to) {
                return Err(Error::InvalidWorkload("seed curve leaves the dataset".into()));
            }
            (0..count)
                .map(|i| {
                    let t = if count > 1 { i as f64 / (count - 1) as f64 } else { 0.5 };
                    from + (to - from) * t
                })
                .collect()
        }
    };
    Ok(positions
        .into_iter()
        .enumerate()
        .map(|(id, p)| Particle::new(id as u64, p.max(domain.min).min(domain.max), h))
        .collect())
}

fn sparse_seed(rng_seed: u64, id: u64, region: &Bounds3) -> Vec3 {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    rng.set_stream(id);
    let e = region.extent();
    Vec3::new(
        region.min.x + e.x * rng.random::<f64>(),
        region.min.y + e.y * rng.random::<f64>(),
        region.min.z + e.z * rng.random::<f64>(),
    )
}

/// Cell-centred lattice points, x fastest.
pub(crate) fn lattice_points(region: &Bounds3, dims: [usize; 3]) -> impl Iterator<Item = Vec3> + '_ {
    let e = region.extent();
    let coord = move |axis: usize, i: usize| region.min.axis(axis) + (i as f64 + 0.5) / dims[axis] as f64 * e.axis(axis);
    (0..dims[2]).flat_map(move |k| {
        (0..dims[1]).flat_map(move |j| (0..dims[0]).map(move |i| Vec3::new(coord(0, i), coord(1, j), coord(2, k))))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::advect::TerminationCriteria;
    use crate::mesh::{build_uniform, AnalyticField};
    use crate::solve::{SolverConfig, SolverKind};

    fn setup(seeding: Seeding, count: usize, seed: u64) -> (Dataset, Workload) {
        let ds = build_uniform(Vec3::ZERO, Vec3::splat(0.25), [5, 5, 5], &AnalyticField::ZERO).unwrap();
        let wl = Workload::new(
            seeding,
            count,
            SolverConfig::for_bounds(SolverKind::Rk4, &ds.bounds()),
            TerminationCriteria::new(10, ds.bounds(), None).unwrap(),
            seed,
        );
        (ds, wl)
    }

    #[test]
    fn sparse_is_reproducible_and_prefix_stable() {
        let (ds, wl) = setup(Seeding::Sparse, 50, 7);
        let a = seed_particles(&wl, &ds).unwrap();
        let b = seed_particles(&wl, &ds).unwrap();
        assert_eq!(a, b);
        let mut fewer = wl.clone();
        fewer.particle_count = 10;
        assert_eq!(seed_particles(&fewer, &ds).unwrap()[..], a[..10]);
        let mut other = wl.clone();
        other.rng_seed = 8;
        assert_ne!(seed_particles(&other, &ds).unwrap()[0].position, a[0].position);
        assert!(a.iter().all(|p| ds.bounds().contains(p.position)));
    }

    #[test]
    fn packed_lattice_is_cell_centred() {
        let (ds, wl) = setup(Seeding::Packed { lattice: None }, 8, 0);
        let ps = seed_particles(&wl, &ds).unwrap();
        assert_eq!(ps[0].position, Vec3::splat(0.25));
        assert_eq!(ps[1].position, Vec3::new(0.75, 0.25, 0.25));
        assert_eq!(ps[7].position, Vec3::splat(0.75));
        let (ds, wl) = setup(Seeding::Packed { lattice: Some([2, 2, 1]) }, 5, 0);
        assert!(seed_particles(&wl, &ds).is_err());
    }

    #[test]
    fn curve_includes_endpoints() {
        let (ds, wl) = setup(
            Seeding::Curve {
                from: Vec3::ZERO,
                to: Vec3::new(1.0, 0.5, 0.0),
            },
            5,
            0,
        );
        let ps = seed_particles(&wl, &ds).unwrap();
        assert_eq!(ps[0].position, Vec3::ZERO);
        assert_eq!(ps[4].position, Vec3::new(1.0, 0.5, 0.0));
        assert_eq!(ps[2].position, Vec3::new(0.5, 0.25, 0.0));
    }
}
