//! One check per headline criterion. Each writes a `PASS`/`FAIL` line to
//! stderr, bypassing output capture, before asserting. Tests are serialized
//! so the timing checks do not compete for cores.

use std::io::Write;
use std::sync::Mutex;
use std::time::Instant;

use advectum::advect::{
    advance_particle, compute_ftle, run_workload, AnalyzerKind, AnalyzerOutput, Discard, Particle,
    ParticleStatus, Seeding, TerminationCriteria, Workload,
};
use advectum::cli::{run_validation, SuiteOptions};
use advectum::costmodel::{
    estimate_cost, locate_cost, per_step_cost, recommend_parallel_strategy, CostConstants, DatasetSize,
    FieldComplexity, ParallelStrategy, ParticleCount, SeedDistribution, StrategyFactor, StrategyHints,
    WorkloadSpec,
};
use advectum::eval::FieldEvaluator;
use advectum::locate::{brute_force_locate, containment_holds, locate_walk, Locator, WalkCache};
use advectum::mesh::{build_uniform, tetrahedralize, AnalyticField, Mesh, MeshKind};
use advectum::solve::{SolverConfig, SolverKind};
use advectum::{Bounds3, Dataset, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn verdict(name: &str, ok: bool, detail: String) {
    let line = format!("{} {name}: {detail}\n", if ok { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().lock().write_all(line.as_bytes());
    assert!(ok, "{name}: {detail}");
}

#[test]
fn table_reproduction() {
    let _g = serial();
    let c = CostConstants::default();
    let rows = [
        (SolverKind::Euler, MeshKind::Uniform, 41.0),
        (SolverKind::Euler, MeshKind::Rectilinear, 43.0),
        (SolverKind::Euler, MeshKind::Unstructured, 964.0),
        (SolverKind::Rk4, MeshKind::Uniform, 162.0),
        (SolverKind::Rk4, MeshKind::Rectilinear, 170.0),
        (SolverKind::Rk4, MeshKind::Unstructured, 3854.0),
    ];
    let got: Vec<f64> = rows.iter().map(|&(s, m, _)| per_step_cost(&c, s, m, 0.0)).collect();
    let ok = rows.iter().zip(&got).all(|(r, g)| r.2 == *g);
    verdict("table reproduction", ok, format!("per-step totals {got:?}, want 41 43 964 162 170 3854"));
}

#[test]
fn notional_example() {
    let _g = serial();
    let spec = WorkloadSpec::uniform(1_000_000, 1000, SolverKind::Rk4, MeshKind::Uniform);
    let e = estimate_cost(&spec, &CostConstants::default()).unwrap();
    verdict(
        "notional example",
        e.total_flop == 162_000_000_000.0,
        format!("{} FLOP, want 162000000000", e.total_flop),
    );
}

#[test]
fn locate_cost_formulas() {
    let _g = serial();
    let r = locate_cost(MeshKind::Rectilinear, 50).unwrap();
    let u = locate_cost(MeshKind::Unstructured, 50).unwrap();
    verdict(
        "locate-cost formulas",
        r == 17.0 && u == 918.0,
        format!("rectilinear {r} (want 17), unstructured {u} (want 918)"),
    );
}

#[test]
fn model_validation_at_desk_scale() {
    let _g = serial();
    let start = Instant::now();
    let report = run_validation(&SuiteOptions::default(), |_| {}).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let steps: Vec<u64> = report.rows.iter().map(|r| r.particles * r.steps).collect();
    let flagged = report.rows.iter().filter(|r| r.flagged).count();
    let ok = report.rows.len() >= 8 && report.model.r_squared >= 0.95 && elapsed <= 300.0;
    verdict(
        "model validation",
        ok,
        format!(
            "{} rows, P*N {}..{}, R^2 = {:.4} (need >= 0.95), m = {:.3e} s/FLOP, {flagged} noisy rows, {elapsed:.0} s",
            report.rows.len(),
            steps.iter().min().unwrap(),
            steps.iter().max().unwrap(),
            report.model.r_squared,
            report.model.slope,
        ),
    );
}

fn vortex() -> Dataset {
    build_uniform(Vec3::new(-1.0, -1.0, -0.1), Vec3::splat(0.1), [21, 21, 3], &AnalyticField::Circular).unwrap()
}

/// Integrates from `(0.5, 0, 0)` to `t_end`; returns the error against the
/// exact rotation and the number of velocity evaluations.
fn circle_error(ds: &Dataset, cfg: SolverConfig, t_end: f64) -> (f64, u64) {
    let loc = Locator::for_dataset(ds);
    let mut ev = FieldEvaluator::new(ds, &loc);
    let term = TerminationCriteria::new(1_000_000, ds.bounds(), Some(t_end)).unwrap();
    let mut p = Particle::new(0, Vec3::new(0.5, 0.0, 0.0), cfg.h);
    advance_particle(&mut ev, &cfg, &term, &mut Discard, &mut p);
    assert_eq!(p.status, ParticleStatus::TerminatedTime);
    let exact = Vec3::new(0.5 * t_end.cos(), 0.5 * t_end.sin(), 0.0);
    ((p.position - exact).norm(), ev.counters().locate)
}

#[test]
fn solver_convergence() {
    let _g = serial();
    let ds = vortex();
    let t_end = 1.0;
    let hs = [0.1, 0.05, 0.025, 0.0125];
    let slopes = |kind| -> Vec<f64> {
        let errs: Vec<f64> = hs
            .iter()
            .map(|&h| circle_error(&ds, SolverConfig::fixed(kind, h, &ds.bounds()).unwrap(), t_end).0)
            .collect();
        errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
    };
    let euler = slopes(SolverKind::Euler);
    let rk4 = slopes(SolverKind::Rk4);

    let mut adaptive = SolverConfig::for_bounds(SolverKind::Rkf45, &ds.bounds());
    adaptive.tol = 1e-6;
    let (rkf_err, rkf_evals) = circle_error(&ds, adaptive, t_end);
    // smallest fixed-step RK4 run at least as accurate
    let (rk4_n, rk4_evals) = (1..=10_000u64)
        .find_map(|n| {
            let cfg = SolverConfig::fixed(SolverKind::Rk4, t_end / n as f64, &ds.bounds()).unwrap();
            let (e, evals) = circle_error(&ds, cfg, t_end);
            (e <= rkf_err).then_some((n, evals))
        })
        .unwrap();

    let ok = euler.iter().all(|s| (s - 1.0).abs() <= 0.2)
        && rk4.iter().all(|s| (s - 4.0).abs() <= 0.5)
        && rkf_evals < rk4_evals;
    verdict(
        "solver convergence",
        ok,
        format!(
            "Euler slopes {euler:.3?} (1.0 +- 0.2), RK4 slopes {rk4:.3?} (4.0 +- 0.5); \
             RKF45 tol 1e-6: error {rkf_err:.2e} with {rkf_evals} evals vs RK4 {rk4_n} steps, {rk4_evals} evals"
        ),
    );
}

#[test]
fn locator_oracle_equivalence() {
    let _g = serial();
    let grid = build_uniform(Vec3::ZERO, Vec3::splat(1.0 / 9.0), [10, 10, 10], &AnalyticField::ZERO).unwrap();
    let ds = tetrahedralize(&grid).unwrap();
    let Mesh::Tet(mesh) = ds.mesh() else { unreachable!() };
    let loc = Locator::for_dataset(&ds);
    let tree = loc.tree().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut cache = WalkCache::new();
    let (mut tree_ok, mut walk_ok, mut contained) = (0, 0, 0);
    let n = 1000;
    for _ in 0..n {
        let p = Vec3::new(rng.random(), rng.random(), rng.random());
        let oracle = brute_force_locate(ds.mesh(), p).expect("interior point").cell;
        let t = tree.locate(mesh, p).expect("tree hit");
        let w = locate_walk(&mut cache, tree, mesh, p).expect("walk hit");
        tree_ok += usize::from(t.cell == oracle);
        walk_ok += usize::from(w.cell == oracle);
        contained += usize::from(containment_holds(ds.mesh(), &t, p) && containment_holds(ds.mesh(), &w, p));
    }
    verdict(
        "locator oracle equivalence",
        tree_ok == n && walk_ok == n && contained == n,
        format!(
            "{} tets; cell tree {tree_ok}/{n}, walk {walk_ok}/{n} agree with brute force; {contained}/{n} pass containment",
            mesh.tets().len()
        ),
    );
}

#[test]
fn evaluation_count_contract() {
    let _g = serial();
    let ds = vortex();
    let loc = Locator::for_dataset(&ds);
    let region = Bounds3::new(Vec3::new(-0.4, -0.4, -0.05), Vec3::new(0.4, 0.4, 0.05)).unwrap();
    let wl = Workload::new(
        Seeding::Packed { lattice: None },
        100,
        SolverConfig::fixed(SolverKind::Rk4, 0.01, &ds.bounds()).unwrap(),
        TerminationCriteria::new(50, ds.bounds(), None).unwrap(),
        0,
    )
    .with_seed_region(region);
    let r = run_workload(&ds, &loc, &wl, AnalyzerKind::SourceDest, 1).unwrap();
    let full = r.status_count(ParticleStatus::TerminatedSteps);
    verdict(
        "evaluation-count contract",
        full == 100 && r.counters.interp == 20_000,
        format!("{full}/100 particles ran 50 steps; interp counter {} (want 20000)", r.counters.interp),
    );
}

fn ftle_through_pipeline(field: AnalyticField) -> (Vec<f64>, [usize; 3]) {
    let ds = build_uniform(Vec3::splat(-1.0), Vec3::splat(0.1), [21, 21, 21], &field).unwrap();
    let loc = Locator::for_dataset(&ds);
    let dims = [9, 9, 9];
    let region = Bounds3::new(Vec3::splat(-0.3), Vec3::splat(0.3)).unwrap();
    let wl = Workload::new(
        Seeding::Packed { lattice: Some(dims) },
        dims.iter().product(),
        SolverConfig::fixed(SolverKind::Rk4, 0.01, &ds.bounds()).unwrap(),
        TerminationCriteria::new(1_000_000, ds.bounds(), Some(1.0)).unwrap(),
        0,
    )
    .with_seed_region(region);
    let r = run_workload(&ds, &loc, &wl, AnalyzerKind::FlowMap, 1).unwrap();
    assert_eq!(r.status_count(ParticleStatus::TerminatedTime), r.particles.len());
    let AnalyzerOutput::FlowMap(flow) = r.output else { unreachable!() };
    (compute_ftle(&flow, 1.0).unwrap().values, dims)
}

#[test]
fn ftle_analytic_check() {
    let _g = serial();
    let (saddle, dims) = ftle_through_pipeline(AnalyticField::Saddle);
    let interior = |idx: usize| {
        let (i, j, k) = (idx % dims[0], (idx / dims[0]) % dims[1], idx / (dims[0] * dims[1]));
        [i, j, k].iter().zip(&dims).all(|(&c, &n)| c > 0 && c + 1 < n)
    };
    let worst = saddle
        .iter()
        .enumerate()
        .filter(|(i, _)| interior(*i))
        .map(|(_, v)| (v - 1.0).abs())
        .fold(0.0, f64::max);
    let (zero, _) = ftle_through_pipeline(AnalyticField::ZERO);
    let zero_max = zero.iter().map(|v| v.abs()).fold(0.0, f64::max);
    verdict(
        "FTLE analytic check",
        worst <= 0.01 && zero.iter().all(|&v| v == 0.0),
        format!("saddle: max |FTLE - 1| = {worst:.2e} over interior seeds (<= 0.01); zero field: max |FTLE| = {zero_max:e} (exactly 0)"),
    );
}

#[test]
fn parallel_determinism_and_speedup() {
    let _g = serial();
    let bounds = Bounds3::new(Vec3::splat(-1.0), Vec3::splat(1.0)).unwrap();
    let grid = advectum::mesh::UniformGrid::fitting(bounds, [50, 50, 50]).unwrap();
    let ds = Dataset::from_field(Mesh::Uniform(grid), &AnalyticField::Circular).unwrap();
    let loc = Locator::for_dataset(&ds);
    let region = Bounds3::new(Vec3::new(-0.5, -0.5, -0.9), Vec3::new(0.5, 0.5, 0.9)).unwrap();
    let wl = Workload::new(
        Seeding::Packed { lattice: None },
        100_000,
        SolverConfig::for_bounds(SolverKind::Rk4, &ds.bounds()),
        TerminationCriteria::new(1000, ds.bounds(), None).unwrap(),
        11,
    )
    .with_seed_region(region);
    let runs: Vec<_> = [1, 2, 4]
        .iter()
        .map(|&t| run_workload(&ds, &loc, &wl, AnalyzerKind::SourceDest, t).unwrap())
        .collect();
    let identical = runs.iter().all(|r| {
        r.particles == runs[0].particles && r.counters == runs[0].counters && r.output == runs[0].output
    });
    let speedup = runs[0].wall_seconds / runs[2].wall_seconds;
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    verdict(
        "parallel determinism and speedup",
        identical && speedup >= 2.0,
        format!(
            "threads 1/2/4 identical: {identical}; wall {:.2}/{:.2}/{:.2} s, speedup at 4 threads {speedup:.2}x (need >= 2.0) on {cores} available core(s)",
            runs[0].wall_seconds, runs[1].wall_seconds, runs[2].wall_seconds
        ),
    );
}

#[test]
fn advisor_table_fidelity() {
    let _g = serial();
    use ParallelStrategy::*;
    let base = StrategyHints {
        dataset_size: DatasetSize::Large,
        particle_count: ParticleCount::Small,
        seed_distribution: SeedDistribution::Sparse,
        field_complexity: FieldComplexity::Benign,
    };
    let vote = |h: StrategyHints, f: StrategyFactor| {
        recommend_parallel_strategy(&h).votes.into_iter().find(|v| v.0 == f).unwrap().1
    };
    // (factor, over-data column, over-particles column)
    let rows = [
        (
            StrategyFactor::DatasetSize,
            vote(base, StrategyFactor::DatasetSize),
            vote(StrategyHints { dataset_size: DatasetSize::Small, ..base }, StrategyFactor::DatasetSize),
        ),
        (
            StrategyFactor::ParticleCount,
            vote(base, StrategyFactor::ParticleCount),
            vote(StrategyHints { particle_count: ParticleCount::Large, ..base }, StrategyFactor::ParticleCount),
        ),
        (
            StrategyFactor::SeedDistribution,
            vote(base, StrategyFactor::SeedDistribution),
            vote(StrategyHints { seed_distribution: SeedDistribution::Dense, ..base }, StrategyFactor::SeedDistribution),
        ),
        (
            StrategyFactor::FieldComplexity,
            vote(StrategyHints { field_complexity: FieldComplexity::Circular, ..base }, StrategyFactor::FieldComplexity),
            vote(StrategyHints { field_complexity: FieldComplexity::CriticalPoints, ..base }, StrategyFactor::FieldComplexity),
        ),
    ];
    let rows_ok = rows.iter().all(|r| r.1 == Some(OverData) && r.2 == Some(OverParticles));
    let data = recommend_parallel_strategy(&base);
    let particles = recommend_parallel_strategy(&StrategyHints {
        dataset_size: DatasetSize::Small,
        particle_count: ParticleCount::Large,
        seed_distribution: SeedDistribution::Dense,
        field_complexity: FieldComplexity::Benign,
    });
    let columns_ok = data.majority == Some(OverData)
        && !data.is_mixed()
        && particles.majority == Some(OverParticles)
        && !particles.is_mixed();
    verdict(
        "advisor table fidelity",
        rows_ok && columns_ok,
        format!(
            "rows {:?}; data column -> {:?}, particle column -> {:?}",
            rows.iter().map(|r| (r.0, r.1, r.2)).collect::<Vec<_>>(),
            data.majority,
            particles.majority
        ),
    );
}
