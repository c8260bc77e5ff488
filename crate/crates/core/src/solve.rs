//! One advection step from repeated velocity evaluations.
//!
//! Every solver aborts the whole step, leaving the particle where it was,
//! when any stage evaluates outside the mesh or when the new position leaves
//! the dataset bounds.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::FieldEvaluator;
use crate::mesh::{Bounds3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Euler,
    Rk4,
    Rkf45,
}

impl SolverKind {
    pub const ALL: [SolverKind; 3] = [SolverKind::Euler, SolverKind::Rk4, SolverKind::Rkf45];

    /// Velocity evaluations per step attempt.
    pub fn evals_per_step(self) -> u32 {
        match self {
            SolverKind::Euler => 1,
            SolverKind::Rk4 => 4,
            SolverKind::Rkf45 => 6,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Euler => "euler",
            SolverKind::Rk4 => "rk4",
            SolverKind::Rkf45 => "rkf45",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "euler" => Ok(SolverKind::Euler),
            "rk4" => Ok(SolverKind::Rk4),
            "rkf45" | "rkf" => Ok(SolverKind::Rkf45),
            other => Err(format!("unknown solver `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub kind: SolverKind,
    /// Fixed step size, and the first trial step for the adaptive solver.
    pub h: f64,
    /// Local error tolerance per adaptive step, in length units.
    pub tol: f64,
    pub h_min: f64,
    pub h_max: f64,
}

impl SolverConfig {
    pub fn new(kind: SolverKind, h: f64, tol: f64, h_min: f64, h_max: f64) -> Result<Self> {
        let cfg = SolverConfig {
            kind,
            h,
            tol,
            h_min,
            h_max,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Defaults scaled to the domain: `h = diag / 500`, `tol = 1e-6`,
    /// `h_min = 1e-6 diag`, `h_max = 0.05 diag`.
    pub fn for_bounds(kind: SolverKind, bounds: &Bounds3) -> Self {
        let diag = bounds.diagonal().max(f64::MIN_POSITIVE);
        SolverConfig {
            kind,
            h: diag / 500.0,
            tol: 1e-6,
            h_min: 1e-6 * diag,
            h_max: 0.05 * diag,
        }
    }

    /// Same defaults with an explicit fixed step size.
    pub fn fixed(kind: SolverKind, h: f64, bounds: &Bounds3) -> Result<Self> {
        let mut cfg = SolverConfig::for_bounds(kind, bounds);
        cfg.h = h;
        cfg.h_min = cfg.h_min.min(h);
        cfg.h_max = cfg.h_max.max(h);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.h > 0.0
            && self.h.is_finite()
            && self.tol > 0.0
            && self.h_min > 0.0
            && self.h_min <= self.h_max
            && self.h_max.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSolver(format!("{self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepStatus {
    Ok,
    ExitedDomain,
    /// The error estimate or the new position was not finite.
    RejectedOverflow,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub new_position: Vec3,
    pub h_used: f64,
    /// Suggested next step; equals `h_used` for fixed-step solvers.
    pub h_next: f64,
    pub evals_used: u32,
    pub status: StepStatus,
}

impl StepResult {
    fn stopped(p: Vec3, evals_used: u32, status: StepStatus) -> Self {
        StepResult {
            new_position: p,
            h_used: 0.0,
            h_next: 0.0,
            evals_used,
            status,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == StepStatus::Ok
    }
}

/// Turns a candidate position into a result, rejecting exits and overflow.
fn finish(ev: &FieldEvaluator<'_>, p: Vec3, new: Vec3, h: f64, h_next: f64, evals: u32) -> StepResult {
    if !new.is_finite() {
        return StepResult::stopped(p, evals, StepStatus::RejectedOverflow);
    }
    if !ev.dataset().bounds().contains(new) {
        return StepResult::stopped(p, evals, StepStatus::ExitedDomain);
    }
    StepResult {
        new_position: new,
        h_used: h,
        h_next,
        evals_used: evals,
        status: StepStatus::Ok,
    }
}

pub fn euler_step(ev: &mut FieldEvaluator<'_>, p: Vec3, h: f64) -> StepResult {
    match ev.evaluate(p) {
        Some(v) => finish(ev, p, p + v * h, h, h, 1),
        None => StepResult::stopped(p, 1, StepStatus::ExitedDomain),
    }
}

pub fn rk4_step(ev: &mut FieldEvaluator<'_>, p: Vec3, h: f64) -> StepResult {
    let half = 0.5 * h;
    let Some(k1) = ev.evaluate(p) else {
        return StepResult::stopped(p, 1, StepStatus::ExitedDomain);
    };
    let Some(k2) = ev.evaluate(p + k1 * half) else {
        return StepResult::stopped(p, 2, StepStatus::ExitedDomain);
    };
    let Some(k3) = ev.evaluate(p + k2 * half) else {
        return StepResult::stopped(p, 3, StepStatus::ExitedDomain);
    };
    let Some(k4) = ev.evaluate(p + k3 * h) else {
        return StepResult::stopped(p, 4, StepStatus::ExitedDomain);
    };
    let new = p + (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0);
    finish(ev, p, new, h, h, 4)
}

// Fehlberg 4(5) tableau.
const A21: f64 = 1.0 / 4.0;
const A31: f64 = 3.0 / 32.0;
const A32: f64 = 9.0 / 32.0;
const A41: f64 = 1932.0 / 2197.0;
const A42: f64 = -7200.0 / 2197.0;
const A43: f64 = 7296.0 / 2197.0;
const A51: f64 = 439.0 / 216.0;
const A52: f64 = -8.0;
const A53: f64 = 3680.0 / 513.0;
const A54: f64 = -845.0 / 4104.0;
const A61: f64 = -8.0 / 27.0;
const A62: f64 = 2.0;
const A63: f64 = -3544.0 / 2565.0;
const A64: f64 = 1859.0 / 4104.0;
const A65: f64 = -11.0 / 40.0;
// fourth-order weights (b2 = b6 = 0)
const B1: f64 = 25.0 / 216.0;
const B3: f64 = 1408.0 / 2565.0;
const B4: f64 = 2197.0 / 4104.0;
const B5: f64 = -1.0 / 5.0;
// fifth minus fourth order weights (e2 = 0)
const E1: f64 = 1.0 / 360.0;
const E3: f64 = -128.0 / 4275.0;
const E4: f64 = -2197.0 / 75240.0;
const E5: f64 = 1.0 / 50.0;
const E6: f64 = 2.0 / 55.0;

const SAFETY: f64 = 0.9;
const MIN_SHRINK: f64 = 0.1;

/// Hand count of the floating-point operations in one accepted
/// [`rkf45_step`] attempt: stage inputs 105, fourth-order update 27,
/// error norm 36, step control 4. Used as the default RKF45 `solve` cost.
pub const RKF45_SOLVE_FLOPS: f64 = 172.0;

/// Adaptive Fehlberg 4(5) step, propagating the fourth-order solution.
///
/// Rejected attempts shrink `h` by `max(0.1, 0.9 (tol/err)^(1/5))` and retry;
/// once `h` reaches `h_min` the attempt is accepted regardless. A trial step
/// below `h_min` (e.g. the last step before a time horizon) lowers the floor
/// to that step. `evals_used` counts six evaluations per attempt.
pub fn rkf45_step(ev: &mut FieldEvaluator<'_>, p: Vec3, cfg: &SolverConfig, h_try: f64) -> StepResult {
    let h_floor = cfg.h_min.min(h_try);
    let mut h = h_try.min(cfg.h_max).max(h_floor);
    let mut evals = 0;
    loop {
        macro_rules! stage {
            ($x:expr) => {{
                evals += 1;
                match ev.evaluate($x) {
                    Some(v) => v,
                    None => return StepResult::stopped(p, evals, StepStatus::ExitedDomain),
                }
            }};
        }
        let k1 = stage!(p);
        let k2 = stage!(p + (k1 * A21) * h);
        let k3 = stage!(p + (k1 * A31 + k2 * A32) * h);
        let k4 = stage!(p + (k1 * A41 + k2 * A42 + k3 * A43) * h);
        let k5 = stage!(p + (k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54) * h);
        let k6 = stage!(p + (k1 * A61 + k2 * A62 + k3 * A63 + k4 * A64 + k5 * A65) * h);

        let err = ((k1 * E1 + k3 * E3 + k4 * E4 + k5 * E5 + k6 * E6) * h).norm();
        if !err.is_finite() {
            return StepResult::stopped(p, evals, StepStatus::RejectedOverflow);
        }
        if err <= cfg.tol || h <= h_floor {
            let new = p + (k1 * B1 + k3 * B3 + k4 * B4 + k5 * B5) * h;
            let h_next = if err == 0.0 {
                cfg.h_max
            } else {
                (SAFETY * h * (cfg.tol / err).powf(0.2)).clamp(cfg.h_min, cfg.h_max)
            };
            return finish(ev, p, new, h, h_next, evals);
        }
        let shrink = (SAFETY * (cfg.tol / err).powf(0.2)).max(MIN_SHRINK);
        h = (h * shrink).max(h_floor);
    }
}

/// Dispatches on `cfg.kind`. Fixed-step solvers use `h`; RKF45 treats it as
/// the trial step.
#[inline]
pub fn step(ev: &mut FieldEvaluator<'_>, p: Vec3, cfg: &SolverConfig, h: f64) -> StepResult {
    match cfg.kind {
        SolverKind::Euler => euler_step(ev, p, h),
        SolverKind::Rk4 => rk4_step(ev, p, h),
        SolverKind::Rkf45 => rkf45_step(ev, p, cfg, h),
    }
}
