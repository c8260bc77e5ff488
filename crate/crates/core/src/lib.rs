//! Particle advection building blocks and an analytical cost model.
//!
//! The crate is organised bottom-up:
//!
//! * [`mesh`] holds the grid/mesh representations, node-centred velocity
//!   fields and analytic test fields.
//! * [`locate`] finds the cell containing a point (analytic index math,
//!   per-axis binary search, a bounding interval hierarchy and a tetrahedral
//!   walk), plus a brute-force oracle.
//! * [`eval`] composes location and interpolation into velocity evaluation
//!   and counts every locate/interp it performs.
//! * [`solve`] implements Euler, RK4 and Fehlberg 4(5) steps.
//! * [`advect`] runs the step/analyze/terminate loop over many particles,
//!   optionally on several worker threads.
//! * [`costmodel`] predicts FLOPs for a workload, calibrates FLOPs against
//!   measured seconds and produces advice against a time budget.
//! * [`cli`] wires all of the above into the `advectum` binary.

pub mod advect;
pub mod cli;
pub mod costmodel;
pub mod error;
pub mod eval;
pub mod locate;
pub mod mesh;
pub mod solve;

pub use error::{Error, Result};
pub use mesh::{Bounds3, Dataset, Vec3};
