//! Stationary profiles of the area-averaged unidirectional pedestrian flow
//! model on a corridor `[0, L]`:
//!
//! ```text
//! (k(x) j)' = 0,   j = -eps rho' + rho (1 - rho),
//! j(0) = alpha (1 - rho(0)),   j(L) = beta rho(L).
//! ```
//!
//! * [`geometry`]: the corridor coefficient `k(x)`.
//! * [`bvp`]: finite-volume discretisation, Newton and `eps`-continuation.
//! * [`gspt`]: the `eps = 0` singular orbits and the six-region phase
//!   diagram for closing corridors.
//! * [`exact`]: closed-form profiles for straight corridors.
//! * [`analysis`]: layer detection, phase-diagram sweeps, convergence studies.
//! * [`export`]: CSV/JSON writers shared by the command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod bvp;
pub mod error;
pub mod exact;
pub mod export;
pub mod geometry;
pub mod gspt;
pub mod tridiag;

pub use bvp::{BvpProblem, Solution};
pub use error::{Error, Result};

pub use geometry::{ProfileShape, ValidationReport, WidthProfile};
pub use exact::{ExactProfile, Shape};
pub use gspt::{RegionLabel, SingularOrbit};

