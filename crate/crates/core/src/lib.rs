//! Numerical laboratory for the focusing mass-critical nonlinear Schrödinger
//! equation with an attractive inverse-square potential,
//!
//! ```text
//! i∂ₜu + Δu + c/|x|² u + |u|^{4/d} u = 0,   d ≥ 3,  0 < c < (d−2)²/4.
//! ```
//!
//! The crate computes ground states, evolves radial data up to resolved
//! blow-up, measures mass concentration along blow-up runs, and builds
//! constructive profile decompositions of bounded field sequences on a
//! periodic lattice.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checkpoint;
pub mod concentration;
pub mod error;
pub mod evolution;
pub mod exec;
pub mod functionals;
pub mod grids;
pub mod ground_state;
pub mod linalg;
pub mod profiles;
pub mod runner;
pub mod spectral;

pub use error::{Error, Result};
pub use exec::ExecPolicy;
pub use grids::{CartesianGrid, CartesianGridSpec, Field, Grid, RadialGrid, RadialGridSpec};
