//! Core numerics for a one-dimensional jump-transport laboratory.
//!
//! The crate models stochastic transport three ways and provides the glue to
//! compare them:
//!
//! * [`kernel`] — jump kernels `p(Δ; x)`, waiting-rate fields `r(x) = 1/τ(x)`,
//!   and smooth boundary-suppression profiles, including a detailed-balance
//!   construction whose forward and backward hop rates agree by symmetry.
//! * [`coefficients`] — Kramers-Moyal moments of a kernel/rate pair and the
//!   transport profiles `D`, `V`, `V'` they induce, plus truncation
//!   diagnostics.
//! * [`master_equation`] — the jump process discretized as a banded rate
//!   matrix on a uniform lattice, explicit time stepping, steady states, and
//!   the slowest interior decay mode.
//! * [`walkers`] — a continuous-time random-walk ensemble with deterministic
//!   counter-based random streams, empirical Kramers-Moyal estimates, and
//!   n-step propagator statistics with an exact convolution oracle.
//! * [`pde`] — conservative finite-volume solvers for the two diffusion
//!   forms (gradient-flux and divergence-flux) under Dirichlet, Neumann, or
//!   Robin boundary conditions.
//! * [`metrics`] — field comparison norms and boundary-layer width
//!   measurement.
//!
//! The crate is `no_std` (with `alloc`); all file formats, configuration, and
//! parallel drivers live in the companion CLI crate.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod coefficients;
pub mod error;
pub mod kernel;
pub mod lattice;
mod linalg;
pub mod master_equation;
pub mod metrics;
pub mod pde;
mod quad;
mod stats;
pub mod walkers;

pub use error::CoreError;
pub use lattice::{Grid, Interval, LatticeField};

/// Crate version, recorded in run provenance blocks.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
