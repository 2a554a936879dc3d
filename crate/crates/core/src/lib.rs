//! Simulation and exact-formula toolkit for ordered Brownian particle
//! systems with a wall.
//!
//! Two constructions of the same laws live side by side. On the simulation
//! side, discrete Skorokhod recursions build stacks of reflected paths
//! ([`reflecting_sim`]) and Euler-Maruyama integrates the non-colliding
//! diffusions with singular drifts ([`dyson_sde`]). On the exact side,
//! [`heat_kernel`] provides the scalar kernel family and [`determinantal`]
//! the transition and entrance densities built from it, while [`intertwine`]
//! realizes the kernel relation tying the two process families together.
//! [`stats`] turns equalities in law into testable assertions.
//!
//! Trajectory-level Monte Carlo parallelism is seed-deterministic and lives
//! in [`ensemble`]; disable the default `parallel` feature for a fully
//! sequential build.

pub mod chamber;
pub mod determinantal;
pub mod dyson_sde;
pub mod ensemble;
pub mod error;
pub mod grid;
pub mod heat_kernel;
pub mod intertwine;
pub mod quadrature;
pub mod reflecting_sim;
pub mod stats;
pub mod verify;

pub use chamber::{OrderedConfig, ProcessKind};
pub use error::{Error, Result};
pub use grid::{sample_lattice, BrownianLattice, TimeGrid};
