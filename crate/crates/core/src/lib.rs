//! Port-Hamiltonian transient simulation of gas pipeline networks with
//! compressor stations.
//!
//! Pipes follow the isothermal Euler model with `p = c²ρ` and quadratic
//! friction, discretized on a staggered grid that keeps the discrete power
//! balance exact. Pipes, compressors and boundary nodes are coupled through
//! incidence matrices into one DAE, initialized by a steady-state solve and
//! integrated with the implicit midpoint rule.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod app;
pub mod compressor;
pub mod error;
pub mod gas;
pub mod network;
pub mod pipe;
pub mod schedule;
pub mod timeloop;
pub mod two_pipe;

pub use compressor::{Assumption, CompressorModel, Framework, ModelKind};
pub use error::{Error, Result};
pub use gas::GasProperties;
pub use network::{GlobalSystem, NetworkSpec};
pub use pipe::{PipeSpec, PipeSystem};
pub use timeloop::{simulate, SolverConfig, TimeSeries};
