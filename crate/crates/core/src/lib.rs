//! Mean-field simulation and bifurcation analysis of a pumped, lossy cavity
//! array coupled to three-level atoms.
//!
//! The excited atomic level is eliminated adiabatically ([`model`]), leaving a
//! nonlinear Jaynes-Cummings model whose mean-field equations are integrated
//! in [`dynamics`]. [`steady`] finds all fixed points, [`stability`]
//! classifies them and locates Hopf bifurcations and limit cycles, and
//! [`asymptotics`] holds the large-nonlinearity expansion near the critical
//! coupling.

pub mod asymptotics;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod model;
pub mod poly;
pub mod regions;
pub mod stability;
pub mod steady;

pub use dynamics::{integrate, rhs_1d, spin_norm, MFState, State2D, Trajectory};
pub use error::{Error, Result};
pub use model::{derive_effective_params, EffectiveParams, Params2D, PhysicalParams};
pub use stability::{classify, jacobian, Spectrum};
pub use steady::{BranchKind, Stability, SteadyBranch, TransitionPoints};
