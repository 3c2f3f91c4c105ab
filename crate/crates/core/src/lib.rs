//! Lattice laboratory for the real eight-component Dirac field coupled to
//! the electromagnetic potential in one spatial dimension.
//!
//! The crate is layered bottom-up:
//!
//! * [`algebra`]: the η matrices, the interaction matrix `a`, the commutant
//!   of the η algebra and the complex structures `Z` drawn from it.
//! * [`lattice`]: periodic grids, field states, initial data and the
//!   case-I/II constraint maps.
//! * [`dynamics`]: right-hand sides of the canonical, linear and Maxwell
//!   equations and the RK4 integrator.
//! * [`observables`]: currents, Hamiltonian and Lagrangian densities,
//!   equation residuals and per-sample diagnostics.
//! * [`cli_io`]: configuration, snapshots, diagnostics files and the
//!   command implementations behind the `realdirac` binary.

// Index loops mirror the tensor notation; `!(x > 0.0)` rejects NaN too.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod algebra;
pub mod cli_io;
pub mod dynamics;
pub mod error;
pub mod lattice;
pub mod observables;

pub use error::{DiracError, Result};
