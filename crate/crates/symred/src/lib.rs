//! Canonical coordinates, relative equilibria and Birkhoff normal forms for
//! symmetry-reduced simple mechanical systems.
//!
//! The crate builds the reduced Hamiltonian of a simple mechanical system
//! with an `SO(3)` or `S^1` symmetry directly as a truncated power series in
//! canonical coordinates on the reduced phase space, locates relative
//! equilibria of the reduced dynamics, and normalizes the Hamiltonian around
//! elliptic relative equilibria with a Lie-series (Deprit) transformation.
//!
//! The pipeline, bottom to top:
//!
//! 1. [`series`] — sparse truncated multivariate power series (jets) with
//!    Poisson-bracket, composition and evaluation support, plus the complex
//!    `z = (q + i p)/sqrt(2)` representation in [`complex`].
//! 2. [`lie`] — canonical realizations of non-canonical brackets:
//!    anholonomic frames and the cylindrical chart on momentum spheres of
//!    `so(3)*`.
//! 3. [`mech`] — reduced geometry of a simple mechanical system: locked
//!    inertia, mechanical connection, horizontal metric and the reduced
//!    Hamiltonian as a series around a chosen point.
//! 4. [`models`] — concrete systems: the spatial three-body problem with
//!    pair potentials and the double spherical pendulum.
//! 5. [`equilibria`] — relative equilibria as critical points of the
//!    effective potential, with parameter sweeps.
//! 6. [`nf`] — linear symplectic normalization at an elliptic equilibrium
//!    and the Birkhoff normal form to a requested order.
//! 7. [`dynamics`] — reduced trajectories and reconstruction of the group
//!    motion along them.

pub mod complex;
pub mod dynamics;
pub mod equilibria;
pub mod error;
pub mod lie;
pub mod mech;
pub mod models;
pub mod nf;
pub mod series;

mod eigen;

pub use complex::ComplexSeries;
pub use error::{Error, Result};
pub use series::{Elementary, MultiIndex, TruncatedSeries};
