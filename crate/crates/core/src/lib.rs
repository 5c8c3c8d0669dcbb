//! Canonical (von Zeipel) perturbation theory for the J2-perturbed
//! artificial-satellite problem.
//!
//! The crate is organised bottom-up:
//!
//! * [`elements`]: Keplerian / Delaunay / Cartesian conversions and anomaly kinematics.
//! * [`hamiltonian`]: the Delaunay series Hamiltonian and the Cartesian zonal force model.
//! * [`vonzeipel`]: averaging operators, the first- and second-order generating
//!   functions and the mean Hamiltonian.
//! * [`transform`]: the mean/osculating canonical map defined by the generating series.
//! * [`propagator`]: analytic mean-element propagation and the numerical oracle.
//! * [`symplectic`]: symplectic-matrix predicates, block identities and structured inverse.
//! * [`verify`]: the property suites driven by the `verify` command.
//!
//! Units are km, s and rad throughout.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod elements;
pub mod error;
pub mod exec;
pub mod hamiltonian;
pub mod integrator;
pub mod propagator;
pub mod quadrature;
pub mod symplectic;
pub mod transform;
pub mod verify;
pub mod vonzeipel;

pub use elements::{CartesianState, DelaunayState, KeplerianElements, PhysicalModel};
pub use error::{Error, Result};
pub use exec::Exec;
pub use transform::{CanonicalMap, Order};
