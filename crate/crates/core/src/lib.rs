//! Collective three-level atoms coupled to a single quantized field mode.
//!
//! The crate builds the symmetric (Dicke) atomic basis and a truncated Fock
//! space, the collective operators `S_ij` and their photon-dressed versions
//! `X_ij = a S_ij`, and the Λ and V interaction Hamiltonians. On top of that it
//! provides dark-state rotations, dispersive effective Hamiltonians, exact
//! dynamics, and weight diagrams of the transition operators.

pub mod dispersive;
pub mod dynamics;
pub mod error;
pub mod hamiltonian;
pub mod hilbert;
pub mod linalg;
pub mod operators;
pub mod weights;

pub mod cli;

pub use error::{Error, Result};
pub use hamiltonian::{HamiltonianSpec, Scheme};
pub use hilbert::SpaceSpec;
pub use operators::{Level, OperatorMatrix};
