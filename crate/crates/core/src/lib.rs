//! Discrete-time quantum walks coupled to discrete U(N) lattice gauge fields,
//! with continuum Dirac and classical colored-particle references.

pub mod analysis;
pub mod classical;
pub mod dirac;
pub mod error;
pub mod experiment;
pub mod io;
pub mod lattice;
pub mod lattice_gauge;
pub mod scenario;
pub mod unitary;
pub mod walker;

pub use error::{Error, Result};
