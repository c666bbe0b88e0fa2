//! Casimir/van der Waals interaction free energies between dielectric bodies
//! on periodic Yee lattices.
//!
//! Maxwell wave operators are discretized at imaginary frequency, where they
//! are real, symmetric and positive definite; interaction energies are
//! frequency-integrated differences of sparse log-determinants, evaluated
//! through multi-level Schur-complement blocking so the extensive bulk
//! self-energy never enters a difference.

pub mod error;
pub mod lattice;
pub mod materials;
pub mod operators;

pub mod linalg;
pub mod oracle;
pub mod quadrature;

pub mod scenes;

pub mod experiments;

pub mod config;

pub use error::{Error, Result};
