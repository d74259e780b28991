//! Hardness reductions from NAE-SAT to lattice covering-radius problems,
//! with brute-force CSP and lattice oracles for checking them on small
//! instances.

pub mod csp;
pub mod error;
pub mod gadget;
pub mod lattice;
pub mod reduction;
pub mod verifier;

pub use error::{Error, Result};
