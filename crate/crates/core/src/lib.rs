//! Exact-diagonalization toolkit for the random XXZ spin chain in the Ising phase.
//!
//! Configurations are bitmasks over a finite set of integer sites, operators are stored
//! as particle-number sector blocks, and resolvent quantities are evaluated on thin
//! column panels so that only the needed solves are performed.

pub mod disorder;
pub mod error;
pub mod identities;
pub mod lattice;
pub mod linalg;
pub mod operators;
pub mod probes;

pub use error::{Error, Result};
