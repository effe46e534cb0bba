//! Exact computations for the multivariate Ewens distribution placed on a
//! (k+1)-regular tree.
//!
//! * [`partition`]: integer partitions, Ewens sampling formula, CRP sampler,
//!   permutation cycle-type oracle.
//! * [`tree`]: tree addresses, finite regions, growth steps, configurations.
//! * [`hamiltonian`]: occupancy numbers, Ewens weights and increments, the
//!   potential divergence scan.
//! * [`field`]: boundary-field distributions, partition functions,
//!   marginalization and consistency checks, boundary-field solver.

pub mod error;
pub mod exact;
pub mod field;
pub mod hamiltonian;
pub mod partition;
pub mod tree;

pub use error::{Error, Result};
pub use exact::MutationRate;
