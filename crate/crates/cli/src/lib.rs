//! Command-line front end for `ewens-tree-core`: ESF tables, CRP sampling,
//! the potential divergence scan, consistency reports and the invariant
//! verification suites.
//!
//! Exit codes: 0 on success, 1 when a check or verification fails, 2 on
//! malformed input.

pub mod commands;
pub mod verify;
