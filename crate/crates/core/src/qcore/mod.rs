//! States, operators, channels and measurements.
//!
//! Conventions: hbar = 1, entropies in nats, composite index of
//! C^a (x) C^b is `i * b + j`.

pub mod linalg;
mod ops;
mod types;

pub use ops::*;
pub use types::*;
