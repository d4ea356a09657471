//! Time-optimal entropy extraction ("purification") with a bounded-spread
//! interaction Hamiltonian.
//!
//! * [`qcore`]: states, operators, channels, entropy.
//! * [`geodesic`]: geodesic Hamiltonians and minimal-time unitary synthesis.
//! * [`protocols`]: measurement-based, swap and unbiased-swap protocols plus a simulator.
//! * [`optimality`]: brute-force and inequality oracles for the lower bounds.
//! * [`cli`]: the `purify` command-line harness.

pub mod cli;
pub mod error;
pub mod format;
pub mod geodesic;
pub mod optimality;
pub mod qcore;
pub mod protocols;
pub mod random;

pub use error::{Error, Result};
