//! Finite-horizon dynamic programming for objectives that are not additive
//! over stages.
//!
//! Objectives built from running aggregates (sums, running maxima, and
//! anything else that can be folded left to right over a trajectory) are
//! made additive by appending the aggregate to the state. The augmented
//! problem is then solved by ordinary backward induction on a grid.
//!
//! Modules:
//! - [`dp`]: grids, problems, backward induction, brute-force oracle.
//! - [`objective`]: forward-separable objective chains.
//! - [`augment`]: state augmentation and solution recovery.
//! - [`battery`]: battery scheduling under time-of-use and demand charges.
//! - [`stochastic`]: Gauss-Markov solar model and stochastic backward induction.
//! - [`instances`]: reference and randomized problem instances.
//!
//! The crate is `no_std` (with `alloc`) when built without the `std` feature.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod augment;
pub mod battery;
pub mod dp;
mod error;
pub mod instances;
pub mod objective;
pub mod stochastic;

pub use error::{Error, Result};
pub use nalgebra;
