//! Online contention resolution schemes (OCRS) for matroid, matching and
//! knapsack relaxations, with prophet-inequality, stochastic-probing and
//! submodular applications, and a Monte-Carlo harness that checks the
//! claimed selectability constants.

pub mod applications;
pub mod base;
pub mod cli;
pub mod harness;
pub mod matroids;
pub mod optimize;
pub mod schemes;
pub mod submodular;

mod error;

pub use error::{Error, Result};
