//! Box-counting laboratory for subsets of `[0, 1]`.
//!
//! Computes the capped occupancy sum `g_m`, upper box and graph box
//! dimension estimates, witness functions whose graphs realize `g_m`, and
//! finite-scale checks of the counting inequalities behind them.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod grid;
pub mod lemmas;
pub mod oracles;
pub mod polyline;
pub mod sets;
pub mod witness;

pub use error::{Error, Result};
