//! Discrete-time Langevin dynamics on certified non-convex landscapes, with
//! closed-form metastability bounds, two-event path classification, and
//! Monte-Carlo oracles that check each bound empirically.

pub mod config;
pub mod dynamics;
pub mod error;
pub mod exec;
pub mod io;
pub mod landscape;
pub mod manifest;
pub mod metastability;
pub mod oracles;
pub mod rng;
pub mod stats;
pub mod theory;

pub use error::{Error, Result};
