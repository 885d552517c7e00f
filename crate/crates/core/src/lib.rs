//! Object-goal navigation on 2-D grid worlds with frontier selection by an
//! expert panel.

pub mod consensus;
pub mod error;
pub mod experts;
pub mod grid;
pub mod harness;
pub mod mapping;
pub mod planner;
pub mod world;

pub use error::ConfigError;
pub use grid::{Cell, Grid};
