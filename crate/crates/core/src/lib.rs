//! Graph SLAM that auto-completes a robot-built map with a sketched floor
//! plan: corners detected in normal-distributions-transform (NDT) maps are
//! tied to a scaled, possibly distorted prior graph and the whole assembly is
//! optimized with a staged robust-kernel schedule.

pub mod error;
pub mod frontend;
pub mod geometry;
pub mod graph;
pub mod ndt;
pub mod pgm;
pub mod prior;
pub mod runner;
pub mod sim;
pub mod solver;
pub mod stats;

pub use error::{Error, Result};
