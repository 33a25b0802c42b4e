//! Expansion measurement and weak-to-strong error bounds for finite weakly
//! labeled populations.

pub mod bounds;
pub mod cli;
pub mod cover;
pub mod error;
pub mod expansion;
pub mod graph;
pub mod pointset;
pub mod population;
pub mod rng;
pub mod robustness;
pub mod testbeds;

pub use error::{Error, Result};
pub use graph::ExampleGraph;
pub use pointset::PointSet;
pub use population::{LabelAssignment, Partition, Population, WeakLabel};
