//! Group property inference attacks against graph neural networks.

pub mod analysis;
pub mod attacks;
pub mod classifiers;
pub mod defenses;
pub mod error;
pub mod experiment;
pub mod features;
pub mod fingerprint;
pub mod fixture;
pub mod gnn;
pub mod graph;
mod nn;
pub mod rng;
mod serial;

pub use error::{Error, Result};
pub use graph::Graph;
