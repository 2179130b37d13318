//! Career-transition flow networks between organizations, with resource,
//! retention and growth reweighting, weighted HITS rankings, descriptive
//! statistics and a transition-prediction harness.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod flownet;
pub mod ingest;
pub mod model;
pub mod predict;
pub mod r3;
pub mod rank;
pub mod synth;

pub use error::{Error, Result};
