//! Agent-based indoor epidemic simulator and analysis toolkit.
//!
//! The pipeline: POI layouts and stopping patterns define scenarios; a
//! social-force engine moves agents through entry, random-walk/stop behavior,
//! and exit; infectors emit coughs whose stationary fields accumulate into
//! per-agent exposure; Voronoi personal spaces quantify spatial dispersion;
//! and a batch of scenario runs feeds path-model and causal-effect analyses.

pub mod analysis;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod exposure;
pub mod geometry;
pub mod metrics;
pub mod rng;
pub mod runner;
pub mod scenario;

pub use error::{Error, Result};
