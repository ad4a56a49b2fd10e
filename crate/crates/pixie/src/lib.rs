//! File formats and tooling around [`pixie_core`]: JSON documents for
//! grids, task graphs, configurations, frames, kernels and netlists, PGM
//! images, and CSV traces.

pub mod error;
pub mod formats;
pub mod pgm;
pub mod trace;

pub use error::Error;
pub use pixie_core as core;
