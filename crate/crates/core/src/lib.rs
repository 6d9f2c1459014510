//! Synthetic Time-of-Flight corner scenes with multipath interference, a
//! per-pixel feature bank, and a regression forest that learns depth
//! corrections from it.

pub mod brdf;
pub mod error;
pub mod eval;
pub mod features;
pub mod filters;
pub mod forest;
pub mod pipeline;
pub mod ply;
pub mod raster;
pub mod rng;
pub mod scene;
pub mod tofsim;

pub use error::{Error, Result};
