//! Analytical radar cube simulation.

pub mod cfar;
pub mod cli;
pub mod cube;
pub mod dataset;
pub mod editing;
pub mod environment;
pub mod error;
pub mod fit;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod params;
pub mod psf;
pub mod render;
pub mod scene;
pub mod synthesis;
