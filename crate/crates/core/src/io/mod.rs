//! Cube files, JSON documents and the flat configuration format.

pub mod config;
pub mod cube_file;
pub mod formats;

pub use config::Config;
pub use cube_file::{read_cube, read_cube_with, write_cube, Dtype};
pub use formats::{read_json, write_json, EditOp, ParamsFile, SceneFile};
