//! Files written and read by the command line: time tags, result tables and the run manifest.

pub mod manifest;
pub mod results;
pub mod tags;

pub use manifest::RunManifest;
pub use tags::{read_tags, write_tags};
