//! On-disk formats. Each has a serializer, a parser and a golden-file test.

pub mod checkpoint;
pub mod config;
pub mod instance;
pub mod manifest;
pub mod metrics;
pub mod report;

pub use checkpoint::Checkpoint;
pub use config::{ConfigFile, GeneratorSpec};
pub use manifest::RunManifest;
