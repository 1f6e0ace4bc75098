//! Instance generation, audits, distortion runs, benchmarks and exports.

pub mod bench;
pub mod config;
pub mod distortion;
pub mod export;
pub mod instance;
pub mod invariants;

pub use bench::{run_bench, BenchReport};
pub use config::{ConfigError, InstanceConfig};
pub use distortion::{run_distortion, DistortionOptions, DistortionReport};
pub use export::{export_artifacts, ExportError};
pub use instance::{fixture, generate_instance, Instance, InstanceError};
pub use invariants::{run_invariants, InvariantReport};
