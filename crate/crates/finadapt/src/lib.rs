//! Run harness for fin damage-recovery experiments: configuration, the
//! optimize / snapshot / branch protocol, on-disk logs and snapshots, and
//! report tables.

pub mod config;
pub mod engine;
pub mod error;
pub mod report;
pub mod store;

pub use config::RunConfig;
pub use error::HarnessError;
pub use store::Store;
