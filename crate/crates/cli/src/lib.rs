//! Command-line front end: configuration, checkpoints, run orchestration
//! and the acceptance criteria.

pub mod checkpoint;
pub mod config;
pub mod execute;
pub mod output;
pub mod verify;
