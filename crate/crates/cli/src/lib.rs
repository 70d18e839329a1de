//! Pipeline stages behind the `vft` binary.

pub mod commands;
pub mod config;

pub use config::RunConfig;
