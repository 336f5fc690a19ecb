//! Command-line front end for the single-pixel imaging simulator.

pub mod args;
pub mod commands;
pub mod config;
pub mod montage;

pub use args::Cli;
pub use commands::run;
