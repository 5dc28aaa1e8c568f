//! Command-line front end: argument parsing, settings resolution, the run
//! cache and the `verify` suites. The binary in `main.rs` only wires these
//! together.

pub mod args;
pub mod cache;
pub mod config;
pub mod run;
pub mod suites;
