//! Library half of the sweep harness: configuration, result store, CSV
//! formats and the mode registry. The binary in `main.rs` is a thin clap
//! front end over these pieces.

pub mod config;
pub mod exports;
pub mod modes;
pub mod store;
