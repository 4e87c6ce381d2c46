//! Command-line front end for the reweighted adaptive-lasso estimator:
//! fit CSV panels, simulate the benchmark processes, and run the Monte
//! Carlo studies, all driven by one flat config file.
//!
//! The binary in `main.rs` is a thin argument parser over [`commands`];
//! everything it does is callable in-process, which is how the integration
//! tests exercise it.

pub mod commands;
pub mod config;
pub mod csv;
