//! Command-line companion to `wqnet-core`: configuration files, scenario
//! presets, parallel trajectory ensembles, and CSV/JSON result persistence.

pub mod config;
pub mod ensemble;
pub mod report;
pub mod runner;
