//! Batch front end: configuration, sweeps, figure reproduction and data export.

pub mod commands;
pub mod config;
pub mod error;
pub mod figures;
pub mod run;
pub mod table;
