//! Command-line front end: scenario configs, analytic envelope export,
//! oracle validation, multi-user dispersion analysis and PSD dumps.

pub mod commands;
pub mod config;
pub mod output;
