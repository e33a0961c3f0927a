//! Command-line front end: scan configuration, figure datasets, CSV output
//! and the self-consistency report.

pub mod config;
pub mod figures;
pub mod output;
pub mod scan;
pub mod validate;
